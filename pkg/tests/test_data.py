import os

import numpy as np
import pytest

from ganbal.data import (Manifest, build_manifest, epoch_length, load_batch, load_split,
                         synth_dataset, to_model_range)
from ganbal.degrade import AppliedRecord, replay
from ganbal.pngio import read_png, to_uint8, write_png


def test_synth_deterministic(tmp_path):
    a = synth_dataset(5, 16, 3, tmp_path / "a")
    b = synth_dataset(5, 16, 3, tmp_path / "b")
    for pa, pb in zip(a, b):
        assert open(pa, "rb").read() == open(pb, "rb").read()
    c = synth_dataset(5, 16, 4, tmp_path / "c")
    assert open(a[0], "rb").read() != open(c[0], "rb").read()


def test_synth_contract_and_histogram(tmp_path):
    paths = synth_dataset(200, 32, 0, tmp_path / "s")
    assert len(paths) == 200
    imgs = np.stack([read_png(p) for p in paths])
    assert imgs.shape == (200, 32, 32, 3)
    assert imgs.min() <= 0.05 and imgs.max() >= 0.95


def test_synth_rejects_bad_args(tmp_path):
    with pytest.raises(ValueError):
        synth_dataset(0, 32, 0, tmp_path)
    with pytest.raises(ValueError):
        synth_dataset(3, 4, 0, tmp_path)


def _pair_dirs(tmp_path, n, size=8):
    c, d = tmp_path / "clean", tmp_path / "degraded"
    synth_dataset(n, size, 1, c)
    synth_dataset(n, size, 2, d)
    return str(c), str(d)


def test_manifest_split_sizes_and_determinism(tmp_path):
    c, d = _pair_dirs(tmp_path, 10)
    m1 = build_manifest(c, d, 0.2, seed=5)
    m2 = build_manifest(c, d, 0.2, seed=5)
    assert len(m1.split("val")) == 2 and len(m1.split("train")) == 8
    assert m1.entries == m2.entries
    ids = set(m1.ids("train")) | set(m1.ids("val"))
    assert not set(m1.ids("train")) & set(m1.ids("val"))
    assert len(ids) == 10


def test_manifest_unpaired_file(tmp_path):
    c, d = _pair_dirs(tmp_path, 4)
    write_png(os.path.join(c, "extra.png"), np.zeros((8, 8, 3)))
    with pytest.raises(ValueError, match="extra.png"):
        build_manifest(c, d, 0.2, 0)


def test_manifest_save_load_relative(tmp_path):
    c, d = _pair_dirs(tmp_path, 4)
    m = build_manifest(c, d, 0.25, 0, root=str(tmp_path))
    m.save()
    back = Manifest.load(str(tmp_path))
    assert back.entries == m.entries
    assert all(not os.path.isabs(e["clean"]) for e in back.entries)


def test_range_mapping():
    img = np.zeros((2, 2, 3))
    img[0, 0] = 0.5
    out = to_model_range(img)
    assert out[0, 0, 0] == 0.0 and out[0, 1, 1] == -1.0


def test_batches(small_dataset):
    n = len(small_dataset.split("train"))
    assert n == 8
    assert epoch_length(10, 4) == 3
    b = load_batch(small_dataset, "train", 1, 3, epoch=2)
    b2 = load_batch(small_dataset, "train", 1, 3, epoch=2)
    assert b.x.tobytes() == b2.x.tobytes() and b.indices == b2.indices
    last = load_batch(small_dataset, "train", 2, 3, epoch=2)
    assert last.x.shape == (2, 3, 8, 8)
    assert b.x.min() >= -1 and b.x.max() <= 1 and b.y.min() >= -1
    with pytest.raises(IndexError):
        load_batch(small_dataset, "train", 3, 3)
    seen = sorted(i for k in range(3) for i in load_batch(small_dataset, "train", k, 3, epoch=4).indices)
    assert seen == list(range(8))


def test_decode_failure(tmp_path):
    p = tmp_path / "broken.png"
    p.write_bytes(b"not a png")
    with pytest.raises(ValueError, match="broken.png"):
        read_png(p)


def test_pairing_integrity_via_replay(tmp_path):
    from ganbal.cli import main

    clean, deg = tmp_path / "clean", tmp_path / "deg"
    synth_dataset(6, 16, 0, clean)
    assert main(["degrade", "--input", str(clean), "--output", str(deg), "--seed", "4"]) == 0
    import json
    for name in sorted(os.listdir(clean)):
        rec = AppliedRecord.from_dict(json.load(open(deg / name.replace(".png", ".json"))))
        expect = to_uint8(replay(read_png(clean / name), rec))
        got = to_uint8(read_png(deg / name))
        assert expect.tobytes() == got.tobytes()
