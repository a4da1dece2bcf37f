import json
import os

import numpy as np
import pytest

from ganbal import train as train_mod
from ganbal.data import Batch, load_batch
from ganbal.models import DiscriminatorConfig, GeneratorConfig
from ganbal.train import (COLUMNS, TrainConfig, Trainer, TrainingAborted, evaluate, read_metrics,
                          seeded_histories, train)

from conftest import make_dataset


def small_cfg(**kw):
    base = dict(epochs=2, batch_size=4, fid_every=1, record_timing=False,
                generator=GeneratorConfig(8, 2, 4), discriminator=DiscriminatorConfig(2, 4))
    base.update(kw)
    return TrainConfig(**base)


def test_one_epoch_step_counts(small_dataset, tmp_path):
    rows = train(small_cfg(epochs=1), small_dataset, str(tmp_path / "r"))
    assert len(rows) == 1
    assert rows[0]["steps_d"] == rows[0]["steps_g"] == 2
    on_disk = read_metrics(tmp_path / "r" / "metrics.csv")
    assert len(on_disk) == 1 and on_disk[0]["steps_d"] == 2
    header = open(tmp_path / "r" / "metrics.csv").read().splitlines()
    assert header[0].startswith("#") and header[1].split(",") == COLUMNS


def test_baseline_never_targets(small_dataset, tmp_path):
    rows = train(small_cfg(epochs=3, mode="baseline"), small_dataset, str(tmp_path / "b"))
    assert all(r["target"] == "none" and r["extra_batches"] == 0 for r in rows)
    assert all(r["steps_d"] == r["steps_g"] == 2 for r in rows)


def test_injected_gap_gives_extra_steps(small_dataset, tmp_path):
    hist = seeded_histories([1.0], [1.0, 0.4])  # rps_g 1.0, rps_d 0.7
    rows = train(small_cfg(epochs=1), small_dataset, str(tmp_path / "i"), initial_histories=hist)
    assert rows[0]["steps_g"] == 2 + 4
    assert rows[0]["steps_d"] == 2


def test_conservation_of_work(small_dataset, tmp_path):
    rows = train(small_cfg(epochs=4), small_dataset, str(tmp_path / "c"),
                 initial_histories=seeded_histories([1.0], [1.0, 0.4]))
    prev = {"target": "generator", "extra_batches": 4}
    for r in rows:
        extra_g = prev["extra_batches"] if prev["target"] == "generator" else 0
        extra_d = prev["extra_batches"] if prev["target"] == "discriminator" else 0
        assert r["steps_g"] == 2 + extra_g
        assert r["steps_d"] == 2 + extra_d
        prev = r


def test_byte_identical_reruns(small_dataset, tmp_path):
    for name in "ab":
        train(small_cfg(epochs=2), small_dataset, str(tmp_path / name))
    a = (tmp_path / "a" / "metrics.csv").read_bytes()
    assert a == (tmp_path / "b" / "metrics.csv").read_bytes()
    for ck in ("generator_final.gbck", "generator_best.gbck", "discriminator_final.gbck"):
        assert (tmp_path / "a" / "checkpoints" / ck).read_bytes() == \
            (tmp_path / "b" / "checkpoints" / ck).read_bytes()


def test_baseline_parity_without_scheduler(small_dataset, tmp_path):
    base = train(small_cfg(mode="baseline"), small_dataset, str(tmp_path / "p1"))
    bare = train(small_cfg(mode="baseline"), small_dataset, str(tmp_path / "p2"), use_scheduler=False)
    for a, b in zip(base, bare):
        for k in ("loss_d", "loss_g", "loss_g_adv", "loss_g_l1", "fid"):
            assert a[k] == b[k]


def test_nan_aborts_with_row(small_dataset, tmp_path, monkeypatch):
    def poisoned(manifest, split, b, m, epoch=0, dtype=np.float64):
        batch = load_batch(manifest, split, b, m, epoch, dtype)
        if epoch == 2:
            batch = Batch(np.full_like(batch.x, np.nan), batch.y, batch.indices)
        return batch

    monkeypatch.setattr(train_mod, "load_batch", poisoned)
    run = tmp_path / "nan"
    with pytest.raises(TrainingAborted, match="epoch 2"):
        train(small_cfg(epochs=3), small_dataset, str(run))
    rows = read_metrics(run / "metrics.csv")
    assert [r["status"] for r in rows] == ["ok", "aborted"]
    assert not (run / ".lock").exists()


def test_existing_run_and_lock(small_dataset, tmp_path):
    run = tmp_path / "l"
    train(small_cfg(epochs=1), small_dataset, str(run))
    with pytest.raises(FileExistsError):
        train(small_cfg(epochs=1), small_dataset, str(run))
    (run / ".lock").write_text("999")
    with pytest.raises(RuntimeError, match="locked"):
        train(small_cfg(epochs=1), small_dataset, str(run), overwrite=True)


def test_run_artifacts_and_evaluate(small_dataset, tmp_path):
    run = tmp_path / "e"
    rows = train(small_cfg(epochs=2), small_dataset, str(run))
    cfg = json.loads((run / "config.json").read_text())
    assert cfg["backend"] in ("numba", "numpy") and cfg["scheduler"]["nu"] == 5
    assert json.loads((run / "architecture.json").read_text())
    ck = str(run / "checkpoints" / "generator_final.gbck")
    a, b = evaluate(ck, small_dataset), evaluate(ck, small_dataset)
    assert a == b
    assert a["fid"] == rows[-1]["fid"]
    assert 0 <= a["l1_mean"] <= 1 and a["n"] == 2
    with pytest.raises(FileNotFoundError):
        evaluate(str(run / "nope.gbck"), small_dataset)


def test_float64_training(small_dataset, tmp_path):
    rows = train(small_cfg(epochs=1, precision="float64"), small_dataset, str(tmp_path / "f64"))
    assert np.isfinite(rows[0]["loss_g"])


def test_config_round_trip_and_errors(tmp_path):
    cfg = small_cfg()
    back = TrainConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert back.to_dict() == cfg.to_dict()
    with pytest.raises(ValueError, match="unknown"):
        TrainConfig.from_dict({"epoch": 3})
    with pytest.raises(ValueError):
        TrainConfig(mode="sometimes").validate()
    b = TrainConfig(mode="baseline").validate()
    assert b.scheduler.enabled is False


def test_size_mismatch(small_dataset):
    with pytest.raises(ValueError, match="8px"):
        Trainer(TrainConfig(), small_dataset)


def test_overfit_tiny_set(tmp_path):
    man = make_dataset(str(tmp_path), 6, size=8, seed=3, val_fraction=0.34)
    tr = Trainer(small_cfg(lr=2e-3, generator=GeneratorConfig(8, 2, 8),
                           discriminator=DiscriminatorConfig(2, 8)), man)
    assert len(man.split("train")) == 4
    for it in range(200):
        b = load_batch(man, "train", 0, 4, it)
        tr.d_step(b)
        tr.g_step(b)
    l1 = np.abs(tr.generate(b.x).data - b.y).mean() / 2
    assert l1 < 0.05
