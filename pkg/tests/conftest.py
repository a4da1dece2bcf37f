import os

import numpy as np
import pytest

from ganbal.data import Manifest, build_manifest, synth_dataset
from ganbal.degrade import DegradationSpec, degrade_random
from ganbal.pngio import read_png, write_png


def make_dataset(root, n, size=32, seed=0, val_fraction=0.1):
    clean, degraded = os.path.join(root, "clean"), os.path.join(root, "degraded")
    synth_dataset(n, size, seed, clean)
    os.makedirs(degraded, exist_ok=True)
    spec = DegradationSpec(seed=seed)
    for i, name in enumerate(sorted(os.listdir(clean))):
        img, _ = degrade_random(read_png(os.path.join(clean, name)), spec, i)
        write_png(os.path.join(degraded, name), img)
    man = build_manifest(clean, degraded, val_fraction, seed, root=root)
    man.save()
    return Manifest.load(root)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    """10 pairs of 8x8 images, 2 validation."""
    return make_dataset(str(tmp_path_factory.mktemp("small")), 10, size=8, seed=7, val_fraction=0.2)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
