import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from ganbal.fid import (FeatureExtractorSpec, GaussianStats, extract_features, frechet_distance,
                        gaussian_stats, load_features_csv, psd_sqrtm, save_features_csv,
                        trace_sqrt_product)


def _random_psd(r, d, rank=None):
    a = r.standard_normal((d, rank or d))
    return a @ a.T


def test_stats_hand_example():
    s = gaussian_stats([[0, 0], [2, 2]])
    np.testing.assert_array_equal(s.mu, [1, 1])
    np.testing.assert_array_equal(s.sigma, [[2, 2], [2, 2]])


def test_stats_identical_rows():
    s = gaussian_stats(np.tile([1.0, -2.0, 3.0], (5, 1)))
    assert not s.sigma.any()


def test_stats_permutation(rng):
    f = rng.standard_normal((30, 4))
    a, b = gaussian_stats(f), gaussian_stats(f[rng.permutation(30)])
    np.testing.assert_allclose(a.mu, b.mu, atol=1e-14)
    np.testing.assert_allclose(a.sigma, b.sigma, atol=1e-13)


def test_stats_needs_two():
    with pytest.raises(ValueError, match="at least 2"):
        gaussian_stats(np.ones((1, 3)))


def test_stats_symmetric_psd(rng):
    s = gaussian_stats(rng.standard_normal((10, 20)))
    assert np.abs(s.sigma - s.sigma.T).max() <= 1e-10
    assert np.linalg.eigvalsh(s.sigma).min() >= -1e-8


def test_frechet_analytic():
    r = np.random.default_rng(0)
    sig = _random_psd(r, 5)
    a = GaussianStats(r.standard_normal(5), sig)
    assert frechet_distance(a, a) == 0.0
    d = r.standard_normal(5)
    b = GaussianStats(a.mu + d, sig.copy())
    assert frechet_distance(a, b) == pytest.approx(d @ d, abs=1e-8)
    one = GaussianStats(np.zeros(1), np.array([[1.0]]))
    four = GaussianStats(np.zeros(1), np.array([[4.0]]))
    assert frechet_distance(one, four) == pytest.approx(1.0, abs=1e-8)


def test_frechet_dimension_mismatch():
    with pytest.raises(ValueError, match="mismatch"):
        frechet_distance(GaussianStats(np.zeros(2), np.eye(2)), GaussianStats(np.zeros(3), np.eye(3)))


def test_frechet_rejects_non_psd():
    a = GaussianStats(np.zeros(2), np.diag([-5.0, -5.0]))
    b = GaussianStats(np.zeros(2), np.diag([1.0, 1.0]))
    with pytest.raises(ValueError, match="PSD"):
        frechet_distance(a, b)


@pytest.mark.parametrize("seed", range(20))
def test_symmetry_and_trace_oracle(seed):
    r = np.random.default_rng(seed)
    d = 8
    a = GaussianStats(r.standard_normal(d), _random_psd(r, d, rank=d if seed % 2 else 3))
    b = GaussianStats(r.standard_normal(d), _random_psd(r, d))
    assert abs(frechet_distance(a, b) - frechet_distance(b, a)) <= 1e-8
    # independent route: Schur-based sqrtm of the non-symmetric product
    tr = np.trace(scipy.linalg.sqrtm(a.sigma @ b.sigma)).real
    assert trace_sqrt_product(a.sigma, b.sigma) == pytest.approx(tr, rel=1e-6)


@pytest.mark.parametrize("seed", range(20))
def test_psd_sqrtm_vs_oracle(seed):
    m = _random_psd(np.random.default_rng(seed), 8)
    s = psd_sqrtm(m)
    assert np.linalg.norm(s @ s - m) / np.linalg.norm(m) < 1e-6
    assert np.linalg.norm(s - scipy.linalg.sqrtm(m).real) / np.linalg.norm(s) < 1e-6


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.floats(1.01, 10))
def test_monotone_in_mean_shift(seed, t):
    r = np.random.default_rng(seed)
    sa, sb = _random_psd(r, 4), _random_psd(r, 4)
    mu, d = r.standard_normal(4), r.standard_normal(4)
    near = frechet_distance(GaussianStats(mu, sa), GaussianStats(mu + d, sb))
    far = frechet_distance(GaussianStats(mu, sa), GaussianStats(mu + t * d, sb))
    assert far > near


def test_extractor_determinism(rng):
    x = rng.uniform(-1, 1, (4, 3, 16, 16))
    spec = FeatureExtractorSpec("proxy", seed=3)
    a, b = extract_features(x, spec), extract_features(x, spec)
    assert a.shape == (4, 64)
    assert a.tobytes() == b.tobytes()
    assert not np.array_equal(a, extract_features(x, FeatureExtractorSpec("proxy", seed=4)))


def test_flatten_extractor():
    x = np.array([[[[0.1, 0.2], [0.3, 0.4]]]])
    np.testing.assert_array_equal(extract_features(x, FeatureExtractorSpec("flatten")), [[0.1, 0.2, 0.3, 0.4]])
    big = np.arange(2 * 3 * 32 * 32, dtype=float).reshape(2, 3, 32, 32)
    assert extract_features(big, FeatureExtractorSpec("flatten")).shape == (2, 3 * 8 * 8)


def test_distinct_constants_distinct_features():
    spec = FeatureExtractorSpec()
    a = extract_features(np.full((1, 3, 32, 32), -0.5), spec)
    b = extract_features(np.full((1, 3, 32, 32), 0.5), spec)
    assert not np.allclose(a, b)


def test_feature_csv_round_trip(tmp_path, rng):
    f = rng.standard_normal((5, 3))
    p = tmp_path / "f.csv"
    save_features_csv(p, f)
    assert p.read_text().splitlines()[0] == "f0,f1,f2"
    back = load_features_csv(p)
    assert back.tobytes() == f.tobytes()
    assert extract_features(None, FeatureExtractorSpec("file", path=str(p))).tobytes() == f.tobytes()


def test_separation_clean_halves_vs_degraded(tmp_path):
    from ganbal.data import synth_dataset, to_model_range
    from ganbal.degrade import DegradationSpec, OpSpec, degrade_random
    from ganbal.pngio import read_png

    imgs = np.stack([read_png(p) for p in synth_dataset(200, 32, 0, tmp_path)])
    heavy = DegradationSpec([OpSpec("gaussian_noise", 1.0, {"sigma": [0.15, 0.2]}),
                             OpSpec("gaussian_blur", 1.0, {"sigma": [1.5, 2.0]})], (2, 2), seed=0)
    deg = np.stack([degrade_random(im, heavy, i)[0] for i, im in enumerate(imgs)])
    spec = FeatureExtractorSpec()
    clean = extract_features(np.stack([to_model_range(im) for im in imgs]), spec)
    dirty = extract_features(np.stack([to_model_range(im) for im in deg]), spec)
    same = frechet_distance(gaussian_stats(clean[::2]), gaussian_stats(clean[1::2]))
    cross = frechet_distance(gaussian_stats(clean[::2]), gaussian_stats(dirty[1::2]))
    assert cross >= 3 * same, (same, cross)
