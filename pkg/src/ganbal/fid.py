"""Frechet distance between Gaussian fits of image features.

Features come from a fixed random convnet (``proxy``), from average-pooled
pixels (``flatten``), or from a precomputed CSV (``file``). Proxy scores are
only comparable with other scores computed under the same extractor seed.
"""
import csv
import logging
from dataclasses import dataclass

import numpy as np

from .nn import kernels

log = logging.getLogger(__name__)

EXTRACTORS = ("proxy", "flatten", "file")
PROXY_CHANNELS = (16, 32, 64)
NEG_TOL = 1e-6


@dataclass
class FeatureExtractorSpec:
    kind: str = "proxy"
    seed: int = 0
    dim: int = 64          # proxy output width (last conv's channel count)
    flatten_size: int = 8  # flatten: average-pool down to at most this many pixels per side
    path: str = None       # file: CSV of precomputed features

    def validate(self):
        if self.kind not in EXTRACTORS:
            raise ValueError(f"extractor must be one of {EXTRACTORS}, got {self.kind!r}")
        if self.dim < 1:
            raise ValueError("feature dimension must be >= 1")
        return self


@dataclass
class GaussianStats:
    mu: np.ndarray
    sigma: np.ndarray
    n: int = 0


def _proxy_weights(seed, in_channels, dim):
    rng = np.random.default_rng(seed)
    chans = (in_channels,) + PROXY_CHANNELS[:-1] + (dim,)
    layers = []
    for cin, cout in zip(chans[:-1], chans[1:]):
        w = rng.normal(0.0, np.sqrt(2.0 / (cin * 16)), size=(cout, cin, 4, 4))
        b = rng.normal(0.0, 0.1, size=cout)
        if not layers:
            # no DC response in the first layer: scene-level colour would otherwise swamp texture
            w -= w.mean(axis=(2, 3), keepdims=True)
        layers.append((w, b))
    return layers


def _proxy_features(images, seed, dim):
    h = np.asarray(images, dtype=np.float64)
    for w, b in _proxy_weights(seed, h.shape[1], dim):
        h = kernels.np_conv_forward(h, w, 2, 1) + b.reshape(1, -1, 1, 1)
        h = np.where(h > 0, h, 0.2 * h)
    return h.mean(axis=(2, 3))


def _flatten_features(images, target):
    x = np.asarray(images, dtype=np.float64)
    n, c, hgt, wd = x.shape
    f = 1
    while hgt // f > target and hgt % (2 * f) == 0 and wd % (2 * f) == 0:
        f *= 2
    if f > 1:
        x = x.reshape(n, c, hgt // f, f, wd // f, f).mean(axis=(3, 5))
    return x.reshape(n, -1)


def extract_features(images, spec):
    """N x C x H x W images in [-1, 1] -> N x D feature matrix."""
    spec.validate()
    if spec.kind == "file":
        return load_features_csv(spec.path)
    images = np.asarray(images)
    if images.ndim != 4:
        raise ValueError(f"expected N x C x H x W images, got shape {images.shape}")
    if spec.kind == "flatten":
        return _flatten_features(images, spec.flatten_size)
    # fixed order: the numpy conv path regardless of backend so features match across builds
    return _proxy_features(images, spec.seed, spec.dim)


def gaussian_stats(features):
    f = np.asarray(features, dtype=np.float64)
    if f.ndim != 2:
        raise ValueError(f"features must be an N x D matrix, got shape {f.shape}")
    n, d = f.shape
    if n < 2:
        raise ValueError(f"need at least 2 samples for covariance, got {n}")
    if not np.all(np.isfinite(f)):
        raise ValueError("features contain non-finite values")
    if n < d:
        log.info("covariance from %d samples in %d dimensions is rank deficient", n, d)
    mu = f.mean(axis=0)
    c = f - mu
    s = c.T @ c / (n - 1)
    return GaussianStats(mu, (s + s.T) / 2, n)


def psd_sqrtm(m):
    """Square root of a symmetric PSD matrix via eigh; negative eigenvalues clamped to 0."""
    m = (np.asarray(m, dtype=np.float64) + np.asarray(m, dtype=np.float64).T) / 2
    vals, vecs = np.linalg.eigh(m)
    root = (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T
    return (root + root.T) / 2


def trace_sqrt_product(sa, sb):
    """Tr((sa sb)^(1/2)) through the symmetric form sa^(1/2) sb sa^(1/2)."""
    ra = psd_sqrtm(sa)
    inner = ra @ sb @ ra
    vals = np.linalg.eigvalsh((inner + inner.T) / 2)
    return float(np.sqrt(np.clip(vals, 0.0, None)).sum())


def frechet_distance(a, b):
    if a.mu.shape != b.mu.shape or a.sigma.shape != b.sigma.shape:
        raise ValueError(f"dimension mismatch: {a.mu.shape} vs {b.mu.shape}")
    if np.array_equal(a.mu, b.mu) and np.array_equal(a.sigma, b.sigma):
        return 0.0
    diff = a.mu - b.mu
    # both congruence orders give the same trace in exact arithmetic; averaging keeps d symmetric
    d = float(diff @ diff) + float(np.trace(a.sigma) + np.trace(b.sigma)) \
        - (trace_sqrt_product(a.sigma, b.sigma) + trace_sqrt_product(b.sigma, a.sigma))
    if d < 0:
        if d < -NEG_TOL:
            raise ValueError(f"Frechet distance {d:.3e} is below -{NEG_TOL}; "
                             "covariances are not PSD")
        d = 0.0
    return d


def fid_from_images(real, fake, spec):
    return frechet_distance(gaussian_stats(extract_features(real, spec)),
                            gaussian_stats(extract_features(fake, spec)))


def save_features_csv(path, features):
    f = np.asarray(features, dtype=np.float64)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"f{i}" for i in range(f.shape[1])])
        for row in f:
            w.writerow([repr(float(v)) for v in row])


def load_features_csv(path):
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header != [f"f{i}" for i in range(len(header))]:
            raise ValueError(f"{path}: header must be f0..f{{D-1}}")
        rows = [[float(v) for v in row] for row in r if row]
    f = np.array(rows, dtype=np.float64).reshape(-1, len(header))
    return f
