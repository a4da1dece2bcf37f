"""Adversarial and reconstruction losses, all in minimised form.

Probabilities are clamped to ``[delta, 1 - delta]`` before any log. Patch
losses sum over patches and average over the batch (no division by the
patch count).
"""
from dataclasses import dataclass

import numpy as np

from .nn.autograd import Tensor, absolute, as_tensor, clip, log, mul, sub, sum_

L1_MODES = ("mean-per-pixel", "sum-per-image")


@dataclass
class LossConfig:
    lambda_g: float = 100.0
    l1_normalization: str = "mean-per-pixel"
    delta: float = 1e-7

    def validate(self):
        if self.lambda_g < 0:
            raise ValueError(f"lambda_g must be >= 0, got {self.lambda_g}")
        if not 0 < self.delta < 0.5:
            raise ValueError(f"delta must lie in (0, 0.5), got {self.delta}")
        if self.l1_normalization not in L1_MODES:
            raise ValueError(f"l1_normalization must be one of {L1_MODES}")
        return self


def _prob(t, delta):
    t = as_tensor(t, np.float64)
    if t.data.size == 0 or t.data.ndim == 0 or t.shape[0] == 0:
        raise ValueError("empty batch")
    return clip(t, delta, 1.0 - delta)


def _batch_mean_of_sum(t, m):
    return mul(sum_(t), 1.0 / m)


def vanilla_disc_loss(d_real, d_fake, delta=1e-7):
    """Negated classic discriminator objective: -(1/m) sum[log D(x) + log(1 - D(G(z)))]."""
    r, f = _prob(d_real, delta), _prob(d_fake, delta)
    if r.shape[0] != f.shape[0]:
        raise ValueError(f"batch sizes differ: {r.shape[0]} vs {f.shape[0]}")
    m = r.shape[0]
    return -(_batch_mean_of_sum(log(r), m) + _batch_mean_of_sum(log(1.0 - f), m))


def vanilla_gen_loss(d_fake, delta=1e-7):
    """(1/m) sum log(1 - D(G(z))); decreasing in every d_fake entry."""
    f = _prob(d_fake, delta)
    return _batch_mean_of_sum(log(1.0 - f), f.shape[0])


def patch_disc_loss(real_map, fake_map, delta=1e-7):
    r, f = _prob(real_map, delta), _prob(fake_map, delta)
    if r.shape != f.shape:
        raise ValueError(f"patch maps differ in shape: {r.shape} vs {f.shape}")
    m = r.shape[0]
    return -(_batch_mean_of_sum(log(r), m) + _batch_mean_of_sum(log(1.0 - f), m))


def gen_adv_loss(fake_map, delta=1e-7):
    f = _prob(fake_map, delta)
    return -_batch_mean_of_sum(log(f), f.shape[0])


def l1_loss(generated, target, cfg=None):
    cfg = cfg or LossConfig()
    g = as_tensor(generated)
    t = as_tensor(target, g.dtype)
    if g.shape != t.shape:
        raise ValueError(f"generated {g.shape} and target {t.shape} differ in shape")
    if g.data.ndim == 0 or g.shape[0] == 0:
        raise ValueError("empty batch")
    m = g.shape[0]
    total = sum_(absolute(sub(t, g)))
    per_image = g.data.size // m
    scale = 1.0 / m if cfg.l1_normalization == "sum-per-image" else 1.0 / (m * per_image)
    return mul(total, scale)


def gen_total_loss(fake_map, generated, target, cfg=None):
    """Returns ``(total, adversarial, l1)``; total = adv + lambda_g * l1."""
    cfg = cfg or LossConfig()
    adv = gen_adv_loss(fake_map, cfg.delta)
    rec = l1_loss(generated, target, cfg)
    return adv + mul(rec, cfg.lambda_g), adv, rec


def value(t):
    return float(t.data) if isinstance(t, Tensor) else float(t)
