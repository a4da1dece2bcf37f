"""Seeded stochastic image degradation: noise, lighting, Gaussian and motion blur.

Randomness
----------
Every draw comes from ``numpy.random.Philox`` (Philox4x64-10, counter based).
The 128-bit key is ``(seed, image_index)`` and the 256-bit starting counter
is ``(0, 0, lane, slot)``:

* slot 0, lane 0 -- plan: number of ops, then which ops (weighted choice)
* slot j+1, lane 0 -- parameters of the j-th applied op
* slot j+1, lane 1 -- pixel noise of the j-th applied op

so an image's result depends only on (seed, image_index) and never on the
order images are processed in. Images are float HxWxC arrays in [0, 1].
"""
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

M64 = (1 << 64) - 1
KINDS = ("gaussian_noise", "lighting", "gaussian_blur", "motion_blur")


def keyed_rng(seed, image_index, slot, lane=0):
    bitgen = np.random.Philox(key=[int(seed) & M64, int(image_index) & M64],
                              counter=[0, 0, lane, slot])
    return np.random.Generator(bitgen)


# ---------------------------------------------------------------- primitive ops

def gaussian_noise(img, sigma, rng):
    if sigma < 0:
        raise ValueError(f"noise sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return np.array(img, dtype=np.float64, copy=True)
    noise = rng.standard_normal(np.shape(img))
    return np.clip(img + sigma * noise, 0.0, 1.0)


def adjust_lighting(img, gain, gamma):
    if gain <= 0 or gamma <= 0:
        raise ValueError(f"gain and gamma must be positive, got {gain}, {gamma}")
    if gain == 1 and gamma == 1:
        return np.array(img, dtype=np.float64, copy=True)
    return np.clip(gain * np.power(img, gamma), 0.0, 1.0)


def gaussian_kernel1d(sigma, kernel_size):
    r = kernel_size // 2
    x = np.arange(-r, r + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def default_blur_size(sigma):
    return 2 * math.ceil(3 * sigma) + 1


def _correlate(img, taps):
    """Correlate HxW[xC] ``img`` with sparse ``taps`` [(dy, dx, w)], reflect padded.

    Written as x + sum w (x_shift - x), which equals sum w x_shift when the
    weights sum to one and leaves constant images bit-exact.
    """
    img = np.asarray(img, dtype=np.float64)
    r = max(max(abs(dy), abs(dx)) for dy, dx, _ in taps)
    if r == 0:
        return img.copy()
    pad = [(r, r), (r, r)] + [(0, 0)] * (img.ndim - 2)
    p = np.pad(img, pad, mode="reflect")
    h, w = img.shape[:2]
    acc = np.zeros_like(img)
    for dy, dx, wt in taps:
        acc += wt * (p[r + dy : r + dy + h, r + dx : r + dx + w] - img)
    return np.clip(img + acc, 0.0, 1.0)


def gaussian_blur(img, sigma, kernel_size=None):
    if kernel_size is None:
        kernel_size = default_blur_size(sigma)
    if kernel_size < 1 or kernel_size % 2 == 0:
        raise ValueError(f"kernel_size must be a positive odd integer, got {kernel_size}")
    if sigma <= 0:
        raise ValueError(f"blur sigma must be positive, got {sigma}")
    if kernel_size == 1:
        return np.array(img, dtype=np.float64, copy=True)
    k = gaussian_kernel1d(sigma, kernel_size)
    r = kernel_size // 2
    out = _correlate(img, [(0, i - r, k[i]) for i in range(kernel_size)])
    return _correlate(out, [(i - r, 0, k[i]) for i in range(kernel_size)])


def motion_kernel(length, angle):
    """Normalised line kernel (odd square) of ``length`` taps at ``angle`` degrees."""
    length = int(length)
    if length < 1:
        raise ValueError(f"motion blur length must be >= 1, got {length}")
    half = (length - 1) / 2
    size = 2 * math.ceil(half) + 1
    c = size // 2
    k = np.zeros((size, size))
    th = math.radians(angle)
    for t in np.linspace(-half, half, length):
        x = c + int(np.rint(t * math.cos(th)))
        y = c - int(np.rint(t * math.sin(th)))
        k[y, x] += 1.0
    return k / length


def motion_blur(img, length, angle):
    k = motion_kernel(length, angle)
    if k.shape == (1, 1):
        return np.array(img, dtype=np.float64, copy=True)
    c = k.shape[0] // 2
    taps = [(int(y) - c, int(x) - c, k[y, x]) for y, x in zip(*np.nonzero(k))]
    return _correlate(img, taps)


# ---------------------------------------------------------------- spec / record

DEFAULT_RANGES = {
    "gaussian_noise": {"sigma": [0.02, 0.15]},
    "lighting": {"gain": [0.4, 1.8], "gamma": [0.5, 2.2]},
    "gaussian_blur": {"sigma": [0.5, 2.5]},
    "motion_blur": {"length": [3, 9], "angle": [0.0, 180.0]},
}


@dataclass
class OpSpec:
    kind: str
    weight: float = 1.0
    ranges: dict = field(default_factory=dict)

    def range(self, name):
        return self.ranges.get(name, DEFAULT_RANGES[self.kind][name])


@dataclass
class DegradationSpec:
    ops: list = field(default_factory=lambda: [OpSpec(k) for k in KINDS])
    ops_per_image: tuple = (1, 2)
    seed: int = 0

    def validate(self):
        if not self.ops:
            raise ValueError("degradation spec has no ops")
        lo, hi = self.ops_per_image
        if not 1 <= lo <= hi:
            raise ValueError(f"ops_per_image must satisfy 1 <= lo <= hi, got {self.ops_per_image}")
        for op in self.ops:
            if op.kind not in KINDS:
                raise ValueError(f"unknown degradation {op.kind!r}")
            if not op.weight > 0:
                raise ValueError(f"{op.kind}: weight must be positive")
            for name in DEFAULT_RANGES[op.kind]:
                a, b = op.range(name)
                if a > b:
                    raise ValueError(f"{op.kind}.{name}: empty range [{a}, {b}]")
                if op.kind == "gaussian_noise":
                    if a < 0:
                        raise ValueError("gaussian_noise.sigma must be >= 0")
                elif name != "angle" and a <= 0:
                    raise ValueError(f"{op.kind}.{name} must be positive")
        return self

    @classmethod
    def from_dict(cls, d):
        ops = [OpSpec(o["kind"], float(o.get("weight", 1.0)),
                      {k: list(v) for k, v in o.items() if k not in ("kind", "weight")})
               for o in d.get("ops", [{"kind": k} for k in KINDS])]
        return cls(ops, tuple(d.get("ops_per_image", (1, 2))), int(d.get("seed", 0))).validate()

    def to_dict(self):
        return {"seed": self.seed, "ops_per_image": list(self.ops_per_image),
                "ops": [{"kind": o.kind, "weight": o.weight,
                         **{n: list(o.range(n)) for n in DEFAULT_RANGES[o.kind]}}
                        for o in self.ops]}

    @classmethod
    def load(cls, path):
        with open(path) as f:
            return cls.from_dict(json.load(f))


@dataclass
class AppliedRecord:
    seed: int
    image_index: int
    ops: list  # [{"kind", "slot", "params"}]

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(int(d["seed"]), int(d["image_index"]), list(d["ops"]))


def _sample_params(kind, op, rng):
    if kind == "gaussian_noise":
        return {"sigma": float(rng.uniform(*op.range("sigma")))}
    if kind == "lighting":
        return {"gain": float(rng.uniform(*op.range("gain"))),
                "gamma": float(rng.uniform(*op.range("gamma")))}
    if kind == "gaussian_blur":
        s = float(rng.uniform(*op.range("sigma")))
        return {"sigma": s, "kernel_size": default_blur_size(s)}
    lo, hi = op.range("length")
    return {"length": int(rng.integers(int(lo), int(hi) + 1)),
            "angle": float(rng.uniform(*op.range("angle")))}


def apply_op(img, kind, params, seed, image_index, slot):
    if kind == "gaussian_noise":
        return gaussian_noise(img, params["sigma"], keyed_rng(seed, image_index, slot, lane=1))
    if kind == "lighting":
        return adjust_lighting(img, params["gain"], params["gamma"])
    if kind == "gaussian_blur":
        return gaussian_blur(img, params["sigma"], params["kernel_size"])
    if kind == "motion_blur":
        return motion_blur(img, params["length"], params["angle"])
    raise ValueError(f"unknown degradation {kind!r}")


def degrade_random(img, spec, image_index):
    """Degrade one image; returns ``(degraded, AppliedRecord)``."""
    plan = keyed_rng(spec.seed, image_index, 0)
    lo, hi = spec.ops_per_image
    n = int(plan.integers(lo, hi + 1))
    w = np.array([o.weight for o in spec.ops], dtype=np.float64)
    picks = plan.choice(len(spec.ops), size=n, p=w / w.sum())
    out = np.asarray(img, dtype=np.float64)
    applied = []
    for j, pick in enumerate(picks):
        op = spec.ops[int(pick)]
        slot = j + 1
        params = _sample_params(op.kind, op, keyed_rng(spec.seed, image_index, slot))
        out = apply_op(out, op.kind, params, spec.seed, image_index, slot)
        applied.append({"kind": op.kind, "slot": slot, "params": params})
    return out, AppliedRecord(spec.seed, image_index, applied)


def replay(img, record):
    out = np.asarray(img, dtype=np.float64)
    for op in record.ops:
        out = apply_op(out, op["kind"], op["params"], record.seed, record.image_index, op["slot"])
    return out
