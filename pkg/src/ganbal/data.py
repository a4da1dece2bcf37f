"""Paired clean/degraded datasets on disk.

Layout::

    <root>/clean/*.png
    <root>/degraded/*.png  (+ per-image *.json degradation records)
    <root>/manifest.json
"""
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .pngio import read_png, write_png

MANIFEST = "manifest.json"


# ---------------------------------------------------------------- synthetic scenes

def _scene(rng, size):
    yy, xx = np.mgrid[0:size, 0:size] / (size - 1)
    c0, c1 = rng.uniform(0, 1, 3), rng.uniform(0, 1, 3)
    ang = rng.uniform(0, 2 * np.pi)
    t = np.clip((np.cos(ang) * (xx - 0.5) + np.sin(ang) * (yy - 0.5)) + 0.5, 0, 1)
    img = c0 * (1 - t)[..., None] + c1 * t[..., None]
    # low-frequency ripple
    fx, fy = rng.uniform(0.5, 3, 2)
    img += 0.08 * np.sin(2 * np.pi * (fx * xx + fy * yy) + rng.uniform(0, 2 * np.pi))[..., None]
    for _ in range(rng.integers(2, 6)):
        color = rng.uniform(0, 1, 3)
        cx, cy = rng.uniform(0, 1, 2)
        r = rng.uniform(0.08, 0.3)
        if rng.uniform() < 0.5:
            mask = (xx - cx) ** 2 + (yy - cy) ** 2 <= r * r
        else:
            hw, hh = r, rng.uniform(0.05, 0.3)
            mask = (np.abs(xx - cx) <= hw) & (np.abs(yy - cy) <= hh)
        img[mask] = color
    img += rng.normal(0, 0.03, img.shape)
    return np.clip(img, 0, 1)


def synth_dataset(n, size, seed, out_dir):
    """Write ``n`` procedural ``size``x``size`` RGB scenes to ``out_dir``; returns the paths."""
    if n < 1 or size < 8:
        raise ValueError(f"need n >= 1 and size >= 8, got n={n}, size={size}")
    os.makedirs(out_dir, exist_ok=True)
    width = max(4, len(str(n - 1)))
    paths = []
    for i, ss in enumerate(np.random.SeedSequence(seed).spawn(n)):
        p = os.path.join(out_dir, f"{i:0{width}d}.png")
        write_png(p, _scene(np.random.default_rng(ss), size))
        paths.append(p)
    return paths


# ---------------------------------------------------------------- manifest

@dataclass
class Manifest:
    root: str
    entries: list          # [{"id", "clean", "degraded", "split"}], paths relative to root
    seed: int
    image_size: int
    val_fraction: float = 0.1
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def split(self, name):
        return [e for e in self.entries if e["split"] == name]

    def ids(self, name):
        return [e["id"] for e in self.split(name)]

    def to_dict(self):
        return {"seed": self.seed, "image_size": self.image_size,
                "val_fraction": self.val_fraction, "entries": self.entries}

    def save(self, path=None):
        path = path or os.path.join(self.root, MANIFEST)
        tmp = os.fspath(path) + ".tmp"
        with open(tmp, "w") as f:
            json.dump(self.to_dict(), f, indent=1)
        os.replace(tmp, path)
        return path

    @classmethod
    def load(cls, path):
        if os.path.isdir(path):
            path = os.path.join(path, MANIFEST)
        with open(path) as f:
            d = json.load(f)
        return cls(os.path.dirname(os.path.abspath(path)), d["entries"], d["seed"],
                   d["image_size"], d.get("val_fraction", 0.1))

    def image(self, entry, which):
        key = (entry["id"], which)
        if key not in self._cache:
            self._cache[key] = read_png(os.path.join(self.root, entry[which]))
        return self._cache[key]


def _pngs(d):
    return sorted(f for f in os.listdir(d) if f.lower().endswith(".png"))


def build_manifest(clean_dir, degraded_dir, val_fraction=0.1, seed=0, root=None):
    from PIL import Image

    if not 0 <= val_fraction < 1:
        raise ValueError(f"val_fraction must be in [0, 1), got {val_fraction}")
    clean, degraded = _pngs(clean_dir), _pngs(degraded_dir)
    only_c = sorted(set(clean) - set(degraded))
    only_d = sorted(set(degraded) - set(clean))
    if only_c or only_d:
        name = (only_c or only_d)[0]
        where = clean_dir if only_c else degraded_dir
        raise ValueError(f"unpaired file {name!r} in {where}")
    if not clean:
        raise ValueError(f"no PNG images in {clean_dir}")
    root = os.path.abspath(root or os.path.dirname(os.path.abspath(clean_dir)))
    size = None
    for name in clean:
        with Image.open(os.path.join(clean_dir, name)) as a, \
                Image.open(os.path.join(degraded_dir, name)) as b:
            if a.size != b.size:
                raise ValueError(f"pair {name!r} has mismatched sizes {a.size} vs {b.size}")
            if a.size[0] != a.size[1]:
                raise ValueError(f"{name!r} is not square: {a.size}")
            if size is None:
                size = a.size[0]
            elif a.size[0] != size:
                raise ValueError(f"{name!r} is {a.size[0]}px, expected {size}px")
    order = np.random.default_rng(seed).permutation(len(clean))
    n_val = int(round(val_fraction * len(clean)))
    val = set(order[:n_val].tolist())
    entries = []
    for i, name in enumerate(clean):
        entries.append({
            "id": os.path.splitext(name)[0],
            "clean": os.path.relpath(os.path.join(clean_dir, name), root),
            "degraded": os.path.relpath(os.path.join(degraded_dir, name), root),
            "split": "val" if i in val else "train",
        })
    return Manifest(root, entries, int(seed), int(size), float(val_fraction))


# ---------------------------------------------------------------- batches

@dataclass
class Batch:
    x: np.ndarray   # degraded, N x C x H x W in [-1, 1]
    y: np.ndarray   # clean
    indices: list


def to_model_range(img_hwc):
    return np.transpose(img_hwc, (2, 0, 1)) * 2.0 - 1.0


def to_image_range(chw):
    return np.clip((np.transpose(np.asarray(chw), (1, 2, 0)) + 1.0) / 2.0, 0.0, 1.0)


def epoch_length(n, m):
    if m < 1:
        raise ValueError(f"batch size must be >= 1, got {m}")
    return math.ceil(n / m)


def epoch_order(manifest, split, epoch):
    n = len(manifest.split(split))
    return np.random.default_rng(manifest.seed + epoch).permutation(n)


def load_batch(manifest, split, batch_index, m, epoch=0, dtype=np.float32):
    entries = manifest.split(split)
    n_batches = epoch_length(len(entries), m)
    if not 0 <= batch_index < n_batches:
        raise IndexError(f"batch {batch_index} outside epoch of {n_batches} batches")
    order = epoch_order(manifest, split, epoch)
    idx = order[batch_index * m : (batch_index + 1) * m].tolist()
    x = np.stack([to_model_range(manifest.image(entries[i], "degraded")) for i in idx])
    y = np.stack([to_model_range(manifest.image(entries[i], "clean")) for i in idx])
    return Batch(x.astype(dtype), y.astype(dtype), idx)


def load_split(manifest, split, limit=None, dtype=np.float64):
    """All (x, y) of a split in manifest order, optionally the first ``limit``."""
    entries = manifest.split(split)[:limit]
    x = np.stack([to_model_range(manifest.image(e, "degraded")) for e in entries])
    y = np.stack([to_model_range(manifest.image(e, "clean")) for e in entries])
    return x.astype(dtype), y.astype(dtype)
