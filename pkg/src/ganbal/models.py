"""Toy-scale U-Net generator and PatchGAN discriminator.

All convolutions use 4x4 kernels, stride 2, pad 1. The generator has no
noise input: it is a deterministic function of the conditioning image.
"""
from dataclasses import asdict, dataclass

import numpy as np

from .nn import ParamSet, Tensor, concat, conv2d, transposed_conv2d
from .nn.autograd import leaky_relu, relu, sigmoid, tanh

KERNEL = 4
STRIDE = 2
PAD = 1
SLOPE = 0.2
INIT_STD = 0.02


@dataclass
class GeneratorConfig:
    input_size: int = 32
    depth: int = 3
    base_channels: int = 16
    in_channels: int = 3
    out_channels: int = 3

    def validate(self):
        if self.depth < 1:
            raise ValueError(f"generator depth must be >= 1, got {self.depth}")
        s = self.input_size
        if s < 1 or s & (s - 1):
            raise ValueError(f"input_size must be a power of two, got {s}")
        if s < 2 ** self.depth:
            raise ValueError(f"input_size {s} too small for depth {self.depth}")
        if self.base_channels < 1 or self.in_channels < 1 or self.out_channels < 1:
            raise ValueError("channel counts must be positive")
        return self

    def encoder_channels(self):
        return [self.base_channels * 2 ** i for i in range(self.depth)]


@dataclass
class DiscriminatorConfig:
    layers: int = 3
    base_channels: int = 16
    image_channels: int = 3

    @property
    def in_channels(self):
        return 2 * self.image_channels

    def validate(self):
        if self.layers < 1:
            raise ValueError(f"discriminator needs >= 1 layer, got {self.layers}")
        if self.base_channels < 1 or self.image_channels < 1:
            raise ValueError("channel counts must be positive")
        return self

    def channels(self):
        return [self.base_channels * 2 ** i for i in range(self.layers - 1)] + [1]

    def patch_grid(self, size):
        """(Hp, Wp) of the patch map for ``size``x``size`` inputs."""
        h = size
        for _ in range(self.layers):
            h = (h + 2 * PAD - KERNEL) // STRIDE + 1
            if h < 1:
                raise ValueError(f"{size}px input collapses after {self.layers} layers")
        return h, h

    def patch_count(self, size):
        hp, wp = self.patch_grid(size)
        return hp * wp


def generator_layer_shapes(cfg):
    """Ordered ``(name, shape)`` of every generator parameter."""
    enc = cfg.encoder_channels()
    shapes = []
    cin = cfg.in_channels
    for i, c in enumerate(enc):
        shapes += [(f"enc{i}.w", (c, cin, KERNEL, KERNEL)), (f"enc{i}.b", (c,))]
        cin = c
    # decoder level j upsamples; its output is concatenated with encoder level depth-1-j
    for j in range(cfg.depth):
        level = cfg.depth - 1 - j
        cout = enc[level - 1] if level > 0 else cfg.out_channels
        shapes += [(f"dec{j}.w", (cin, cout, KERNEL, KERNEL)), (f"dec{j}.b", (cout,))]
        cin = 2 * cout if level > 0 else cout
    return shapes


def discriminator_layer_shapes(cfg):
    shapes = []
    cin = cfg.in_channels
    for i, c in enumerate(cfg.channels()):
        shapes += [(f"conv{i}.w", (c, cin, KERNEL, KERNEL)), (f"conv{i}.b", (c,))]
        cin = c
    return shapes


def _init(shapes, rng, dtype, std):
    ps = ParamSet(dtype)
    for name, shape in shapes:
        if name.endswith(".b"):
            ps.add(name, np.zeros(shape))
        else:
            ps.add(name, rng.normal(0.0, std, size=shape))
    return ps


def build_models(gcfg, dcfg, seed=0, dtype=np.float32, init_std=INIT_STD):
    """Initialise generator and discriminator parameters deterministically from ``seed``."""
    gcfg.validate()
    dcfg.validate()
    if dcfg.image_channels != gcfg.out_channels or gcfg.in_channels != gcfg.out_channels:
        raise ValueError("discriminator image_channels must match the generator's channels")
    dcfg.patch_grid(gcfg.input_size)
    g_rng, d_rng = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2))
    gparams = _init(generator_layer_shapes(gcfg), g_rng, dtype, init_std)
    dparams = _init(discriminator_layer_shapes(dcfg), d_rng, dtype, init_std)
    return gparams, dparams


def generator_forward(x, params, cfg):
    x = x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=params.dtype))
    if x.data.ndim != 4 or x.shape[2:] != (cfg.input_size, cfg.input_size):
        raise ValueError(f"generator expects N x {cfg.in_channels} x {cfg.input_size} x "
                         f"{cfg.input_size} input, got {x.shape}")
    if x.shape[1] != cfg.in_channels:
        raise ValueError(f"generator expects {cfg.in_channels} channels, got {x.shape[1]}")
    skips = []
    h = x
    for i in range(cfg.depth):
        h = leaky_relu(conv2d(h, params[f"enc{i}.w"], params[f"enc{i}.b"], STRIDE, PAD), SLOPE)
        skips.append(h)
    for j in range(cfg.depth):
        level = cfg.depth - 1 - j
        h = transposed_conv2d(h, params[f"dec{j}.w"], params[f"dec{j}.b"], STRIDE, PAD)
        if level > 0:
            h = concat([relu(h), skips[level - 1]], axis=1)
    return tanh(h)


def discriminator_forward(x, candidate, params, cfg):
    """Patch probabilities for (condition, candidate) pairs, shape N x 1 x Hp x Wp."""
    x = x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=params.dtype))
    candidate = candidate if isinstance(candidate, Tensor) else Tensor(
        np.asarray(candidate, dtype=params.dtype))
    if x.shape != candidate.shape:
        raise ValueError(f"condition {x.shape} and candidate {candidate.shape} differ in shape")
    h = concat([x, candidate], axis=1)
    n = cfg.layers
    for i in range(n):
        h = conv2d(h, params[f"conv{i}.w"], params[f"conv{i}.b"], STRIDE, PAD)
        if i < n - 1:
            h = leaky_relu(h, SLOPE)
    return sigmoid(h)


def architecture_document(gcfg, dcfg, gparams, dparams):
    """JSON-ready description echoed into run directories."""
    return {
        "generator": {**asdict(gcfg), "parameters": gparams.count(),
                      "layers": {k: list(v.shape) for k, v in gparams.items()}},
        "discriminator": {**asdict(dcfg), "parameters": dparams.count(),
                          "patch_grid": list(dcfg.patch_grid(gcfg.input_size)),
                          "layers": {k: list(v.shape) for k, v in dparams.items()}},
        "kernel": KERNEL, "stride": STRIDE, "pad": PAD,
    }
