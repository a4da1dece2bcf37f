"""Time the numba and pure-numpy convolution kernels on desk-scale layer shapes.

    python benchmarks/bench_kernels.py [--repeat 20] [--epoch]

``--epoch`` additionally times one full training epoch under each backend,
running the numpy one in a subprocess with GANBAL_DISABLE_NUMBA=1.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from ganbal.nn import kernels

# (batch, Cin, H, Cout) for the encoder/discriminator layers at 32px, m = 8
SHAPES = [(8, 3, 32, 16), (8, 6, 32, 16), (8, 16, 16, 32), (8, 32, 8, 64), (8, 64, 4, 64)]

EPOCH_SNIPPET = """
import sys, tempfile, time
sys.path.insert(0, {tests!r})
from conftest import make_dataset
from ganbal.train import TrainConfig, train
from ganbal._backend import backend_name
root = tempfile.mkdtemp()
man = make_dataset(root, 200, 32, seed=0)
cfg = TrainConfig(epochs=1, fid_every=100, record_timing=False)
train(cfg, man, root + "/warm")
t = time.perf_counter()
train(TrainConfig(epochs=2, fid_every=100, record_timing=False), man, root + "/run")
print(backend_name(), (time.perf_counter() - t) / 2)
"""


def bench(fn, repeat):
    fn()
    return min(timeit.repeat(fn, number=1, repeat=repeat)) * 1e3


def kernel_table(repeat):
    if not kernels.USE_NUMBA:
        print("numba unavailable or disabled; only the numpy path can be timed")
    r = np.random.default_rng(0)
    print(f"{'shape (N,Cin,H,Cout)':<24}{'op':<14}{'numpy ms':>10}{'numba ms':>10}{'speedup':>9}")
    for n, cin, h, cout in SHAPES:
        x = r.standard_normal((n, cin, h, h)).astype(np.float32)
        w = r.standard_normal((cout, cin, 4, 4)).astype(np.float32)
        gy = r.standard_normal((n, cout, h // 2, h // 2)).astype(np.float32)
        ops = {
            "forward": ("conv_forward", (x, w, 2, 1)),
            "input_grad": ("conv_input_grad", (gy, w, h, h, 2, 1)),
            "weight_grad": ("conv_weight_grad", (x, gy, 4, 2, 1)),
        }
        for op, (name, args) in ops.items():
            t_np = bench(lambda: getattr(kernels, "np_" + name)(*args), repeat)
            if kernels.USE_NUMBA:
                t_nb = bench(lambda: getattr(kernels, "nb_" + name)(*args), repeat)
                cols = f"{t_nb:>10.3f}{t_np / t_nb:>8.2f}x"
            else:
                cols = f"{'-':>10}{'-':>9}"
            print(f"{str((n, cin, h, cout)):<24}{op:<14}{t_np:>10.3f}{cols}")


def epoch_table():
    tests = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "tests")
    code = EPOCH_SNIPPET.format(tests=os.path.abspath(tests))
    for disable in ("0", "1"):
        env = dict(os.environ, GANBAL_DISABLE_NUMBA=disable)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                             check=True).stdout.split()
        print(f"epoch (200 pairs, 32px, m=8) backend={out[0]:<6} {float(out[1]):.2f}s")


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=20)
    p.add_argument("--epoch", action="store_true")
    a = p.parse_args()
    kernel_table(a.repeat)
    if a.epoch:
        epoch_table()


if __name__ == "__main__":
    main()
