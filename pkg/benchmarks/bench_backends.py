"""Time the elementwise kernels and a training step on both backends.

Usage:
    python3 benchmarks/bench_backends.py            # kernel micro-benchmarks
    python3 benchmarks/bench_backends.py --train    # plus full update() timing

The kernel tables are fetched side by side in one process; the training
comparison re-launches the interpreter with GATEPILOT_BACKEND set because
the backend is chosen once at import time.
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), os.pardir, "src"))

from gatepilot import kernels  # noqa: E402


def _time(fn, *args, repeat=200):
    fn(*args)  # warm up (numba compiles here)
    best = float("inf")
    for _ in range(5):
        t0 = time.perf_counter()
        for _ in range(repeat):
            fn(*args)
        best = min(best, (time.perf_counter() - t0) / repeat)
    return best


def bench_kernels():
    rng = np.random.default_rng(0)
    n = 400 * 300  # the big hidden layer
    z = rng.normal(size=n)
    y = np.tanh(z)
    g = rng.normal(size=n)
    p = rng.normal(size=n)
    grad = rng.normal(size=n)

    tables = {name: kernels.get_backend(name)
              for name in kernels.available_backends()}
    print(f"array size {n} ({n * 8 / 1e6:.1f} MB per operand)")
    print(f"{'kernel':<14}" + "".join(f"{name:>12}" for name in tables))
    for kname in kernels.KERNEL_NAMES:
        row = f"{kname:<14}"
        for name, table in tables.items():
            fn = table[kname]
            if kname == "relu_vjp":
                dt = _time(fn, z, g)
            elif kname == "tanh_vjp":
                dt = _time(fn, y, g)
            elif kname == "adam_update":
                pp, m, v = p.copy(), np.zeros(n), np.zeros(n)
                dt = _time(fn, pp, grad, m, v, 1e-4, 0.9, 0.999, 1e-8, 0.1, 0.001)
            else:  # polyak_blend
                tgt = p.copy()
                dt = _time(fn, tgt, grad, 0.999)
            row += f"{dt * 1e6:>10.1f}us"
        print(row)


_TRAIN_SNIPPET = """
import time
import numpy as np
from gatepilot import gateworld, kernels, td3core

env = gateworld.GateEnv(seed=0)
tr = td3core.Trainer(env, td3core.Td3Config(), seed=0)
tr.train(200)                       # fill the buffer, compile everything
t0 = time.perf_counter()
tr.train(400)
dt = (time.perf_counter() - t0) / 400
print(f"  {kernels.BACKEND:>6}: {dt * 1e3:.2f} ms per env step (update included)")
"""


def bench_training():
    print("\nfull training step (batch 100, both critics, delayed actor):")
    for backend in kernels.available_backends():
        env = dict(os.environ, GATEPILOT_BACKEND=backend)
        subprocess.run([sys.executable, "-c", _TRAIN_SNIPPET], env=env, check=True)


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--train", action="store_true",
                    help="also time full training steps per backend")
    args = ap.parse_args()
    bench_kernels()
    if args.train:
        bench_training()
