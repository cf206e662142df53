"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

The last row runs the algebra-law workload end to end under each backend
in a subprocess, since the backend is fixed at import time.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from stabtensor.kernels import available_backends

WORKLOAD = """
import time, numpy as np
from stabtensor.randgen import random_tensor
from stabtensor.tensor import mul
rng = np.random.default_rng(0)
xs = [tuple(random_tensor(rng, max_terms=2) for _ in range(3)) for _ in range(150)]
t0 = time.perf_counter()
for a, b, c in xs:
    mul(mul(a, b), c).allclose(mul(a, mul(b, c)))
print(time.perf_counter() - t0)
"""


def cases(rng):
    b = np.cumsum(rng.uniform(0.1, 1.0, 41)) - 10.0
    c = rng.normal(size=(40, 4))
    cc = np.ascontiguousarray(c + 1j * rng.normal(size=c.shape))
    t = rng.uniform(-12, 12, 20000)
    nodes, weights = np.polynomial.legendre.leggauss(16)
    samples = rng.normal(size=(100000, 8))
    idx = np.arange(8, dtype=np.int64)
    val = rng.normal(size=8)
    b2 = b + 0.37
    pieces = [(b, cc), (b2, cc), (b[::2].copy(), np.ascontiguousarray(cc[:20]))]
    return {
        "pp_eval (20k points)": lambda k: k.pp_eval(b, c, t),
        "gl_panels (40 panels)": lambda k: k.gl_panels(c, b[:-1], b[:-1], b[1:], 0.8, 1.0, nodes, weights),
        "mc_char_mean (1e5 x 8)": lambda k: k.mc_char_mean(samples, idx, val),
        "pp_canonicalize (40 pieces)": lambda k: k.pp_canonicalize(b, c, 1e-15, 1e-12, 1e-12),
        "env_mul (40 x 40 pieces)": lambda k: k.env_mul(b, cc, b2, cc, 1e-12),
        "env_sum (3 operands)": lambda k: k.env_sum(pieces, 1e-12),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = available_backends()
    if "cython" not in backends:
        print("compiled extension not built; only the fallback is available")
    rng = np.random.default_rng(0)
    print(f"{'kernel':32s}" + "".join(f"{name:>14s}" for name in backends) + "   speedup")
    for name, fn in cases(rng).items():
        times = {}
        for bname, mod in backends.items():
            fn(mod)
            number = 20
            times[bname] = min(timeit.repeat(lambda: fn(mod), number=number, repeat=args.repeat)) / number
        line = f"{name:32s}" + "".join(f"{1e6 * v:12.1f}us" for v in times.values())
        if "cython" in times:
            line += f"   {times['python'] / times['cython']:6.1f}x"
        print(line)
    e2e = {}
    for bname in backends:
        env = dict(os.environ, STABTENSOR_PURE_PYTHON="1" if bname == "python" else "0")
        out = subprocess.run([sys.executable, "-c", WORKLOAD], env=env, capture_output=True, text=True, check=True)
        e2e[bname] = float(out.stdout)
    line = f"{'associativity, 150 triples':32s}" + "".join(f"{v:13.2f}s" for v in e2e.values())
    if "cython" in e2e:
        line += f"   {e2e['python'] / e2e['cython']:6.1f}x"
    print(line)


if __name__ == "__main__":
    main()
