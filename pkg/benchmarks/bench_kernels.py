"""Compare the compiled and numpy kernel backends.

Run with ``python3 benchmarks/bench_kernels.py``. Prints the median time per
call for each backend and the speedup of the compiled one.
"""

from __future__ import annotations

import argparse
import math
import timeit

import numpy as np

from mdisc import kernels
from mdisc.apparatus import QubitPair


def median_time(fn, repeat: int) -> float:
    number = max(1, int(0.05 / max(timeit.timeit(fn, number=1), 1e-7)))
    return float(np.median(timeit.repeat(fn, number=number, repeat=repeat))) / number


def cases():
    pair = QubitPair(2 * math.asin(1 / math.sqrt(3)))
    for n in (4, 6, 8):
        yield f"tensor_power n={n}", "qubit_tensor_power", (pair.a, pair.b, n)
    # theta = 1 has no singular block, so the scan visits every subset
    far = QubitPair(1.0)
    for n, k in ((3, 4), (4, 3), (4, 5)):
        u = kernels.qubit_tensor_power(far.a, far.b, n)
        yield f"scan n={n} k={k}", "scan_principal_submatrices", (u, k, 1e-8)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    backends = kernels.available_backends()
    if "compiled" not in backends:
        print("compiled backend not built; timing the numpy fallback only")
    print(f"{'case':<22}" + "".join(f"{name:>14}" for name in backends) + "   speedup")
    for label, fname, call_args in cases():
        times = {name: median_time(lambda m=mod: getattr(m, fname)(*call_args), args.repeat)
                 for name, mod in backends.items()}
        row = f"{label:<22}" + "".join(f"{t * 1e6:>11.1f} us" for t in times.values())
        if len(times) == 2:
            row += f"   {times['python'] / times['compiled']:.1f}x"
        print(row)


if __name__ == "__main__":
    main()
