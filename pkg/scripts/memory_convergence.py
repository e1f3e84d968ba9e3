"""Excess of the memory-M bound over its limit, to show the convergence order.

For a recurrent walk the excess is a Cesaro mean of first-passage
probabilities that decay like 1/sqrt(t), so it falls like 1/sqrt(M).
"""

import numpy as np

from plenoptic_rates.entropy import memory_bound_curve, static_bounds
from plenoptic_rates.walk import WalkParams


def main():
    h_x = 8.0
    ms = np.array([1, 10, 100, 1_000, 10_000, 100_000])
    for p in (0.1, 0.3, 0.5):
        w = WalkParams(p)
        curve = memory_bound_curve(w, h_x, int(ms[-1]))
        excess = curve[ms - 1] - static_bounds(w, h_x).upper
        cells = "  ".join(f"M={m:<7d}{e:.3e}" for m, e in zip(ms, excess))
        print(f"p_w={p}: {cells}")
        if p == 0.5:
            print("  excess * sqrt(M):", np.round(excess[1:] * np.sqrt(ms[1:]), 3))


if __name__ == "__main__":
    main()
