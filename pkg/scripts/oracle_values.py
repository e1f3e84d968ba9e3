"""Recompute the reference constants frozen in the test suite.

Uses only the plain-Python oracles in tests/oracles.py, never the package.
"""

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "tests"))

import oracles  # noqa: E402


def main():
    print("bsc_cond_rate(p=0.5, L=8, p_i=0.1) =", repr(oracles.bsc_cond_rate(0.5, 8, 0.1)))
    print("ar1_cond_rate(p=0.5, L=8, rho=0.99) =", repr(oracles.ar1_cond_rate(0.5, 8, 0.99)))
    joint = oracles.static_view_entropies(0.5, 2, 2, (0.5, 0.5))
    print("uniform binary wall, L=2, p=0.5: H(V_0..V_k) =", [repr(h) for h in joint])
    print("  H(V_2 | V_0, V_1) =", repr(joint[2] - joint[1]))


if __name__ == "__main__":
    main()
