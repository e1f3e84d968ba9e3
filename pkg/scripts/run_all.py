"""Run every experiment config in configs/ and write results/."""

import argparse
import pathlib
import sys
import time

from plenoptic_rates import cli

ROOT = pathlib.Path(__file__).resolve().parent.parent


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--only", nargs="*", choices=cli.EXPERIMENTS, help="subset of experiments")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    failed = 0
    for name in args.only or cli.EXPERIMENTS:
        cfg = ROOT / "configs" / f"{name}.yaml"
        out = ROOT / "results" / (name + (".json" if name == "verify" else ".csv"))
        start = time.perf_counter()
        code = cli.main([name, "--config", str(cfg), "--out", str(out), "--threads", str(args.threads)])
        print(f"{name:20s} exit={code} {time.perf_counter() - start:7.1f}s -> {out.relative_to(ROOT)}")
        failed += code != 0
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
