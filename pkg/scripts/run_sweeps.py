#!/usr/bin/env python3
"""Run the full desk-scale experiment suite on synthetic data.

Produces, under --out:
  run/              single pipeline run (report.txt, report.csv, ga_history.csv)
  sweep_components/ accuracy vs component count
  sweep_size/       accuracy vs dataset size
  sweep_k/          accuracy vs neighbor count (doubling interval)
  sweep_ga/         accuracy over a GA population x generation grid
  ablate_ga/        GA on vs off, three repeats

Every table is reproducible bit-for-bit for a fixed --seed.
"""
import argparse
import math
import sys
from pathlib import Path

from metapipe.cli import main as cli_main


def run(argv):
    rc = cli_main(argv)
    if rc != 0:
        sys.exit(rc)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path("experiments"))
    parser.add_argument("--seed", type=int, default=2024)
    parser.add_argument("--n", type=int, default=600)
    parser.add_argument("--d", type=int, default=20)
    args = parser.parse_args()

    base = [
        "--seed", str(args.seed),
        "--synth-n", str(args.n),
        "--synth-d", str(args.d),
        "--synth-separation", "6",
        "--synth-noise", "1",
        "--pca-components", "5",
        "--ga-population", "10",
        "--ga-generations", "10",
    ]
    out = args.out
    train_size = args.n - math.ceil(args.n * 0.2)
    k_cap = min(320, train_size)

    run(["run", "--out", str(out / "run"), *base])
    run(["sweep-components", "--values", "1,2,4,8,16,20",
         "--out", str(out / "sweep_components"), "--no-ga", *base])
    run(["sweep-size", "--sizes", "75,150,300,600",
         "--out", str(out / "sweep_size"), "--no-ga", *base])
    run(["sweep-k", "--k-doubling-max", str(k_cap),
         "--out", str(out / "sweep_k"), "--no-ga", *base])
    run(["sweep-ga", "--pop-sizes", "4,10,20", "--generations", "5,10",
         "--out", str(out / "sweep_ga"), *base])
    run(["ablate-ga", "--repeats", "3", "--out", str(out / "ablate_ga"), *base])
    print(f"\nall tables written under {out}/")


if __name__ == "__main__":
    main()
