"""Initialization variance study on the homogeneous square benchmark.

Reproduces the per-layer variance tables for the deep 7x100 network at the
three initialization scales. Usage:

    python scripts/init_variance_study.py [--seeds N] [--units U --layers L]
"""

import argparse
import os
import sys
import warnings

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

import numpy as np

from holoelastic.analytics import init_diagnostics
from holoelastic.jets import ActivationKind
from holoelastic.network import BETA2, BETA3


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--units", type=int, default=100)
    ap.add_argument("--layers", type=int, default=7)
    ap.add_argument("--probe", type=int, default=10_000)
    ap.add_argument("--batch", type=int, default=1_000)
    args = ap.parse_args()

    arch = [args.units] * args.layers
    rows = ("var_y", "var_phi_w", "var_dphi_w", "var_ddphi_w", "var_loss_w")
    for beta, label in ((BETA3, "beta3"), (0.5, "0.5"), (BETA2, "beta2")):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            reps = [
                init_diagnostics(arch, ActivationKind.EXP, beta, None, args.probe, args.batch, s)
                for s in range(args.seeds)
            ]
        print(f"\nbeta = {label} ({beta:.4f}), {args.seeds} seeds")
        header = " ".join(f"{'L' + str(l):>9}" for l in reps[0].layers)
        print(f"{'':14s}{header}")
        for row in rows:
            mean = np.mean([getattr(r, row) for r in reps], axis=0)
            print(f"{row:14s}" + " ".join(f"{v:>9.2e}" for v in mean))


if __name__ == "__main__":
    main()
