"""Ring benchmark study: train on several seeds and tabulate potential errors.

Usage:  python scripts/ring_benchmark.py [--seeds N] [--epochs E]
"""

import argparse
import os
import sys
import time

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

import numpy as np

from holoelastic.analytics import (
    eval_grid,
    rel_l2,
    ring_exact_potentials,
    ring_exact_stress,
    rms,
    rotate_stress,
)
from holoelastic.problem import load_config
from holoelastic.training import TrainConfig, train

CONFIG = os.path.join(os.path.dirname(__file__), "..", "configs", "ring_quadrant.json")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--epochs", type=int, default=None)
    args = ap.parse_args()

    spec = load_config(CONFIG)
    epochs = args.epochs if args.epochs is not None else spec.training.epochs
    ref = spec.reference
    print(f"{'seed':>4} {'secs':>6} {'loss0':>10} {'lossT':>10} {'rel dphi':>9} {'rel dpsi':>9} {'shear rms':>9}")
    for seed in range(args.seeds):
        cfg = TrainConfig(**{**spec.training.__dict__, "seed": seed, "epochs": epochs})
        t0 = time.perf_counter()
        pairs, hist = train(spec, cfg)
        secs = time.perf_counter() - t0
        grid = eval_grid(pairs, spec, 40, 40)
        X, Y = np.meshgrid(grid.xs, grid.ys)
        Z = np.where(grid.mask, X + 1j * Y, 1.0)
        dphi_ref, dpsi_ref = ring_exact_potentials(Z, ref["p"], ref["r"], ref["R"])
        e1 = rel_l2(grid.dphi, dphi_ref, grid.mask)
        e2 = rel_l2(grid.dpsi, dpsi_ref, grid.mask)
        _, _, srt = rotate_stress(grid.sxx, grid.syy, grid.sxy, np.angle(X + 1j * Y))
        print(
            f"{seed:>4} {secs:>6.1f} {hist.train_loss[0]:>10.3e} {hist.train_loss[-1]:>10.3e} "
            f"{e1:>9.4f} {e2:>9.4f} {rms(srt, grid.mask):>9.4f}"
        )


if __name__ == "__main__":
    main()
