"""Command line interface.

Commands:
  train <config>                      checkpoint + history CSV
  eval <config> <checkpoint>          field CSV (+ error CSV for exact refs)
  init-check <config>                 per-layer variance report CSV
  approx-demo                         shallow-approximator sup-error study
  sample <config>                     boundary sample CSV

Heavy imports happen inside the commands so the HOLOELASTIC_THREADS cap can
be applied to the BLAS thread pools before numpy loads.
"""

from __future__ import annotations

import argparse
import os
import sys
import time


def _apply_thread_cap() -> None:
    cap = os.environ.get("HOLOELASTIC_THREADS")
    if not cap:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, cap)


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="holoelastic")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train networks for a problem config")
    t.add_argument("config")
    t.add_argument("--seed", type=int, default=None, help="override the config seed")
    t.add_argument("--wall-times", action="store_true", help="export measured epoch times")

    e = sub.add_parser("eval", help="evaluate a checkpoint on a field grid")
    e.add_argument("config")
    e.add_argument("checkpoint")
    e.add_argument("--grid", default=None, help="grid resolution NxM")

    i = sub.add_parser("init-check", help="initialization variance report")
    i.add_argument("config")
    i.add_argument("--beta", type=float, default=None)
    i.add_argument("--m-e", type=int, default=None)
    i.add_argument("--seed", type=int, default=None)

    a = sub.add_parser("approx-demo", help="shallow approximator convergence study")
    a.add_argument("--n", type=int, default=32, help="largest unit count (doubling from 4)")
    a.add_argument("--target", default="inv_shift", choices=("inv_shift", "exp"))
    a.add_argument("--out", default="approx.csv")

    s = sub.add_parser("sample", help="draw boundary samples")
    s.add_argument("config")
    s.add_argument("--n", type=int, default=None)
    s.add_argument("--seed", type=int, default=None)
    return p


def _out_path(spec, name: str) -> str:
    os.makedirs(spec.outputs.out_dir, exist_ok=True)
    return os.path.join(spec.outputs.out_dir, name)


def _cmd_train(args) -> int:
    from . import export
    from .network import checkpoint_save
    from .problem import load_config
    from .training import train

    spec = load_config(args.config)
    if args.seed is not None:
        spec.training.seed = args.seed
    t0 = time.perf_counter()
    pairs, history = train(spec)
    elapsed = time.perf_counter() - t0
    ckpt = _out_path(spec, "checkpoint.json")
    checkpoint_save(ckpt, pairs)
    export.write_history_csv(_out_path(spec, "history.csv"), history, wall_times=args.wall_times)
    if len(history):
        print(
            f"{spec.name}: {len(history)} epochs in {elapsed:.1f}s, "
            f"final train loss {history.train_loss[-1]:.6e}, "
            f"final test loss {history.test_loss[-1]:.6e}"
        )
    else:
        print(f"{spec.name}: no epochs requested; wrote initialized checkpoint")
    print(f"wrote {ckpt}")
    return 0


def _cmd_eval(args) -> int:
    import numpy as np

    from . import export
    from .analytics import eval_grid, rel_l2, ring_exact_potentials, ring_exact_stress, rms, rotate_stress
    from .network import checkpoint_load
    from .problem import load_config

    spec = load_config(args.config)
    pairs = checkpoint_load(args.checkpoint)
    if len(pairs) != spec.domain.n_subdomains:
        raise ValueError(
            f"checkpoint has {len(pairs)} network pairs, config needs {spec.domain.n_subdomains}"
        )
    want_hidden = [spec.networks.units] * spec.networks.hidden_layers + [1]
    for pair in pairs:
        for net in (pair.phi, pair.psi):
            got = net.widths[1:]
            if got != want_hidden or net.mode is not spec.networks.mode:
                raise ValueError(
                    f"checkpoint architecture {got}/{net.mode.value} does not match "
                    f"config {want_hidden}/{spec.networks.mode.value}"
                )
    nx, ny = spec.outputs.grid
    if args.grid:
        nx, ny = (int(v) for v in args.grid.lower().split("x"))
    grid = eval_grid(pairs, spec, nx, ny)
    export.write_fields_csv(_out_path(spec, "fields.csv"), grid)
    print(f"wrote field grid {nx}x{ny} ({int(grid.mask.sum())} interior points)")
    ref = spec.reference
    if ref and ref.get("kind") == "ring":
        p, r, R = float(ref["p"]), float(ref["r"]), float(ref["R"])
        X, Y = np.meshgrid(grid.xs, grid.ys)
        Z = X + 1j * Y
        dphi_ref, dpsi_ref = ring_exact_potentials(np.where(grid.mask, Z, 1.0), p, r, R)
        errors = {
            "rel_l2_dphi": rel_l2(grid.dphi, dphi_ref, grid.mask),
            "rel_l2_dpsi": rel_l2(grid.dpsi, dpsi_ref, grid.mask),
        }
        rho = np.abs(Z)
        srr_ref, stt_ref = ring_exact_stress(np.where(grid.mask, rho, r), p, r, R)
        srr, stt, srt = rotate_stress(grid.sxx, grid.syy, grid.sxy, np.angle(Z))
        errors["rel_l2_sigma_rr"] = rel_l2(srr, srr_ref, grid.mask)
        errors["rel_l2_sigma_tt"] = rel_l2(stt, stt_ref, grid.mask)
        errors["rms_sigma_rt"] = rms(srt, grid.mask)
        export.write_errors_csv(_out_path(spec, "errors.csv"), errors)
        for k, v in errors.items():
            print(f"{k} = {v:.4e}")
    return 0


def _cmd_init_check(args) -> int:
    from . import export
    from .analytics import variance_report
    from .problem import load_config

    spec = load_config(args.config)
    beta = args.beta if args.beta is not None else spec.training.beta
    seed = args.seed if args.seed is not None else spec.training.seed
    hidden = [spec.networks.units] * spec.networks.hidden_layers
    report = variance_report(
        spec,
        hidden,
        spec.networks.activation,
        beta,
        args.m_e,
        probe_n=10 * spec.training.n_train,
        batch_n=spec.training.n_train,
        seed=seed,
    )
    path = _out_path(spec, "variance.csv")
    export.write_variance_csv(path, report)
    print(f"wrote {path} (beta={beta:g})")
    return 0


def _cmd_approx_demo(args) -> int:
    import numpy as np

    from . import export
    from .network import constructive_shallow, shallow_eval

    import math

    if args.target == "inv_shift":
        target = lambda z: 1.0 / (1.5 - z)
        taylor = lambda n: [1.5 ** -(k + 1) for k in range(n)]
    else:
        target = np.exp
        taylor = lambda n: [1.0 / math.factorial(k) for k in range(n)]
    radii = np.linspace(0.0, 1.0, 100)
    angles = 2.0 * np.pi * np.arange(100) / 100
    pts = (radii[:, None] * np.exp(1j * angles)[None, :]).ravel()
    rows = []
    n = 4
    while n <= args.n:
        approx = constructive_shallow(taylor(n), z0=0.0, xi=0.0, n=n)
        err = float(np.max(np.abs(shallow_eval(approx, pts) - target(pts))))
        rows.append((n, err))
        n *= 2
    export.write_approx_csv(args.out, rows)
    for n, err in rows:
        print(f"n={n:4d} sup_error={err:.6e}")
    return 0


def _cmd_sample(args) -> int:
    from . import export
    from .geometry import sample_boundary
    from .problem import load_config
    from .rng import Rng

    spec = load_config(args.config)
    n = args.n if args.n is not None else spec.training.n_train
    seed = args.seed if args.seed is not None else spec.training.seed
    samples = sample_boundary(spec.domain, n, Rng(seed).spawn(1))
    path = _out_path(spec, "samples.csv")
    export.write_samples_csv(path, samples)
    print(f"wrote {len(samples)} samples to {path}")
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "eval": _cmd_eval,
    "init-check": _cmd_init_check,
    "approx-demo": _cmd_approx_demo,
    "sample": _cmd_sample,
}


def run_command(argv) -> int:
    """Dispatch a CLI invocation; returns the process exit code."""
    _apply_thread_cap()
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except Exception as e:  # config/IO/shape errors become exit code 2
        print(f"error: {e}", file=sys.stderr)
        return 2


def main(argv=None) -> int:
    return run_command(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
