"""Atomic CSV/JSON artifact writers.

Everything is written to a temp file and renamed so an aborted run never
leaves a truncated artifact.  Floats are serialized with repr (shortest
round-trip) except the history, which uses full-precision scientific
notation.
"""

from __future__ import annotations

import os
from typing import Iterable, Sequence

from .analytics import GridField, VarianceReport
from .training import History


def write_text_atomic(path: str, text: str) -> None:
    d = os.path.dirname(path)
    if d:
        os.makedirs(d, exist_ok=True)
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join("" if v is None else str(v) for v in row))
    return "\n".join(lines) + "\n"


def write_history_csv(path: str, history: History, wall_times: bool = False) -> None:
    """History CSV: epoch, train_loss, test_loss, ms.

    The ms column defaults to 0.0 so that reruns with the same seed are
    byte-identical; pass wall_times=True to export the measured times.
    """
    rows = []
    for e, (tr, te, ms) in enumerate(zip(history.train_loss, history.test_loss, history.ms)):
        rows.append((e, f"{tr:.17e}", f"{te:.17e}", f"{ms if wall_times else 0.0:.17e}"))
    write_text_atomic(path, _csv(("epoch", "train_loss", "test_loss", "ms"), rows))


def write_fields_csv(path: str, grid: GridField) -> None:
    """Field CSV: x, y, sxx, syy, sxy, ux, uy; masked points keep empty cells."""
    rows = []
    for iy, y in enumerate(grid.ys):
        for ix, x in enumerate(grid.xs):
            if grid.mask[iy, ix]:
                vals = [grid.sxx[iy, ix], grid.syy[iy, ix], grid.sxy[iy, ix]]
                for u in (grid.ux, grid.uy):
                    vals.append(u[iy, ix] if u is not None else None)
            else:
                vals = [None] * 5
            rows.append((x, y, *vals))
    write_text_atomic(path, _csv(("x", "y", "sxx", "syy", "sxy", "ux", "uy"), rows))


def write_errors_csv(path: str, errors: dict[str, float]) -> None:
    rows = [(k, v) for k, v in errors.items()]
    write_text_atomic(path, _csv(("quantity", "value"), rows))


def write_variance_csv(path: str, report: VarianceReport) -> None:
    rows = []
    for i, layer in enumerate(report.layers):
        rows.append(
            (
                layer,
                report.var_y[i],
                report.var_phi_w[i],
                report.var_dphi_w[i],
                report.var_ddphi_w[i],
                report.var_loss_w[i],
                int(report.overflow[i]),
            )
        )
    header = ("layer", "var_y", "var_phi_w", "var_dphi_w", "var_ddphi_w", "var_loss_w", "overflow")
    write_text_atomic(path, _csv(header, rows))


def write_samples_csv(path: str, samples) -> None:
    rows = [
        (s.z.real, s.z.imag, s.normal.real, s.normal.imag, s.piece, s.t, "|".join(map(str, s.subdomains)))
        for s in samples
    ]
    write_text_atomic(path, _csv(("x", "y", "nx", "ny", "piece", "t", "subdomains"), rows))


def write_approx_csv(path: str, rows: Sequence[tuple[int, float]]) -> None:
    write_text_atomic(path, _csv(("n_units", "sup_error"), rows))
