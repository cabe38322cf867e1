"""Closed-form references, error metrics, physics checks and init diagnostics.

The pressurized-ring problem has an exact solution (constant phi', a 1/z^2
psi'), which makes it the main quantitative benchmark: phi' and psi' are
unique once a symmetry condition pins rigid motion, unlike phi and psi which
float by additive constants.  Field grids are masked by analytic containment
tests (rectangles, disks, halfplanes) of the problem's region spec.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import elasticity as el
from . import geometry as geo
from .autodiff import loss_backward, loss_forward, pack_batch
from .jets import ActivationKind, NonFiniteError, act_derivs
from .network import BranchPair, HoloMLP, InitConfig, Mode, build_mlp, init_weights, mlp_forward
from .rng import Rng
from .training import TrainConfig


# --- ring benchmark -----------------------------------------------------------


def ring_exact_stress(rho, p: float, r: float, R: float):
    """Radial/hoop stresses of a ring under uniform outer pressure p; shear is 0."""
    if not (0.0 < r < R):
        raise ValueError(f"need 0 < r < R, got r={r}, R={R}")
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < r - 1e-12) or np.any(rho > R + 1e-12):
        raise ValueError("radius outside the ring")
    a = -p * R * R / (R * R - r * r)
    return a * (1.0 - r * r / (rho * rho)), a * (1.0 + r * r / (rho * rho))


def ring_exact_potentials(z, p: float, r: float, R: float):
    """Exact (phi', psi') of the pressurized ring; phi' is constant."""
    z = np.asarray(z, dtype=np.complex128)
    if np.any(z == 0):
        raise ValueError("potentials are singular at z = 0")
    dphi = np.broadcast_to(-p / 2.0 * R * R / (R * R - r * r) + 0j, z.shape)
    dpsi = -p * (r * r * R * R / (R * R - r * r)) / (z * z)
    return dphi.copy(), dpsi


def rotate_stress(sxx, syy, sxy, theta):
    """Cartesian stresses rotated into the frame at angle theta (e.g. polar)."""
    c, s = np.cos(theta), np.sin(theta)
    srr = sxx * c * c + syy * s * s + 2.0 * sxy * s * c
    stt = sxx * s * s + syy * c * c - 2.0 * sxy * s * c
    srt = (syy - sxx) * s * c + sxy * (c * c - s * s)
    return srr, stt, srt


# --- field grids ----------------------------------------------------------------


@dataclass
class GridField:
    xs: np.ndarray
    ys: np.ndarray
    mask: np.ndarray  # True where the point is inside the domain
    sub: np.ndarray  # owning subdomain, -1 outside
    sxx: np.ndarray
    syy: np.ndarray
    sxy: np.ndarray
    ux: Optional[np.ndarray] = None
    uy: Optional[np.ndarray] = None
    dphi: Optional[np.ndarray] = None
    dpsi: Optional[np.ndarray] = None


def domain_bbox(domain: geo.DomainSpec) -> tuple[float, float, float, float]:
    ts = np.linspace(0.0, 1.0, 257)
    xs, ys = [], []
    for p in domain.pieces:
        z = geo.piece_point(p, ts)
        xs.append(np.real(z))
        ys.append(np.imag(z))
    x = np.concatenate(xs)
    y = np.concatenate(ys)
    return float(x.min()), float(x.max()), float(y.min()), float(y.max())


def eval_grid(pairs: Sequence[BranchPair], problem, nx: int, ny: int) -> GridField:
    """Evaluate the networks on an nx-by-ny grid over the domain bounding box.

    Points outside every subdomain region stay masked and carry NaN.  Grid
    nodes are cell centers so samples stay clear of the boundary curves.
    """
    domain = problem.domain
    if domain.regions is None:
        raise ValueError("problem has no region spec; cannot mask a field grid")
    x0, x1, y0, y1 = domain_bbox(domain)
    xs = x0 + (np.arange(nx) + 0.5) * (x1 - x0) / nx
    ys = y0 + (np.arange(ny) + 0.5) * (y1 - y0) / ny
    X, Y = np.meshgrid(xs, ys)
    sub = np.full(X.shape, -1, dtype=int)
    for s, region in enumerate(domain.regions):
        inside = geo.region_contains(region, X, Y) & (sub < 0)
        sub[inside] = s
    mask = sub >= 0
    shape = X.shape
    want_u = pairs[0].mode is Mode.STANDARD
    arrays = {k: np.full(shape, np.nan) for k in ("sxx", "syy", "sxy")}
    if want_u:
        arrays["ux"] = np.full(shape, np.nan)
        arrays["uy"] = np.full(shape, np.nan)
    dphi = np.full(shape, np.nan, dtype=np.complex128)
    dpsi = np.full(shape, np.nan, dtype=np.complex128)
    for s in range(domain.n_subdomains):
        where = sub == s
        if not where.any():
            continue
        z = X[where] + 1j * Y[where]
        state = mlp_forward(pairs[s].phi, pairs[s].psi, z)
        f = el.km_fields(z, state, problem.material)
        for k in arrays:
            arrays[k][where] = getattr(f, k)
        dphi[where] = state.dphi
        dpsi[where] = state.dpsi
    return GridField(
        xs, ys, mask, sub,
        arrays["sxx"], arrays["syy"], arrays["sxy"],
        arrays.get("ux"), arrays.get("uy"), dphi, dpsi,
    )


def grid_l2_error(nn: GridField, ref: GridField) -> dict[str, float]:
    """Root-mean-square difference per component over unmasked points."""
    if nn.xs.shape != ref.xs.shape or not np.array_equal(nn.mask, ref.mask):
        raise ValueError("grids/masks disagree")
    out = {}
    for k in ("sxx", "syy", "sxy", "ux", "uy"):
        a, b = getattr(nn, k), getattr(ref, k)
        if a is None or b is None:
            continue
        d = a[nn.mask] - b[nn.mask]
        out[k] = float(np.sqrt(np.mean(np.abs(d) ** 2)))
    return out


def rel_l2(values: np.ndarray, ref: np.ndarray, mask: np.ndarray) -> float:
    """||values - ref|| / ||ref|| over unmasked points (complex-safe)."""
    d = values[mask] - ref[mask]
    denom = float(np.sqrt(np.mean(np.abs(ref[mask]) ** 2)))
    return float(np.sqrt(np.mean(np.abs(d) ** 2))) / denom


def rms(values: np.ndarray, mask: Optional[np.ndarray] = None) -> float:
    v = values if mask is None else values[mask]
    return float(np.sqrt(np.mean(np.abs(v) ** 2)))


# --- physics property checks ------------------------------------------------------


def _stress_stencil(stress_fn: Callable, z: np.ndarray, h: float):
    zs = [z + h, z - h, z + 1j * h, z - 1j * h, z]
    return [stress_fn(np.asarray(pt, dtype=np.complex128)) for pt in zs]


def fd_equilibrium(stress_fn: Callable, z, h: float):
    """Central-difference divergence of a stress field and max local |stress|.

    stress_fn(z) must return (sxx, syy, sxy) arrays; the exact divergence of
    a Kolosov-Muskhelishvili field is zero, so the residual is pure
    finite-difference truncation.
    """
    z = np.asarray(z, dtype=np.complex128)
    xp, xm, yp, ym, _ = _stress_stencil(stress_fn, z, h)
    r1 = (xp[0] - xm[0]) / (2 * h) + (yp[2] - ym[2]) / (2 * h)
    r2 = (xp[2] - xm[2]) / (2 * h) + (yp[1] - ym[1]) / (2 * h)
    smax = max(float(np.max(np.abs(np.stack(s)))) for s in (xp, xm, yp, ym))
    return r1, r2, smax


def fd_trace_laplacian(stress_fn: Callable, z, h: float):
    """Five-point Laplacian of the stress trace sxx + syy (harmonic exactly)."""
    z = np.asarray(z, dtype=np.complex128)
    xp, xm, yp, ym, c = _stress_stencil(stress_fn, z, h)
    tr = lambda s: s[0] + s[1]
    return (tr(xp) + tr(xm) + tr(yp) + tr(ym) - 4.0 * tr(c)) / (h * h)


def net_stress_fn(pair: BranchPair, mat: el.Material) -> Callable:
    def fn(z):
        state = mlp_forward(pair.phi, pair.psi, z)
        f = el.km_fields(z, state, mat)
        return f.sxx, f.syy, f.sxy

    return fn


def equilibrium_residual(nets: BranchPair, mat: el.Material, z, h: float):
    """Finite-difference equilibrium residual of the network's stress field."""
    if not (1e-6 <= h <= 1e-2):
        raise ValueError(f"step h={h} outside [1e-6, 1e-2]")
    r1, r2, _ = fd_equilibrium(net_stress_fn(nets, mat), z, h)
    return r1, r2


# --- initialization diagnostics -----------------------------------------------------


@dataclass
class VarianceReport:
    """Per-layer sampled variances after initialization, hidden layers only.

    All entries are 'complex' variances Var[Re] + Var[Im]: for y_l pooled
    over batch points and units, for the derivative rows over the layer's
    weight entries (the phi rows differentiate the batch-summed branch
    output, var_loss_w the actual batch loss).  The output layer is a plain
    readout and is not reported.  Overflowed runs carry inf and set the
    overflow flag.
    """

    layers: list[int]
    var_y: list[float]
    var_phi_w: list[float]
    var_dphi_w: list[float]
    var_ddphi_w: list[float]
    var_loss_w: list[float]
    overflow: list[bool]


def _cvar(a: np.ndarray) -> float:
    a = np.asarray(a).ravel()
    mu = a.mean()
    return float(np.mean(np.abs(a - mu) ** 2))


def _forward_trace(net: HoloMLP, z: np.ndarray):
    """Forward pass caching per-layer jet inputs and activation derivatives."""
    from .jets import activate_jets, affine_jets, seed_jets

    jets = seed_jets(z)
    xs, ys, caches = [], [], []
    last = len(net.layers) - 1
    for i, layer in enumerate(net.layers):
        xs.append(jets)
        jets = affine_jets(jets, layer.weights, layer.bias)
        ys.append(jets)
        if i != last:
            jets, cache = activate_jets(net.activation, jets, context=f"layer {i+1}", with_third=True)
            caches.append((jets, cache))
    return xs, ys, caches


def _weight_grad_var(net: HoloMLP, xs, ys, caches, channel: int) -> list[float]:
    """Per-layer variance of d(sum over batch of output[channel]) / dW_l.

    One adjoint sweep seeded with ones over the batch; the per-layer weight
    derivative is the usual accumulation adjoint x conj(input), and its
    entries (real/imag pooled) give the reported variance.
    """
    b = xs[0].shape[1]
    L = len(net.layers)
    a = np.zeros((3, b, 1), dtype=np.complex128)
    a[channel, :, 0] = 1.0
    out: list[float] = [0.0] * L
    for li in range(L - 1, -1, -1):
        if li != L - 1:
            xj, (p1, p2, p3) = ys[li], caches[li][1]
            d1, d2 = xj[1], xj[2]
            nxt = np.empty_like(a)
            nxt[0] = a[0] * np.conj(p1) + a[1] * np.conj(p2 * d1) + a[2] * np.conj(p3 * d1 * d1 + p2 * d2)
            nxt[1] = a[1] * np.conj(p1) + a[2] * np.conj(2.0 * p2 * d1)
            nxt[2] = a[2] * np.conj(p1)
            a = nxt
        g = np.einsum("cbi,cbj->ij", a, np.conj(xs[li]))
        out[li] = _cvar(g)
        a = np.einsum("cbi,ij->cbj", a, np.conj(net.layers[li].weights))
    return out


def _square_problem(hidden: Sequence[int], activation: ActivationKind) -> "ProblemSpec":
    """Homogeneous square benchmark: clamped top/bottom, free left/right."""
    from .problem import NetworkConfig, OutputConfig, ProblemSpec

    zero = el.ConstantData(0.0, 0.0)
    pieces = [
        geo.BoundaryPiece(geo.Line(-1 - 1j, 1 - 1j), el.Displacement(zero), geo.Side.RIGHT, (0,), "bottom"),
        geo.BoundaryPiece(geo.Line(1 - 1j, 1 + 1j), el.Traction(zero), geo.Side.RIGHT, (0,), "right"),
        geo.BoundaryPiece(geo.Line(1 + 1j, -1 + 1j), el.Traction(zero), geo.Side.RIGHT, (0,), "top"),
        geo.BoundaryPiece(geo.Line(-1 + 1j, -1 - 1j), el.Displacement(zero), geo.Side.RIGHT, (0,), "left"),
    ]
    region = geo.Region((geo.Patch(rect=(-1.0, 1.0, -1.0, 1.0)),))
    domain = geo.DomainSpec(pieces, 1, [region])
    material = el.Material(1.0, 1.0, el.PlaneMode.STRAIN)
    nets = NetworkConfig(len(hidden), hidden[0], activation, Mode.STANDARD)
    return ProblemSpec(material, domain, nets, TrainConfig(epochs=0), OutputConfig(), name="square")


def variance_report(
    problem,
    hidden: Sequence[int],
    activation: ActivationKind,
    beta: float,
    m_e: Optional[int],
    probe_n: int,
    batch_n: int,
    seed: int,
) -> VarianceReport:
    """Initialize fresh branches for `problem` and sample per-layer variances."""
    if probe_n < 1 or batch_n < 1:
        raise ValueError("probe and batch sizes must be positive")
    if problem.domain.n_subdomains != 1:
        raise ValueError("variance diagnostics run on single-subdomain problems")
    L = len(hidden) + 1
    if m_e is None:
        m_e = L + 1  # probe statistics for every layer
    rng = Rng(seed)
    domain = problem.domain
    probe = np.array(
        [s.z for s in geo.sample_boundary(domain, probe_n, rng.spawn(3))], dtype=np.complex128
    )
    batch = geo.sample_boundary(domain, batch_n, rng.spawn(1))
    packed = pack_batch(batch, domain)
    mode = problem.networks.mode
    pair = BranchPair(build_mlp(hidden, activation, mode), build_mlp(hidden, activation, mode))
    cfg = InitConfig(probe=probe, beta=beta, m_e=m_e)
    n_inner = L - 1
    layers = list(range(1, L))
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            init_weights(pair.phi, cfg, rng.spawn(100))
            init_weights(pair.psi, cfg, rng.spawn(101))
            z = packed.eval_z[0]
            xs, ys, caches = _forward_trace(pair.phi, z)
            var_y = [_cvar(y[0]) for y in ys[:n_inner]]
            per_q = [_weight_grad_var(pair.phi, xs, ys, caches, ch)[:n_inner] for ch in (0, 1, 2)]
            _, tape = loss_forward([pair], packed, problem)
            wg = loss_backward(tape).grads
            var_loss = [_cvar(wg[(0, "phi", li, "W")]) for li in range(n_inner)]
        return VarianceReport(layers, var_y, per_q[0], per_q[1], per_q[2], var_loss, [False] * n_inner)
    except (NonFiniteError, FloatingPointError):
        inf = [math.inf] * n_inner
        return VarianceReport(layers, inf, inf[:], inf[:], inf[:], inf[:], [True] * n_inner)


def init_diagnostics(
    arch: Sequence[int],
    activation: ActivationKind,
    beta: float,
    m_e: Optional[int],
    probe: int,
    batch: int,
    seed: int,
) -> VarianceReport:
    """Variance diagnostics on the homogeneous square benchmark.

    `arch` lists the hidden widths (e.g. [100]*7); probe/batch are boundary
    sample counts.
    """
    problem = _square_problem(list(arch), activation)
    return variance_report(problem, list(arch), activation, beta, m_e, probe, batch, seed)


# --- held-out residual diagnostics ----------------------------------------------


def residual_summary(pairs, problem, n_points: int, seed: int) -> dict:
    """RMS residuals on a fresh boundary batch, split outer vs interface."""
    from .autodiff import forward_residuals

    samples = geo.sample_boundary(problem.domain, n_points, Rng(seed).spawn(7))
    groups = forward_residuals(pairs, samples, problem)
    outer = np.concatenate([g.residuals.ravel() for g in groups if g.outer and g.residuals.size])
    iface = [g.residuals.ravel() for g in groups if not g.outer and g.residuals.size]
    out = {"outer_rms": rms(outer), "groups": {g.key: rms(g.residuals) for g in groups if g.residuals.size}}
    if iface:
        out["interface_rms"] = rms(np.concatenate(iface))
    return out


def pointwise_boundary_residuals(pairs, problem, n_points: int, seed: int):
    """Residual norm per held-out boundary sample; returns (z, piece, norm)."""
    from .autodiff import loss_forward, pack_batch

    samples = geo.sample_boundary(problem.domain, n_points, Rng(seed).spawn(7))
    _, tape = loss_forward(pairs, pack_batch(samples, problem.domain), problem)
    zs, pieces, norms = [], [], []
    for g, slot in zip(tape.groups, tape.group_slots):
        r = tape.values[slot]
        if not r.shape[0]:
            continue
        zs.append(g.z)
        pieces.append(np.full(g.z.size, g.piece))
        norms.append(np.sqrt(np.sum(r * r, axis=1)))
    return np.concatenate(zs), np.concatenate(pieces), np.concatenate(norms)
