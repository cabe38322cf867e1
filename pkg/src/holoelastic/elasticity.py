"""Kolosov-Muskhelishvili field mapping, boundary residuals and loss assembly.

Stresses and displacements of a plane elastic body derive from two
holomorphic potentials phi, psi:

    sxx = Re(2 phi' - conj(z) phi'' - psi')
    syy = Re(2 phi' + conj(z) phi'' + psi')
    sxy = Im(conj(z) phi'' + psi')
    ux + i uy = (gamma phi - z conj(phi') - conj(psi)) / (2 mu)

Units are MPa for moduli/stresses and meters for lengths/displacements.
All functions are pure and accept scalars or equally-shaped numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Union

import numpy as np


class PlaneMode(Enum):
    STRAIN = "plane_strain"
    STRESS = "plane_stress"


def material_derived(lam: float, mu: float, mode: PlaneMode) -> tuple[float, float]:
    """Effective Lame parameter and the displacement constant gamma.

    Plane strain keeps lambda; plane stress replaces it by
    2*lambda*mu/(lambda+2mu).  gamma uses the effective parameter so that it
    matches the classical constants 3-4*nu (strain) and (3-nu)/(1+nu)
    (stress).
    """
    if not (mu > 0.0):
        raise ValueError(f"shear modulus must be positive, got mu={mu}")
    if not (lam > -2.0 * mu / 3.0):
        raise ValueError(f"lambda={lam} violates lambda > -2mu/3 with mu={mu}")
    if mode is PlaneMode.STRAIN:
        lam_tilde = lam
    else:
        lam_tilde = 2.0 * lam * mu / (lam + 2.0 * mu)
    gamma = (lam_tilde + 3.0 * mu) / (lam_tilde + mu)
    return lam_tilde, gamma


@dataclass(frozen=True)
class Material:
    lam: float
    mu: float
    mode: PlaneMode = PlaneMode.STRAIN

    def __post_init__(self):
        material_derived(self.lam, self.mu, self.mode)  # validates

    @property
    def lambda_tilde(self) -> float:
        return material_derived(self.lam, self.mu, self.mode)[0]

    @property
    def gamma(self) -> float:
        return material_derived(self.lam, self.mu, self.mode)[1]


@dataclass
class KMState:
    """Potentials and derivatives at a point; phi/psi absent in stress-only nets."""

    dphi: np.ndarray
    ddphi: np.ndarray
    dpsi: np.ndarray
    phi: Optional[np.ndarray] = None
    psi: Optional[np.ndarray] = None

    @property
    def has_displacement(self) -> bool:
        return self.phi is not None and self.psi is not None


@dataclass
class FieldPoint:
    """Stresses (MPa) and, when available, displacements (m)."""

    sxx: np.ndarray
    syy: np.ndarray
    sxy: np.ndarray
    ux: Optional[np.ndarray] = None
    uy: Optional[np.ndarray] = None


def km_fields(z, s: KMState, mat: Material) -> FieldPoint:
    """Map a potential bundle to physical fields at z."""
    z = np.asarray(z, dtype=np.complex128)
    zc = np.conj(z)
    a = zc * s.ddphi + s.dpsi
    sxx = np.real(2.0 * s.dphi - a)
    syy = np.real(2.0 * s.dphi + a)
    sxy = np.imag(a)
    if not s.has_displacement:
        return FieldPoint(sxx, syy, sxy)
    w = (mat.gamma * s.phi - z * np.conj(s.dphi) - np.conj(s.psi)) / (2.0 * mat.mu)
    return FieldPoint(sxx, syy, sxy, np.real(w), np.imag(w))


def traction(f: FieldPoint, nx, ny) -> tuple[np.ndarray, np.ndarray]:
    """Stress vector sigma . n."""
    return f.sxx * nx + f.sxy * ny, f.sxy * nx + f.syy * ny


# --- boundary conditions ----------------------------------------------------


@dataclass(frozen=True)
class ConstantData:
    """Constant boundary vector (traction in MPa or displacement in m)."""

    vx: float
    vy: float


@dataclass(frozen=True)
class NormalPressure:
    """Pressure p acting on the surface: prescribed traction is -p * n."""

    p: float


BoundaryData = Union[ConstantData, NormalPressure]


def eval_boundary_data(data: BoundaryData, z, nx, ny) -> tuple[np.ndarray, np.ndarray]:
    z = np.asarray(z)
    if isinstance(data, ConstantData):
        shape = z.shape
        return np.broadcast_to(data.vx, shape).astype(float), np.broadcast_to(data.vy, shape).astype(float)
    if isinstance(data, NormalPressure):
        return -data.p * np.asarray(nx, dtype=float), -data.p * np.asarray(ny, dtype=float)
    raise TypeError(f"unknown boundary data {data!r}")


@dataclass(frozen=True)
class Traction:
    data: BoundaryData


@dataclass(frozen=True)
class Displacement:
    data: BoundaryData


@dataclass(frozen=True)
class Symmetry:
    pass


@dataclass(frozen=True)
class Interface:
    a: int
    b: int

    def __post_init__(self):
        if self.a == self.b or self.a < 0 or self.b < 0:
            raise ValueError(f"interface needs two distinct subdomains, got {self.a}, {self.b}")


BCKind = Union[Traction, Displacement, Symmetry, Interface]


def _check_unit_normal(nx, ny):
    nrm = np.hypot(np.asarray(nx, dtype=float), np.asarray(ny, dtype=float))
    if np.any(np.abs(nrm - 1.0) > 1e-12):
        raise ValueError("boundary normal is not a unit vector")


def bc_residual(kind: BCKind, f: FieldPoint, n, z) -> np.ndarray:
    """Residual of one outer boundary condition; shape (2,) or (2, B).

    `n` is the outward unit normal as a complex number nx + i*ny.
    """
    n = np.asarray(n, dtype=np.complex128)
    nx, ny = np.real(n), np.imag(n)
    _check_unit_normal(nx, ny)
    if isinstance(kind, Traction):
        t1, t2 = traction(f, nx, ny)
        d1, d2 = eval_boundary_data(kind.data, z, nx, ny)
        return np.stack([t1 - d1, t2 - d2])
    if isinstance(kind, Displacement):
        if f.ux is None:
            raise ValueError("displacement residual requested on stress-only fields")
        d1, d2 = eval_boundary_data(kind.data, z, nx, ny)
        return np.stack([f.ux - d1, f.uy - d2])
    if isinstance(kind, Symmetry):
        if f.ux is None:
            raise ValueError("symmetry residual requested on stress-only fields")
        t1, t2 = traction(f, nx, ny)
        # (sigma.n) x n is the scalar 2D cross product; u.n the normal slip
        return np.stack([t1 * ny - t2 * nx, f.ux * nx + f.uy * ny])
    raise TypeError(f"bc_residual does not handle {kind!r}; use interface_residual")


def interface_residual(f1: FieldPoint, f2: FieldPoint, n) -> np.ndarray:
    """Displacement and traction jumps across an interface; shape (4,) or (4, B)."""
    if f1.ux is None or f2.ux is None:
        raise ValueError("interface residual requires displacements on both sides")
    n = np.asarray(n, dtype=np.complex128)
    nx, ny = np.real(n), np.imag(n)
    _check_unit_normal(nx, ny)
    t1a, t2a = traction(f1, nx, ny)
    t1b, t2b = traction(f2, nx, ny)
    return np.stack([f1.ux - f2.ux, f1.uy - f2.uy, t1a - t1b, t2a - t2b])


# --- loss assembly ----------------------------------------------------------


@dataclass
class ResidualGroup:
    """Residual batch of one boundary piece.

    residuals has shape (B, k); `length` is the piece arc length and `outer`
    marks pieces on the outer boundary (interfaces are not outer).
    """

    key: tuple
    residuals: np.ndarray
    length: float
    outer: bool = True


def group_weights(groups: Sequence[ResidualGroup]) -> list[float]:
    """Per-group weights: piece length over total outer boundary length."""
    outer_len = math.fsum(g.length for g in groups if g.outer)
    if outer_len <= 0.0:
        raise ValueError("total outer boundary length must be positive")
    return [g.length / outer_len for g in groups]


def assemble_loss(groups: Sequence[ResidualGroup]) -> tuple[float, dict]:
    """Length-weighted mean-squared boundary residual.

    Every group contributes alpha * mean_i ||r_i||^2 with
    alpha = length(piece) / length(outer boundary); outer alphas sum to 1.
    """
    alphas = group_weights(groups)
    total = 0.0
    components: dict = {}
    for g, alpha in zip(groups, alphas):
        r = np.asarray(g.residuals, dtype=float)
        if r.ndim != 2:
            raise ValueError(f"group {g.key}: residuals must be (B, k), got {r.shape}")
        if r.shape[0] == 0:
            if g.length > 0.0:
                raise ValueError(f"group {g.key} is empty but carries boundary length {g.length}")
            continue
        mse = float(np.sum(r * r) / r.shape[0])
        components[g.key] = (alpha, mse)
        total += alpha * mse
    return total, components
