"""Boundary geometry: lines and circular arcs, sampling, outward normals.

Pieces are parameterized by t in [0, 1].  The outward normal of a piece is
the unit tangent rotated by -90 deg (side RIGHT) or +90 deg (side LEFT); the
side is stored explicitly per piece because multiply-connected domains (holes)
make global orientation inference error-prone.  2D vectors are complex
numbers (nx + i*ny).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Union

import numpy as np

from .elasticity import BCKind, Interface
from .rng import Rng


@dataclass(frozen=True)
class Line:
    p0: complex
    p1: complex


@dataclass(frozen=True)
class Arc:
    center: complex
    radius: float
    theta0: float
    theta1: float


Shape = Union[Line, Arc]


class Side(Enum):
    LEFT = "left"
    RIGHT = "right"


@dataclass
class BoundaryPiece:
    shape: Shape
    bc: BCKind
    side: Side
    subdomains: tuple[int, ...]
    name: str = ""

    def __post_init__(self):
        if piece_length(self) <= 0.0:
            raise ValueError(f"piece {self.name!r} has non-positive length")
        if isinstance(self.shape, Arc) and self.shape.radius <= 0.0:
            raise ValueError(f"piece {self.name!r} has non-positive radius")
        is_iface = isinstance(self.bc, Interface)
        if is_iface != (len(self.subdomains) == 2):
            raise ValueError(
                f"piece {self.name!r}: interface pieces carry exactly two subdomains"
            )
        if is_iface and set(self.subdomains) != {self.bc.a, self.bc.b}:
            raise ValueError(f"piece {self.name!r}: interface ids do not match subdomains")

    @property
    def is_interface(self) -> bool:
        return isinstance(self.bc, Interface)


def piece_length(p: BoundaryPiece) -> float:
    s = p.shape
    if isinstance(s, Line):
        return abs(s.p1 - s.p0)
    return s.radius * abs(s.theta1 - s.theta0)


def piece_point(p: BoundaryPiece, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    s = p.shape
    if isinstance(s, Line):
        return s.p0 + t * (s.p1 - s.p0)
    theta = s.theta0 + t * (s.theta1 - s.theta0)
    return s.center + s.radius * np.exp(1j * theta)


def piece_tangent(p: BoundaryPiece, t) -> np.ndarray:
    """Unit tangent in the traversal direction."""
    t = np.asarray(t, dtype=float)
    s = p.shape
    if isinstance(s, Line):
        d = s.p1 - s.p0
        return np.broadcast_to(d / abs(d), t.shape).copy() if t.shape else d / abs(d)
    theta = s.theta0 + t * (s.theta1 - s.theta0)
    sign = 1.0 if s.theta1 > s.theta0 else -1.0
    return sign * 1j * np.exp(1j * theta)


def outward_normal(p: BoundaryPiece, t) -> np.ndarray:
    """Unit outward normal at parameter t, per the piece's side convention."""
    tan = piece_tangent(p, t)
    return 1j * tan if p.side is Side.LEFT else -1j * tan


# --- regions (analytic containment for field grids) -------------------------


@dataclass(frozen=True)
class Patch:
    """Intersection of analytic primitives; a Region is a union of patches."""

    rect: Optional[tuple[float, float, float, float]] = None  # xmin, xmax, ymin, ymax
    disks_in: tuple[tuple[complex, float], ...] = ()
    disks_out: tuple[tuple[complex, float], ...] = ()
    halfplanes: tuple[tuple[float, float, float], ...] = ()  # a*x + b*y >= c


@dataclass(frozen=True)
class Region:
    patches: tuple[Patch, ...]


def region_contains(region: Region, x, y) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    inside = np.zeros(np.broadcast(x, y).shape, dtype=bool)
    for p in region.patches:
        ok = np.ones_like(inside)
        if p.rect is not None:
            x0, x1, y0, y1 = p.rect
            ok &= (x >= x0) & (x <= x1) & (y >= y0) & (y <= y1)
        for c, r in p.disks_in:
            ok &= np.hypot(x - c.real, y - c.imag) <= r
        for c, r in p.disks_out:
            ok &= np.hypot(x - c.real, y - c.imag) >= r
        for a, b, cc in p.halfplanes:
            ok &= a * x + b * y >= cc
        inside |= ok
    return inside


# --- domain spec and sampling ------------------------------------------------


@dataclass
class DomainSpec:
    pieces: list[BoundaryPiece]
    n_subdomains: int = 1
    regions: Optional[list[Region]] = None  # one per subdomain, used for grids

    def __post_init__(self):
        for p in self.pieces:
            for s in p.subdomains:
                if not (0 <= s < self.n_subdomains):
                    raise ValueError(f"piece {p.name!r} references subdomain {s}")
        if self.outer_length() <= 0.0:
            raise ValueError("total outer boundary length must be positive")
        if self.regions is not None and len(self.regions) != self.n_subdomains:
            raise ValueError("need one region per subdomain")

    def outer_length(self) -> float:
        return math.fsum(piece_length(p) for p in self.pieces if not p.is_interface)

    def total_length(self) -> float:
        return math.fsum(piece_length(p) for p in self.pieces)


@dataclass
class BoundarySample:
    z: complex
    normal: complex
    piece: int
    t: float
    subdomains: tuple[int, ...]


def allocate_counts(lengths: Sequence[float], n: int) -> list[int]:
    """Largest-remainder rounding of the length-proportional allocation."""
    total = math.fsum(lengths)
    quotas = [n * L / total for L in lengths]
    counts = [int(math.floor(q)) for q in quotas]
    short = n - sum(counts)
    order = sorted(range(len(lengths)), key=lambda i: (counts[i] - quotas[i], i))
    for i in order[:short]:
        counts[i] += 1
    return counts


def sample_boundary(spec: DomainSpec, n: int, rng: Rng) -> list[BoundarySample]:
    """Draw n boundary points, uniformly in arc length across all pieces.

    Per-piece counts follow largest-remainder rounding of the proportional
    allocation; placement within each piece is uniform in t.
    """
    if n < len(spec.pieces):
        raise ValueError(f"need at least {len(spec.pieces)} samples, got {n}")
    lengths = [piece_length(p) for p in spec.pieces]
    counts = allocate_counts(lengths, n)
    out: list[BoundarySample] = []
    for idx, (piece, cnt) in enumerate(zip(spec.pieces, counts)):
        if cnt == 0:
            continue
        ts = np.sort(rng.uniform(cnt))
        zs = piece_point(piece, ts)
        ns = outward_normal(piece, ts)
        ns = np.broadcast_to(ns, zs.shape)
        for t, z, nrm in zip(ts, zs, ns):
            out.append(BoundarySample(complex(z), complex(nrm), idx, float(t), piece.subdomains))
    return out
