"""Generate the shipped problem configs.

Builds each benchmark geometry from exact arithmetic, self-checks that the
boundary loops close and that every outward normal points out of the region
mask, then serializes to configs/*.json.

Run from the repo root:  python scripts/gen_configs.py
"""

import math
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

import numpy as np

from holoelastic.elasticity import (
    ConstantData,
    Displacement,
    Interface,
    Material,
    NormalPressure,
    PlaneMode,
    Symmetry,
    Traction,
)
from holoelastic.geometry import (
    Arc,
    BoundaryPiece,
    DomainSpec,
    Line,
    Patch,
    Region,
    Side,
    outward_normal,
    piece_point,
    region_contains,
)
from holoelastic.problem import NetworkConfig, OutputConfig, ProblemSpec, save_config
from holoelastic.training import TrainConfig

OUT_DIR = os.path.join(os.path.dirname(__file__), "..", "configs")

ZERO = ConstantData(0.0, 0.0)
MAT = Material(1.0, 1.0, PlaneMode.STRAIN)


def check_spec(spec: ProblemSpec, closed_loops=True):
    """Normals must point out of the region; loops must close."""
    dom = spec.domain
    union = Region(tuple(p for r in dom.regions for p in r.patches))
    eps = 1e-6
    for piece in dom.pieces:
        for t in (0.21, 0.5, 0.83):
            z = complex(piece_point(piece, t))
            n = complex(outward_normal(piece, t))
            zin = z - eps * n
            zout = z + eps * n
            inside_in = bool(region_contains(union, zin.real, zin.imag))
            inside_out = bool(region_contains(union, zout.real, zout.imag))
            if piece.is_interface:
                assert inside_in and inside_out, f"{spec.name}/{piece.name}: interface not interior"
            else:
                assert inside_in, f"{spec.name}/{piece.name}: z - eps*n not inside at t={t}"
                assert not inside_out, f"{spec.name}/{piece.name}: z + eps*n inside at t={t}"
    if closed_loops:
        starts = [complex(piece_point(p, 0.0)) for p in dom.pieces if not p.is_interface]
        ends = [complex(piece_point(p, 1.0)) for p in dom.pieces if not p.is_interface]
        for e in ends:
            assert min(abs(e - s) for s in starts) < 1e-9, f"{spec.name}: open boundary at {e}"


def ring_quadrant() -> ProblemSpec:
    # upper-left quadrant of a ring r=0.5, R=2; pressure -1 on the outer arc
    r, R = 0.5, 2.0
    pieces = [
        BoundaryPiece(Arc(0j, R, math.pi / 2, math.pi), Traction(NormalPressure(-1.0)), Side.RIGHT, (0,), "outer"),
        BoundaryPiece(Line(-R + 0j, -r + 0j), Symmetry(), Side.RIGHT, (0,), "axis_x"),
        BoundaryPiece(Arc(0j, r, math.pi, math.pi / 2), Traction(ZERO), Side.RIGHT, (0,), "inner"),
        BoundaryPiece(Line(r * 1j, R * 1j), Symmetry(), Side.RIGHT, (0,), "axis_y"),
    ]
    region = Region((Patch(rect=(-R, 0.0, 0.0, R), disks_in=((0j, R),), disks_out=((0j, r),)),))
    return ProblemSpec(
        MAT,
        DomainSpec(pieces, 1, [region]),
        NetworkConfig(2, 10),
        TrainConfig(epochs=1000, lr=0.03, n_train=200, n_test=20, seed=0),
        OutputConfig((40, 40), "out/ring_quadrant"),
        reference={"kind": "ring", "p": -1.0, "r": r, "R": R},
        name="ring_quadrant",
    )


def plate_hole_quadrant() -> ProblemSpec:
    # upper-left quadrant of a 2.5 x 2.5 plate with a r=1 hole, uniaxial tension 1 MPa
    h, r = 1.25, 1.0
    pieces = [
        BoundaryPiece(Line(-h + 0j, -h + h * 1j), Traction(ConstantData(-1.0, 0.0)), Side.LEFT, (0,), "left"),
        BoundaryPiece(Line(-h + h * 1j, 0 + h * 1j), Traction(ZERO), Side.LEFT, (0,), "top"),
        BoundaryPiece(Line(h * 1j, r * 1j), Symmetry(), Side.LEFT, (0,), "axis_y"),
        BoundaryPiece(Arc(0j, r, math.pi / 2, math.pi), Traction(ZERO), Side.LEFT, (0,), "hole"),
        BoundaryPiece(Line(-r + 0j, -h + 0j), Symmetry(), Side.LEFT, (0,), "axis_x"),
    ]
    region = Region((Patch(rect=(-h, 0.0, 0.0, h), disks_out=((0j, r),)),))
    return ProblemSpec(
        MAT,
        DomainSpec(pieces, 1, [region]),
        NetworkConfig(2, 10),
        TrainConfig(epochs=2000, lr=0.03, n_train=200, n_test=20, seed=0),
        OutputConfig((40, 40), "out/plate_hole_quadrant"),
        name="plate_hole_quadrant",
    )


def clamped_square() -> ProblemSpec:
    # unit square, shear 1 MPa on top, clamped bottom, free sides
    h = 0.5
    pieces = [
        BoundaryPiece(Line(-h - h * 1j, h - h * 1j), Displacement(ZERO), Side.RIGHT, (0,), "bottom"),
        BoundaryPiece(Line(h - h * 1j, h + h * 1j), Traction(ZERO), Side.RIGHT, (0,), "right"),
        BoundaryPiece(Line(h + h * 1j, -h + h * 1j), Traction(ConstantData(1.0, 0.0)), Side.RIGHT, (0,), "top"),
        BoundaryPiece(Line(-h + h * 1j, -h - h * 1j), Traction(ZERO), Side.RIGHT, (0,), "left"),
    ]
    region = Region((Patch(rect=(-h, h, -h, h)),))
    return ProblemSpec(
        MAT,
        DomainSpec(pieces, 1, [region]),
        NetworkConfig(4, 100),
        TrainConfig(epochs=1000, lr=1e-4, n_train=200, n_test=20, seed=0),
        OutputConfig((40, 40), "out/clamped_square"),
        name="clamped_square",
    )


def rail_section() -> ProblemSpec:
    # rail profile: 1 MPa compression on the head, clamped foot, free elsewhere
    c = math.sqrt(2.0) / 2.0
    c1 = complex(-3.0, 4.0)
    z1 = c1 + 3.0 * complex(c, c)
    z2 = z1 + 2.0 * complex(-c, c)
    c2 = z2 + 3.0 * complex(c, c)
    z3 = c2 + complex(-3.0, 0.0)
    c3 = z3 + complex(8.0, 0.0)
    c4 = c3 + 6.0 * complex(c, -c)
    z4 = c4 + complex(-3.0, 0.0)
    c5 = z4 + complex(0.5, 1.0 - 2.0 * c)
    z5 = c5 + complex(0.0, -0.5)
    q = math.pi / 4.0
    T = lambda: Traction(ZERO)
    pieces = [
        BoundaryPiece(Line(0j, 4j), T(), Side.LEFT, (0,), "foot_left"),
        BoundaryPiece(Arc(c1, 3.0, 0.0, q), T(), Side.LEFT, (0,), "fillet_left_lower"),
        BoundaryPiece(Line(z1, z2), T(), Side.LEFT, (0,), "web_left"),
        BoundaryPiece(Arc(c2, 3.0, math.pi + q, math.pi), T(), Side.LEFT, (0,), "fillet_left_upper"),
        BoundaryPiece(Line(z3, z3 + 2j), T(), Side.LEFT, (0,), "head_left"),
        BoundaryPiece(
            Line(z3 + 2j, z3 + complex(11.0, 2.0)),
            Traction(NormalPressure(1.0)),
            Side.LEFT,
            (0,),
            "head_top",
        ),
        BoundaryPiece(Line(z3 + complex(11.0, 2.0), z3 + complex(11.0, 0.0)), T(), Side.LEFT, (0,), "head_right"),
        BoundaryPiece(Arc(c3, 3.0, 0.0, -q), T(), Side.LEFT, (0,), "fillet_right_upper"),
        BoundaryPiece(Arc(c4, 3.0, math.pi - q, math.pi), T(), Side.LEFT, (0,), "fillet_right_lower"),
        BoundaryPiece(Line(z4, z4 + complex(0.0, -(2.0 * c - 1.0))), T(), Side.LEFT, (0,), "web_right"),
        BoundaryPiece(Arc(c5, 0.5, math.pi, 1.5 * math.pi), T(), Side.LEFT, (0,), "fillet_foot"),
        BoundaryPiece(Line(z5, complex(10.0, 4.5)), T(), Side.LEFT, (0,), "foot_top"),
        BoundaryPiece(Line(complex(10.0, 4.5), complex(10.0, 0.0)), T(), Side.LEFT, (0,), "foot_right"),
        BoundaryPiece(Line(complex(10.0, 0.0), 0j), Displacement(ZERO), Side.LEFT, (0,), "foot_bottom"),
    ]
    hp = (1.0, 1.0, z1.real + z1.imag)  # x + y >= const, right of the web_left line
    patches = (
        Patch(rect=(0.0, 10.0, 0.0, 4.0)),
        Patch(rect=(-1.0, 10.0, 4.0, 4.5), disks_out=((c1, 3.0),)),
        Patch(rect=(-1.0, c5.real, 4.5, 5.0), disks_out=((c1, 3.0), (c5, 0.5))),
        Patch(rect=(-1.0, z4.real, 5.0, z4.imag), disks_out=((c1, 3.0),)),
        Patch(rect=(-1.0, 8.0, z4.imag, z1.imag), disks_out=((c1, 3.0), (c4, 3.0))),
        Patch(rect=(-3.0, 8.0, z1.imag, z2.imag), halfplanes=(hp,), disks_out=((c4, 3.0),)),
        Patch(rect=(c2.real, c3.real, z2.imag, c2.imag)),
        Patch(rect=(-4.0, c3.real, z2.imag, c2.imag), disks_in=((c2, 3.0),)),
        Patch(rect=(c2.real, 8.0, z2.imag, c2.imag), disks_in=((c3, 3.0),)),
        Patch(rect=(z3.real, (z3 + complex(11, 2)).real, c2.imag, z3.imag + 2.0)),
    )
    region = Region(patches)
    return ProblemSpec(
        MAT,
        DomainSpec(pieces, 1, [region]),
        NetworkConfig(5, 100),
        TrainConfig(epochs=4000, lr=5e-4, n_train=400, n_test=40, seed=0),
        OutputConfig((40, 40), "out/rail_section"),
        name="rail_section",
    )


def dd_plate_hole() -> ProblemSpec:
    # full 2.5 x 2.5 plate with r=1 hole split into quadrants 0..3 (NE, NW, SW, SE)
    h, r = 1.25, 1.0
    pi = math.pi
    T0 = lambda: Traction(ZERO)
    pieces = [
        # outer edges, two per side
        BoundaryPiece(Line(h + 0j, h + h * 1j), Traction(ConstantData(1.0, 0.0)), Side.RIGHT, (0,), "right_up"),
        BoundaryPiece(Line(h + h * 1j, 0 + h * 1j), T0(), Side.RIGHT, (0,), "top_right"),
        BoundaryPiece(Line(0 + h * 1j, -h + h * 1j), T0(), Side.RIGHT, (1,), "top_left"),
        BoundaryPiece(Line(-h + h * 1j, -h + 0j), Traction(ConstantData(-1.0, 0.0)), Side.RIGHT, (1,), "left_up"),
        BoundaryPiece(Line(-h + 0j, -h - h * 1j), Traction(ConstantData(-1.0, 0.0)), Side.RIGHT, (2,), "left_down"),
        BoundaryPiece(Line(-h - h * 1j, 0 - h * 1j), T0(), Side.RIGHT, (2,), "bottom_left"),
        BoundaryPiece(Line(0 - h * 1j, h - h * 1j), T0(), Side.RIGHT, (3,), "bottom_right"),
        BoundaryPiece(Line(h - h * 1j, h + 0j), Traction(ConstantData(1.0, 0.0)), Side.RIGHT, (3,), "right_down"),
        # hole, one quarter arc per subdomain; material outside the circle
        BoundaryPiece(Arc(0j, r, 0.0, pi / 2), T0(), Side.LEFT, (0,), "hole_ne"),
        BoundaryPiece(Arc(0j, r, pi / 2, pi), T0(), Side.LEFT, (1,), "hole_nw"),
        BoundaryPiece(Arc(0j, r, pi, 1.5 * pi), T0(), Side.LEFT, (2,), "hole_sw"),
        BoundaryPiece(Arc(0j, r, 1.5 * pi, 2.0 * pi), T0(), Side.LEFT, (3,), "hole_se"),
        # interfaces between adjacent quadrants
        BoundaryPiece(Line(r * 1j, h * 1j), Interface(0, 1), Side.RIGHT, (0, 1), "iface_ne_nw"),
        BoundaryPiece(Line(-h + 0j, -r + 0j), Interface(1, 2), Side.RIGHT, (1, 2), "iface_nw_sw"),
        BoundaryPiece(Line(-r * 1j, -h * 1j), Interface(2, 3), Side.RIGHT, (2, 3), "iface_sw_se"),
        BoundaryPiece(Line(r + 0j, h + 0j), Interface(3, 0), Side.RIGHT, (3, 0), "iface_se_ne"),
    ]
    quads = [(0.0, h, 0.0, h), (-h, 0.0, 0.0, h), (-h, 0.0, -h, 0.0), (0.0, h, -h, 0.0)]
    regions = [Region((Patch(rect=q, disks_out=((0j, r),)),)) for q in quads]
    return ProblemSpec(
        MAT,
        DomainSpec(pieces, 4, regions),
        NetworkConfig(2, 10),
        TrainConfig(epochs=2000, lr=0.03, n_train=600, n_test=60, seed=0),
        OutputConfig((40, 40), "out/dd_plate_hole"),
        name="dd_plate_hole",
    )


def main():
    os.makedirs(OUT_DIR, exist_ok=True)
    specs = [ring_quadrant(), plate_hole_quadrant(), clamped_square(), rail_section(), dd_plate_hole()]
    for spec in specs:
        check_spec(spec)
        path = os.path.join(OUT_DIR, f"{spec.name}.json")
        save_config(spec, path)
        n_outer = sum(1 for p in spec.domain.pieces if not p.is_interface)
        print(
            f"{spec.name}: {len(spec.domain.pieces)} pieces ({n_outer} outer), "
            f"outer length {spec.domain.outer_length():.6f} -> {path}"
        )


if __name__ == "__main__":
    main()
