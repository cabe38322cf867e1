import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import ring_quadrant_domain
from holoelastic.elasticity import ConstantData, Traction
from holoelastic.geometry import (
    Arc,
    BoundaryPiece,
    Line,
    Side,
    allocate_counts,
    outward_normal,
    piece_length,
    piece_point,
    piece_tangent,
    sample_boundary,
)
from holoelastic.rng import Rng

BC = Traction(ConstantData(0, 0))


def test_line_length():
    p = BoundaryPiece(Line(0, 3 + 4j), BC, Side.LEFT, (0,))
    assert piece_length(p) == 5.0


def test_arc_length():
    p = BoundaryPiece(Arc(0, 2.0, 0.0, np.pi / 2), BC, Side.LEFT, (0,))
    assert abs(piece_length(p) - np.pi) < 1e-15


def test_degenerate_arc_rejected():
    with pytest.raises(ValueError):
        BoundaryPiece(Arc(0, 2.0, 1.0, 1.0), BC, Side.LEFT, (0,))
    with pytest.raises(ValueError):
        BoundaryPiece(Line(1j, 1j), BC, Side.LEFT, (0,))


def test_line_normal_sides():
    p = BoundaryPiece(Line(0, 1), BC, Side.LEFT, (0,))
    assert abs(outward_normal(p, 0.5) - 1j) < 1e-15
    p = BoundaryPiece(Line(0, 1), BC, Side.RIGHT, (0,))
    assert abs(outward_normal(p, 0.5) + 1j) < 1e-15


def test_arc_normal_outward_and_hole():
    ccw = BoundaryPiece(Arc(0, 1.0, 0.0, np.pi), BC, Side.RIGHT, (0,))
    assert abs(outward_normal(ccw, 0.0) - 1.0) < 1e-15  # radial at angle 0
    hole = BoundaryPiece(Arc(0, 1.0, 0.0, np.pi), BC, Side.LEFT, (0,))
    assert abs(outward_normal(hole, 0.0) + 1.0) < 1e-15  # toward the center


def test_ring_quadrant_perimeter():
    dom = ring_quadrant_domain()
    want = np.pi * 2.0 / 2 + np.pi * 0.5 / 2 + 2 * 1.5
    assert abs(dom.outer_length() - want) < 1e-9


def test_allocate_counts_exact_proportions():
    assert allocate_counts([1.0, 3.0], 200) == [50, 150]


def test_allocate_counts_largest_remainder_within_one():
    lengths = [0.7, 1.3, 2.9, 0.4]
    n = 37
    counts = allocate_counts(lengths, n)
    assert sum(counts) == n
    total = sum(lengths)
    for c, L in zip(counts, lengths):
        assert abs(c - n * L / total) < 1.0


def test_sample_counts_proportional_on_ring():
    dom = ring_quadrant_domain()
    samples = sample_boundary(dom, 200, Rng(0))
    counts = np.bincount([s.piece for s in samples], minlength=4)
    lengths = [piece_length(p) for p in dom.pieces]
    total = sum(lengths)
    for c, L in zip(counts, lengths):
        assert abs(c - 200 * L / total) < 1.0


def test_samples_lie_on_their_pieces():
    dom = ring_quadrant_domain()
    samples = sample_boundary(dom, 50, Rng(1))
    for s in samples:
        piece = dom.pieces[s.piece]
        assert abs(s.z - piece_point(piece, s.t)) < 1e-12
        assert abs(abs(s.normal) - 1.0) < 1e-12
        tangent = piece_tangent(piece, s.t)
        dot = s.normal.real * tangent.real + s.normal.imag * tangent.imag
        assert abs(dot) < 1e-12


def test_arc_samples_on_circle():
    dom = ring_quadrant_domain()
    samples = [s for s in sample_boundary(dom, 40, Rng(2)) if s.piece == 0]
    for s in samples:
        assert abs(abs(s.z) - 2.0) < 1e-12


def test_sampling_reproducible():
    dom = ring_quadrant_domain()
    a = sample_boundary(dom, 64, Rng(11))
    b = sample_boundary(dom, 64, Rng(11))
    assert all(x.z == y.z and x.t == y.t for x, y in zip(a, b))


def test_sample_requires_enough_points():
    dom = ring_quadrant_domain()
    with pytest.raises(ValueError):
        sample_boundary(dom, 3, Rng(0))


@given(st.integers(0, 500), st.integers(4, 400))
@settings(max_examples=30, deadline=None)
def test_sampling_counts_always_within_one(seed, n):
    dom = ring_quadrant_domain()
    samples = sample_boundary(dom, n, Rng(seed))
    assert len(samples) == n
    counts = np.bincount([s.piece for s in samples], minlength=4)
    lengths = [piece_length(p) for p in dom.pieces]
    total = sum(lengths)
    for c, L in zip(counts, lengths):
        assert abs(c - n * L / total) < 1.0
