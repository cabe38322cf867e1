import os

import numpy as np
import pytest

from holoelastic.elasticity import ConstantData, Material, NormalPressure, Symmetry, Traction
from holoelastic.geometry import Arc, BoundaryPiece, DomainSpec, Line, Patch, Region, Side
from holoelastic.problem import NetworkConfig, OutputConfig, ProblemSpec
from holoelastic.training import TrainConfig

CONFIG_DIR = os.path.join(os.path.dirname(__file__), "..", "configs")
CONFIG_NAMES = [
    "ring_quadrant",
    "plate_hole_quadrant",
    "clamped_square",
    "rail_section",
    "dd_plate_hole",
]


def config_path(name: str) -> str:
    return os.path.join(CONFIG_DIR, f"{name}.json")


@pytest.fixture(scope="session")
def configs():
    from holoelastic.problem import load_config

    return {name: load_config(config_path(name)) for name in CONFIG_NAMES}


def ring_quadrant_domain() -> DomainSpec:
    """Upper-left ring quadrant, r=0.5, R=2, built inline for unit tests."""
    pieces = [
        BoundaryPiece(Arc(0j, 2.0, np.pi / 2, np.pi), Traction(NormalPressure(-1.0)), Side.RIGHT, (0,), "outer"),
        BoundaryPiece(Line(-2 + 0j, -0.5 + 0j), Symmetry(), Side.RIGHT, (0,), "axis_x"),
        BoundaryPiece(Arc(0j, 0.5, np.pi, np.pi / 2), Traction(ConstantData(0, 0)), Side.RIGHT, (0,), "inner"),
        BoundaryPiece(Line(0.5j, 2j), Symmetry(), Side.RIGHT, (0,), "axis_y"),
    ]
    region = Region((Patch(rect=(-2, 0, 0, 2), disks_in=((0j, 2.0),), disks_out=((0j, 0.5),)),))
    return DomainSpec(pieces, 1, [region])


def ring_problem(epochs=0, seed=0, n_train=200, n_test=20) -> ProblemSpec:
    return ProblemSpec(
        Material(1.0, 1.0),
        ring_quadrant_domain(),
        NetworkConfig(2, 10),
        TrainConfig(epochs=epochs, lr=0.03, n_train=n_train, n_test=n_test, seed=seed),
        OutputConfig(),
        reference={"kind": "ring", "p": -1.0, "r": 0.5, "R": 2.0},
        name="ring_test",
    )


def traction_square_domain() -> DomainSpec:
    """Unit square under uniform biaxial tension; pure Neumann."""
    pull = lambda vx, vy: Traction(ConstantData(vx, vy))
    pieces = [
        BoundaryPiece(Line(-1 - 1j, 1 - 1j), pull(0, -1), Side.RIGHT, (0,), "bottom"),
        BoundaryPiece(Line(1 - 1j, 1 + 1j), pull(1, 0), Side.RIGHT, (0,), "right"),
        BoundaryPiece(Line(1 + 1j, -1 + 1j), pull(0, 1), Side.RIGHT, (0,), "top"),
        BoundaryPiece(Line(-1 + 1j, -1 - 1j), pull(-1, 0), Side.RIGHT, (0,), "left"),
    ]
    region = Region((Patch(rect=(-1, 1, -1, 1)),))
    return DomainSpec(pieces, 1, [region])


def square_problem(mode="standard", epochs=0, seed=0) -> ProblemSpec:
    from holoelastic.network import Mode

    return ProblemSpec(
        Material(1.0, 1.0),
        traction_square_domain(),
        NetworkConfig(2, 8, mode=Mode(mode)),
        TrainConfig(epochs=epochs, lr=0.01, n_train=40, n_test=8, seed=seed),
        OutputConfig(),
        name="square_test",
    )
