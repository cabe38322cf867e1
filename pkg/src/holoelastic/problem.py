"""Problem configuration: JSON schema, validation, round-trip serialization.

A config bundles material, boundary geometry with BC data, network
architecture, training protocol and output settings.  Boundary data are
restricted to constant vectors and a normal-pressure catalogue entry, which
covers all shipped benchmark problems without an expression interpreter.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Optional

from . import elasticity as el
from . import geometry as geo
from .jets import ActivationKind
from .network import Mode
from .training import TrainConfig


@dataclass
class NetworkConfig:
    hidden_layers: int = 2
    units: int = 10
    activation: ActivationKind = ActivationKind.EXP
    mode: Mode = Mode.STANDARD

    def __post_init__(self):
        if self.hidden_layers < 1 or self.units < 1:
            raise ValueError("hidden_layers and units must be positive")


@dataclass
class OutputConfig:
    grid: tuple[int, int] = (40, 40)
    out_dir: str = "out"


@dataclass
class ProblemSpec:
    material: el.Material
    domain: geo.DomainSpec
    networks: NetworkConfig
    training: TrainConfig
    outputs: OutputConfig = field(default_factory=OutputConfig)
    reference: Optional[dict] = None  # e.g. {"kind": "ring", "p": -1, "r": 0.5, "R": 2}
    name: str = ""

    def __post_init__(self):
        if self.networks.mode is Mode.STRESS_ONLY:
            for p in self.domain.pieces:
                if not isinstance(p.bc, el.Traction):
                    raise ValueError(
                        "stress-only networks allow traction conditions only; "
                        f"piece {p.name!r} has {type(p.bc).__name__}"
                    )


class ConfigError(ValueError):
    """A configuration file failed validation. The message names the JSON path."""


def _fail(path: str, msg: str):
    raise ConfigError(f"{path}: {msg}")


def _need(obj: dict, key: str, path: str):
    if key not in obj:
        _fail(path, f"missing required field {key!r}")
    return obj[key]


def _cx(v, path: str) -> complex:
    if not (isinstance(v, (list, tuple)) and len(v) == 2):
        _fail(path, f"expected [x, y], got {v!r}")
    return complex(float(v[0]), float(v[1]))


def _parse_data(obj: dict, path: str) -> el.BoundaryData:
    if "constant" in obj:
        vx, vy = obj["constant"]
        return el.ConstantData(float(vx), float(vy))
    if "normal_pressure" in obj:
        return el.NormalPressure(float(obj["normal_pressure"]))
    _fail(path, "boundary data must give 'constant' or 'normal_pressure'")


def _parse_bc(obj: dict, path: str) -> tuple[el.BCKind, tuple[int, ...]]:
    kind = _need(obj, "type", path)
    if kind == "traction":
        return el.Traction(_parse_data(_need(obj, "data", path), f"{path}.data")), ()
    if kind == "displacement":
        return el.Displacement(_parse_data(_need(obj, "data", path), f"{path}.data")), ()
    if kind == "symmetry":
        return el.Symmetry(), ()
    if kind == "interface":
        subs = _need(obj, "subdomains", path)
        if not (isinstance(subs, list) and len(subs) == 2):
            _fail(path, "interface needs 'subdomains': [a, b]")
        return el.Interface(int(subs[0]), int(subs[1])), (int(subs[0]), int(subs[1]))
    _fail(path, f"unknown bc type {kind!r}")


def _parse_piece(obj: dict, i: int) -> geo.BoundaryPiece:
    path = f"geometry.pieces[{i}]"
    kind = _need(obj, "kind", path)
    if kind == "line":
        shape = geo.Line(_cx(_need(obj, "p0", path), f"{path}.p0"), _cx(_need(obj, "p1", path), f"{path}.p1"))
    elif kind == "arc":
        shape = geo.Arc(
            _cx(_need(obj, "center", path), f"{path}.center"),
            float(_need(obj, "radius", path)),
            float(_need(obj, "theta0", path)),
            float(_need(obj, "theta1", path)),
        )
    else:
        _fail(path, f"unknown piece kind {kind!r}")
    bc, iface_subs = _parse_bc(_need(obj, "bc", path), f"{path}.bc")
    if iface_subs:
        subs = iface_subs
    else:
        subs = (int(_need(obj, "subdomain", path)),)
    side = geo.Side(obj.get("side", "left"))
    try:
        return geo.BoundaryPiece(shape, bc, side, subs, name=obj.get("name", f"piece{i}"))
    except ValueError as e:
        _fail(path, str(e))


def _parse_region(obj: dict, path: str) -> geo.Region:
    patches = []
    for j, p in enumerate(obj.get("patches", [])):
        rect = tuple(float(v) for v in p["rect"]) if "rect" in p else None
        disks_in = tuple((_cx(d[:2], path), float(d[2])) for d in p.get("disks_in", []))
        disks_out = tuple((_cx(d[:2], path), float(d[2])) for d in p.get("disks_out", []))
        halfplanes = tuple(tuple(float(v) for v in h) for h in p.get("halfplanes", []))
        patches.append(geo.Patch(rect, disks_in, disks_out, halfplanes))
    if not patches:
        _fail(path, "region needs at least one patch")
    return geo.Region(tuple(patches))


def load_config(path: str) -> ProblemSpec:
    """Parse and fully validate a problem config; errors name the JSON path."""
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}")

    mat_obj = _need(doc, "material", "config")
    try:
        material = el.Material(
            float(_need(mat_obj, "lambda", "material")),
            float(_need(mat_obj, "mu", "material")),
            el.PlaneMode(mat_obj.get("mode", "plane_strain")),
        )
    except ValueError as e:
        raise ConfigError(f"material: {e}")

    geo_obj = _need(doc, "geometry", "config")
    pieces = [_parse_piece(p, i) for i, p in enumerate(_need(geo_obj, "pieces", "geometry"))]
    regions = None
    if "regions" in geo_obj:
        regions = [
            _parse_region(r, f"geometry.regions[{i}]") for i, r in enumerate(geo_obj["regions"])
        ]
    try:
        domain = geo.DomainSpec(pieces, int(geo_obj.get("n_subdomains", 1)), regions)
    except ValueError as e:
        raise ConfigError(f"geometry: {e}")

    net_obj = _need(doc, "networks", "config")
    try:
        networks = NetworkConfig(
            int(_need(net_obj, "hidden_layers", "networks")),
            int(_need(net_obj, "units", "networks")),
            ActivationKind(net_obj.get("activation", "exp")),
            Mode(net_obj.get("mode", "standard")),
        )
    except ValueError as e:
        raise ConfigError(f"networks: {e}")

    tr_obj = _need(doc, "training", "config")
    try:
        training = TrainConfig(
            epochs=int(_need(tr_obj, "epochs", "training")),
            lr=float(_need(tr_obj, "lr", "training")),
            n_train=int(_need(tr_obj, "n_train", "training")),
            n_test=int(tr_obj.get("n_test", 0)),
            seed=int(tr_obj.get("seed", 0)),
            beta=float(tr_obj.get("beta", 0.5)),
            m_e=int(tr_obj.get("m_e", 3)),
            lr_decay=float(tr_obj.get("lr_decay", 1.0)),
        )
    except ValueError as e:
        raise ConfigError(f"training: {e}")

    out_obj = doc.get("outputs", {})
    outputs = OutputConfig(
        tuple(int(v) for v in out_obj.get("grid", [40, 40])),
        str(out_obj.get("dir", "out")),
    )

    try:
        return ProblemSpec(
            material=material,
            domain=domain,
            networks=networks,
            training=training,
            outputs=outputs,
            reference=doc.get("reference"),
            name=str(doc.get("name", os.path.splitext(os.path.basename(path))[0])),
        )
    except ValueError as e:
        raise ConfigError(f"config: {e}")


def _data_json(data: el.BoundaryData) -> dict:
    if isinstance(data, el.ConstantData):
        return {"constant": [data.vx, data.vy]}
    return {"normal_pressure": data.p}


def _piece_json(p: geo.BoundaryPiece) -> dict:
    out: dict = {}
    if isinstance(p.shape, geo.Line):
        out["kind"] = "line"
        out["p0"] = [p.shape.p0.real, p.shape.p0.imag]
        out["p1"] = [p.shape.p1.real, p.shape.p1.imag]
    else:
        out["kind"] = "arc"
        out["center"] = [p.shape.center.real, p.shape.center.imag]
        out["radius"] = p.shape.radius
        out["theta0"] = p.shape.theta0
        out["theta1"] = p.shape.theta1
    bc = p.bc
    if isinstance(bc, el.Traction):
        out["bc"] = {"type": "traction", "data": _data_json(bc.data)}
    elif isinstance(bc, el.Displacement):
        out["bc"] = {"type": "displacement", "data": _data_json(bc.data)}
    elif isinstance(bc, el.Symmetry):
        out["bc"] = {"type": "symmetry"}
    else:
        out["bc"] = {"type": "interface", "subdomains": [bc.a, bc.b]}
    if not isinstance(bc, el.Interface):
        out["subdomain"] = p.subdomains[0]
    out["side"] = p.side.value
    out["name"] = p.name
    return out


def _region_json(r: geo.Region) -> dict:
    patches = []
    for p in r.patches:
        obj: dict = {}
        if p.rect is not None:
            obj["rect"] = list(p.rect)
        if p.disks_in:
            obj["disks_in"] = [[c.real, c.imag, rad] for c, rad in p.disks_in]
        if p.disks_out:
            obj["disks_out"] = [[c.real, c.imag, rad] for c, rad in p.disks_out]
        if p.halfplanes:
            obj["halfplanes"] = [list(h) for h in p.halfplanes]
        patches.append(obj)
    return {"patches": patches}


def save_config(spec: ProblemSpec, path: str) -> None:
    """Serialize a ProblemSpec; load_config(save_config(s)) == s."""
    doc = {
        "name": spec.name,
        "material": {
            "lambda": spec.material.lam,
            "mu": spec.material.mu,
            "mode": spec.material.mode.value,
        },
        "geometry": {
            "n_subdomains": spec.domain.n_subdomains,
            "pieces": [_piece_json(p) for p in spec.domain.pieces],
        },
        "networks": {
            "hidden_layers": spec.networks.hidden_layers,
            "units": spec.networks.units,
            "activation": spec.networks.activation.value,
            "mode": spec.networks.mode.value,
        },
        "training": {
            "epochs": spec.training.epochs,
            "lr": spec.training.lr,
            "n_train": spec.training.n_train,
            "n_test": spec.training.n_test,
            "seed": spec.training.seed,
            "beta": spec.training.beta,
            "m_e": spec.training.m_e,
            "lr_decay": spec.training.lr_decay,
        },
        "outputs": {"grid": list(spec.outputs.grid), "dir": spec.outputs.out_dir},
    }
    if spec.domain.regions is not None:
        doc["geometry"]["regions"] = [_region_json(r) for r in spec.domain.regions]
    if spec.reference is not None:
        doc["reference"] = spec.reference
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")
    os.replace(tmp, path)
