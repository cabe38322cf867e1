import json
import os

import numpy as np
import pytest

from conftest import CONFIG_NAMES, config_path
from holoelastic.cli import run_command
from holoelastic.elasticity import Displacement, Interface, Symmetry, Traction
from holoelastic.geometry import outward_normal, piece_point, region_contains, Region
from holoelastic.problem import ConfigError, load_config, save_config


# --- config loading -----------------------------------------------------------


@pytest.mark.parametrize("name", CONFIG_NAMES)
def test_shipped_configs_load(name):
    spec = load_config(config_path(name))
    assert spec.name == name
    assert spec.domain.outer_length() > 0
    assert spec.domain.regions is not None


def test_ring_config_structure(configs):
    spec = configs["ring_quadrant"]
    kinds = [type(p.bc) for p in spec.domain.pieces]
    assert kinds.count(Traction) == 2
    assert kinds.count(Symmetry) == 2
    assert spec.reference["kind"] == "ring"


def test_dd_config_structure(configs):
    spec = configs["dd_plate_hole"]
    assert spec.domain.n_subdomains == 4
    ifaces = [p for p in spec.domain.pieces if isinstance(p.bc, Interface)]
    assert len(ifaces) == 4
    for p in ifaces:
        assert set(p.subdomains) == {p.bc.a, p.bc.b}


@pytest.mark.parametrize("name", CONFIG_NAMES)
def test_roundtrip_equals_original(name, tmp_path, configs):
    spec = configs[name]
    path = str(tmp_path / "rt.json")
    save_config(spec, path)
    assert load_config(path) == spec


@pytest.mark.parametrize("name", CONFIG_NAMES)
def test_outward_normals_leave_region(name, configs):
    spec = configs[name]
    union = Region(tuple(p for r in spec.domain.regions for pch in [r.patches] for p in pch))
    for piece in spec.domain.pieces:
        for t in (0.25, 0.75):
            z = complex(piece_point(piece, t))
            n = complex(outward_normal(piece, t))
            inner = z - 1e-6 * n
            outer = z + 1e-6 * n
            assert bool(region_contains(union, inner.real, inner.imag))
            if not piece.is_interface:
                assert not bool(region_contains(union, outer.real, outer.imag))


def test_missing_block_names_it(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"geometry": {"pieces": []}}))
    with pytest.raises(ConfigError, match="material"):
        load_config(str(path))


def test_parse_error_reports_line(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "material": \n}')
    with pytest.raises(ConfigError, match="line"):
        load_config(str(path))


def test_stress_only_with_dirichlet_rejected(tmp_path):
    doc = json.load(open(config_path("clamped_square")))
    doc["networks"]["mode"] = "stress_only"
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(ConfigError, match="stress-only"):
        load_config(str(path))


def test_bad_piece_reports_path(tmp_path):
    doc = json.load(open(config_path("ring_quadrant")))
    doc["geometry"]["pieces"][0]["radius"] = -1.0
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(ConfigError, match=r"pieces\[0\]"):
        load_config(str(path))


# --- CLI ------------------------------------------------------------------------


def _mini_ring(tmp_path, epochs=3, out="out", seed=None):
    doc = json.load(open(config_path("ring_quadrant")))
    doc["training"]["epochs"] = epochs
    doc["training"]["n_train"] = 40
    doc["training"]["n_test"] = 8
    if seed is not None:
        doc["training"]["seed"] = seed
    doc["outputs"]["grid"] = [12, 12]
    doc["outputs"]["dir"] = str(tmp_path / out)
    path = str(tmp_path / "mini_ring.json")
    with open(path, "w") as fh:
        json.dump(doc, fh)
    return path, doc["outputs"]["dir"]


def test_cli_train_eval_cycle(tmp_path, capsys):
    cfg, out = _mini_ring(tmp_path)
    assert run_command(["train", cfg]) == 0
    assert os.path.exists(os.path.join(out, "checkpoint.json"))
    hist = open(os.path.join(out, "history.csv")).read().splitlines()
    assert hist[0] == "epoch,train_loss,test_loss,ms"
    assert len(hist) == 4
    assert run_command(["eval", cfg, os.path.join(out, "checkpoint.json")]) == 0
    fields = open(os.path.join(out, "fields.csv")).read().splitlines()
    assert fields[0] == "x,y,sxx,syy,sxy,ux,uy"
    assert len(fields) == 1 + 12 * 12
    assert os.path.exists(os.path.join(out, "errors.csv"))
    # masked rows keep empty cells
    assert any(line.endswith(",,,,,") or ",,,,," in line for line in fields[1:])


def test_cli_eval_architecture_mismatch(tmp_path, capsys):
    cfg, out = _mini_ring(tmp_path)
    assert run_command(["train", cfg]) == 0
    doc = json.load(open(cfg))
    doc["networks"]["units"] = 7
    with open(cfg, "w") as fh:
        json.dump(doc, fh)
    code = run_command(["eval", cfg, os.path.join(out, "checkpoint.json")])
    assert code != 0
    assert "architecture" in capsys.readouterr().err


def test_cli_unknown_command():
    assert run_command(["frobnicate"]) != 0


def test_cli_missing_config(capsys):
    assert run_command(["train", "no_such_config.json"]) != 0


def test_cli_sample(tmp_path):
    cfg, out = _mini_ring(tmp_path)
    assert run_command(["sample", cfg, "--n", "25"]) == 0
    lines = open(os.path.join(out, "samples.csv")).read().splitlines()
    assert lines[0] == "x,y,nx,ny,piece,t,subdomains"
    assert len(lines) == 26


def test_cli_approx_demo(tmp_path):
    out = str(tmp_path / "approx.csv")
    assert run_command(["approx-demo", "--n", "16", "--target", "inv_shift", "--out", out]) == 0
    lines = open(out).read().splitlines()
    errs = [float(l.split(",")[1]) for l in lines[1:]]
    assert errs == sorted(errs, reverse=True)


def test_cli_init_check(tmp_path):
    cfg, out = _mini_ring(tmp_path)
    assert run_command(["init-check", cfg, "--beta", "0.5"]) == 0
    lines = open(os.path.join(out, "variance.csv")).read().splitlines()
    assert lines[0].startswith("layer,var_y")
    assert len(lines) == 3  # two hidden layers


def test_cli_seed_override_changes_output(tmp_path):
    cfg, out = _mini_ring(tmp_path)
    assert run_command(["train", cfg, "--seed", "1"]) == 0
    h1 = open(os.path.join(out, "history.csv")).read()
    assert run_command(["train", cfg, "--seed", "2"]) == 0
    h2 = open(os.path.join(out, "history.csv")).read()
    assert h1 != h2


def test_no_partial_files_on_failure(tmp_path):
    # eval against a truncated checkpoint must not leave partial fields.csv
    cfg, out = _mini_ring(tmp_path)
    assert run_command(["train", cfg]) == 0
    ckpt = os.path.join(out, "checkpoint.json")
    with open(ckpt, "w") as fh:
        fh.write("{ not json")
    os.remove(os.path.join(out, "fields.csv")) if os.path.exists(os.path.join(out, "fields.csv")) else None
    assert run_command(["eval", cfg, ckpt]) != 0
    assert not os.path.exists(os.path.join(out, "fields.csv"))
