import json
from pathlib import Path

import numpy as np
import pytest

from gipsp.cli import main
from gipsp.lattice import load_field

REPO = Path(__file__).resolve().parents[1]


def _write(tmp_path, cfg):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def _free_cfg(out):
    return {
        "grid": {"dim": 1, "n": 64, "spacing": 0.3},
        "field": {"type": "free", "dim": 1},
        "state": {"type": "coherent", "q0": [0.5], "p0": [-0.3]},
        "transforms": ["w", "w_gauge", "q"],
        "output_dir": str(out),
        "tolerances": {"reduction": 1e-14},
    }


def _gauge_pair_cfg(out):
    # n=16 keeps the CLI tests fast; box truncation then costs a few 1e-3 of
    # normalization, so that tolerance is opened while the gauge-invariance
    # checks stay at the acceptance level (they are exact on any grid)
    return {
        "grid": {"dim": 2, "n": 16, "spacing": 0.55},
        "field": {"type": "uniform_b", "b": 0.5, "gauge": "landau"},
        "chi": {"exponents": [[1, 1, 0]], "coefficients": [0.25]},
        "state": {"type": "coherent", "q0": [0.3, -0.2], "p0": [0.1, 0.0]},
        "transforms": ["w_gauge", "q_gauge", "w_poincare", "q_poincare"],
        "output_dir": str(out),
        "tolerances": {"gauge_invariance": 1e-8, "normalization": 2e-2},
    }


def test_free_packet_run(tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["run", _write(tmp_path, _free_cfg(out))])
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["checks"]["wg_equals_w_max_err"]["value"] <= 1e-14
    assert report["all_passed"]
    vals, meta = load_field(out / "w")
    assert meta["kind"] == "w" and vals.shape == (128, 64)
    assert (out / "w.csv").exists()


def test_gauge_pair_run(tmp_path):
    out = tmp_path / "out"
    code = main(["run", _write(tmp_path, _gauge_pair_cfg(out))])
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    for key in ("wg_gauge_invariance_max_err", "qg_gauge_invariance_max_err",
                "wp_gauge_invariance_max_err", "qp_gauge_invariance_max_err"):
        assert report["checks"][key]["value"] <= 1e-8


def test_sample_configs_run(tmp_path):
    for name in ("free-packet.json", "gauge-pair.json"):
        out = tmp_path / name.replace(".json", "")
        code = main(["run", str(REPO / "configs" / name), "--out", str(out)])
        assert code == 0


def test_negative_lam_exits_2(tmp_path, capsys):
    cfg = _free_cfg(tmp_path / "out")
    cfg["constants"] = {"lam": -1.0}
    code = main(["run", _write(tmp_path, cfg)])
    assert code == 2
    err = capsys.readouterr().err
    assert "constants.lam" in err


def test_bad_transform_exits_2(tmp_path, capsys):
    cfg = _free_cfg(tmp_path / "out")
    cfg["transforms"] = ["weyl_symbol"]
    assert main(["run", _write(tmp_path, cfg)]) == 2
    assert "transforms" in capsys.readouterr().err


def test_missing_config_exits_2(tmp_path, capsys):
    assert main(["run", str(tmp_path / "nope.json")]) == 2


def test_determinism(tmp_path):
    cfg = _gauge_pair_cfg(tmp_path / "out1")
    code1 = main(["run", _write(tmp_path, cfg)])
    r1 = json.loads((tmp_path / "out1" / "report.json").read_text())
    cfg["output_dir"] = str(tmp_path / "out2")
    code2 = main(["run", _write(tmp_path, cfg)])
    r2 = json.loads((tmp_path / "out2" / "report.json").read_text())
    assert code1 == code2 == 0
    for key in r1["checks"]:
        assert abs(r1["checks"][key]["value"] - r2["checks"][key]["value"]) <= 1e-13
    # sidecar metadata identical apart from nothing (no timestamps recorded)
    m1 = json.loads((tmp_path / "out1" / "w_gauge.json").read_text())
    m2 = json.loads((tmp_path / "out2" / "w_gauge.json").read_text())
    assert m1 == m2


def test_report_table(tmp_path, capsys):
    out = tmp_path / "out"
    main(["run", _write(tmp_path, _gauge_pair_cfg(out))])
    capsys.readouterr()
    code = main(["report", str(out)])
    assert code == 0
    text = capsys.readouterr().out
    for key in ("wg_gauge_invariance_max_err", "qg_gauge_invariance_max_err"):
        assert key in text
    # one row per transform-level check for every requested kind
    for kind in ("w_gauge", "q_gauge", "w_poincare", "q_poincare"):
        assert f"{kind}_normalization_err" in text


def test_report_missing_artifacts(tmp_path, capsys):
    assert main(["report", str(tmp_path / "empty")]) == 2
    assert "expected" in capsys.readouterr().err
    out = tmp_path / "out"
    main(["run", _write(tmp_path, _free_cfg(out))])
    (out / "w.bin").unlink()
    capsys.readouterr()
    assert main(["report", str(out)]) == 2
    assert "w.bin" in capsys.readouterr().err


def test_evolution_scenario(tmp_path):
    cfg = _free_cfg(tmp_path / "out")
    cfg["evolution"] = {"propagator": "schrodinger_dense", "dt": 0.1, "t_final": 0.5}
    code = main(["run", _write(tmp_path, cfg)])
    assert code == 0
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["checks"]["evolution_norm_err"]["pass"]
    assert (tmp_path / "out" / "psi_final.bin").exists()


def test_liouville_evolution_scenario(tmp_path):
    cfg = _gauge_pair_cfg(tmp_path / "out")
    cfg.pop("chi")
    cfg["transforms"] = ["w_gauge"]
    cfg["evolution"] = {"propagator": "liouville", "dt": 0.05, "t_final": 1.0}
    code = main(["run", _write(tmp_path, cfg)])
    assert code == 0
    assert (tmp_path / "out" / "evolved.bin").exists()
