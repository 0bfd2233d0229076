import json
import subprocess
import sys

import numpy as np
import pytest

from homlab.cli import main
from homlab.errors import NonConvergence

BASE = {
    "profile": {"family": "sine_bump", "params": [1.0, 1.0]},
    "operator": {
        "family": "radial_regularized",
        "alpha": {"kind": "constant", "value": 1.0},
    },
    "source": {"id": "constant", "params": [1.0]},
    "eps_list": [0.25],
    "mesh": {"cells_per_period": 8, "ny": 8, "limit_nx": 32,
             "limit_ny_minus": 16, "limit_ny_plus": 16},
    "tolerances": {"hypotheses_samples": 10000},
    "unfold": {"nx1": 32, "nx2": 16, "ny": 16, "eps": 0.25},
    "density": {"nx": 16, "ny": 16},
}


def write_config(tmp_path, **overrides):
    cfg = json.loads(json.dumps(BASE))
    for key, val in overrides.items():
        if val is None:
            cfg.pop(key, None)
        else:
            cfg[key] = val
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def test_density_pinned_rows(tmp_path):
    cfg = write_config(tmp_path)
    assert main(["density", "--config", cfg, "--out", str(tmp_path)]) == 0
    rows = {}
    lines = (tmp_path / "density.csv").read_text().strip().split("\n")
    assert lines[0] == "x1,x2,h"
    for line in lines[1:]:
        a, b, h = (float(c) for c in line.split(","))
        rows[(a, b)] = h
    assert rows[(0.5, 1.5)] == pytest.approx(0.5, abs=1e-6)
    assert rows[(0.25, 2.0)] == 0.0  # top row, empty fiber
    assert rows[(0.75, 0.5)] == 1.0


def test_density_constant_profile_all_interior_rows_one(tmp_path):
    cfg = write_config(tmp_path,
                       profile={"family": "constant", "params": [1.0]})
    assert main(["density", "--config", cfg, "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "density.csv").read_text().strip().split("\n")[1:]
    for line in lines:
        _, b, h = (float(c) for c in line.split(","))
        assert h == (0.0 if b == 1.0 else 1.0)


def test_density_idempotent(tmp_path):
    cfg = write_config(tmp_path)
    main(["density", "--config", cfg, "--out", str(tmp_path)])
    first = (tmp_path / "density.csv").read_bytes()
    main(["density", "--config", cfg, "--out", str(tmp_path)])
    assert (tmp_path / "density.csv").read_bytes() == first


def test_missing_operator_reports_schema_path(tmp_path, capsys):
    cfg = write_config(tmp_path, operator=None)
    rc = main(["solve-eps", "--config", cfg, "--eps", "0.25",
               "--out", str(tmp_path)])
    assert rc == 2
    assert "$.operator" in capsys.readouterr().err


def test_unknown_key_reports_schema_path(tmp_path, capsys):
    cfg = write_config(tmp_path,
                       profile={"family": "constant", "params": [1.0],
                                "wiggle": 3})
    rc = main(["density", "--config", cfg, "--out", str(tmp_path)])
    assert rc == 2
    assert "$.profile.wiggle" in capsys.readouterr().err


def test_unknown_alpha_kind_reports_schema_path(tmp_path, capsys):
    cfg = write_config(tmp_path, operator={
        "family": "radial_regularized",
        "alpha": {"kind": "quadratic", "value": 1.0},
    })
    rc = main(["check-operator", "--config", cfg, "--out", str(tmp_path)])
    assert rc == 2
    assert "$.operator.alpha.kind" in capsys.readouterr().err


def test_invalid_json_is_config_error(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{nope")
    rc = main(["density", "--config", str(path), "--out", str(tmp_path)])
    assert rc == 2
    assert "invalid JSON" in capsys.readouterr().err


def test_missing_config_file_is_config_error(tmp_path, capsys):
    rc = main(["density", "--config", str(tmp_path / "nothere.json"),
               "--out", str(tmp_path)])
    assert rc == 2


def test_solve_eps_zero_source_writes_zero_field(tmp_path):
    cfg = write_config(tmp_path, source={"id": "zero"})
    rc = main(["solve-eps", "--config", cfg, "--out", str(tmp_path)])
    assert rc == 0
    vals = [float(l.split()[1])
            for l in (tmp_path / "u_eps_k4.txt").read_text().strip().split("\n")]
    assert max(abs(v) for v in vals) == 0.0
    diag = json.loads((tmp_path / "diagnostics_eps_k4.json").read_text())
    assert diag["converged"] is True
    assert diag["eps"] == 0.25


def test_solve_eps_requires_eps_membership(tmp_path, capsys):
    cfg = write_config(tmp_path, eps_list=[0.25, 0.125])
    rc = main(["solve-eps", "--config", cfg, "--eps", "0.1",
               "--out", str(tmp_path)])
    assert rc == 2
    err = capsys.readouterr().err
    assert "not a member of eps_list" in err or "reciprocal" in err


def test_solve_eps_ambiguous_without_flag(tmp_path, capsys):
    cfg = write_config(tmp_path, eps_list=[0.25, 0.125])
    rc = main(["solve-eps", "--config", cfg, "--out", str(tmp_path)])
    assert rc == 2
    assert "ambiguous" in capsys.readouterr().err


def test_check_operator_rejects_indefinite_matrix(tmp_path, capsys):
    cfg = write_config(tmp_path, operator={
        "family": "linear_matrix",
        "matrix": [[1.0, 3.0], [3.0, 1.0]],
    })
    rc = main(["check-operator", "--config", cfg, "--out", str(tmp_path)])
    assert rc == 2
    assert "monotonicity" in capsys.readouterr().err


def test_sweep_rejects_bad_operator_before_solving(tmp_path, capsys):
    cfg = write_config(tmp_path, operator={
        "family": "linear_matrix",
        "matrix": [[1.0, 3.0], [3.0, 1.0]],
    })
    rc = main(["sweep", "--config", cfg, "--out", str(tmp_path)])
    assert rc == 2
    out = capsys.readouterr()
    assert "operator rejected" in out.err
    assert not (tmp_path / "sweep.csv").exists()


def test_solve_limit_writes_artifacts(tmp_path):
    cfg = write_config(tmp_path)
    rc = main(["solve-limit", "--config", cfg, "--out", str(tmp_path)])
    assert rc == 0
    assert (tmp_path / "limit_field.txt").exists()
    assert (tmp_path / "limit_quad.csv").exists()
    diag = json.loads((tmp_path / "limit_diagnostics.json").read_text())
    assert diag["constraint_residual"] <= 1e-9


def test_unfold_writes_artifacts(tmp_path):
    cfg = write_config(tmp_path)
    rc = main(["unfold", "--config", cfg, "--out", str(tmp_path)])
    assert rc == 0
    lines = (tmp_path / "unfolded_k4.csv").read_text().strip().split("\n")
    assert lines[0] == "x1,x2,y,value"
    assert len(lines) > 1000
    rep = json.loads((tmp_path / "unfold_report.json").read_text())
    assert rep["lemma_gap"] == pytest.approx(
        abs(rep["lemma_lhs"] - rep["lemma_rhs"]), abs=1e-15)


def test_solver_failure_maps_to_exit_3(tmp_path, capsys, monkeypatch):
    import homlab.cli as cli_mod

    def boom(*a, **kw):
        raise NonConvergence("stalled", residual=1.0, iterations=7)

    monkeypatch.setattr(cli_mod.fem, "solve_nonlinear", boom)
    cfg = write_config(tmp_path)
    rc = main(["solve-eps", "--config", cfg, "--out", str(tmp_path)])
    assert rc == 3
    assert "solver failure" in capsys.readouterr().err


def test_help_lists_config_keys(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["sweep", "--help"])
    assert exc.value.code == 0
    out = capsys.readouterr().out
    assert "config keys read:" in out
    for key in ("eps_list", "mesh.cells_per_period", "grad_bound"):
        assert key in out


def test_single_eps_sweep_warns_on_stderr(tmp_path):
    # subprocess so the warning actually lands on the process stderr
    cfg = write_config(tmp_path)
    res = subprocess.run(
        [sys.executable, "-m", "homlab", "sweep", "--config", cfg,
         "--out", str(tmp_path)],
        capture_output=True, text=True, timeout=300,
    )
    assert res.returncode == 0, res.stderr
    assert "single-eps" in res.stderr
    assert "sweep: PASS" in res.stdout
    assert (tmp_path / "sweep.csv").exists()
