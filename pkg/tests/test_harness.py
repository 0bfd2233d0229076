import numpy as np
import pytest

from homlab import fem
from homlab.errors import IncompatibleGeometry
from homlab.geometry import DensityField, EtaProfile, build_mesh_eps, build_mesh_limit
from homlab.harness import (
    SweepConfig,
    build_test_bank,
    make_source,
    run_sweep,
    weak_error_flux,
    weak_error_u,
)
from homlab.limit import solve_limit
from homlab.operators import OperatorSpec

BUMP = EtaProfile("sine_bump", (1.0, 1.0))
RADIAL = OperatorSpec("radial_regularized")


def small_config(out, **kw):
    defaults = dict(
        profile=BUMP,
        operator=RADIAL,
        eps_list=(0.25,),
        cells_per_period=8,
        ny=8,
        limit_nx=32,
        limit_ny_minus=16,
        limit_ny_plus=16,
        unfold_nx1=32,
        unfold_nx2=16,
        unfold_ny=16,
        hypotheses_samples=10_000,
        output_dir=str(out),
    )
    defaults.update(kw)
    return SweepConfig(**defaults)


def test_source_ids():
    x = np.array([[0.5, 0.25]])
    assert make_source("constant", (2.5,))(x)[0] == 2.5
    assert make_source("zero")(x)[0] == 0.0
    assert make_source("manufactured_linear")(x)[0] == pytest.approx(
        np.pi ** 2 / 4.0 * np.sin(np.pi / 8.0))
    with pytest.raises(ValueError, match="unknown source"):
        make_source("ramp")


def test_eps_list_validation():
    with pytest.raises(ValueError, match="empty"):
        SweepConfig(profile=BUMP, operator=RADIAL, eps_list=())
    with pytest.raises(ValueError, match="decreasing"):
        SweepConfig(profile=BUMP, operator=RADIAL, eps_list=(0.125, 0.25))
    with pytest.raises(ValueError, match="reciprocal"):
        SweepConfig(profile=BUMP, operator=RADIAL, eps_list=(0.3,))


def test_bank_size_bounds():
    mesh = build_mesh_limit(BUMP, 16, 8, 8)
    with pytest.raises(ValueError):
        build_test_bank(mesh, 0)
    with pytest.raises(ValueError):
        build_test_bank(mesh, 8)
    bank = build_test_bank(mesh, 3)
    assert bank.names == ("one", "x1", "x2")
    assert np.all(bank.norms > 0)


def test_weak_errors_reject_mismatched_profiles():
    other = EtaProfile("sine_bump", (1.0, 0.5))
    mesh_eps = build_mesh_eps(other, 0.25, 8, 8)
    src = make_source("constant", (1.0,))
    u, _ = fem.solve_nonlinear(mesh_eps, RADIAL, src)

    limit_mesh = build_mesh_limit(BUMP, 16, 8, 8)
    density = DensityField(BUMP)
    sol = solve_limit(limit_mesh, RADIAL, density, src)
    bank = build_test_bank(limit_mesh)
    with pytest.raises(IncompatibleGeometry):
        weak_error_u(u, sol, density, bank)
    with pytest.raises(IncompatibleGeometry):
        weak_error_flux(u, sol, density, bank)


def test_single_eps_sweep_passes_with_warning(tmp_path):
    cfg = small_config(tmp_path)
    with pytest.warns(UserWarning, match="single-eps"):
        report = run_sweep(cfg)
    assert report.passed
    assert len(report.rows) == 1
    assert report.rows[0].dofs > 0
    assert any("single-eps" in n for n in report.notes)


def test_sweep_csv_contract(tmp_path):
    cfg = small_config(tmp_path)
    with pytest.warns(UserWarning):
        report = run_sweep(cfg)
    header, *rows = open(report.csv_path).read().strip().split("\n")
    assert header == ("eps,dofs,newton_iters,residual,grad_norm,weak_err_u,"
                      "weak_err_flux1,weak_err_flux2_plus,"
                      "weak_err_grad_minus,lemma32_gap")
    assert len(rows) == 1
    cells = rows[0].split(",")
    assert float(cells[0]) == 0.25
    assert int(cells[1]) == report.rows[0].dofs
    # plot data: one block per metric
    blocks = open(report.plot_path).read().split("\n\n")
    assert len(blocks) == 5


def test_sweep_is_deterministic(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    with pytest.warns(UserWarning):
        ra = run_sweep(small_config(a))
    with pytest.warns(UserWarning):
        rb = run_sweep(small_config(b))
    assert open(ra.csv_path, "rb").read() == open(rb.csv_path, "rb").read()


def test_gate_failure_reported_not_raised(tmp_path):
    # an absurdly tight uniform bound must fail the report, not raise
    cfg = small_config(tmp_path, eps_list=(0.5, 0.25), grad_bound=1e-6)
    report = run_sweep(cfg)
    assert not report.passed
    assert any("grad_norm" in f for f in report.gate_failures)


# frozen flagship metrics; gate tests elsewhere only check ratios and
# bounds, so silent drift in absolute values would go unnoticed without
# these pins
_FLAGSHIP_ROWS = {
    0.25: (5.123900e-3, 1.345798e-3, 8.971338e-3, 1.250660e-3, 9.181818e-4),
    0.125: (6.024244e-3, 8.752134e-4, 1.056547e-2, 8.367234e-4, 9.155186e-4),
    0.0625: (6.341743e-3, 4.675020e-4, 1.107396e-2, 4.490265e-4, 9.141659e-4),
    0.03125: (6.397114e-3, 2.378588e-4, 1.128724e-2, 3.554616e-4, 9.140167e-4),
}


def test_flagship_metrics_pinned(flagship_report):
    assert flagship_report.constraint_residual == pytest.approx(
        3.290418e-79, rel=1e-5)
    for row in flagship_report.rows:
        want = _FLAGSHIP_ROWS[row.eps]
        got = (row.weak_err_u, row.weak_err_flux1, row.weak_err_flux2_plus,
               row.weak_err_grad_minus, row.lemma32_gap)
        assert got == pytest.approx(want, rel=1e-5)
