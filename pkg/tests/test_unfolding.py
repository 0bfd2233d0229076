import numpy as np
import pytest

from homlab import fem
from homlab.errors import EpsMeshMismatch
from homlab.fem import Field
from homlab.geometry import EtaProfile, build_mesh_eps
from homlab.harness import make_source
from homlab.unfolding import (
    build_unfold_grid,
    check_algebra,
    check_integral_lemma,
    unfold_field,
    write_unfolded_csv,
)

BUMP = EtaProfile("sine_bump", (1.0, 1.0))


@pytest.fixture(scope="module")
def grid():
    return build_unfold_grid(BUMP, 64, 32, 32)


@pytest.fixture(scope="module")
def solved():
    from homlab.operators import OperatorSpec

    mesh = build_mesh_eps(BUMP, 0.125, 16, 16)
    u, _ = fem.solve_nonlinear(mesh, OperatorSpec("radial_regularized"),
                               make_source("constant", (1.0,)))
    return mesh, u


def test_mask_measure_matches_density_integral(grid):
    # |{(x, y) : x2 < eta(x1, y)}| restricted to the upper box equals
    # the integral of the fiber density over that box
    from homlab.geometry import DensityField

    h = DensityField(BUMP)
    x1 = (np.arange(256) + 0.5) / 256
    x2 = 1.0 + (np.arange(256) + 0.5) / 256
    hh = h(x1[:, None], x2[None, :])
    want = float(hh.mean())  # box has unit area
    assert grid.mask_measure() == pytest.approx(want, abs=2e-3)


def test_unfolding_reproduces_smooth_function(solved, grid):
    mesh, _ = solved
    pts = mesh.vertices
    smooth = Field(mesh, np.sin(1.3 * pts[:, 0]) + pts[:, 1] ** 2 / 3.0)
    samples, inside = unfold_field(smooth, 0.125, grid, return_inside=True)
    i, j, k = np.nonzero(grid.mask & inside)
    # targets: x1 = eps*floor(x1/eps) + eps*y, x2 unchanged
    x1t = 0.125 * np.floor(grid.x1_nodes[i] / 0.125) + 0.125 * grid.y_nodes[k]
    x2t = grid.x2_nodes[j]
    want = np.sin(1.3 * x1t) + x2t ** 2 / 3.0
    err = np.abs(samples[i, j, k] - want)
    # P1 interpolation error: the boundary-fitted band has cells up to
    # ~0.25 tall here, so curvature 2/3 allows errors near 1e-2
    assert err.max() < 2e-2
    assert np.percentile(err, 50) < 5e-3


def test_unfold_zero_extension(solved, grid):
    _, u = solved
    samples, inside = unfold_field(u, 0.125, grid, return_inside=True)
    assert samples[~inside].max(initial=0.0) == 0.0
    assert inside.sum() < grid.mask.sum()  # some targets fall outside


def test_algebra_identities(solved, grid):
    mesh, u = solved
    pts = mesh.vertices
    v = Field(mesh, 0.2 * pts[:, 0] - pts[:, 1])
    rep = check_algebra(u, v, 0.125, grid)
    assert rep.n_masked > 10_000
    assert rep.passed(pointwise_tol=1e-13, derivative_tol=1e-10)


def test_eps_mesh_mismatch_rejected(solved, grid):
    _, u = solved
    with pytest.raises(EpsMeshMismatch):
        unfold_field(u, 0.25, grid)


def test_integral_lemma_small_gap_for_periodic_profile(solved, grid):
    # no slow-variable dependence: the transport identity is exact in
    # the continuum and only quadrature noise remains
    _, u = solved
    gap = check_integral_lemma(u, 0.125, grid)
    assert gap.gap < 5e-3
    assert gap.lhs == pytest.approx(gap.rhs, abs=5e-3)


def test_write_unfolded_csv(tmp_path, solved, grid):
    _, u = solved
    samples = unfold_field(u, 0.125, grid)
    path = tmp_path / "unf.csv"
    write_unfolded_csv(grid, samples, str(path))
    header, *rows = path.read_text().strip().split("\n")
    assert header == "x1,x2,y,value"
    assert len(rows) == int(grid.mask.sum())
