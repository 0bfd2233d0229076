import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from homlab.errors import HypothesisViolation
from homlab.operators import (
    OperatorSpec,
    check_hypotheses,
    effective_a2,
    effective_a2_many,
    evaluate,
    evaluate_jacobian_fd,
    picard_coefficient,
    solve_a1_root,
    solve_a1_root_many,
)

SPD = [[2.0, 1.0], [1.0, 3.0]]

FAMILY = st.sampled_from(["linear_matrix", "radial_regularized", "radial_atan"])


def make_spec(family, alpha_kind="constant", alpha_params=(1.0,)):
    matrix = SPD if family == "linear_matrix" else None
    return OperatorSpec(family, matrix=matrix, alpha_kind=alpha_kind,
                        alpha_params=alpha_params)


def test_linear_family_is_alpha_times_matrix():
    spec = OperatorSpec("linear_matrix", matrix=SPD,
                        alpha_kind="affine_x1", alpha_params=(1.0, 0.5))
    x = np.array([[0.2, 1.1], [0.8, 0.3]])
    xi = np.array([[1.0, -2.0], [0.5, 0.25]])
    want = (1.0 + 0.5 * x[:, :1]) * (xi @ np.asarray(SPD).T)
    np.testing.assert_allclose(evaluate(spec, x, xi), want, atol=1e-15)


def test_radial_factor_stays_in_unit_band():
    # rho(s)/s in (1, 2] pins the coercivity and growth constants
    x = np.zeros((64, 2))
    for family in ("radial_regularized", "radial_atan"):
        spec = make_spec(family)
        mags = np.logspace(-6, 4, 64)
        xi = np.stack([mags, np.zeros_like(mags)], axis=1)
        ratio = evaluate(spec, x, xi)[:, 0] / mags
        assert np.all(ratio > 1.0)
        assert np.all(ratio <= 2.0)


def test_spec_constructor_rejections():
    with pytest.raises(ValueError):
        OperatorSpec("linear_matrix")  # matrix required
    with pytest.raises(ValueError):
        OperatorSpec("linear_matrix", matrix=[[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(ValueError):
        OperatorSpec("radial_regularized", matrix=SPD)
    with pytest.raises(ValueError):
        OperatorSpec("radial_regularized", alpha_params=(0.0,))
    with pytest.raises(ValueError):
        OperatorSpec("radial_regularized", alpha_kind="affine_x1",
                     alpha_params=(1.0, -2.0))  # alpha(1) < 0
    with pytest.raises(ValueError):
        OperatorSpec("radial_regularized", k_const=-1.0)
    with pytest.raises(ValueError):
        OperatorSpec("spectral")


def test_picard_coefficient_reproduces_field():
    rng = np.random.default_rng(3)
    x = rng.uniform(0.0, 1.0, size=(40, 2))
    xi = rng.normal(size=(40, 2)) * 3.0
    for family in ("linear_matrix", "radial_regularized", "radial_atan"):
        spec = make_spec(family)
        b = picard_coefficient(spec, x, xi)
        np.testing.assert_allclose(
            np.einsum("nij,nj->ni", b, xi), evaluate(spec, x, xi), atol=1e-13
        )


def test_fd_jacobian_is_symmetric_for_radial():
    # radial fields are gradients of a convex potential
    rng = np.random.default_rng(4)
    x = rng.uniform(0.0, 1.0, size=(30, 2))
    xi = rng.normal(size=(30, 2)) * 2.0
    jac = evaluate_jacobian_fd(make_spec("radial_regularized"), x, xi)
    assert np.abs(jac[:, 0, 1] - jac[:, 1, 0]).max() < 1e-6


@settings(max_examples=60, deadline=None)
@given(family=FAMILY, d=st.floats(-5.0, 5.0), x1=st.floats(0.0, 1.0))
def test_a1_root_residual_bound(family, d, x1):
    spec = make_spec(family, alpha_kind="affine_x1", alpha_params=(1.0, 0.5))
    q = solve_a1_root(spec, (x1, 0.0), d)
    xi = np.array([[q, d]])
    a1 = evaluate(spec, np.array([[x1, 0.0]]), xi)[0, 0]
    assert abs(a1) <= 1e-10 * (1.0 + abs(d))


def test_effective_algebra_for_spd_matrix():
    # A_1 = alpha (2q + d) = 0 forces q = -d/2, then
    # A_2 = alpha (q + 3d) = 2.5 d
    spec = OperatorSpec("linear_matrix", matrix=SPD)
    for d in (-2.0, -1.0, 0.0, 1.0, 2.0):
        assert abs(solve_a1_root(spec, (0.3, 1.2), d) + d / 2.0) < 1e-10
        assert abs(effective_a2(spec, (0.3, 1.2), d) - 2.5 * d) < 1e-10


def test_effective_a2_radial_closed_form():
    # radial fields have q* = 0, so the effective flux is the radial
    # profile applied to the vertical slope alone
    spec = make_spec("radial_regularized")
    d = np.linspace(-3.0, 3.0, 41)
    a2, qstar = effective_a2_many(spec, np.full_like(d, 0.5), d)
    np.testing.assert_allclose(qstar, 0.0, atol=1e-10)
    want = d * (1.0 + 1.0 / (1.0 + np.abs(d)))
    np.testing.assert_allclose(a2, want, atol=1e-9)


def test_root_vectorization_matches_scalar():
    spec = make_spec("radial_atan")
    d = np.array([-4.0, -0.5, 0.0, 0.7, 3.3])
    x1 = np.array([0.0, 0.25, 0.5, 0.75, 1.0])
    q = solve_a1_root_many(spec, x1, d)
    for i in range(d.size):
        assert abs(q[i] - solve_a1_root(spec, (x1[i], 0.0), d[i])) < 1e-12


def test_check_hypotheses_accepts_shipped_families():
    for family in ("linear_matrix", "radial_regularized", "radial_atan"):
        rep = check_hypotheses(make_spec(family), n_samples=20_000, seed=1)
        assert rep.passed
        assert rep.c0_lower > 0
        assert rep.c1_upper >= rep.c0_lower


def test_check_hypotheses_rejects_indefinite_matrix():
    bad = OperatorSpec("linear_matrix", matrix=[[1.0, 3.0], [3.0, 1.0]])
    with pytest.raises(HypothesisViolation, match="monotonicity"):
        check_hypotheses(bad, n_samples=10_000, seed=0)


def test_check_hypotheses_rejects_tiny_sample_budget():
    with pytest.raises(ValueError):
        check_hypotheses(make_spec("radial_atan"), n_samples=100)
