"""Monotone vector fields A(x, xi) and the effective vertical flux.

Built-in families (all strictly monotone in xi, coercive, linear growth):

* linear_matrix        A(x, xi) = alpha(x) * M @ xi,  M symmetric
* radial_regularized   A(x, xi) = alpha(x) * (1 + 1/(1+|xi|)) * xi
* radial_atan          A(x, xi) = alpha(x) * (1 + atan(|xi|)/|xi|) * xi

The spatial coefficient alpha(x) is either constant or affine in x1 and
must stay inside positive declared bounds.

The degenerate limit problem needs, at each point, the root q*(x, d) of
the scalar equation  A_1(x, (q, d)) = 0  and the resulting effective
vertical flux  A_2(x, (q*, d)).  Strict monotonicity makes A_1 strictly
increasing in q, so the root is found by exponential bracket expansion,
bisection and a short Newton polish; everything is vectorized over
quadrature points.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BracketFailure, HypothesisViolation

_FAMILIES = ("linear_matrix", "radial_regularized", "radial_atan")
_ALPHA_KINDS = ("constant", "affine_x1")


@dataclass(frozen=True, eq=False)
class OperatorSpec:
    """Description of a monotone field A(x, xi).

    matrix is required (and only used) by the linear_matrix family; it
    must be symmetric, but definiteness is deliberately left to
    check_hypotheses so that invalid operators are rejected by the
    screening step rather than at construction.
    """

    family: str
    matrix: np.ndarray | None = None
    alpha_kind: str = "constant"
    alpha_params: tuple = (1.0,)
    k_const: float = 0.0
    c0_est: float = field(init=False, default=0.0)
    c1_est: float = field(init=False, default=0.0)

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown operator family {self.family!r}")
        if self.alpha_kind not in _ALPHA_KINDS:
            raise ValueError(f"unknown alpha kind {self.alpha_kind!r}")
        object.__setattr__(self, "alpha_params",
                           tuple(float(p) for p in self.alpha_params))
        if self.k_const < 0:
            raise ValueError("k_const must be nonnegative")
        a_lo, a_hi = self.alpha_bounds()
        if not a_lo > 0:
            raise ValueError(f"alpha must stay positive on [0,1], min {a_lo:.3g}")
        if self.family == "linear_matrix":
            if self.matrix is None:
                raise ValueError("linear_matrix family requires a matrix")
            m = np.asarray(self.matrix, dtype=float)
            if m.shape != (2, 2):
                raise ValueError("matrix must be 2x2")
            if abs(m[0, 1] - m[1, 0]) > 1e-12 * max(1.0, np.abs(m).max()):
                raise ValueError("matrix must be symmetric")
            object.__setattr__(self, "matrix", m)
            lam = np.linalg.eigvalsh(m)
            object.__setattr__(self, "c0_est", float(a_lo * lam[0]))
            object.__setattr__(self, "c1_est", float(a_hi * lam[1]))
        else:
            if self.matrix is not None:
                raise ValueError("matrix is only meaningful for linear_matrix")
            # rho(s)/s lies in (1, 2] for both radial profiles
            object.__setattr__(self, "c0_est", float(a_lo))
            object.__setattr__(self, "c1_est", float(2.0 * a_hi))

    def alpha_bounds(self):
        if self.alpha_kind == "constant":
            v = self.alpha_params[0]
            return v, v
        base, slope = self.alpha_params
        ends = (base, base + slope)
        return min(ends), max(ends)

    def alpha(self, x1):
        if self.alpha_kind == "constant":
            return np.broadcast_to(np.float64(self.alpha_params[0]),
                                   np.shape(x1)).copy()
        base, slope = self.alpha_params
        return base + slope * np.asarray(x1, dtype=float)

    def signature(self):
        m = None if self.matrix is None else self.matrix.tobytes()
        return (self.family, m, self.alpha_kind, self.alpha_params, self.k_const)


def _radial_factor(family, s):
    """rho(|xi|)/|xi| for the radial families, finite at zero."""
    if family == "radial_regularized":
        return 1.0 + 1.0 / (1.0 + s)
    safe = np.where(s > 0, s, 1.0)
    return 1.0 + np.where(s > 0, np.arctan(safe) / safe, 1.0)


def evaluate(spec, x, xi):
    """A(x, xi) for points x (..., 2) and arguments xi (..., 2)."""
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    alpha = spec.alpha(x[..., 0])
    if spec.family == "linear_matrix":
        return alpha[..., None] * (xi @ spec.matrix.T)
    s = np.sqrt(xi[..., 0] ** 2 + xi[..., 1] ** 2)
    return (alpha * _radial_factor(spec.family, s))[..., None] * xi


def evaluate_jacobian_fd(spec, x, xi, step_scale=1e-6):
    """Finite-difference Jacobian d A / d xi, shape (..., 2, 2).

    Central differences with step step_scale * (1 + |xi|), the
    linearization used by the Newton solvers.
    """
    xi = np.asarray(xi, dtype=float)
    s = np.sqrt(xi[..., 0] ** 2 + xi[..., 1] ** 2)
    delta = step_scale * (1.0 + s)
    out = np.empty(xi.shape[:-1] + (2, 2))
    for comp in range(2):
        e = np.zeros_like(xi)
        e[..., comp] = delta
        d = (evaluate(spec, x, xi + e) - evaluate(spec, x, xi - e)) / (2 * delta)[..., None]
        out[..., :, comp] = d
    return out


def picard_coefficient(spec, x, xi):
    """Frozen-coefficient matrix B(x, xi) with B @ xi = A(x, xi), the
    linearization used by the Picard fallback.  Shape (..., 2, 2)."""
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    alpha = spec.alpha(x[..., 0])
    eye = np.eye(2)
    if spec.family == "linear_matrix":
        return alpha[..., None, None] * spec.matrix
    s = np.sqrt(xi[..., 0] ** 2 + xi[..., 1] ** 2)
    return (alpha * _radial_factor(spec.family, s))[..., None, None] * eye


def a1_component(spec, x1, q, d):
    """First component A_1(x, (q, d)), vectorized over flat arrays."""
    alpha = spec.alpha(x1)
    if spec.family == "linear_matrix":
        m = spec.matrix
        return alpha * (m[0, 0] * q + m[0, 1] * d)
    s = np.sqrt(q * q + d * d)
    return alpha * _radial_factor(spec.family, s) * q


def a2_component(spec, x1, q, d):
    """Second component A_2(x, (q, d)), vectorized over flat arrays."""
    alpha = spec.alpha(x1)
    if spec.family == "linear_matrix":
        m = spec.matrix
        return alpha * (m[1, 0] * q + m[1, 1] * d)
    s = np.sqrt(q * q + d * d)
    return alpha * _radial_factor(spec.family, s) * d


def solve_a1_root_many(spec, x1, d):
    """Vectorized root q*(x, d) of A_1(x, (q, d)) = 0.

    Bracket expansion (factor 2 from half-width max(1, |d|)), bisection,
    then at most five Newton polish steps with a finite-difference slope.
    The achieved residual satisfies |A_1| <= 1e-10 * (1 + |d|).
    """
    x1 = np.asarray(x1, dtype=float).ravel()
    d = np.asarray(d, dtype=float).ravel()
    r0 = np.maximum(1.0, np.abs(d))
    lo = -r0.copy()
    hi = r0.copy()
    limit = 1e6 * (1.0 + np.abs(d))

    def g(q):
        return a1_component(spec, x1, q, d)

    for _ in range(64):
        bad = (g(lo) > 0) | (g(hi) < 0)
        if not bad.any():
            break
        too_far = bad & (np.maximum(np.abs(lo), np.abs(hi)) > limit)
        if too_far.any():
            k = int(np.argmax(too_far))
            raise BracketFailure(
                f"no sign change of A_1 within |q| <= 1e6*(1+|d|) at "
                f"x1={x1[k]:.6g}, d={d[k]:.6g}"
            )
        lo = np.where(bad, 2.0 * lo, lo)
        hi = np.where(bad, 2.0 * hi, hi)
    else:
        raise BracketFailure("bracket expansion did not terminate")

    for _ in range(60):
        mid = 0.5 * (lo + hi)
        up = g(mid) > 0
        hi = np.where(up, mid, hi)
        lo = np.where(up, lo, mid)
    q = 0.5 * (lo + hi)

    for _ in range(5):
        gq = g(q)
        delta = 1e-7 * (1.0 + np.abs(q))
        slope = (g(q + delta) - g(q - delta)) / (2 * delta)
        step = np.where(slope > 0, gq / np.where(slope > 0, slope, 1.0), 0.0)
        q_new = q - step
        ok = np.isfinite(q_new) & (np.abs(g(q_new)) <= np.abs(gq))
        q = np.where(ok, q_new, q)
    return q


def solve_a1_root(spec, x, d):
    """Scalar root q* with A_1(x, (q*, d)) = 0."""
    q = solve_a1_root_many(spec, np.asarray([x[0]]), np.asarray([d]))
    return float(q[0])


def effective_a2_many(spec, x1, d):
    """Effective vertical flux and its root, vectorized.

    Returns (a2, qstar) where a2 = A_2(x, (q*, d)).
    """
    x1 = np.asarray(x1, dtype=float).ravel()
    d = np.asarray(d, dtype=float).ravel()
    q = solve_a1_root_many(spec, x1, d)
    return a2_component(spec, x1, q, d), q


def effective_a2(spec, x, d):
    """Scalar effective vertical flux A_2(x, (q*(x,d), d))."""
    a2, _ = effective_a2_many(spec, np.asarray([x[0]]), np.asarray([d]))
    return float(a2[0])


def effective_a2_slope_many(spec, x1, d, step_scale=1e-6):
    """Finite-difference slope of d -> effective_a2(x, d)."""
    d = np.asarray(d, dtype=float).ravel()
    delta = step_scale * (1.0 + np.abs(d))
    up, _ = effective_a2_many(spec, x1, d + delta)
    dn, _ = effective_a2_many(spec, x1, d - delta)
    return (up - dn) / (2 * delta)


@dataclass
class HypothesisReport:
    passed: bool
    c0_lower: float
    c1_upper: float
    n_samples: int
    min_monotonicity: float
    notes: list


def check_hypotheses(spec, n_samples=100_000, box=(0.0, 1.0, 0.0, 2.0), seed=0):
    """Monte Carlo screening of monotonicity, coercivity and growth.

    Samples points x in the box and argument pairs (xi, xi') with
    log-uniform magnitudes in [1e-3, 1e3], and checks

      (A(x,xi) - A(x,xi')) . (xi - xi') > 0          (strict monotonicity)
      A(x,xi) . xi + k >= c0 |xi|^2 with some c0 > 0 (coercivity)
      |A(x,xi)| <= c1 |xi| + k with finite c1        (growth)

    Returns a HypothesisReport with the sampled constants; raises
    HypothesisViolation naming the failing sample when a check fails.
    For the linear family an eigenvalue precheck rejects indefinite
    matrices deterministically.
    """
    if n_samples < 10_000:
        raise ValueError("n_samples must be at least 1e4")
    rng = np.random.default_rng(seed)

    if spec.family == "linear_matrix":
        lam, vec = np.linalg.eigh(spec.matrix)
        if lam[0] <= 0:
            v = vec[:, 0]
            raise HypothesisViolation(
                "monotonicity fails on eigendirection: matrix eigenvalue "
                f"{lam[0]:.6g} <= 0, failing triple x=(0.5,0.5), "
                f"xi=({v[0]:.6g},{v[1]:.6g}), xi'=(0,0)"
            )

    n = int(n_samples)
    x = np.empty((n, 2))
    x[:, 0] = rng.uniform(box[0], box[1], n)
    x[:, 1] = rng.uniform(box[2], box[3], n)

    def sample_args():
        theta = rng.uniform(0.0, 2 * np.pi, n)
        mag = 10.0 ** rng.uniform(-3.0, 3.0, n)
        return mag[:, None] * np.stack([np.cos(theta), np.sin(theta)], axis=1)

    xi = sample_args()
    xi2 = sample_args()

    a_xi = evaluate(spec, x, xi)
    a_xi2 = evaluate(spec, x, xi2)
    dxi = xi - xi2
    sep = np.sqrt((dxi ** 2).sum(axis=1))
    mono = ((a_xi - a_xi2) * dxi).sum(axis=1)
    relevant = sep > 1e-9
    if (mono[relevant] <= 0).any():
        k = int(np.flatnonzero(relevant)[np.argmin(mono[relevant])])
        raise HypothesisViolation(
            f"monotonicity fails: x=({x[k,0]:.6g},{x[k,1]:.6g}), "
            f"xi=({xi[k,0]:.6g},{xi[k,1]:.6g}), xi'=({xi2[k,0]:.6g},{xi2[k,1]:.6g}), "
            f"pairing {mono[k]:.6g}"
        )
    min_mono = float((mono[relevant] / sep[relevant] ** 2).min())

    norm2 = (xi ** 2).sum(axis=1)
    coercive = ((a_xi * xi).sum(axis=1) + spec.k_const) / norm2
    c0_lower = float(coercive.min())
    if c0_lower <= 0:
        k = int(np.argmin(coercive))
        raise HypothesisViolation(
            f"coercivity fails: x=({x[k,0]:.6g},{x[k,1]:.6g}), "
            f"xi=({xi[k,0]:.6g},{xi[k,1]:.6g}), quotient {c0_lower:.6g}"
        )

    growth = (np.sqrt((a_xi ** 2).sum(axis=1)) - spec.k_const) / np.sqrt(norm2)
    c1_upper = float(growth.max())

    notes = []
    if spec.c0_est and c0_lower < 0.5 * spec.c0_est:
        notes.append(
            f"sampled c0 {c0_lower:.4g} well below declared {spec.c0_est:.4g}"
        )
    return HypothesisReport(
        passed=True,
        c0_lower=c0_lower,
        c1_upper=c1_upper,
        n_samples=n,
        min_monotonicity=min_mono,
        notes=notes,
    )
