"""P1 finite elements on the mapped structured meshes.

Assembly uses the 3-point mid-edge quadrature rule (exact for quadratic
integrands).  The nonlinear weak problem

    sum_T  int_T A(x, grad u) . grad phi  =  int f phi,   u = 0 on gamma_b

is solved by damped Newton on a finite-difference linearization of A,
with Armijo backtracking and a Picard (frozen-coefficient) fallback when
Newton stagnates.  Linear systems are symmetric and solved by conjugate
gradients with diagonal preconditioning; Dirichlet rows/columns are
eliminated so symmetry survives.

Point evaluation inverts the structured vertical map analytically: the
column is read off x1, the row from the scaled vertical coordinate, and
only the two triangles of that cell are tested.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import operators as ops
from .errors import (
    MeshFieldMismatch,
    NonConvergence,
    PointOutsideDomain,
)
from .geometry import TAG_GAMMA_B, envelopes_many, interp_heights

# mid-edge rule: quadrature points are the three edge midpoints; the
# value of local basis i at quadrature point q is _PHI[i, q]
_PHI = np.array(
    [
        [0.5, 0.0, 0.5],
        [0.5, 0.5, 0.0],
        [0.0, 0.5, 0.5],
    ]
)

# degree-4 rule used only for error norms
_D4_BARY = np.array(
    [
        [0.108103018168070, 0.445948490915965, 0.445948490915965],
        [0.445948490915965, 0.108103018168070, 0.445948490915965],
        [0.445948490915965, 0.445948490915965, 0.108103018168070],
        [0.816847572980459, 0.091576213509771, 0.091576213509771],
        [0.091576213509771, 0.816847572980459, 0.091576213509771],
        [0.091576213509771, 0.091576213509771, 0.816847572980459],
    ]
)
_D4_W = np.array(
    [
        0.223381589678011,
        0.223381589678011,
        0.223381589678011,
        0.109951743655322,
        0.109951743655322,
        0.109951743655322,
    ]
)


@dataclass
class Field:
    """Nodal P1 field on a mesh."""

    mesh: object
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.mesh.n_vertices,):
            raise MeshFieldMismatch(
                f"field has {self.values.shape} values for "
                f"{self.mesh.n_vertices} vertices"
            )


@dataclass
class SolveInfo:
    converged: bool
    iterations: int
    residual_inf: float
    picard_steps: int
    cg_iterations: int
    message: str = ""


@dataclass
class SolverOptions:
    rtol: float = 1e-10
    max_iters: int = 100
    cg_rtol: float = 1e-12
    armijo: float = 1e-4
    min_step: float = 2.0 ** -20
    stagnation_limit: int = 5
    method: str = "newton"  # or 'picard'
    initial: np.ndarray | None = None


class _P1Data:
    """Per-triangle geometry shared by every assembly pass."""

    def __init__(self, mesh):
        tri = mesh.triangles
        p = mesh.vertices[tri]  # (m, 3, 2)
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        self.area = 0.5 * det
        # gradients of the barycentric basis
        g = np.empty((tri.shape[0], 3, 2))
        g[:, 1, 0] = d2[:, 1] / det
        g[:, 1, 1] = -d2[:, 0] / det
        g[:, 2, 0] = -d1[:, 1] / det
        g[:, 2, 1] = d1[:, 0] / det
        g[:, 0] = -g[:, 1] - g[:, 2]
        self.grads = g
        # edge midpoints m01, m12, m20
        self.qpts = np.stack(
            [
                0.5 * (p[:, 0] + p[:, 1]),
                0.5 * (p[:, 1] + p[:, 2]),
                0.5 * (p[:, 2] + p[:, 0]),
            ],
            axis=1,
        )
        self.tri = tri
        self.corners = p


def p1_data(mesh) -> _P1Data:
    data = getattr(mesh, "_p1", None)
    if data is None:
        data = _P1Data(mesh)
        mesh._p1 = data
    return data


def gradients(mesh, values):
    """Per-triangle gradient of a nodal field, shape (m, 2)."""
    d = p1_data(mesh)
    return np.einsum("mi,mij->mj", values[d.tri], d.grads)


def assemble_load(mesh, source):
    """Load vector int f phi_i with the mid-edge rule, gamma_b rows zeroed."""
    d = p1_data(mesh)
    f_q = np.asarray(source(d.qpts), dtype=float)
    contrib = np.einsum("mq,iq->mi", f_q, _PHI) * (d.area / 3.0)[:, None]
    out = np.zeros(mesh.n_vertices)
    np.add.at(out, d.tri, contrib)
    out[mesh.vertex_tags == TAG_GAMMA_B] = 0.0
    return out


def assemble_residual(mesh, spec, u, source):
    """Residual of the weak form at nodal values u (gamma_b rows zeroed)."""
    values = u.values if isinstance(u, Field) else np.asarray(u, dtype=float)
    return _residual_internal(mesh, spec, values) - assemble_load(mesh, source)


def _residual_internal(mesh, spec, values):
    d = p1_data(mesh)
    grad = np.einsum("mi,mij->mj", values[d.tri], d.grads)
    a_q = ops.evaluate(spec, d.qpts, np.broadcast_to(grad[:, None, :], d.qpts.shape))
    a_bar = a_q.mean(axis=1)
    contrib = np.einsum("mj,mij->mi", a_bar, d.grads) * d.area[:, None]
    out = np.zeros(mesh.n_vertices)
    np.add.at(out, d.tri, contrib)
    out[mesh.vertex_tags == TAG_GAMMA_B] = 0.0
    return out


def _matrix_from_cell_tensors(mesh, d, tensors):
    """Assemble K_ij = sum_T area * grad_i . (B grad_j) from per-triangle
    2x2 tensors; tensors are symmetrized so conjugate gradients applies."""
    sym = 0.5 * (tensors + np.transpose(tensors, (0, 2, 1)))
    k_loc = np.einsum("m,mia,mab,mjb->mij", d.area, d.grads, sym, d.grads)
    m = d.tri.shape[0]
    rows = np.repeat(d.tri, 3, axis=1).ravel()
    cols = np.tile(d.tri, (1, 3)).ravel()
    mat = sp.coo_matrix(
        (k_loc.reshape(m * 9), (rows, cols)),
        shape=(mesh.n_vertices, mesh.n_vertices),
    )
    return mat.tocsr()


def assemble_jacobian(mesh, spec, values):
    """Finite-difference linearization of the residual (full matrix)."""
    d = p1_data(mesh)
    grad = np.einsum("mi,mij->mj", values[d.tri], d.grads)
    jac_q = ops.evaluate_jacobian_fd(
        spec, d.qpts, np.broadcast_to(grad[:, None, :], d.qpts.shape)
    )
    return _matrix_from_cell_tensors(mesh, d, jac_q.mean(axis=1))


def assemble_picard_matrix(mesh, spec, values):
    """Frozen-coefficient matrix for the Picard fallback."""
    d = p1_data(mesh)
    grad = np.einsum("mi,mij->mj", values[d.tri], d.grads)
    b_q = ops.picard_coefficient(
        spec, d.qpts, np.broadcast_to(grad[:, None, :], d.qpts.shape)
    )
    return _matrix_from_cell_tensors(mesh, d, b_q.mean(axis=1))


def pcg(mat, rhs, rtol=1e-12, maxiter=None):
    """Conjugate gradients with diagonal (Jacobi) preconditioning.

    Returns (x, iterations).  Stops on ||r|| <= rtol * ||rhs|| or after
    maxiter (default 10n) iterations.
    """
    n = rhs.shape[0]
    if maxiter is None:
        maxiter = 10 * n
    bnorm = np.linalg.norm(rhs)
    if bnorm == 0.0:
        return np.zeros(n), 0
    diag = mat.diagonal()
    inv_diag = 1.0 / np.where(diag > 0, diag, 1.0)
    x = np.zeros(n)
    r = rhs.copy()
    z = inv_diag * r
    p = z.copy()
    rz = r @ z
    it = 0
    while it < maxiter:
        ap = mat @ p
        denom = p @ ap
        if denom <= 0:
            break  # matrix not positive definite along p; return best so far
        alpha = rz / denom
        x += alpha * p
        r -= alpha * ap
        it += 1
        if np.linalg.norm(r) <= rtol * bnorm:
            break
        z = inv_diag * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x, it


def _solve_nonlinear_system(mesh, residual_fn, jacobian_fn, picard_fn, load,
                            opts, f_scale):
    """Shared damped-Newton / Picard driver.

    residual_fn(values) -> residual with constrained rows zeroed
    jacobian_fn(values) -> full symmetric matrix
    picard_fn(values)   -> full frozen-coefficient matrix
    """
    free = mesh.vertex_tags != TAG_GAMMA_B
    n = mesh.n_vertices
    if opts.initial is not None:
        u = np.array(opts.initial, dtype=float)
        if u.shape != (n,):
            raise MeshFieldMismatch("initial iterate has wrong length")
        u[~free] = 0.0
    else:
        u = np.zeros(n)

    tol = opts.rtol * (1.0 + f_scale)
    mode = opts.method
    stagnant = 0
    picard_steps = 0
    cg_total = 0

    r = residual_fn(u)
    for it in range(opts.max_iters + 1):
        rinf = np.abs(r).max() if r.size else 0.0
        if rinf <= tol:
            return u, SolveInfo(True, it, float(rinf), picard_steps, cg_total)
        if it == opts.max_iters:
            break
        rnorm = np.linalg.norm(r)
        accepted = False
        if mode == "newton":
            jac = jacobian_fn(u)
            jac_ff = jac[free][:, free]
            delta_f, its = pcg(jac_ff, -r[free], rtol=opts.cg_rtol)
            cg_total += its
            delta = np.zeros(n)
            delta[free] = delta_f
            lam = 1.0
            while lam >= opts.min_step:
                u_try = u + lam * delta
                r_try = residual_fn(u_try)
                if np.linalg.norm(r_try) <= (1.0 - opts.armijo * lam) * rnorm:
                    u, r = u_try, r_try
                    accepted = True
                    break
                lam *= 0.5
        if not accepted:
            # Picard step: solve the frozen-coefficient linear problem
            kmat = picard_fn(u)
            k_ff = kmat[free][:, free]
            u_f, its = pcg(k_ff, load[free], rtol=opts.cg_rtol)
            cg_total += its
            u_new = np.zeros(n)
            u_new[free] = u_f
            u = u_new
            r = residual_fn(u)
            picard_steps += 1
        rnorm_new = np.linalg.norm(r)
        if rnorm_new > 0.9 * rnorm:
            stagnant += 1
        else:
            stagnant = 0
        if stagnant >= opts.stagnation_limit and mode == "newton":
            mode = "picard"
            stagnant = 0
    raise NonConvergence(
        f"nonlinear iteration did not reach tolerance {tol:.3e}; "
        f"residual {np.abs(r).max():.3e} after {opts.max_iters} iterations",
        residual=float(np.abs(r).max()),
        iterations=opts.max_iters,
    )


def source_l2(mesh, source):
    d = p1_data(mesh)
    f_q = np.asarray(source(d.qpts), dtype=float)
    return float(np.sqrt(np.sum((d.area / 3.0)[:, None] * f_q ** 2)))


def solve_nonlinear(mesh, spec, source, opts: SolverOptions | None = None):
    """Solve the weak problem on the full mesh with u = 0 on gamma_b.

    Returns (Field, SolveInfo).
    """
    opts = opts or SolverOptions()
    load = assemble_load(mesh, source)

    def residual_fn(values):
        return _residual_internal(mesh, spec, values) - load

    u, info = _solve_nonlinear_system(
        mesh,
        residual_fn,
        lambda v: assemble_jacobian(mesh, spec, v),
        lambda v: assemble_picard_matrix(mesh, spec, v),
        load,
        opts,
        source_l2(mesh, source),
    )
    return Field(mesh, u), info


# ---------------------------------------------------------------------
# point evaluation
# ---------------------------------------------------------------------


def locate_points(mesh, x1, x2, tol=1e-12):
    """Vectorized structured point location.

    Returns (tri_idx, bary, inside); tri_idx is -1 outside the domain.
    """
    st = mesh.structure
    x1 = np.asarray(x1, dtype=float).ravel()
    x2 = np.asarray(x2, dtype=float).ravel()
    n = x1.size
    nx = st.nx
    scale = max(1.0, float(np.max(st.top_heights)))
    atol = tol * scale

    inside = (x1 >= -atol) & (x1 <= 1.0 + atol) & (x2 >= -atol)
    xc = np.clip(x1, 0.0, 1.0)
    top_x, mid_x = interp_heights(st, xc)
    inside &= x2 <= top_x + atol
    x2c = np.clip(x2, 0.0, top_x)

    if mid_x is None:
        ny = st.rows
        r = x2c / top_x
        row = np.clip((r * ny).astype(int), 0, ny - 1)
    else:
        in_lower = x2c <= mid_x
        r_lo = x2c / mid_x
        row_lo = np.clip((r_lo * st.ny_minus).astype(int), 0, st.ny_minus - 1)
        gap = np.maximum(top_x - mid_x, 1e-300)
        r_hi = (x2c - mid_x) / gap
        row_hi = st.ny_minus + np.clip(
            (r_hi * st.ny_plus).astype(int), 0, st.ny_plus - 1
        )
        row = np.where(in_lower, row_lo, row_hi)

    col = np.clip((xc * nx).astype(int), 0, nx - 1)
    cell = row * nx + col
    t1 = 2 * cell

    d = p1_data(mesh)
    pts = np.stack([xc, x2c], axis=1)

    def bary(tri_idx):
        p = d.corners[tri_idx]
        v0 = p[:, 1] - p[:, 0]
        v1 = p[:, 2] - p[:, 0]
        det = v0[:, 0] * v1[:, 1] - v0[:, 1] * v1[:, 0]
        w = pts - p[:, 0]
        l1 = (w[:, 0] * v1[:, 1] - w[:, 1] * v1[:, 0]) / det
        l2 = (v0[:, 0] * w[:, 1] - v0[:, 1] * w[:, 0]) / det
        return np.stack([1.0 - l1 - l2, l1, l2], axis=1)

    b1 = bary(t1)
    b2 = bary(t1 + 1)
    use_first = b1.min(axis=1) >= b2.min(axis=1)
    tri_idx = np.where(use_first, t1, t1 + 1)
    b = np.where(use_first[:, None], b1, b2)
    tri_idx = np.where(inside, tri_idx, -1)
    return tri_idx, b, inside


def point_eval_many(field, x1, x2):
    """Vectorized evaluation with zero extension; returns (values, inside)."""
    shape = np.broadcast_shapes(np.shape(x1), np.shape(x2))
    x1b = np.broadcast_to(np.asarray(x1, dtype=float), shape).ravel()
    x2b = np.broadcast_to(np.asarray(x2, dtype=float), shape).ravel()
    tri_idx, b, inside = locate_points(field.mesh, x1b, x2b)
    safe = np.where(tri_idx >= 0, tri_idx, 0)
    nodal = field.values[field.mesh.triangles[safe]]
    vals = np.einsum("ni,ni->n", nodal, b)
    vals = np.where(inside, vals, 0.0)
    return vals.reshape(shape), inside.reshape(shape)


def point_eval(field, x):
    """P1 value at a single point; raises PointOutsideDomain outside."""
    vals, inside = point_eval_many(field, np.asarray([x[0]]), np.asarray([x[1]]))
    if not inside[0]:
        raise PointOutsideDomain(f"point ({x[0]:.6g}, {x[1]:.6g}) is outside the mesh")
    return float(vals[0])


# ---------------------------------------------------------------------
# integration
# ---------------------------------------------------------------------


def _test_values(test, pts):
    if test is None:
        return np.ones(pts.shape[:-1])
    return np.asarray(test(pts), dtype=float)


def integrate_field(field, test=None, region=None, gradient_component=None):
    """int_region v * test dx for a field value or gradient component.

    region is a region name ('omega_minus', 'omega_plus', 'eps_domain')
    or None for the whole mesh.  Uses the mid-edge rule.
    """
    mesh = field.mesh
    d = p1_data(mesh)
    if region is None:
        sel = slice(None)
    else:
        sel = mesh.region_mask(region)
    area = d.area[sel]
    qpts = d.qpts[sel]
    t_q = _test_values(test, qpts)
    if gradient_component is None:
        u_q = np.einsum("mi,iq->mq", field.values[d.tri[sel]], _PHI)
    else:
        g = gradients(mesh, field.values)[sel][:, gradient_component]
        u_q = np.broadcast_to(g[:, None], t_q.shape)
    return float(np.sum((area / 3.0)[:, None] * u_q * t_q))


def field_l2_norm(field, region=None, gradient=False):
    """L2 norm of the field (exact for P1) or of its gradient."""
    mesh = field.mesh
    d = p1_data(mesh)
    sel = slice(None) if region is None else mesh.region_mask(region)
    if gradient:
        g = gradients(mesh, field.values)[sel]
        return float(np.sqrt(np.sum(d.area[sel] * (g ** 2).sum(axis=1))))
    u_q = np.einsum("mi,iq->mq", field.values[d.tri[sel]], _PHI)
    return float(np.sqrt(np.sum((d.area[sel] / 3.0)[:, None] * u_q ** 2)))


def flux_l2_norm(field, spec, region=None):
    """L2 norm of A(x, grad u) over the mesh (mid-edge rule)."""
    mesh = field.mesh
    d = p1_data(mesh)
    sel = slice(None) if region is None else mesh.region_mask(region)
    grad = gradients(mesh, field.values)[sel]
    qpts = d.qpts[sel]
    a_q = ops.evaluate(spec, qpts, np.broadcast_to(grad[:, None, :], qpts.shape))
    return float(
        np.sqrt(np.sum((d.area[sel] / 3.0)[:, None] * (a_q ** 2).sum(axis=2)))
    )


def l2_error(field, exact, region=None):
    """L2 distance between the field and a callable, degree-4 rule."""
    mesh = field.mesh
    d = p1_data(mesh)
    sel = slice(None) if region is None else mesh.region_mask(region)
    corners = d.corners[sel]
    pts = np.einsum("qb,mbk->mqk", _D4_BARY, corners)
    u_q = np.einsum("mi,qi->mq", field.values[d.tri[sel]], _D4_BARY)
    e_q = u_q - np.asarray(exact(pts), dtype=float)
    return float(np.sqrt(np.sum(d.area[sel][:, None] * _D4_W[None, :] * e_q ** 2)))


def energy_mismatch(field, spec, source):
    """|int A(grad u).grad u - int f u| for the energy identity check."""
    mesh = field.mesh
    d = p1_data(mesh)
    grad = gradients(mesh, field.values)
    a_q = ops.evaluate(spec, d.qpts, np.broadcast_to(grad[:, None, :], d.qpts.shape))
    lhs = float(np.sum(d.area / 3.0 * np.einsum("mqj,mj->mq", a_q, grad).sum(axis=1)))
    f_q = np.asarray(source(d.qpts), dtype=float)
    u_q = np.einsum("mi,iq->mq", field.values[d.tri], _PHI)
    rhs = float(np.sum(d.area / 3.0 * (f_q * u_q).sum(axis=1)))
    return abs(lhs - rhs)


# ---------------------------------------------------------------------
# integrals over the oscillating part of an eps mesh
# ---------------------------------------------------------------------

_GL4_X, _GL4_W = np.polynomial.legendre.leggauss(4)
_G2 = 0.5 / np.sqrt(3.0)


def integrate_upper_region(field, test=None, gradient_component=None):
    """Integral over {x in the oscillating mesh : x2 > eta_minus(x1)}.

    The integrand is the field value (or one gradient component) times
    an optional smooth test function.  Vertical line integrals are
    split at every mesh row chord and cell diagonal, where the P1 field
    kinks, and each smooth piece gets a 2-point Gauss rule; the x1
    direction uses 4-point Gauss per mesh column.
    """
    mesh = field.mesh
    st = mesh.structure
    if st.kind != "eps":
        raise MeshFieldMismatch("upper-region integral needs an oscillating mesh")
    nx, ny = st.nx, st.ny
    dx = 1.0 / nx

    # Gauss abscissae in every column
    base = np.arange(nx)[:, None] * dx
    gx = base + (0.5 + 0.5 * _GL4_X[None, :]) * dx  # (nx, 4)
    wx = 0.5 * dx * _GL4_W  # weights per column point
    lines_x = gx.ravel()
    n_lines = lines_x.size

    lo_env, _ = envelopes_many(st.profile, lines_x)

    col = np.repeat(np.arange(nx), 4)
    xi = (lines_x - col * dx) / dx

    # per-column row heights recovered from the vertex lattice; the
    # breakpoint interleaving below only needs rows increasing per column
    row_h = mesh.vertices[:, 1].reshape(ny + 1, nx + 1)
    r_left = row_h[:, col]  # (ny+1, n_lines)
    r_right = row_h[:, col + 1]
    chords = (1 - xi[None, :]) * r_left + xi[None, :] * r_right
    top_chord = chords[-1]

    # interleaved breakpoints: row chords r_j and cell diagonals d_j;
    # the diagonal of cell j runs lower-left to upper-right, so its height
    # sits between the chords of rows j and j+1 on every vertical line
    brk = np.empty((n_lines, 2 * ny + 1))
    brk[:, 0::2] = chords.T
    brk[:, 1::2] = ((1 - xi[None, :]) * r_left[:-1] + xi[None, :] * r_right[1:]).T

    seg_lo = np.maximum(brk[:, :-1], lo_env[:, None])
    seg_hi = np.minimum(brk[:, 1:], top_chord[:, None])
    seg_len = np.maximum(seg_hi - seg_lo, 0.0)
    mid = 0.5 * (seg_lo + seg_hi)
    g1 = mid - seg_len * _G2
    g2 = mid + seg_len * _G2

    x1_rep = np.broadcast_to(lines_x[:, None], g1.shape)

    def integrand(x2pts):
        pts1 = x1_rep.ravel()
        pts2 = x2pts.ravel()
        if gradient_component is None:
            vals, _ = point_eval_many(field, pts1, pts2)
        else:
            tri_idx, _, inside = locate_points(mesh, pts1, pts2)
            g = gradients(mesh, field.values)[:, gradient_component]
            vals = np.where(inside, g[np.where(tri_idx >= 0, tri_idx, 0)], 0.0)
        if test is not None:
            vals = vals * np.asarray(
                test(np.stack([pts1, pts2], axis=-1)), dtype=float
            )
        return vals.reshape(x2pts.shape)

    inner = 0.5 * seg_len * (integrand(g1) + integrand(g2))
    per_line = inner.sum(axis=1)
    w_all = np.tile(wx, nx)
    return float(np.sum(per_line * w_all))


def write_field(field, path):
    """Plain-text field records: one 'vertex_index value' line each."""
    with open(path, "w") as fh:
        for i, v in enumerate(field.values):
            fh.write(f"{i} {v:.17g}\n")
