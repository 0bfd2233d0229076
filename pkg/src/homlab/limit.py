"""Solver for the homogenized limit problem on the fixed two-layer mesh.

The limit weak form couples the full operator below the lower envelope
with a degenerate, weighted, vertical-only term above it:

    int_lower A(x, grad u) . grad phi
  + int_upper h(x) * A2_eff(x, d2 u) * d2 phi
  = int_lower f phi + int_upper h f phi,        u = 0 on gamma_b,

where A2_eff(x, d) = A_2(x, (q*(x,d), d)) and q*(x,d) solves
A_1(x, (q, d)) = 0.  Substituting the root realizes the pointwise
constraint h * A_1(x, (qbar, d2 u)) = 0 by construction; the recovered
qbar is reported at every upper-region quadrature point together with
the achieved constraint residual.

Upper-region test functions only see the vertical derivative, so upper
rows of the assembled matrix carry no horizontal coupling; the solution
there is only as constrained as the weighted space allows.  No boundary
condition is imposed on the top edge: the weight vanishes there and the
formulation carries no usable trace.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fem, operators as ops
from .errors import MissingRegionTags, SingularColumn
from .fem import _PHI, Field, SolveInfo, SolverOptions, p1_data, pcg
from .geometry import (
    REGION_OMEGA_MINUS,
    REGION_OMEGA_PLUS,
    TAG_GAMMA_B,
    TAG_INTERFACE,
    DensityField,
)


@dataclass
class LimitSolution:
    field: Field
    info: SolveInfo
    plus_triangles: np.ndarray        # indices into mesh.triangles
    quad_x: np.ndarray                # (p, 3, 2) upper quadrature points
    h_quad: np.ndarray                # (p, 3) density at those points
    qbar: np.ndarray                  # (p, 3) recovered horizontal root
    d2u0: np.ndarray                  # (p,) vertical derivative per triangle
    constraint_residual: float
    notes: tuple = ()


def _check_mesh(mesh):
    kinds = ("limit", "minus_only")
    if mesh.structure.kind not in kinds:
        raise MissingRegionTags(
            "limit solver needs a two-layer (or degenerate single-layer) mesh"
        )
    if mesh.structure.kind == "limit":
        plus_cols = np.unique(mesh.column_index[_plus_vertex_mask(mesh)])
        iface_cols = np.unique(
            mesh.column_index[mesh.vertex_tags == TAG_INTERFACE]
        )
        if not np.isin(plus_cols, iface_cols).all():
            raise SingularColumn(
                "an upper-region vertex column has no interface vertex"
            )


def _plus_vertex_mask(mesh):
    mask = np.zeros(mesh.n_vertices, dtype=bool)
    plus = mesh.regions == REGION_OMEGA_PLUS
    mask[np.unique(mesh.triangles[plus])] = True
    return mask


def _region_data(mesh):
    d = p1_data(mesh)
    minus = mesh.regions == REGION_OMEGA_MINUS
    plus = mesh.regions == REGION_OMEGA_PLUS
    return d, minus, plus


def assemble_limit_load(mesh, h_quad, source):
    """Load vector: f against tests below, h-weighted f above."""
    d, minus, plus = _region_data(mesh)
    out = np.zeros(mesh.n_vertices)
    f_min = np.asarray(source(d.qpts[minus]), dtype=float)
    contrib = np.einsum("mq,iq->mi", f_min, _PHI) * (d.area[minus] / 3.0)[:, None]
    np.add.at(out, d.tri[minus], contrib)
    if plus.any():
        f_plus = np.asarray(source(d.qpts[plus]), dtype=float)
        contrib = np.einsum("mq,iq->mi", f_plus * h_quad, _PHI) * (
            d.area[plus] / 3.0
        )[:, None]
        np.add.at(out, d.tri[plus], contrib)
    out[mesh.vertex_tags == TAG_GAMMA_B] = 0.0
    return out


def assemble_limit_residual(mesh, spec, h_quad, values, load):
    """Residual of the limit weak form at nodal values (rows zeroed on
    gamma_b).  h_quad holds the density at upper quadrature points."""
    d, minus, plus = _region_data(mesh)
    out = np.zeros(mesh.n_vertices)

    grad = np.einsum("mi,mij->mj", values[d.tri[minus]], d.grads[minus])
    qpts = d.qpts[minus]
    a_q = ops.evaluate(spec, qpts, np.broadcast_to(grad[:, None, :], qpts.shape))
    contrib = np.einsum("mj,mij->mi", a_q.mean(axis=1), d.grads[minus]) * \
        d.area[minus][:, None]
    np.add.at(out, d.tri[minus], contrib)

    if plus.any():
        d2 = np.einsum("mi,mi->m", values[d.tri[plus]], d.grads[plus][:, :, 1])
        x1q = d.qpts[plus][:, :, 0]
        a2, _ = ops.effective_a2_many(
            spec, x1q.ravel(), np.repeat(d2, 3)
        )
        weighted = (h_quad * a2.reshape(h_quad.shape)).mean(axis=1)
        contrib = d.grads[plus][:, :, 1] * (weighted * d.area[plus])[:, None]
        np.add.at(out, d.tri[plus], contrib)

    out -= load
    out[mesh.vertex_tags == TAG_GAMMA_B] = 0.0
    return out


def assemble_limit_jacobian(mesh, spec, h_quad, values, include_plus=True):
    """Linearized limit matrix; the upper block couples only vertical
    derivatives.  include_plus=False drops the upper block (used to
    verify that upper-only rows carry no horizontal terms)."""
    import scipy.sparse as sp

    d, minus, plus = _region_data(mesh)
    n = mesh.n_vertices

    grad = np.einsum("mi,mij->mj", values[d.tri[minus]], d.grads[minus])
    qpts = d.qpts[minus]
    jac_q = ops.evaluate_jacobian_fd(
        spec, qpts, np.broadcast_to(grad[:, None, :], qpts.shape)
    )
    tens = jac_q.mean(axis=1)
    tens = 0.5 * (tens + np.transpose(tens, (0, 2, 1)))
    k_loc = np.einsum(
        "m,mia,mab,mjb->mij", d.area[minus], d.grads[minus], tens, d.grads[minus]
    )
    tri_m = d.tri[minus]
    rows = [np.repeat(tri_m, 3, axis=1).ravel()]
    cols = [np.tile(tri_m, (1, 3)).ravel()]
    vals = [k_loc.ravel()]

    if include_plus and plus.any():
        d2 = np.einsum("mi,mi->m", values[d.tri[plus]], d.grads[plus][:, :, 1])
        x1q = d.qpts[plus][:, :, 0]
        slope = ops.effective_a2_slope_many(
            spec, x1q.ravel(), np.repeat(d2, 3)
        ).reshape(h_quad.shape)
        coeff = (h_quad * slope).mean(axis=1) * d.area[plus]
        b2 = d.grads[plus][:, :, 1]
        k_loc = np.einsum("m,mi,mj->mij", coeff, b2, b2)
        tri_p = d.tri[plus]
        rows.append(np.repeat(tri_p, 3, axis=1).ravel())
        cols.append(np.tile(tri_p, (1, 3)).ravel())
        vals.append(k_loc.ravel())

    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    )
    return mat.tocsr()


def assemble_limit_picard(mesh, spec, h_quad, values):
    """Frozen-coefficient matrix for the Picard fallback."""
    import scipy.sparse as sp

    d, minus, plus = _region_data(mesh)
    n = mesh.n_vertices

    grad = np.einsum("mi,mij->mj", values[d.tri[minus]], d.grads[minus])
    qpts = d.qpts[minus]
    b_q = ops.picard_coefficient(
        spec, qpts, np.broadcast_to(grad[:, None, :], qpts.shape)
    )
    tens = b_q.mean(axis=1)
    k_loc = np.einsum(
        "m,mia,mab,mjb->mij", d.area[minus], d.grads[minus], tens, d.grads[minus]
    )
    tri_m = d.tri[minus]
    rows = [np.repeat(tri_m, 3, axis=1).ravel()]
    cols = [np.tile(tri_m, (1, 3)).ravel()]
    vals = [k_loc.ravel()]

    if plus.any():
        d2 = np.einsum("mi,mi->m", values[d.tri[plus]], d.grads[plus][:, :, 1])
        x1q = d.qpts[plus][:, :, 0]
        d2_rep = np.repeat(d2, 3)
        small = np.abs(d2_rep) < 1e-8
        a2, _ = ops.effective_a2_many(spec, x1q.ravel(), d2_rep)
        secant = np.where(small, 1.0, a2 / np.where(small, 1.0, d2_rep))
        slope_small = ops.effective_a2_slope_many(spec, x1q.ravel(), d2_rep)
        coeff_q = np.where(small, slope_small, secant).reshape(h_quad.shape)
        coeff = (h_quad * coeff_q).mean(axis=1) * d.area[plus]
        b2 = d.grads[plus][:, :, 1]
        k_loc = np.einsum("m,mi,mj->mij", coeff, b2, b2)
        tri_p = d.tri[plus]
        rows.append(np.repeat(tri_p, 3, axis=1).ravel())
        cols.append(np.tile(tri_p, (1, 3)).ravel())
        vals.append(k_loc.ravel())

    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    )
    return mat.tocsr()


def solve_limit(mesh, spec, density: DensityField, source,
                opts: SolverOptions | None = None) -> LimitSolution:
    """Solve the limit problem and recover the horizontal root field."""
    opts = opts or SolverOptions()
    _check_mesh(mesh)
    d = p1_data(mesh)
    plus = mesh.regions == REGION_OMEGA_PLUS
    plus_idx = np.flatnonzero(plus)
    quad_x = d.qpts[plus]
    if plus.any():
        h_quad = density(quad_x[:, :, 0], quad_x[:, :, 1])
    else:
        h_quad = np.zeros((0, 3))

    load = assemble_limit_load(mesh, h_quad, source)

    u, info = fem._solve_nonlinear_system(
        mesh,
        lambda v: assemble_limit_residual(mesh, spec, h_quad, v, load),
        lambda v: assemble_limit_jacobian(mesh, spec, h_quad, v),
        lambda v: assemble_limit_picard(mesh, spec, h_quad, v),
        load,
        opts,
        fem.source_l2(mesh, source),
    )

    field = Field(mesh, u)
    if plus.any():
        d2 = np.einsum("mi,mi->m", u[d.tri[plus]], d.grads[plus][:, :, 1])
        x1q = quad_x[:, :, 0]
        _, qbar = ops.effective_a2_many(spec, x1q.ravel(), np.repeat(d2, 3))
        qbar = qbar.reshape(h_quad.shape)
        resid = ops.a1_component(
            spec, x1q.ravel(), qbar.ravel(), np.repeat(d2, 3)
        )
        constraint = float(np.abs(h_quad.ravel() * resid).max())
    else:
        d2 = np.zeros(0)
        qbar = np.zeros((0, 3))
        constraint = 0.0

    notes = (
        "top row is unconstrained by the formulation: the weight vanishes "
        "on the top edge and no boundary data is recoverable there",
    )
    return LimitSolution(
        field=field, info=info, plus_triangles=plus_idx, quad_x=quad_x,
        h_quad=h_quad, qbar=qbar, d2u0=d2, constraint_residual=constraint,
        notes=notes,
    )


def limit_energy_mismatch(sol: LimitSolution, spec, source):
    """|weighted energy - weighted load| for the limit solution."""
    mesh = sol.field.mesh
    d, minus, plus = _region_data(mesh)
    u = sol.field.values

    grad = np.einsum("mi,mij->mj", u[d.tri[minus]], d.grads[minus])
    qpts = d.qpts[minus]
    a_q = ops.evaluate(spec, qpts, np.broadcast_to(grad[:, None, :], qpts.shape))
    lhs = float(
        np.sum(d.area[minus] / 3.0 * np.einsum("mqj,mj->mq", a_q, grad).sum(axis=1))
    )
    f_min = np.asarray(source(qpts), dtype=float)
    u_q = np.einsum("mi,iq->mq", u[d.tri[minus]], _PHI)
    rhs = float(np.sum(d.area[minus] / 3.0 * (f_min * u_q).sum(axis=1)))

    if plus.any():
        d2 = np.einsum("mi,mi->m", u[d.tri[plus]], d.grads[plus][:, :, 1])
        x1q = sol.quad_x[:, :, 0]
        a2, _ = ops.effective_a2_many(spec, x1q.ravel(), np.repeat(d2, 3))
        lhs += float(
            np.sum(
                d.area[plus] / 3.0
                * (sol.h_quad * a2.reshape(sol.h_quad.shape)
                   * d2[:, None]).sum(axis=1)
            )
        )
        f_plus = np.asarray(source(sol.quad_x), dtype=float)
        u_q = np.einsum("mi,iq->mq", u[d.tri[plus]], _PHI)
        rhs += float(
            np.sum(d.area[plus] / 3.0 * (sol.h_quad * f_plus * u_q).sum(axis=1))
        )
    return abs(lhs - rhs)


def write_limit_solution(sol: LimitSolution, field_path, quad_path):
    """Write vertex records and the upper-region quadrature table."""
    fem.write_field(sol.field, field_path)
    with open(quad_path, "w") as fh:
        fh.write("x1,x2,h,qbar,d2u0\n")
        p = sol.quad_x.reshape(-1, 2)
        h = sol.h_quad.ravel()
        q = sol.qbar.ravel()
        d2 = np.repeat(sol.d2u0, 3)
        for k in range(p.shape[0]):
            fh.write(
                f"{p[k,0]:.12e},{p[k,1]:.12e},{h[k]:.12e},{q[k]:.12e},{d2[k]:.12e}\n"
            )
