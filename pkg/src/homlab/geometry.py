"""Geometry of locally periodic oscillating domains.

The domain is the region between the segment {0 < x1 < 1, x2 = 0} and an
oscillating upper boundary x2 = eta(x1, x1/eps), where eta(x1, y) is
positive, Lipschitz and 1-periodic in the fast variable y.  This module
owns the profile description, its lower/upper envelopes, the fiber
measure h(x) (length of the torus section above a point), and the
structured triangular meshes used by the solvers:

* an oscillating mesh that follows x2 = eta(x1, x1/eps), and
* a two-layer mesh of the fixed limit domain split at the lower envelope.

Both meshes are mapped tensor lattices, so point location is done by
inverting the vertical map analytically instead of walking triangles.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegeneratePlusLayerWarning,
    InvalidProfile,
    OutsideDomain,
    ResolutionTooCoarse,
    UnknownRegionTag,
)

# vertex tags
TAG_INTERIOR = 0
TAG_GAMMA_B = 1
TAG_LATERAL = 2
TAG_TOP = 3
TAG_INTERFACE = 4

TAG_NAMES = {
    TAG_INTERIOR: "interior",
    TAG_GAMMA_B: "gamma_b",
    TAG_LATERAL: "lateral",
    TAG_TOP: "top",
    TAG_INTERFACE: "interface",
}

# triangle region tags
REGION_OMEGA_MINUS = 0
REGION_OMEGA_PLUS = 1
REGION_EPS = 2

REGION_NAMES = {
    REGION_OMEGA_MINUS: "omega_minus",
    REGION_OMEGA_PLUS: "omega_plus",
    REGION_EPS: "eps_domain",
}

_FAMILIES = ("constant", "sine_bump", "product", "tabulated")

_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True, eq=False)
class EtaProfile:
    """Oscillating boundary profile eta(x1, y), 1-periodic in y.

    Families
    --------
    constant     params = (c,)          eta = c
    sine_bump    params = (a, b)        eta = a + b*sin(pi*y)**2
    product      params = (c, a, b)     eta = (1 + c*x1)*(a + b*sin(pi*y)**2)
    tabulated    table = 2D samples     bilinear in x1, periodic bilinear in y

    Construction validates positivity, y-periodicity (1e-12), the declared
    Lipschitz bound (sampled difference quotients, 5% slack) and that every
    super-level set of y -> eta(x1, y) is a single interval on the torus.
    """

    family: str
    params: tuple = ()
    table: np.ndarray | None = None
    y_samples: int = 256
    lipschitz_bound: float | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise InvalidProfile(f"unknown profile family {self.family!r}")
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        n_expected = {"constant": 1, "sine_bump": 2, "product": 3, "tabulated": 0}
        if len(self.params) != n_expected[self.family]:
            raise InvalidProfile(
                f"family {self.family!r} takes {n_expected[self.family]} "
                f"params, got {len(self.params)}"
            )
        if self.family == "tabulated":
            if self.table is None:
                raise InvalidProfile("tabulated profile requires a table")
            tab = np.asarray(self.table, dtype=float)
            if tab.ndim != 2 or tab.shape[0] < 2 or tab.shape[1] < 8:
                raise InvalidProfile(
                    "tabulated profile needs a 2D table, >=2 x1 rows and >=8 y columns"
                )
            object.__setattr__(self, "table", tab)
        if self.y_samples < 64:
            raise InvalidProfile("y_samples must be at least 64")
        self._validate()

    # -- evaluation ----------------------------------------------------

    def height(self, x1, y):
        """eta(x1, y) with broadcasting; y is taken modulo 1."""
        x1 = np.asarray(x1, dtype=float)
        y = np.asarray(y, dtype=float) % 1.0
        if self.family == "constant":
            (c,) = self.params
            return np.broadcast_to(np.float64(c), np.broadcast_shapes(x1.shape, y.shape)).copy()
        if self.family == "sine_bump":
            a, b = self.params
            out = a + b * np.sin(np.pi * y) ** 2
            return np.broadcast_to(out, np.broadcast_shapes(x1.shape, y.shape)).copy()
        if self.family == "product":
            c, a, b = self.params
            return (1.0 + c * x1) * (a + b * np.sin(np.pi * y) ** 2)
        # tabulated: bilinear, periodic in y
        tab = self.table
        n1, n2 = tab.shape
        s = np.clip(x1, 0.0, 1.0) * (n1 - 1)
        i0 = np.clip(np.floor(s).astype(int), 0, n1 - 2)
        fs = s - i0
        t = y * n2
        j0 = np.floor(t).astype(int) % n2
        ft = t - np.floor(t)
        j1 = (j0 + 1) % n2
        v00 = tab[i0, j0]
        v01 = tab[i0, j1]
        v10 = tab[i0 + 1, j0]
        v11 = tab[i0 + 1, j1]
        return (1 - fs) * ((1 - ft) * v00 + ft * v01) + fs * ((1 - ft) * v10 + ft * v11)

    def signature(self):
        tab = None if self.table is None else self.table.tobytes()
        return (self.family, self.params, tab)

    # -- validation ----------------------------------------------------

    def _validate(self):
        ny = self.y_samples
        ys = np.arange(ny) / ny
        x1s = np.linspace(0.0, 1.0, 17)
        vals = self.height(x1s[:, None], ys[None, :])

        vmin = float(vals.min())
        if not vmin > 0.0:
            raise InvalidProfile(f"profile must be positive; sampled min {vmin:.3e}")

        per_gap = np.abs(self.height(x1s, 0.0) - self.height(x1s, 1.0))
        if per_gap.max() > 1e-12:
            raise InvalidProfile(
                f"profile not 1-periodic in y: gap {per_gap.max():.3e}"
            )

        # difference quotients on the sampling grid, 5% slack on the bound
        dq_y = np.abs(np.diff(vals, axis=1, append=vals[:, :1])) * ny
        dq_x = np.abs(np.diff(vals, axis=0)) / (x1s[1] - x1s[0])
        observed = max(dq_y.max(), dq_x.max() if dq_x.size else 0.0)
        if self.lipschitz_bound is None:
            object.__setattr__(self, "lipschitz_bound", float(observed) * 1.05 + 1e-12)
        elif observed > self.lipschitz_bound * 1.05:
            raise InvalidProfile(
                f"sampled difference quotient {observed:.6g} exceeds declared "
                f"Lipschitz bound {self.lipschitz_bound:.6g}"
            )

        # single-interval super-level sets on the torus
        for irow, x1 in enumerate(x1s):
            row = vals[irow]
            lo, hi = row.min(), row.max()
            if hi - lo < 1e-13:
                continue
            for q in np.linspace(0.08, 0.92, 9):
                t = lo + q * (hi - lo)
                above = row > t
                if not above.any():
                    continue
                flips = int(np.sum(above != np.roll(above, 1)))
                if flips != 2:
                    raise InvalidProfile(
                        f"super-level set at x1={x1:.3f}, level {t:.6g} is not a "
                        f"single interval ({flips // 2} components)"
                    )


# ---------------------------------------------------------------------
# envelopes and fiber measure
# ---------------------------------------------------------------------


def _golden_refine(profile, x1, yc, half, maximize):
    """Vectorized golden-section refinement of an extremum of eta(x1, .)
    inside [yc-half, yc+half].  Returns (y, value)."""
    sign = -1.0 if maximize else 1.0
    a = yc - half
    b = yc + half
    for _ in range(60):
        c = b - _GOLDEN * (b - a)
        d = a + _GOLDEN * (b - a)
        fc = sign * profile.height(x1, c)
        fd = sign * profile.height(x1, d)
        take_c = fc < fd
        b = np.where(take_c, d, b)
        a = np.where(take_c, a, c)
    y = 0.5 * (a + b)
    return y, profile.height(x1, y)


def _envelope_data_many(profile, x1):
    """Per-point (y_min, eta_minus, y_max, eta_plus) with caching."""
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    cache = profile._cache
    out = np.empty((x1.size, 4))
    missing = []
    for idx, v in enumerate(x1.ravel()):
        hit = cache.get(float(v))
        if hit is None:
            missing.append(idx)
        else:
            out[idx] = hit
    if missing:
        xm = x1.ravel()[missing]
        n = profile.y_samples
        ys = np.arange(n) / n
        vals = profile.height(xm[:, None], ys[None, :])
        imin = np.argmin(vals, axis=1)
        imax = np.argmax(vals, axis=1)
        half = 1.0 / n
        ylo, flo = _golden_refine(profile, xm, ys[imin], half, maximize=False)
        yhi, fhi = _golden_refine(profile, xm, ys[imax], half, maximize=True)
        # never worse than the best raw sample
        smin = vals[np.arange(xm.size), imin]
        smax = vals[np.arange(xm.size), imax]
        worse_lo = smin < flo
        ylo = np.where(worse_lo, ys[imin], ylo) % 1.0
        flo = np.minimum(flo, smin)
        worse_hi = smax > fhi
        yhi = np.where(worse_hi, ys[imax], yhi) % 1.0
        fhi = np.maximum(fhi, smax)
        for k, idx in enumerate(missing):
            rec = (float(ylo[k]), float(flo[k]), float(yhi[k]), float(fhi[k]))
            cache[float(x1.ravel()[idx])] = rec
            out[idx] = rec
    return out[:, 0], out[:, 1], out[:, 2], out[:, 3]


def eta_envelopes(profile, x1):
    """Lower/upper envelopes (min and max of eta(x1, .) over the torus).

    Dense sampling followed by golden-section refinement around the best
    sample; the single-interval fiber property makes the slice unimodal,
    so the refinement bracket is valid.
    """
    _, lo, _, hi = _envelope_data_many(profile, np.asarray([x1], dtype=float))
    return float(lo[0]), float(hi[0])


def envelopes_many(profile, x1_arr):
    """Vectorized envelopes; returns (eta_minus, eta_plus) arrays."""
    x1_arr = np.asarray(x1_arr, dtype=float)
    uniq, inv = np.unique(x1_arr.ravel(), return_inverse=True)
    _, lo, _, hi = _envelope_data_many(profile, uniq)
    return lo[inv].reshape(x1_arr.shape), hi[inv].reshape(x1_arr.shape)


def _bisect_crossing(profile, x1, x2, y_in, y_out):
    """Vectorized bisection for eta(x1, y) = x2 between an inside point
    (eta > x2) and an outside point (eta < x2).  50 halvings, well under
    the 1e-10 tolerance."""
    lo = y_in.copy()
    hi = y_out.copy()
    for _ in range(50):
        mid = 0.5 * (lo + hi)
        inside = profile.height(x1, mid % 1.0) > x2
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    return 0.5 * (lo + hi)


def fiber_bounds_many(profile, x1, x2):
    """Fiber {y : eta(x1, y) > x2} as (start, width) arrays; the width is
    the fiber measure h.

    h is exactly 1 at or below the lower envelope and exactly 0 at or
    above the upper envelope; strictly between, the two crossings of the
    single bump are located by bisection.  Raises OutsideDomain when x2
    exceeds the upper envelope by more than 1e-12.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    x1b, x2b = np.broadcast_arrays(x1, x2)
    shape = x1b.shape
    x1f = x1b.ravel().astype(float)
    x2f = x2b.ravel().astype(float)
    ymin, em, ymax, ep = _envelope_data_many(profile, x1f)

    over = x2f > ep + 1e-12
    if over.any():
        k = int(np.argmax(over))
        raise OutsideDomain(
            f"point ({x1f[k]:.6g}, {x2f[k]:.6g}) lies above the upper envelope "
            f"{ep[k]:.6g}"
        )
    # the empty rule wins ties: for a constant profile em == ep and the
    # fiber at that level is empty
    empty = x2f >= ep
    full = (x2f <= em) & ~empty
    active = ~(full | empty)

    y_lo = np.zeros_like(x1f)
    width = np.where(full, 1.0, 0.0)
    if active.any():
        xa = x1f[active]
        x2a = x2f[active]
        ymin_a = ymin[active]
        ymax_a = ymax[active]
        d_right = (ymin_a - ymax_a) % 1.0
        d_right = np.where(d_right <= 0.0, 1.0, d_right)
        d_left = (ymax_a - ymin_a) % 1.0
        d_left = np.where(d_left <= 0.0, 1.0, d_left)
        y_hi_a = _bisect_crossing(profile, xa, x2a, ymax_a, ymax_a + d_right)
        y_lo_a = _bisect_crossing(profile, xa, x2a, ymax_a, ymax_a - d_left)
        w = y_hi_a - y_lo_a
        y_lo[active] = y_lo_a % 1.0
        width[active] = np.clip(w, 0.0, 1.0)
    return y_lo.reshape(shape), width.reshape(shape)


def fiber_measure_many(profile, x1, x2):
    """Vectorized fiber measure h(x1, x2)."""
    _, h = fiber_bounds_many(profile, x1, x2)
    return h


def fiber_measure(profile, x):
    """Length of {y in the torus : eta(x1, y) > x2} for a single point
    x = (x1, x2)."""
    h = fiber_measure_many(profile, np.asarray([x[0]]), np.asarray([x[1]]))
    return float(h[0])


class DensityField:
    """Fiber density h(x) of a profile, with a clamp for quadrature use.

    Calling the field returns fiber_measure at each point except that any
    point at or above the upper envelope evaluates to 0 instead of
    raising; mesh edges chord the upper boundary and their quadrature
    points may overshoot the curve by O(mesh^2).
    """

    def __init__(self, profile: EtaProfile):
        self.profile = profile

    def __call__(self, x1, x2):
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        x1b, x2b = np.broadcast_arrays(x1, x2)
        _, ep = envelopes_many(self.profile, x1b)
        x2c = np.minimum(x2b, ep)
        h = fiber_measure_many(self.profile, x1b, x2c)
        return np.where(x2b >= ep, 0.0, h)

    def sample_lattice(self, nx, ny):
        """h on a cell-centered lattice over the bounding box of the domain."""
        _, ep = envelopes_many(self.profile, np.linspace(0.0, 1.0, 65))
        top = float(ep.max())
        x1 = (np.arange(nx) + 0.5) / nx
        x2 = (np.arange(ny) + 0.5) / ny * top
        X1, X2 = np.meshgrid(x1, x2, indexing="ij")
        return X1, X2, self(X1, X2)


# ---------------------------------------------------------------------
# meshes
# ---------------------------------------------------------------------


@dataclass
class MeshStructure:
    """Lattice bookkeeping behind a mapped structured mesh."""

    kind: str  # 'eps' | 'limit' | 'minus_only'
    nx: int
    profile: EtaProfile
    eps: float | None = None
    cells_per_period: int | None = None
    ny: int | None = None
    ny_minus: int | None = None
    ny_plus: int | None = None
    col_x: np.ndarray | None = None
    top_heights: np.ndarray | None = None
    mid_heights: np.ndarray | None = None

    @property
    def rows(self):
        if self.kind == "eps":
            return self.ny
        if self.kind == "minus_only":
            return self.ny_minus
        return self.ny_minus + self.ny_plus


@dataclass
class Mesh:
    """Conforming triangular mesh of a mapped tensor lattice.

    vertices      (n, 2) coordinates
    triangles     (m, 3) vertex indices, positively oriented
    vertex_tags   (n,) TAG_* codes; every x2 = 0 vertex is gamma_b
    regions       (m,) REGION_* codes per triangle
    column_index  (n,) lattice column of each vertex
    structure     lattice data for analytic point location
    """

    vertices: np.ndarray
    triangles: np.ndarray
    vertex_tags: np.ndarray
    regions: np.ndarray
    column_index: np.ndarray
    structure: MeshStructure

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    @property
    def n_triangles(self):
        return self.triangles.shape[0]

    def triangle_areas(self):
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def edge_sets(self):
        tri = self.triangles
        edges = np.concatenate(
            [tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]], axis=0
        )
        edges = np.sort(edges, axis=1)
        uniq, counts = np.unique(edges, axis=0, return_counts=True)
        return uniq, counts

    def validate(self):
        """Check conformity, orientation, Euler characteristic and tags."""
        areas = self.triangle_areas()
        if not (areas > 0).all():
            raise InvalidProfile(
                f"mesh has {int((areas <= 0).sum())} non-positive triangle areas"
            )
        uniq, counts = self.edge_sets()
        if not np.isin(counts, (1, 2)).all():
            raise InvalidProfile("non-conforming mesh: edge shared by >2 triangles")
        v = self.n_vertices
        e = uniq.shape[0]
        f = self.n_triangles
        if v - e + f != 1:
            raise InvalidProfile(f"Euler characteristic {v - e + f} != 1")
        on_bottom = np.abs(self.vertices[:, 1]) <= 1e-14
        if not (self.vertex_tags[on_bottom] == TAG_GAMMA_B).all():
            raise InvalidProfile("bottom vertex missing gamma_b tag")
        return True

    def region_mask(self, region_name):
        for code, name in REGION_NAMES.items():
            if name == region_name:
                return self.regions == code
        raise UnknownRegionTag(f"region {region_name!r} not known")


def _grid_mesh(nx, row_x2, col_x, region_of_row, tag_of_row, structure):
    """Assemble the mesh arrays for a mapped lattice.

    row_x2 : (rows+1, nx+1) vertical coordinates per lattice row/column.
    """
    rows = row_x2.shape[0] - 1
    n_col = nx + 1
    verts = np.empty(((rows + 1) * n_col, 2))
    verts[:, 0] = np.tile(col_x, rows + 1)
    verts[:, 1] = row_x2.ravel()

    tags = np.full((rows + 1) * n_col, TAG_INTERIOR, dtype=np.int8)
    cols = np.tile(np.arange(n_col, dtype=np.int32), rows + 1)
    for r in range(rows + 1):
        base = r * n_col
        row_tag = tag_of_row(r)
        if row_tag is not None:
            tags[base : base + n_col] = row_tag
        else:
            tags[base] = TAG_LATERAL
            tags[base + nx] = TAG_LATERAL

    tris = np.empty((2 * rows * nx, 3), dtype=np.int32)
    regions = np.empty(2 * rows * nx, dtype=np.int8)
    cell = 0
    for r in range(rows):
        b0 = r * n_col
        b1 = (r + 1) * n_col
        i = np.arange(nx)
        v00 = b0 + i
        v10 = b0 + i + 1
        v11 = b1 + i + 1
        v01 = b1 + i
        tris[2 * cell : 2 * (cell + nx) : 2] = np.stack([v00, v10, v11], axis=1)
        tris[2 * cell + 1 : 2 * (cell + nx) : 2] = np.stack([v00, v11, v01], axis=1)
        regions[2 * cell : 2 * (cell + nx)] = region_of_row(r)
        cell += nx
    return Mesh(verts, tris, tags, regions, cols, structure)


def build_mesh_eps(profile, eps, cells_per_period, ny):
    """Structured mesh of the oscillating domain for eps = 1/k.

    Columns sit at i/(k*cpp); each lattice cell splits into two triangles
    and the bottom row carries the Dirichlet tag.  Rows are graded in two
    layers: below the oscillation the heights follow min(eta_minus, top)
    scaled uniformly, and only the band up to the oscillating boundary is
    boundary-fitted.  Keeping the interior rows attached to the slowly
    varying lower envelope keeps their chord slopes bounded as eps -> 0;
    rows proportional to the full oscillating height develop O(1/eps)
    chords and lose accuracy at fixed cells_per_period.  A profile with
    no oscillation span collapses to a single uniform layer.
    """
    if cells_per_period < 8:
        raise ResolutionTooCoarse(
            f"cells_per_period = {cells_per_period} < 8 cannot resolve the period"
        )
    k = int(round(1.0 / eps))
    if k < 1 or abs(eps * k - 1.0) > 1e-9:
        raise ValueError(f"eps must equal 1/k for an integer k >= 1, got {eps}")
    if ny < 2:
        raise ResolutionTooCoarse("ny must be at least 2")

    nx = k * cells_per_period
    col_x = np.arange(nx + 1) / nx
    y_fast = (col_x * k) % 1.0
    top = profile.height(col_x, y_fast)
    lo_env, _ = envelopes_many(profile, col_x)
    span = float(top.max() - lo_env.min())

    if span < 1e-12:
        t = np.arange(ny + 1)[:, None] / ny
        row_x2 = t * top[None, :]
        structure = MeshStructure(
            kind="eps", nx=nx, profile=profile, eps=1.0 / k,
            cells_per_period=cells_per_period, ny=ny, col_x=col_x,
            top_heights=top,
        )
    else:
        ny_minus = min(max(1, round(0.75 * ny)), ny - 1)
        ny_plus = ny - ny_minus
        # mid must stay a positive distance below the top at every column,
        # including columns where the boundary dips to the lower envelope.
        # The clearance shrinks like eps^2 so the dip it carves near each
        # valley stays O(1)-sloped and sub-cell as the period count grows.
        delta = min(0.005 * span, span * eps * eps, 0.5 * float(lo_env.min()))
        mid = np.minimum(lo_env, top - delta)
        t_lo = np.arange(ny_minus + 1)[:, None] / ny_minus
        t_hi = np.arange(1, ny_plus + 1)[:, None] / ny_plus
        row_x2 = np.concatenate(
            [t_lo * mid[None, :], mid[None, :] + t_hi * (top - mid)[None, :]],
            axis=0,
        )
        structure = MeshStructure(
            kind="eps", nx=nx, profile=profile, eps=1.0 / k,
            cells_per_period=cells_per_period, ny=ny,
            ny_minus=ny_minus, ny_plus=ny_plus, col_x=col_x,
            top_heights=top, mid_heights=mid,
        )

    def tag_of_row(r):
        if r == 0:
            return TAG_GAMMA_B
        if r == ny:
            return None  # lateral corners handled below
        return None

    mesh = _grid_mesh(
        nx, row_x2, col_x,
        region_of_row=lambda r: REGION_EPS,
        tag_of_row=tag_of_row, structure=structure,
    )
    # interior of the top row is the oscillating boundary
    base = ny * (nx + 1)
    mesh.vertex_tags[base + 1 : base + nx] = TAG_TOP
    return mesh


def build_mesh_limit(profile, nx, ny_minus, ny_plus):
    """Two stacked mapped layers of the fixed limit domain.

    The lower layer fills {0 < x2 < eta_minus(x1)}, the upper layer the
    oscillation span {eta_minus < x2 < eta_plus}; both share the interface
    nodes on the graph of eta_minus.  If the span is everywhere below
    1e-12 the upper layer is dropped with a warning.
    """
    if nx < 2 or ny_minus < 2 or ny_plus < 1:
        raise ResolutionTooCoarse("limit mesh needs nx, ny_minus >= 2 and ny_plus >= 1")
    col_x = np.arange(nx + 1) / nx
    lo, hi = envelopes_many(profile, col_x)
    span = hi - lo

    if span.max() < 1e-12:
        warnings.warn(
            "oscillation span vanishes; building the lower layer only",
            DegeneratePlusLayerWarning,
        )
        t = np.arange(ny_minus + 1)[:, None] / ny_minus
        row_x2 = t * lo[None, :]
        structure = MeshStructure(
            kind="minus_only", nx=nx, profile=profile, ny_minus=ny_minus,
            col_x=col_x, top_heights=lo,
        )

        def tag_of_row(r):
            if r == 0:
                return TAG_GAMMA_B
            return None

        mesh = _grid_mesh(
            nx, row_x2, col_x,
            region_of_row=lambda r: REGION_OMEGA_MINUS,
            tag_of_row=tag_of_row, structure=structure,
        )
        base = ny_minus * (nx + 1)
        mesh.vertex_tags[base + 1 : base + nx] = TAG_TOP
        return mesh

    if span.min() < 1e-12:
        raise InvalidProfile(
            "oscillation span vanishes at isolated columns; the upper layer "
            "would contain degenerate cells"
        )

    t_lo = np.arange(ny_minus + 1)[:, None] / ny_minus
    rows_lo = t_lo * lo[None, :]
    t_hi = np.arange(1, ny_plus + 1)[:, None] / ny_plus
    rows_hi = lo[None, :] + t_hi * span[None, :]
    row_x2 = np.concatenate([rows_lo, rows_hi], axis=0)

    structure = MeshStructure(
        kind="limit", nx=nx, profile=profile, ny_minus=ny_minus, ny_plus=ny_plus,
        col_x=col_x, top_heights=hi, mid_heights=lo,
    )

    total_rows = ny_minus + ny_plus

    def tag_of_row(r):
        if r == 0:
            return TAG_GAMMA_B
        if r == ny_minus:
            return TAG_INTERFACE
        return None

    mesh = _grid_mesh(
        nx, row_x2, col_x,
        region_of_row=lambda r: REGION_OMEGA_MINUS if r < ny_minus else REGION_OMEGA_PLUS,
        tag_of_row=tag_of_row, structure=structure,
    )
    base = total_rows * (nx + 1)
    mesh.vertex_tags[base + 1 : base + nx] = TAG_TOP
    return mesh


def interp_heights(structure, x1):
    """Chord interpolation of the per-column heights at abscissae x1.

    Returns (top, mid); mid is None unless the mesh has two layers.
    """
    x1 = np.asarray(x1, dtype=float)
    nx = structure.nx
    s = np.clip(x1, 0.0, 1.0) * nx
    i = np.clip(np.floor(s).astype(int), 0, nx - 1)
    f = s - i
    top = structure.top_heights
    top_x = top[i] * (1 - f) + top[i + 1] * f
    if structure.mid_heights is None:
        return top_x, None
    mid = structure.mid_heights
    return top_x, mid[i] * (1 - f) + mid[i + 1] * f


def write_mesh(mesh, path):
    """Plain-text mesh listing: vertex records then triangle records."""
    with open(path, "w") as fh:
        fh.write(f"vertices {mesh.n_vertices}\n")
        for i in range(mesh.n_vertices):
            x, y = mesh.vertices[i]
            fh.write(
                f"{i} {x:.17g} {y:.17g} {TAG_NAMES[int(mesh.vertex_tags[i])]} "
                f"{int(mesh.column_index[i])}\n"
            )
        fh.write(f"triangles {mesh.n_triangles}\n")
        for t in range(mesh.n_triangles):
            a, b, c = mesh.triangles[t]
            fh.write(f"{t} {a} {b} {c} {REGION_NAMES[int(mesh.regions[t])]}\n")
