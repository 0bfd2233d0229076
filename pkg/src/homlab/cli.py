"""Config-driven command line front end.

One JSON config file describes a run; a small set of flags (--out,
--eps, --seed) override single entries so that every artifact remains
reproducible from the config alone.  The schema is validated in full,
with unknown keys rejected, before any computation starts; error
messages carry the JSON path of the offending entry ("$.operator.alpha.
kind: ...").

Exit codes: 0 success, 1 sweep gates failed, 2 config error (including
operators rejected by the hypothesis screen), 3 solver failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import fem
from .errors import (
    BracketFailure,
    ConfigError,
    HypothesisViolation,
    InvalidProfile,
    NonConvergence,
)
from .fem import SolverOptions
from .geometry import (
    DensityField,
    EtaProfile,
    build_mesh_eps,
    build_mesh_limit,
    envelopes_many,
)
from .harness import SweepConfig, make_source, run_sweep
from .limit import solve_limit, write_limit_solution
from .operators import OperatorSpec, check_hypotheses
from .unfolding import (
    build_unfold_grid,
    check_integral_lemma,
    unfold_field,
    write_unfolded_csv,
)

EXIT_OK = 0
EXIT_GATES = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3


# ---------------------------------------------------------------------
# schema
# ---------------------------------------------------------------------

_TOP_KEYS = (
    "profile", "operator", "source", "eps_list", "mesh", "tolerances",
    "unfold", "density", "test_bank_size", "grad_bound", "seed",
    "output_dir",
)

_SECTION_KEYS = {
    "profile": ("family", "params", "table", "lipschitz_bound"),
    "operator": ("family", "matrix", "alpha", "k_const"),
    "source": ("id", "params"),
    "mesh": ("cells_per_period", "ny", "limit_nx", "limit_ny_minus",
             "limit_ny_plus"),
    "tolerances": ("solver_rtol", "hypotheses_samples"),
    "unfold": ("nx1", "nx2", "ny", "eps"),
    "density": ("nx", "ny"),
}

_ALPHA_KEYS = {
    "constant": ("kind", "value"),
    "affine_x1": ("kind", "base", "slope"),
}

_MESH_DEFAULTS = {
    "cells_per_period": 16, "ny": 16,
    "limit_nx": 128, "limit_ny_minus": 64, "limit_ny_plus": 64,
}
_TOL_DEFAULTS = {"solver_rtol": 1e-10, "hypotheses_samples": 100_000}
_UNFOLD_DEFAULTS = {"nx1": 128, "nx2": 64, "ny": 64}
_DENSITY_DEFAULTS = {"nx": 16, "ny": 16}


def _require_mapping(node, path):
    if not isinstance(node, dict):
        raise ConfigError(
            f"expected an object, got {type(node).__name__}", path)
    return node


def _reject_unknown(node, allowed, path):
    for key in node:
        if key not in allowed:
            raise ConfigError("unknown key", f"{path}.{key}")


def _number(node, key, path, default=None, required=False, minimum=None):
    if key not in node:
        if required:
            raise ConfigError("required key is missing", f"{path}.{key}")
        return default
    v = node[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError("expected a number", f"{path}.{key}")
    v = float(v)
    if minimum is not None and v < minimum:
        raise ConfigError(f"must be >= {minimum}", f"{path}.{key}")
    return v


def _integer(node, key, path, default=None, required=False, minimum=None):
    if key not in node:
        if required:
            raise ConfigError("required key is missing", f"{path}.{key}")
        return default
    v = node[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError("expected an integer", f"{path}.{key}")
    if minimum is not None and v < minimum:
        raise ConfigError(f"must be >= {minimum}", f"{path}.{key}")
    return v


def _string(node, key, path, default=None, required=False):
    if key not in node:
        if required:
            raise ConfigError("required key is missing", f"{path}.{key}")
        return default
    v = node[key]
    if not isinstance(v, str):
        raise ConfigError("expected a string", f"{path}.{key}")
    return v


def _number_list(node, key, path, default=()):
    if key not in node:
        return tuple(default)
    v = node[key]
    if not isinstance(v, list):
        raise ConfigError("expected a list of numbers", f"{path}.{key}")
    out = []
    for idx, item in enumerate(v):
        if isinstance(item, bool) or not isinstance(item, (int, float)):
            raise ConfigError("expected a number", f"{path}.{key}[{idx}]")
        out.append(float(item))
    return tuple(out)


def _matrix2(node, key, path):
    if key not in node:
        return None
    v = node[key]
    ok = (isinstance(v, list) and len(v) == 2
          and all(isinstance(r, list) and len(r) == 2 for r in v)
          and all(isinstance(c, (int, float)) and not isinstance(c, bool)
                  for r in v for c in r))
    if not ok:
        raise ConfigError("expected a 2x2 array of numbers", f"{path}.{key}")
    return [[float(c) for c in r] for r in v]


def validate_config(cfg):
    """Structural validation of the full document; returns cfg unchanged.

    Semantic checks (positivity of a profile, operator symmetry, ...)
    happen in the builders below, which translate constructor rejections
    into ConfigError carrying the section path.
    """
    _require_mapping(cfg, "$")
    _reject_unknown(cfg, _TOP_KEYS, "$")
    for name, keys in _SECTION_KEYS.items():
        if name in cfg:
            node = _require_mapping(cfg[name], f"$.{name}")
            _reject_unknown(node, keys, f"$.{name}")
    if "operator" in cfg and "alpha" in cfg["operator"]:
        path = "$.operator.alpha"
        node = _require_mapping(cfg["operator"]["alpha"], path)
        kind = _string(node, "kind", path, required=True)
        if kind not in _ALPHA_KEYS:
            raise ConfigError(
                f"unknown alpha kind {kind!r}; known: "
                f"{', '.join(sorted(_ALPHA_KEYS))}", f"{path}.kind")
        _reject_unknown(node, _ALPHA_KEYS[kind], path)
    # typed reads of the scalar top-level entries
    _integer(cfg, "test_bank_size", "$", default=7, minimum=1)
    _number(cfg, "grad_bound", "$", default=10.0, minimum=0.0)
    _integer(cfg, "seed", "$", default=0, minimum=0)
    _string(cfg, "output_dir", "$", default=".")
    if "eps_list" in cfg:
        _eps_tuple(cfg)
    return cfg


def _eps_tuple(cfg):
    eps = _number_list(cfg, "eps_list", "$")
    if not eps:
        raise ConfigError("must be a non-empty list", "$.eps_list")
    for idx, e in enumerate(eps):
        if not 0.0 < e <= 1.0:
            raise ConfigError("entries must lie in (0, 1]",
                              f"$.eps_list[{idx}]")
        k = round(1.0 / e)
        if abs(e * k - 1.0) > 1e-9:
            raise ConfigError("entries must be reciprocals of integers",
                              f"$.eps_list[{idx}]")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ConfigError("entries must be strictly decreasing", "$.eps_list")
    return eps


def _require_section(cfg, name):
    if name not in cfg:
        raise ConfigError("required section is missing", f"$.{name}")
    return cfg[name]


# ---------------------------------------------------------------------
# builders: config sections -> domain objects
# ---------------------------------------------------------------------

def build_profile(cfg) -> EtaProfile:
    node = _require_section(cfg, "profile")
    path = "$.profile"
    family = _string(node, "family", path, required=True)
    params = _number_list(node, "params", path)
    lip = _number(node, "lipschitz_bound", path)
    table = None
    if "table" in node:
        rows = node["table"]
        if not (isinstance(rows, list) and rows
                and all(isinstance(r, list) for r in rows)):
            raise ConfigError("expected a 2D array of numbers",
                              f"{path}.table")
        table = np.asarray(rows, dtype=float)
    try:
        return EtaProfile(family=family, params=params, table=table,
                          lipschitz_bound=lip)
    except InvalidProfile as exc:
        raise ConfigError(str(exc), path) from exc


def build_operator(cfg) -> OperatorSpec:
    node = _require_section(cfg, "operator")
    path = "$.operator"
    family = _string(node, "family", path, required=True)
    matrix = _matrix2(node, "matrix", path)
    k_const = _number(node, "k_const", path, default=0.0, minimum=0.0)
    alpha_kind = "constant"
    alpha_params = (1.0,)
    if "alpha" in node:
        a = node["alpha"]
        alpha_kind = a["kind"]
        apath = f"{path}.alpha"
        if alpha_kind == "constant":
            alpha_params = (_number(a, "value", apath, required=True),)
        else:
            alpha_params = (_number(a, "base", apath, required=True),
                            _number(a, "slope", apath, required=True))
    try:
        return OperatorSpec(family=family, matrix=matrix,
                            alpha_kind=alpha_kind, alpha_params=alpha_params,
                            k_const=k_const)
    except ValueError as exc:
        raise ConfigError(str(exc), path) from exc


def build_source(cfg):
    node = cfg.get("source", {"id": "constant"})
    path = "$.source"
    _require_mapping(node, path)
    source_id = _string(node, "id", path, required=True)
    params = _number_list(node, "params", path)
    try:
        make_source(source_id, params)
    except ValueError as exc:
        raise ConfigError(str(exc), f"{path}.id") from exc
    return source_id, params


def _mesh_params(cfg):
    node = cfg.get("mesh", {})
    out = dict(_MESH_DEFAULTS)
    for key in out:
        out[key] = _integer(node, key, "$.mesh", default=out[key], minimum=1)
    return out


def _tolerances(cfg):
    node = cfg.get("tolerances", {})
    rtol = _number(node, "solver_rtol", "$.tolerances",
                   default=_TOL_DEFAULTS["solver_rtol"])
    if not rtol > 0:
        raise ConfigError("must be positive", "$.tolerances.solver_rtol")
    samples = _integer(node, "hypotheses_samples", "$.tolerances",
                       default=_TOL_DEFAULTS["hypotheses_samples"],
                       minimum=10_000)
    return rtol, samples


def _output_dir(cfg, args):
    out = args.out if args.out else _string(cfg, "output_dir", "$",
                                            default=".")
    os.makedirs(out, exist_ok=True)
    return out


def _seed(cfg, args):
    if args.seed is not None:
        return args.seed
    return _integer(cfg, "seed", "$", default=0, minimum=0)


def _parse_eps_flag(value):
    k = round(1.0 / value)
    if value <= 0 or k < 1 or abs(value * k - 1.0) > 1e-9:
        raise ConfigError("--eps must be the reciprocal of a positive integer",
                          "$")
    return value


def _pick_eps(cfg, args, node=None, node_path=None):
    """Resolve the single eps a command acts on.

    Priority: --eps flag, then the config entry (when a section is
    given), then a singleton eps_list.  The result must be a member of
    eps_list when that section is present.
    """
    eps = None
    if args.eps is not None:
        eps = _parse_eps_flag(args.eps)
    elif node is not None and "eps" in node:
        eps = _number(node, "eps", node_path)
        k = round(1.0 / eps)
        if eps <= 0 or abs(eps * k - 1.0) > 1e-9:
            raise ConfigError("must be the reciprocal of a positive integer",
                              f"{node_path}.eps")
    else:
        eps_list = _eps_tuple(cfg) if "eps_list" in cfg else ()
        if len(eps_list) == 1:
            eps = eps_list[0]
        else:
            where = f"{node_path}.eps" if node_path else "$.eps_list"
            raise ConfigError(
                "ambiguous eps: pass --eps or configure a single value",
                where)
    if "eps_list" in cfg:
        eps_list = _eps_tuple(cfg)
        if not any(abs(eps - e) <= 1e-12 for e in eps_list):
            raise ConfigError(f"eps {eps} is not a member of eps_list",
                              "$.eps_list")
    return eps


# ---------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------

def _write_json(payload, path):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _solve_eps_problem(cfg, args, eps):
    profile = build_profile(cfg)
    spec = build_operator(cfg)
    source_id, source_params = build_source(cfg)
    mesh_p = _mesh_params(cfg)
    rtol, _ = _tolerances(cfg)
    mesh = build_mesh_eps(profile, eps, mesh_p["cells_per_period"],
                          mesh_p["ny"])
    source = make_source(source_id, source_params)
    u, info = fem.solve_nonlinear(mesh, spec, source,
                                  SolverOptions(rtol=rtol))
    return mesh, u, info


def cmd_sweep(cfg, args):
    profile = build_profile(cfg)
    spec = build_operator(cfg)
    source_id, source_params = build_source(cfg)
    mesh_p = _mesh_params(cfg)
    rtol, samples = _tolerances(cfg)
    unfold_node = cfg.get("unfold", {})
    out = _output_dir(cfg, args)

    if args.eps is not None:
        eps_list = (_parse_eps_flag(args.eps),)
    else:
        eps_list = _eps_tuple(cfg) if "eps_list" in cfg \
            else SweepConfig.__dataclass_fields__["eps_list"].default

    try:
        sweep_cfg = SweepConfig(
            profile=profile,
            operator=spec,
            source_id=source_id,
            source_params=source_params,
            eps_list=eps_list,
            cells_per_period=mesh_p["cells_per_period"],
            ny=mesh_p["ny"],
            limit_nx=mesh_p["limit_nx"],
            limit_ny_minus=mesh_p["limit_ny_minus"],
            limit_ny_plus=mesh_p["limit_ny_plus"],
            unfold_nx1=_integer(unfold_node, "nx1", "$.unfold",
                                default=_UNFOLD_DEFAULTS["nx1"], minimum=1),
            unfold_nx2=_integer(unfold_node, "nx2", "$.unfold",
                                default=_UNFOLD_DEFAULTS["nx2"], minimum=1),
            unfold_ny=_integer(unfold_node, "ny", "$.unfold",
                               default=_UNFOLD_DEFAULTS["ny"], minimum=1),
            test_bank_size=_integer(cfg, "test_bank_size", "$", default=7,
                                    minimum=1),
            grad_bound=_number(cfg, "grad_bound", "$", default=10.0,
                               minimum=0.0),
            solver_rtol=rtol,
            hypotheses_samples=samples,
            seed=_seed(cfg, args),
            output_dir=out,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    report = run_sweep(sweep_cfg)
    for row in report.rows:
        print(f"eps={row.eps:g} dofs={row.dofs} iters={row.newton_iters} "
              f"weak_err_u={row.weak_err_u:.6e} "
              f"flux1={row.weak_err_flux1:.6e} "
              f"flux2_plus={row.weak_err_flux2_plus:.6e} "
              f"grad_minus={row.weak_err_grad_minus:.6e} "
              f"lemma32_gap={row.lemma32_gap:.6e}")
    print(f"constraint_residual={report.constraint_residual:.6e}")
    print(f"wrote {report.csv_path}")
    print(f"wrote {report.plot_path}")
    if not report.passed:
        for line in report.gate_failures:
            print(f"gate: {line}", file=sys.stderr)
        print("sweep: FAIL", file=sys.stderr)
        return EXIT_GATES
    print("sweep: PASS")
    return EXIT_OK


def cmd_solve_eps(cfg, args):
    eps = _pick_eps(cfg, args)
    out = _output_dir(cfg, args)
    mesh, u, info = _solve_eps_problem(cfg, args, eps)
    k = round(1.0 / eps)
    field_path = os.path.join(out, f"u_eps_k{k}.txt")
    diag_path = os.path.join(out, f"diagnostics_eps_k{k}.json")
    fem.write_field(u, field_path)
    _write_json({
        "eps": eps,
        "k": k,
        "dofs": mesh.n_vertices,
        "triangles": mesh.n_triangles,
        "converged": info.converged,
        "iterations": info.iterations,
        "residual_inf": info.residual_inf,
        "picard_steps": info.picard_steps,
        "cg_iterations": info.cg_iterations,
        "u_l2": fem.field_l2_norm(u),
        "grad_l2": fem.field_l2_norm(u, gradient=True),
    }, diag_path)
    print(f"wrote {field_path}")
    print(f"wrote {diag_path}")
    return EXIT_OK


def cmd_solve_limit(cfg, args):
    profile = build_profile(cfg)
    spec = build_operator(cfg)
    source_id, source_params = build_source(cfg)
    mesh_p = _mesh_params(cfg)
    rtol, _ = _tolerances(cfg)
    out = _output_dir(cfg, args)

    mesh = build_mesh_limit(profile, mesh_p["limit_nx"],
                            mesh_p["limit_ny_minus"], mesh_p["limit_ny_plus"])
    density = DensityField(profile)
    source = make_source(source_id, source_params)
    sol = solve_limit(mesh, spec, density, source, SolverOptions(rtol=rtol))

    field_path = os.path.join(out, "limit_field.txt")
    quad_path = os.path.join(out, "limit_quad.csv")
    diag_path = os.path.join(out, "limit_diagnostics.json")
    write_limit_solution(sol, field_path, quad_path)
    _write_json({
        "dofs": sol.field.mesh.n_vertices,
        "converged": sol.info.converged,
        "iterations": sol.info.iterations,
        "residual_inf": sol.info.residual_inf,
        "constraint_residual": sol.constraint_residual,
        "notes": list(sol.notes),
    }, diag_path)
    print(f"constraint_residual={sol.constraint_residual:.6e}")
    for path in (field_path, quad_path, diag_path):
        print(f"wrote {path}")
    return EXIT_OK


def cmd_unfold(cfg, args):
    node = cfg.get("unfold", {})
    _require_mapping(node, "$.unfold")
    eps = _pick_eps(cfg, args, node, "$.unfold")
    out = _output_dir(cfg, args)
    profile = build_profile(cfg)
    grid = build_unfold_grid(
        profile,
        _integer(node, "nx1", "$.unfold", default=_UNFOLD_DEFAULTS["nx1"],
                 minimum=1),
        _integer(node, "nx2", "$.unfold", default=_UNFOLD_DEFAULTS["nx2"],
                 minimum=1),
        _integer(node, "ny", "$.unfold", default=_UNFOLD_DEFAULTS["ny"],
                 minimum=1),
    )
    _, u, info = _solve_eps_problem(cfg, args, eps)
    samples = unfold_field(u, eps, grid)
    gap = check_integral_lemma(u, eps, grid)

    k = round(1.0 / eps)
    csv_path = os.path.join(out, f"unfolded_k{k}.csv")
    report_path = os.path.join(out, "unfold_report.json")
    write_unfolded_csv(grid, samples, csv_path)
    _write_json({
        "eps": eps,
        "k": k,
        "lemma_lhs": gap.lhs,
        "lemma_rhs": gap.rhs,
        "lemma_gap": gap.gap,
        "solver_iterations": info.iterations,
    }, report_path)
    print(f"lemma_gap={gap.gap:.6e}")
    print(f"wrote {csv_path}")
    print(f"wrote {report_path}")
    return EXIT_OK


def cmd_density(cfg, args):
    profile = build_profile(cfg)
    node = cfg.get("density", {})
    nx = _integer(node, "nx", "$.density", default=_DENSITY_DEFAULTS["nx"],
                  minimum=1)
    ny = _integer(node, "ny", "$.density", default=_DENSITY_DEFAULTS["ny"],
                  minimum=1)
    out = _output_dir(cfg, args)
    density = DensityField(profile)

    # vertex lattice including both envelope extremes so the top row
    # (empty fiber, h = 0) is part of the record
    x1 = np.arange(nx + 1) / nx
    _, upper = envelopes_many(profile, x1)
    top = float(upper.max())
    x2 = np.arange(ny + 1) / ny * top
    path = os.path.join(out, "density.csv")
    with open(path, "w") as fh:
        fh.write("x1,x2,h\n")
        for b in x2:
            row = density(x1, np.full_like(x1, b))
            for a, h in zip(x1, row):
                fh.write(f"{a:.12g},{b:.12g},{h:.17g}\n")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_check_operator(cfg, args):
    spec = build_operator(cfg)
    _, samples = _tolerances(cfg)
    out = _output_dir(cfg, args)
    report = check_hypotheses(spec, n_samples=samples, seed=_seed(cfg, args))
    path = os.path.join(out, "operator_report.json")
    _write_json({
        "passed": report.passed,
        "c0_lower": report.c0_lower,
        "c1_upper": report.c1_upper,
        "min_monotonicity": report.min_monotonicity,
        "n_samples": report.n_samples,
        "notes": list(report.notes),
    }, path)
    print(f"passed={report.passed} c0_lower={report.c0_lower:.6g} "
          f"c1_upper={report.c1_upper:.6g}")
    print(f"wrote {path}")
    return EXIT_OK


# ---------------------------------------------------------------------
# argument parsing and dispatch
# ---------------------------------------------------------------------

_COMMANDS = {
    "sweep": (cmd_sweep, "run the full eps sweep with gates",
              ["profile", "operator", "source", "eps_list",
               "mesh.cells_per_period", "mesh.ny", "mesh.limit_nx",
               "mesh.limit_ny_minus", "mesh.limit_ny_plus", "unfold.nx1",
               "unfold.nx2", "unfold.ny", "tolerances.solver_rtol",
               "tolerances.hypotheses_samples", "test_bank_size",
               "grad_bound", "seed", "output_dir"]),
    "solve-eps": (cmd_solve_eps, "solve one oscillating-domain problem",
                  ["profile", "operator", "source", "eps_list",
                   "mesh.cells_per_period", "mesh.ny",
                   "tolerances.solver_rtol", "output_dir"]),
    "solve-limit": (cmd_solve_limit, "solve the weighted limit problem",
                    ["profile", "operator", "source", "mesh.limit_nx",
                     "mesh.limit_ny_minus", "mesh.limit_ny_plus",
                     "tolerances.solver_rtol", "output_dir"]),
    "unfold": (cmd_unfold, "solve one eps problem and unfold it",
               ["profile", "operator", "source", "eps_list",
                "mesh.cells_per_period", "mesh.ny",
                "tolerances.solver_rtol", "unfold.nx1", "unfold.nx2",
                "unfold.ny", "unfold.eps", "output_dir"]),
    "density": (cmd_density, "sample the fiber density h on a lattice",
                ["profile", "density.nx", "density.ny", "output_dir"]),
    "check-operator": (cmd_check_operator,
                       "screen an operator for the structural hypotheses",
                       ["operator", "tolerances.hypotheses_samples", "seed",
                        "output_dir"]),
}

_EPS_COMMANDS = ("sweep", "solve-eps", "unfold")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="homlab",
        description="Oscillating-domain homogenization laboratory.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_line, keys) in _COMMANDS.items():
        p = sub.add_parser(
            name, help=help_line,
            formatter_class=argparse.RawDescriptionHelpFormatter,
            epilog="config keys read:\n" + "\n".join(
                f"  {k}" for k in keys),
        )
        p.add_argument("--config", required=True,
                       help="path to the JSON run configuration")
        p.add_argument("--out", default=None,
                       help="output directory (overrides output_dir)")
        p.add_argument("--seed", type=int, default=None,
                       help="RNG seed (overrides seed)")
        if name in _EPS_COMMANDS:
            p.add_argument("--eps", type=float, default=None,
                           help="oscillation parameter 1/k (overrides the "
                                "config selection)")
    return parser


def load_config(path):
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from exc
    return validate_config(cfg)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "eps"):
        args.eps = None
    handler = _COMMANDS[args.command][0]
    try:
        cfg = load_config(args.config)
        if args.seed is not None and args.seed < 0:
            raise ConfigError("--seed must be nonnegative")
        return handler(cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvalidProfile as exc:
        print(f"config error: $.profile: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except HypothesisViolation as exc:
        print(f"operator rejected: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NonConvergence, BracketFailure) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


def entry():
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
