"""Command-line front end.

Subcommands:
  angle      matrix JSON -> lifted or space-time angle JSON
  check      matrix + phase -> cone membership JSON
  envelope   config JSON -> grid CSV
  dirichlet  config JSON -> grid CSV
  dsl-solve  config JSON -> solution CSV + diagnostics JSON
  verify     solution CSV + phase -> diagnostics JSON

Exit codes: 0 success, 2 validation error, 3 convergence/sampling error.
Config-driven runs echo the fully resolved config next to their output so
a rerun on the echo reproduces the result bit for bit.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import dsl as dsl_mod
from .angles import SymMatrix, lifted_angle, spacetime_lifted_angle
from .errors import ConvergenceError, DomainError, SamplingError
from .expr import compile_expression
from .solvers import EnvelopeProblem, SpaceGrid, dirichlet, envelope
from .subeq import DEFAULT_BAND, Phase, in_Fc, in_calFc, in_dual_calFc
from .transform import SampledFamily

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_CONVERGENCE = 3


def _parse_phase(value) -> float:
    """Phase given as a number or an expression like '3*pi/4'."""
    if isinstance(value, (int, float)):
        return float(value)
    fn = compile_expression(str(value), ())
    return float(fn())


def _load_matrix(path: str) -> SymMatrix:
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    if isinstance(obj, list):
        return SymMatrix(obj)
    return SymMatrix.from_json_dict(obj)


def _print_json(obj: dict) -> None:
    print(json.dumps(obj, separators=(",", ":")))


def _cmd_angle(args) -> int:
    a = _load_matrix(args.matrix)
    if args.spacetime:
        res = spacetime_lifted_angle(a)
        _print_json(
            {
                "angle": res.angle,
                "on_degenerate_locus": res.on_degenerate_locus,
                "method": res.method,
            }
        )
    else:
        _print_json({"angle": lifted_angle(a)})
    return EXIT_OK


def _cmd_check(args) -> int:
    a = _load_matrix(args.matrix)
    c_val = _parse_phase(args.phase)
    band = args.tolerances.get("band", DEFAULT_BAND)
    if args.dual:
        phase = Phase(c_val, a.dim - 1)
        member = in_dual_calFc(a, phase, band=band)
    elif args.spacetime:
        phase = Phase(c_val, a.dim - 1)
        member = in_calFc(a, phase, band=band)
    else:
        phase = Phase(c_val, a.dim)
        member = in_Fc(a, phase, band=band)
    _print_json({"status": member.status, "margin": member.margin})
    return EXIT_OK


def _load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise DomainError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise DomainError(f"config is not valid JSON: {exc}")


def _require(cfg: dict, key: str):
    if key not in cfg:
        raise DomainError(f"config field missing: {key}")
    return cfg[key]


def _config_bounds(cfg: dict, n: int) -> tuple:
    raw = _require(cfg, "bounds")
    if not isinstance(raw, list) or len(raw) != n:
        raise DomainError(f"config field bounds: expected {n} [lo, hi] pairs")
    try:
        return tuple((float(lo), float(hi)) for lo, hi in raw)
    except (TypeError, ValueError):
        raise DomainError("config field bounds: each entry must be [lo, hi]")


def _config_shape(cfg: dict, n: int) -> tuple:
    nx = int(_require(cfg, "nx"))
    if n == 1:
        return (nx,)
    return (nx, int(_require(cfg, "ny")))


def _space_vars(n: int) -> tuple[str, ...]:
    return ("x",) if n == 1 else ("x", "y")


def _eval_on_grid(text: str, grid: SpaceGrid) -> np.ndarray:
    fn = compile_expression(text, _space_vars(grid.ndim))
    if grid.ndim == 1:
        return np.asarray(fn(grid.axis(0)), dtype=float) * np.ones(grid.shape)
    xs = grid.axis(0)[:, None]
    ys = grid.axis(1)[None, :]
    return np.broadcast_to(np.asarray(fn(xs, ys), dtype=float), grid.shape).astype(float)


def _resolved_dump(cfg: dict, path: Path) -> None:
    echo = path.with_suffix(".config.json")
    with open(echo, "w", encoding="utf-8") as fh:
        json.dump(cfg, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _cmd_envelope(args) -> int:
    cfg = _load_config(args.config)
    n = int(_require(cfg, "n"))
    if n not in (1, 2):
        raise DomainError("config field n must be 1 or 2")
    bounds = _config_bounds(cfg, n)
    shape = _config_shape(cfg, n)
    phase = _parse_phase(_require(cfg, "phase"))
    boundary_cfg = _require(cfg, "boundary")
    obstacle_text = _require(boundary_cfg, "obstacle")
    trace_text = _require(boundary_cfg, "trace")
    template = SpaceGrid(bounds, np.zeros(shape))
    obstacle = template.with_values(_eval_on_grid(obstacle_text, template))
    trace_vals = _eval_on_grid(trace_text, template)
    if n == 1:
        boundary = (float(trace_vals[0]), float(trace_vals[-1]))
    else:
        boundary = trace_vals
    tol = float(cfg.get("tolerances", {}).get("stop", 1e-12))
    tol = args.tolerances.get("stop", tol)
    problem = EnvelopeProblem(obstacle, boundary, phase)
    result = envelope(problem, stop_tol=tol)
    out = Path(args.out or _require(cfg, "out"))
    result.to_csv(out)
    resolved = {
        "n": n,
        "bounds": [list(b) for b in bounds],
        "nx": shape[0],
        **({"ny": shape[1]} if n == 2 else {}),
        "phase": _require(cfg, "phase"),
        "boundary": {"obstacle": obstacle_text, "trace": trace_text},
        "tolerances": {"stop": tol},
        "out": str(out),
    }
    _resolved_dump(resolved, out)
    print(f"envelope written to {out}")
    return EXIT_OK


def _cmd_dirichlet(args) -> int:
    cfg = _load_config(args.config)
    n = int(_require(cfg, "n"))
    if n not in (1, 2):
        raise DomainError("config field n must be 1 or 2")
    bounds = _config_bounds(cfg, n)
    shape = _config_shape(cfg, n)
    phase = _parse_phase(_require(cfg, "phase"))
    boundary_cfg = _require(cfg, "boundary")
    trace_text = _require(boundary_cfg, "trace")
    template = SpaceGrid(bounds, np.zeros(shape))
    trace_vals = _eval_on_grid(trace_text, template)
    if n == 1:
        boundary = (float(trace_vals[0]), float(trace_vals[-1]))
    else:
        boundary = trace_vals
    tol = float(cfg.get("tolerances", {}).get("residual", 1e-10))
    tol = args.tolerances.get("residual", tol)
    result = dirichlet(bounds, shape, boundary, phase, residual_tol=tol)
    out = Path(args.out or _require(cfg, "out"))
    result.to_csv(out)
    resolved = {
        "n": n,
        "bounds": [list(b) for b in bounds],
        "nx": shape[0],
        **({"ny": shape[1]} if n == 2 else {}),
        "phase": _require(cfg, "phase"),
        "boundary": {"trace": trace_text},
        "tolerances": {"residual": tol},
        "out": str(out),
    }
    _resolved_dump(resolved, out)
    print(f"dirichlet solution written to {out}")
    return EXIT_OK


def _cmd_dsl_solve(args) -> int:
    cfg = _load_config(args.config)
    n = int(_require(cfg, "n"))
    if n not in (1, 2):
        raise DomainError("config field n must be 1 or 2")
    bounds = _config_bounds(cfg, n)
    shape = _config_shape(cfg, n)
    nt = int(cfg.get("nt", 101))
    ntau = int(args.tau_samples or cfg.get("ntau", dsl_mod.DEFAULT_NTAU))
    phase_text = _require(cfg, "phase")
    phase = _parse_phase(phase_text)
    boundary_cfg = _require(cfg, "boundary")
    bottom_text = _require(boundary_cfg, "capBottom")
    top_text = _require(boundary_cfg, "capTop")
    lateral_text = _require(boundary_cfg, "lateral")
    space = _space_vars(n)
    bottom_fn = compile_expression(bottom_text, space)
    top_fn = compile_expression(top_text, space)
    lateral_fn = compile_expression(lateral_text, ("t",) + space)
    n_r = int(cfg.get("nr", nt))
    threads = int(args.threads or cfg.get("threads", 1))
    data = dsl_mod.BoundaryData.from_callables(
        bounds,
        shape,
        lambda *c: bottom_fn(*c),
        lambda *c: top_fn(*c),
        lambda r, *c: lateral_fn(r, *c),
        phase,
        n_r=n_r,
    )
    solution = dsl_mod.solve_dsl(data, nt=nt, ntau=ntau, threads=threads)
    out = Path(args.out or _require(cfg, "out"))
    dsl_mod.write_solution_csv(solution, out)
    report = {
        name: rep.to_json_dict() for name, rep in solution.diagnostics.items()
    }
    report_path = out.with_suffix(".report.json")
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    resolved = {
        "n": n,
        "bounds": [list(b) for b in bounds],
        "nx": shape[0],
        **({"ny": shape[1]} if n == 2 else {}),
        "nt": nt,
        "ntau": ntau,
        "nr": n_r,
        "phase": phase_text,
        "boundary": {
            "capBottom": bottom_text,
            "capTop": top_text,
            "lateral": lateral_text,
        },
        "threads": threads,
        "out": str(out),
    }
    _resolved_dump(resolved, out)
    all_pass = all(rep.passed for rep in solution.diagnostics.values())
    print(f"solution written to {out}; checks {'pass' if all_pass else 'FAIL'}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    family, bounds = dsl_mod.read_solution_csv(args.solution)
    phase = _parse_phase(args.phase)
    tols = args.tolerances
    reports = {
        "min_principle": dsl_mod.verify_min_principle(
            family, bounds, phase, tol=tols.get("min-principle", 1e-6)
        ),
        "time_convexity": dsl_mod.verify_time_convexity(
            family, rel_tol=tols.get("convexity", 1e-8)
        ),
        "angle_residual": dsl_mod.verify_angle_residual(
            family, bounds, phase, tol=tols.get("angle-residual", 1e-3)
        ),
    }
    payload = {name: rep.to_json_dict() for name, rep in reports.items()}
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)
    return EXIT_OK if all(r.passed for r in reports.values()) else EXIT_CONVERGENCE


def _extract_tolerances(extras: list[str]) -> dict:
    """Collect --tol-<name> <value> (or --tol-<name>=<value>) overrides."""
    tols: dict[str, float] = {}
    i = 0
    while i < len(extras):
        arg = extras[i]
        if not arg.startswith("--tol-"):
            raise DomainError(f"unknown argument: {arg}")
        if "=" in arg:
            key, _, val = arg.partition("=")
            i += 1
        else:
            key = arg
            if i + 1 >= len(extras):
                raise DomainError(f"missing value for {arg}")
            val = extras[i + 1]
            i += 2
        name = key[len("--tol-"):]
        try:
            tols[name] = float(val)
        except ValueError:
            raise DomainError(f"invalid tolerance for {key}: {val!r}")
    return tols


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slangle",
        description="Angle calculus, cone membership, envelopes, and "
        "space-time Dirichlet solves.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_angle = sub.add_parser("angle", help="evaluate the angle of a matrix")
    p_angle.add_argument("--matrix", required=True, help="matrix JSON path")
    p_angle.add_argument("--spacetime", action="store_true")
    p_angle.set_defaults(fn=_cmd_angle)

    p_check = sub.add_parser("check", help="cone membership for a matrix")
    p_check.add_argument("--matrix", required=True)
    p_check.add_argument("--phase", required=True)
    p_check.add_argument("--spacetime", action="store_true")
    p_check.add_argument("--dual", action="store_true")
    p_check.set_defaults(fn=_cmd_check)

    p_env = sub.add_parser("envelope", help="solve an obstacle envelope")
    p_env.add_argument("--config", required=True)
    p_env.add_argument("--out")
    p_env.set_defaults(fn=_cmd_envelope)

    p_dir = sub.add_parser("dirichlet", help="solve the Dirichlet problem")
    p_dir.add_argument("--config", required=True)
    p_dir.add_argument("--out")
    p_dir.set_defaults(fn=_cmd_dirichlet)

    p_dsl = sub.add_parser("dsl-solve", help="solve the space-time problem")
    p_dsl.add_argument("--config", required=True)
    p_dsl.add_argument("--out")
    p_dsl.add_argument("--tau-samples", type=int)
    p_dsl.add_argument("--threads", type=int)
    p_dsl.add_argument("--seed", type=int, default=0)
    p_dsl.set_defaults(fn=_cmd_dsl_solve)

    p_ver = sub.add_parser("verify", help="verify a solution CSV")
    p_ver.add_argument("--solution", required=True)
    p_ver.add_argument("--phase", required=True)
    p_ver.add_argument("--out")
    p_ver.set_defaults(fn=_cmd_verify)

    return parser


def run(argv=None) -> int:
    parser = _build_parser()
    try:
        args, extras = parser.parse_known_args(argv)
        args.tolerances = _extract_tolerances(extras)
        return args.fn(args)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ConvergenceError, SamplingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
