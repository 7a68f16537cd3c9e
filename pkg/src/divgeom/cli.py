"""Command-line front end.

Commands: eval, grad, inner-product, line, centroid, project-ball,
project-moments, verify, sweep.  Results are JSON (CSV for sweeps) printed
with 17 significant digits so every double round-trips losslessly.

Exit codes: 0 success, 1 domain or validation error, 2 solver
non-convergence, 3 verify-suite failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

import numpy as np

from .core import (
    DEFAULT_CONFIG,
    DiscreteDistribution,
    DivergenceError,
    DivergenceSpec,
    InvalidSpec,
    NumericConfig,
    get_generator,
    make_distribution,
    standard_specs,
)
from .divergences import eval as div_eval
from .divergences import grad_first, grad_second
from .geometry import BallSpec, inner_product, line_point
from .solvers import (
    CentroidProblem,
    MomentConstraintSet,
    NonConvergence,
    SolverReport,
    centroid,
    project_ball,
    project_moments,
)
from .verify import run_registry_checks

__all__ = ["main", "run", "ParseError"]


class ParseError(DivergenceError):
    """Malformed command-line input or input file."""


# ---------------------------------------------------------------------------
# Serialization: floats at 17 significant digits, deterministic key order.

def _fmt_float(x: float) -> str:
    if not np.isfinite(x):
        raise ParseError(f"cannot serialize non-finite value {x!r}")
    s = f"{float(x):.17g}"
    if not any(c in s for c in ".eE"):
        s += ".0"
    return s


def dumps(obj) -> str:
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        items = ", ".join(f"{json.dumps(str(k))}: {dumps(v)}" for k, v in obj.items())
        return "{" + items + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(dumps(v) for v in obj) + "]"
    raise ParseError(f"cannot serialize {type(obj).__name__}")


def _dist_payload(dist: DiscreteDistribution) -> dict:
    return {"mass": list(dist.mass), "labels": list(dist.labels)}


def _report_payload(report: SolverReport) -> dict:
    return {
        "solution": _dist_payload(report.solution),
        "multipliers": report.multipliers,
        "residuals": {
            "stationarity": report.stationarity_residual,
            "constraint": report.constraint_residual,
        },
        "iterations": report.iterations,
        "converged": report.converged,
    }


# ---------------------------------------------------------------------------
# Input parsing.

def _load_json(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read JSON from {path}: {exc}") from None


def load_distribution(path: str, cfg: NumericConfig) -> DiscreteDistribution:
    doc = _load_json(path)
    if not isinstance(doc, dict) or "mass" not in doc:
        raise ParseError(f"{path}: expected an object with a 'mass' array")
    return make_distribution(doc["mass"], doc.get("labels"), cfg)


def load_points(path: str, cfg: NumericConfig) -> list[DiscreteDistribution]:
    doc = _load_json(path)
    if not isinstance(doc, list) or not doc:
        raise ParseError(f"{path}: expected a non-empty array of distributions")
    return [make_distribution(d["mass"], d.get("labels"), cfg) for d in doc]


def load_constraints(path: str) -> MomentConstraintSet:
    doc = _load_json(path)
    if not isinstance(doc, dict) or "T" not in doc or "m" not in doc:
        raise ParseError(f"{path}: expected an object with 'T' and 'm'")
    return MomentConstraintSet(statistics=doc["T"], targets=doc["m"])


def _parse_weights(text: str) -> np.ndarray:
    try:
        return np.array([float(tok) for tok in text.split(",")])
    except ValueError as exc:
        raise ParseError(f"bad --weights value: {exc}") from None


def build_spec(args) -> DivergenceSpec:
    family = args.family
    generator = get_generator(args.generator) if args.generator else None
    alpha = None
    if family == "renyi":
        alpha = args.renyi_alpha
        if alpha is None and args.command not in ("line", "sweep"):
            alpha = args.alpha
        if alpha is None:
            raise ParseError(
                "family 'renyi' needs its order: use --alpha, or --renyi-alpha "
                "for commands where --alpha is the line position"
            )
    return DivergenceSpec(family=family, generator=generator, alpha=alpha)


def build_config(args) -> NumericConfig:
    kwargs = {}
    if getattr(args, "tol", None) is not None:
        kwargs["solver_tol"] = args.tol
    if getattr(args, "max_iter", None) is not None:
        kwargs["max_iter"] = args.max_iter
    return NumericConfig(**kwargs) if kwargs else DEFAULT_CONFIG


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# Commands.

def _cmd_eval(args, spec, cfg):
    P = load_distribution(args.p, cfg)
    Q = load_distribution(args.q, cfg)
    return dumps({"value": div_eval(spec, P, Q, cfg)}) + "\n"


def _cmd_grad(args, spec, cfg):
    P = load_distribution(args.p, cfg)
    Q = load_distribution(args.q, cfg)
    fn = grad_second if args.wrt == "second" else grad_first
    g = fn(spec, P, Q, cfg)
    return dumps({"values": list(g.values), "wrt": g.wrt}) + "\n"


def _cmd_inner_product(args, spec, cfg):
    P = load_distribution(args.p, cfg)
    Q = load_distribution(args.q, cfg)
    R = load_distribution(args.r, cfg)
    return dumps({"value": inner_product(spec, P, Q, R, cfg)}) + "\n"


def _cmd_line(args, spec, cfg):
    P = load_distribution(args.p, cfg)
    Q = load_distribution(args.q, cfg)
    if args.alpha is None:
        raise ParseError("line requires --alpha in [0, 1]")
    res = line_point(spec, P, Q, args.alpha, cfg)
    return dumps(
        {
            "point": _dist_payload(res.point),
            "alpha": res.alpha,
            "multiplier": res.multiplier,
            "residual": res.residual,
        }
    ) + "\n"


def _cmd_centroid(args, spec, cfg):
    points = load_points(args.points, cfg)
    if args.weights is None:
        raise ParseError("centroid requires --weights w1,w2,...")
    weights = _parse_weights(args.weights)
    problem = CentroidProblem(spec=spec, points=points, weights=weights, cfg=cfg)
    return dumps(_report_payload(centroid(problem, cfg))) + "\n"


def _cmd_project_ball(args, spec, cfg):
    center = load_distribution(args.center, cfg)
    Q = load_distribution(args.q, cfg)
    if args.kappa is None:
        raise ParseError("project-ball requires --kappa")
    ball = BallSpec(center=center, radius=args.kappa, spec=spec)
    return dumps(_report_payload(project_ball(ball, Q, cfg))) + "\n"


def _cmd_project_moments(args, spec, cfg):
    P = load_distribution(args.p, cfg)
    if args.constraints is None:
        raise ParseError("project-moments requires --constraints FILE")
    constraints = load_constraints(args.constraints)
    return dumps(_report_payload(project_moments(spec, P, constraints, cfg))) + "\n"


def _cmd_verify(args, cfg):
    if args.family == "all":
        specs = standard_specs()
    else:
        specs = [build_spec(args)]
    reports = run_registry_checks(
        specs=specs, trials=args.trials, seed=args.seed, cfg=cfg
    )
    lines = []
    failures = 0
    for rep in reports:
        failures += rep.failures
        lines.append(
            dumps(
                {
                    "name": rep.name,
                    "trials": rep.trials,
                    "worst_slack": rep.worst_slack,
                    "failures": rep.failures,
                    "seed": rep.seed,
                }
            )
        )
    _emit("\n".join(lines) + "\n", args.out)
    return 3 if failures else 0


def _cmd_sweep(args, spec, cfg):
    P = load_distribution(args.p, cfg)
    Q = load_distribution(args.q, cfg)
    rows = []
    if args.kind == "line":
        if args.alpha is not None:
            alphas = [float(args.alpha)]
        else:
            alphas = np.linspace(0.0, 1.0, args.steps)
        for a in alphas:
            res = line_point(spec, P, Q, float(a), cfg)
            value = div_eval(spec, P, res.point, cfg)
            rows.append((float(a), value, res.residual))
    else:
        total = div_eval(spec, P, Q, cfg)
        kappas = np.linspace(0.0, total, args.steps)
        for k in kappas:
            ball = BallSpec(center=P, radius=float(k), spec=spec)
            rep = project_ball(ball, Q, cfg)
            value = div_eval(spec, Q, rep.solution, cfg)
            residual = max(rep.stationarity_residual, rep.constraint_residual)
            rows.append((float(k), value, residual))

    if args.format == "csv":
        lines = ["parameter,value,residual"]
        for p, v, r in rows:
            lines.append(f"{_fmt_float(p)},{_fmt_float(v)},{_fmt_float(r)}")
        return "\n".join(lines) + "\n"
    payload = [{"parameter": p, "value": v, "residual": r} for p, v, r in rows]
    return dumps(payload) + "\n"


# ---------------------------------------------------------------------------

def _add_common(sub, *, dist_flags=(), needs_spec=True):
    if needs_spec:
        sub.add_argument("--family", required=True,
                         help="divergence family, or 'all' for verify")
        sub.add_argument("--generator", default=None,
                         help="generator name for bregman/f_divergence")
        sub.add_argument("--alpha", type=float, default=None,
                         help="Rényi order, or line position for line/sweep")
        sub.add_argument("--renyi-alpha", type=float, default=None, dest="renyi_alpha",
                         help="Rényi order when --alpha means the line position")
    for flag in dist_flags:
        sub.add_argument(f"--{flag}", required=False, help=f"{flag} distribution JSON")
    sub.add_argument("--tol", type=float, default=None, help="solver tolerance")
    sub.add_argument("--max-iter", type=int, default=None, dest="max_iter")
    sub.add_argument("--out", default=None, help="output path (default stdout)")
    sub.add_argument("--format", choices=("json", "csv"), default="json")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="divgeom",
        description="Evaluate, differentiate and minimize strictly convex "
        "divergences on finite probability supports.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("eval", help="divergence value D(P||Q)")
    _add_common(sub, dist_flags=("p", "q"))

    sub = subs.add_parser("grad", help="per-atom functional derivative")
    _add_common(sub, dist_flags=("p", "q"))
    sub.add_argument("--wrt", choices=("first", "second"), default="second")

    sub = subs.add_parser("inner-product", help="<PQ||RQ>")
    _add_common(sub, dist_flags=("p", "q", "r"))

    sub = subs.add_parser("line", help="point on the divergence line")
    _add_common(sub, dist_flags=("p", "q"))

    sub = subs.add_parser("centroid", help="weighted divergence centroid")
    _add_common(sub)
    sub.add_argument("--points", required=True, help="JSON array of distributions")
    sub.add_argument("--weights", required=True, help="comma-separated weights")

    sub = subs.add_parser("project-ball", help="project onto a divergence ball")
    _add_common(sub, dist_flags=("center", "q"))
    sub.add_argument("--kappa", type=float, default=None, help="ball radius")

    sub = subs.add_parser("project-moments", help="project onto moment constraints")
    _add_common(sub, dist_flags=("p",))
    sub.add_argument("--constraints", default=None,
                     help='JSON file {"T": [[...]], "m": [...]}')

    sub = subs.add_parser("verify", help="run the theorem-check suite")
    _add_common(sub)
    sub.add_argument("--trials", type=int, default=200)
    sub.add_argument("--seed", type=int, default=0)

    sub = subs.add_parser("sweep", help="emit line/ball sweep data")
    _add_common(sub, dist_flags=("p", "q"))
    sub.add_argument("--kind", choices=("line", "ball"), default="line")
    sub.add_argument("--steps", type=int, default=11)

    return parser


def run(args: argparse.Namespace) -> int:
    """Dispatch a parsed command; returns the process exit code."""
    cfg = build_config(args)
    if args.command == "verify":
        return _cmd_verify(args, cfg)
    if args.format == "csv" and args.command != "sweep":
        raise ParseError("CSV output is only available for sweep")

    spec = build_spec(args)
    handlers = {
        "eval": _cmd_eval,
        "grad": _cmd_grad,
        "inner-product": _cmd_inner_product,
        "line": _cmd_line,
        "centroid": _cmd_centroid,
        "project-ball": _cmd_project_ball,
        "project-moments": _cmd_project_moments,
        "sweep": _cmd_sweep,
    }
    text = handlers[args.command](args, spec, cfg)
    _emit(text, args.out)
    return 0


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return run(args)
    except NonConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
