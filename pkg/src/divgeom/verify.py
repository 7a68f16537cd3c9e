"""Brute-force oracles and randomized checks for the geometric inequalities
and minimizer conditions.

Every check is deterministic given its seed and returns a CheckReport; a
violated inequality raises CheckFailed carrying the counterexample.  The
grid oracle is deliberately independent of the solvers: it scans a simplex
lattice and never consults gradients.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import null_space

from .core import (
    DEFAULT_CONFIG,
    DiscreteDistribution,
    DivergenceError,
    DivergenceSpec,
    InvalidSpec,
    NumericConfig,
    make_distribution,
    standard_specs,
)
from .divergences import eval_mass, grad_second_mass
from .geometry import BallSpec
from .solvers import MomentConstraintSet, NonConvergence, project_ball, project_moments

__all__ = [
    "CheckReport",
    "CheckFailed",
    "sample_interior",
    "simplex_grid",
    "brute_force_minimize",
    "slice_minimize",
    "check_three_point",
    "check_convexity_on_segment",
    "check_minimizer_inequality",
    "run_registry_checks",
]

SET_KINDS = ("ball", "moments", "orthogonal")


@dataclass(frozen=True)
class CheckReport:
    """Outcome of one randomized check: trial count, the most adverse margin
    observed, failure count, and the seed that reproduces it."""

    name: str
    trials: int
    worst_slack: float
    failures: int
    seed: int


class CheckFailed(DivergenceError):
    """A theorem check found a counterexample."""

    def __init__(self, message: str, report: CheckReport, counterexample: dict):
        super().__init__(message)
        self.report = report
        self.counterexample = counterexample


def sample_interior(
    rng: np.random.Generator,
    n: int,
    size: Optional[int] = None,
    cfg: NumericConfig = DEFAULT_CONFIG,
) -> np.ndarray:
    """Symmetric Dirichlet(2) samples floored away from the boundary."""
    x = rng.dirichlet(np.full(n, 2.0), size=size)
    x = np.maximum(x, 10.0 * cfg.interior_floor)
    return x / x.sum(axis=-1, keepdims=True)


def simplex_grid(n: int, steps: int) -> np.ndarray:
    """All lattice points with denominator ``steps`` on the (n-1)-simplex."""
    if n == 2:
        k = np.arange(steps + 1)
        pts = np.stack([k, steps - k], axis=1)
    elif n == 3:
        blocks = []
        for i in range(steps + 1):
            j = np.arange(steps - i + 1)
            blocks.append(np.stack([np.full_like(j, i), j, steps - i - j], axis=1))
        pts = np.concatenate(blocks)
    elif n == 4:
        blocks = []
        for i in range(steps + 1):
            for j in range(steps - i + 1):
                k = np.arange(steps - i - j + 1)
                blocks.append(
                    np.stack(
                        [np.full_like(k, i), np.full_like(k, j), k,
                         steps - i - j - k],
                        axis=1,
                    )
                )
        pts = np.concatenate(blocks)
    else:
        raise InvalidSpec("the grid oracle supports support sizes 2, 3 and 4")
    return pts.astype(float) / float(steps)


def brute_force_minimize(
    objective: Callable[[np.ndarray], float],
    support_size: int,
    grid_steps: int,
    cfg: NumericConfig = DEFAULT_CONFIG,
    vectorized: bool = False,
) -> tuple[DiscreteDistribution, float]:
    """Exhaustive minimization of ``objective`` over the simplex lattice.

    The lattice is shifted slightly into the interior so log-based
    objectives stay finite on boundary lattice points.  ``objective``
    receives mass vectors; with ``vectorized=True`` it receives the whole
    (M, n) grid at once and must return M values.
    """
    if support_size not in (2, 3, 4):
        raise InvalidSpec("support_size must be 2, 3 or 4")
    if grid_steps < 50:
        raise InvalidSpec("grid_steps must be at least 50")
    grid = simplex_grid(support_size, grid_steps)
    delta = cfg.interior_floor
    grid = (grid + delta) / (1.0 + support_size * delta)
    if vectorized:
        values = np.asarray(objective(grid), dtype=float)
    else:
        values = np.array([float(objective(row)) for row in grid])
    best = int(np.argmin(values))
    return make_distribution(grid[best], cfg=cfg), float(values[best])


def _slice_geometry(T, m, x0, cfg):
    # One-dimensional feasible slice {x0 + t d} inside the floored simplex.
    n = x0.size
    basis = null_space(np.vstack([T, np.ones(n)]))
    if basis.shape[1] != 1:
        raise InvalidSpec("slice search needs exactly one free direction")
    d = basis[:, 0]
    lo = 10.0 * cfg.interior_floor
    t_lo, t_hi = -np.inf, np.inf
    for di, xi in zip(d, x0):
        if di > 1e-15:
            t_lo = max(t_lo, (lo - xi) / di)
            t_hi = min(t_hi, (1.0 - xi) / di)
        elif di < -1e-15:
            t_lo = max(t_lo, (1.0 - xi) / di)
            t_hi = min(t_hi, (lo - xi) / di)
    return d, t_lo, t_hi


def slice_minimize(
    objective: Callable[[np.ndarray], np.ndarray],
    T: np.ndarray,
    m: np.ndarray,
    x0: np.ndarray,
    steps: int = 4001,
    cfg: NumericConfig = DEFAULT_CONFIG,
) -> tuple[np.ndarray, float]:
    """Grid search over the feasible affine slice through x0.

    The constraint set {T r = m, sum r = 1} on a 3-atom support is a
    segment; this scans it exactly, which gives an oracle for constrained
    projections that never touches the solver.  ``objective`` must accept a
    stacked (M, n) array.
    """
    d, t_lo, t_hi = _slice_geometry(T, m, x0, cfg)
    ts = np.linspace(t_lo, t_hi, steps)
    points = x0[None, :] + ts[:, None] * d[None, :]
    values = np.asarray(objective(points), dtype=float)
    best = int(np.argmin(values))
    return points[best], float(values[best])


def _report_or_raise(name, trials, worst, failures, seed, counterexample):
    report = CheckReport(
        name=name,
        trials=trials,
        worst_slack=float(worst),
        failures=failures,
        seed=seed,
    )
    if failures:
        raise CheckFailed(
            f"{name}: {failures} of {trials} trials violated the bound",
            report=report,
            counterexample=counterexample,
        )
    return report


def check_three_point(
    spec: DivergenceSpec,
    trials: int,
    seed: int,
    cfg: NumericConfig = DEFAULT_CONFIG,
) -> CheckReport:
    """D(P||R) >= D(P||Q) - <PQ||RQ> on random interior triples.

    Slack must be nonnegative up to 1e-10, strictly positive once Q and R
    are separated by more than 1e-4 in the max norm, and zero to 1e-12 on
    the deliberately included Q = R triples.
    """
    rng = np.random.default_rng(seed)
    worst = np.inf
    failures = 0
    counterexample = None
    sizes = (2, 3, 5)
    per = [trials // len(sizes)] * len(sizes)
    per[-1] += trials - sum(per)
    for n, t in zip(sizes, per):
        if t == 0:
            continue
        P = sample_interior(rng, n, t, cfg)
        Q = sample_interior(rng, n, t, cfg)
        R = sample_interior(rng, n, t, cfg)
        equal = np.arange(t) % 10 == 0
        R[equal] = Q[equal]

        g = grad_second_mass(spec, P, Q)
        ip = np.sum((Q - R) * g, axis=-1)
        slack = eval_mass(spec, P, R) - eval_mass(spec, P, Q) + ip
        sep = np.max(np.abs(Q - R), axis=-1)

        bad = np.zeros(t, dtype=bool)
        bad |= equal & (np.abs(slack) > 1e-12)
        bad |= ~equal & (slack < -1e-10)
        bad |= ~equal & (sep > 1e-4) & (slack <= 0.0)
        if np.any(bad):
            failures += int(bad.sum())
            if counterexample is None:
                i = int(np.argmax(bad))
                counterexample = {
                    "P": P[i].tolist(),
                    "Q": Q[i].tolist(),
                    "R": R[i].tolist(),
                    "slack": float(slack[i]),
                }
        if np.any(~equal):
            worst = min(worst, float(slack[~equal].min()))
    return _report_or_raise(
        f"three_point[{spec.label}]", trials, worst, failures, seed, counterexample
    )


def check_convexity_on_segment(
    spec: DivergenceSpec,
    trials: int,
    seed: int,
    cfg: NumericConfig = DEFAULT_CONFIG,
) -> CheckReport:
    """Second differences of t -> D(P || Q + (R-Q) t) must be positive.

    Q = R is rejected by the sampler since the segment degenerates.
    """
    rng = np.random.default_rng(seed)
    n_lambda = 11
    lam = np.linspace(0.0, 1.0, n_lambda)
    worst = np.inf
    failures = 0
    counterexample = None
    sizes = (2, 3, 5)
    per = [trials // len(sizes)] * len(sizes)
    per[-1] += trials - sum(per)
    for n, t in zip(sizes, per):
        if t == 0:
            continue
        P = sample_interior(rng, n, t, cfg)
        Q = sample_interior(rng, n, t, cfg)
        R = sample_interior(rng, n, t, cfg)
        for _ in range(20):
            close = np.max(np.abs(Q - R), axis=-1) < 1e-3
            if not np.any(close):
                break
            R[close] = sample_interior(rng, n, int(close.sum()), cfg)

        mix = Q[:, None, :] + (R - Q)[:, None, :] * lam[None, :, None]
        values = eval_mass(spec, P[:, None, :], mix)
        second = values[:, :-2] - 2.0 * values[:, 1:-1] + values[:, 2:]
        row_min = second.min(axis=1)
        bad = row_min <= 0.0
        if np.any(bad):
            failures += int(bad.sum())
            if counterexample is None:
                i = int(np.argmax(bad))
                counterexample = {
                    "P": P[i].tolist(),
                    "Q": Q[i].tolist(),
                    "R": R[i].tolist(),
                    "min_second_difference": float(row_min[i]),
                }
        worst = min(worst, float(row_min.min()))
    return _report_or_raise(
        f"segment_convexity[{spec.label}]", trials, worst, failures, seed,
        counterexample,
    )


def _ball_feasible_samples(spec, center, kappa, count, rng, cfg):
    # Mix random simplex points towards the center until each lands at a
    # uniformly chosen divergence level inside the ball; convexity of the
    # ball makes the segment parameter monotone, so bisection applies.
    n = center.size
    targets = kappa * rng.uniform(0.05, 0.95, size=count)
    X = sample_interior(rng, n, count, cfg)
    need = eval_mass(spec, center, X) > targets
    lo = np.zeros(count)
    hi = np.ones(count)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        pts = (1.0 - mid[:, None]) * center[None, :] + mid[:, None] * X
        inside = eval_mass(spec, center, pts) <= targets
        lo = np.where(need & inside, mid, lo)
        hi = np.where(need & ~inside, mid, hi)
    t = np.where(need, lo, 1.0)
    return (1.0 - t[:, None]) * center[None, :] + t[:, None] * X


def _moment_feasible_samples(T, m, x0, count, rng, cfg):
    d, t_lo, t_hi = _slice_geometry(T, m, x0, cfg)
    ts = rng.uniform(t_lo, t_hi, size=count)
    return x0[None, :] + ts[:, None] * d[None, :]


def check_minimizer_inequality(
    spec: DivergenceSpec,
    set_kind: str,
    trials: int,
    seed: int,
    cfg: NumericConfig = DEFAULT_CONFIG,
) -> CheckReport:
    """Solve random projection instances and verify both the inner-product
    condition <P P*||Q P*> <= 0 over feasible points and agreement with the
    independent grid oracle.

    ``trials`` budgets the work: one instance per 100 trials (at least one)
    with up to 100 feasible probes each.
    """
    if set_kind not in SET_KINDS:
        raise InvalidSpec(f"set_kind must be one of {SET_KINDS}")
    rng = np.random.default_rng(seed)
    instances = max(1, trials // 100)
    probes = min(trials, 100)
    n = 3
    ip_tol = 1e-8
    worst = -np.inf
    failures = 0
    counterexample = None

    for _ in range(instances):
        payload = None
        if set_kind == "ball":
            center = sample_interior(rng, n, cfg=cfg)
            source = sample_interior(rng, n, cfg=cfg)
            total = float(eval_mass(spec, center, source))
            if total < 1e-3:
                continue
            kappa = float(total * rng.uniform(0.2, 0.8))
            ball = BallSpec(
                center=make_distribution(center, cfg=cfg),
                radius=kappa,
                spec=spec,
            )
            try:
                report = project_ball(ball, make_distribution(source, cfg=cfg), cfg)
            except NonConvergence as exc:
                failures += 1
                payload = {"error": str(exc), "center": center.tolist()}
            else:
                sol = report.solution.mass
                g = grad_second_mass(spec, source, sol)
                feas = _ball_feasible_samples(spec, center, kappa, probes, rng, cfg)
                ips = (sol - feas) @ g
                worst = max(worst, float(ips.max()))
                if np.any(ips > ip_tol):
                    failures += 1
                    payload = {"max_inner_product": float(ips.max())}
                else:
                    steps = 120
                    grid = _shifted_grid(n, steps, cfg)
                    inside = eval_mass(spec, center, grid) <= kappa
                    vals = np.where(inside, eval_mass(spec, source, grid), np.inf)
                    best = int(np.argmin(vals))
                    solver_val = float(eval_mass(spec, source, sol))
                    bound = 4.0 / steps * (np.abs(g).sum() + 1.0)
                    if solver_val > vals[best] + 1e-9 or vals[best] - solver_val > bound:
                        failures += 1
                        payload = {
                            "solver_value": solver_val,
                            "grid_value": float(vals[best]),
                            "grid_point": grid[best].tolist(),
                        }
        else:
            base = sample_interior(rng, n, cfg=cfg)
            P = make_distribution(base, cfg=cfg)
            if set_kind == "moments":
                T = np.arange(n, dtype=float)[None, :]
                m = np.array([float(T[0] @ sample_interior(rng, n, cfg=cfg))])
            else:
                other = sample_interior(rng, n, cfg=cfg)
                g_pq = grad_second_mass(spec, base, other)
                T = (g_pq / np.max(np.abs(g_pq)))[None, :]
                m = np.array([float(T[0] @ other)])
            constraints = MomentConstraintSet(statistics=T, targets=m)
            try:
                report = project_moments(spec, P, constraints, cfg)
            except NonConvergence as exc:
                failures += 1
                payload = {"error": str(exc), "P": base.tolist()}
            else:
                sol = report.solution.mass
                if set_kind == "orthogonal":
                    # The minimizer over the orthogonal subspace is the
                    # anchor point itself.
                    if float(np.max(np.abs(sol - other))) > 1e-6:
                        failures += 1
                        payload = {"solution": sol.tolist(), "anchor": other.tolist()}
                g = grad_second_mass(spec, base, sol)
                feas = _moment_feasible_samples(T, m, sol, probes, rng, cfg)
                ips = (sol - feas) @ g
                worst = max(worst, float(ips.max()))
                if payload is None and np.any(ips > ip_tol):
                    failures += 1
                    payload = {"max_inner_product": float(ips.max())}
                if payload is None:
                    obj = lambda pts: eval_mass(spec, base, pts)  # noqa: E731
                    best_pt, best_val = slice_minimize(obj, T, m, sol, cfg=cfg)
                    solver_val = float(eval_mass(spec, base, sol))
                    if solver_val > best_val + 1e-9:
                        failures += 1
                        payload = {
                            "solver_value": solver_val,
                            "slice_value": best_val,
                            "slice_point": best_pt.tolist(),
                        }
        if payload is not None and counterexample is None:
            counterexample = payload

    if not np.isfinite(worst):
        worst = 0.0
    return _report_or_raise(
        f"minimizer[{set_kind}][{spec.label}]",
        instances,
        worst,
        failures,
        seed,
        counterexample,
    )


_GRID_CACHE: dict = {}


def _shifted_grid(n, steps, cfg):
    key = (n, steps, cfg.interior_floor)
    if key not in _GRID_CACHE:
        grid = simplex_grid(n, steps)
        delta = cfg.interior_floor
        _GRID_CACHE[key] = (grid + delta) / (1.0 + n * delta)
    return _GRID_CACHE[key]


def run_registry_checks(
    specs: Optional[Sequence[DivergenceSpec]] = None,
    trials: int = 200,
    seed: int = 0,
    cfg: NumericConfig = DEFAULT_CONFIG,
) -> list[CheckReport]:
    """Run every check for every family in the registry.

    Failing checks are recorded in their report rather than raised, so a
    full matrix is always produced; any report with failures > 0 means the
    suite failed.
    """
    if specs is None:
        specs = standard_specs()
    reports = []
    for k, spec in enumerate(specs):
        jobs = [
            lambda s=spec, sd=seed + 101 * k: check_three_point(s, trials, sd, cfg),
            lambda s=spec, sd=seed + 101 * k + 1: check_convexity_on_segment(
                s, trials, sd, cfg
            ),
        ]
        for j, kind in enumerate(SET_KINDS):
            jobs.append(
                lambda s=spec, kd=kind, sd=seed + 101 * k + 2 + j:
                check_minimizer_inequality(s, kd, trials, sd, cfg)
            )
        for job in jobs:
            try:
                reports.append(job())
            except CheckFailed as exc:
                reports.append(exc.report)
    return reports
