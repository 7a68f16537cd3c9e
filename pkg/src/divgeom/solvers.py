"""Divergence minimization: weighted centroids, projection onto a
divergence ball, and projection onto a moment-constrained set.

Each solver returns a SolverReport whose solution satisfies the relevant
stationarity condition:

* centroid          sum_i w_i * dD(P_i||r)/dr = C
* project_ball      the solution is the point on the line through the ball
                    center and the source where D(center||.) equals the
                    radius, found by bisection on the line position
* project_moments   dD(P||r)/dr + sum_k beta_k T_k = C with T r = m

Uniqueness of interior stationary points for strictly convex families means
any convergent root of these systems is the minimizer.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from ._stationary import solve_weighted_stationarity
from .core import (
    DEFAULT_CONFIG,
    DiscreteDistribution,
    DivergenceError,
    DivergenceSpec,
    GeneratorSpec,
    InvalidSpec,
    NumericConfig,
    SupportMismatch,
    make_distribution,
    require_same_support,
    validate_for_family,
)
from .divergences import eval_mass, grad_second_mass
from .geometry import BallSpec, line_point

__all__ = [
    "NonConvergence",
    "InfeasibleConstraints",
    "DimensionMismatch",
    "CentroidProblem",
    "MomentConstraintSet",
    "SolverReport",
    "centroid",
    "bregman_centroid_vector",
    "project_ball",
    "project_moments",
]


class NonConvergence(DivergenceError):
    """A solver failed to reach the requested residual tolerance."""

    def __init__(self, message: str, report: Optional["SolverReport"] = None):
        super().__init__(message)
        self.report = report


class InfeasibleConstraints(DivergenceError):
    """The moment constraint set has no interior feasible point."""


class DimensionMismatch(DivergenceError):
    """Vector-space operands do not share a common dimension."""


@dataclass(frozen=True, eq=False)
class CentroidProblem:
    """Minimize sum_i weights[i] * D(points[i] || r) over the simplex."""

    spec: DivergenceSpec
    points: tuple[DiscreteDistribution, ...]
    weights: np.ndarray

    def __init__(self, spec, points, weights,
                 cfg: NumericConfig = DEFAULT_CONFIG):
        points = tuple(points)
        if len(points) < 1:
            raise InvalidSpec("centroid problem needs at least one point")
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (len(points),):
            raise InvalidSpec("weights must match the number of points")
        if np.any(weights < 0.0):
            raise InvalidSpec("weights must be nonnegative")
        if abs(weights.sum() - 1.0) > cfg.simplex_tol:
            raise InvalidSpec(
                f"weights must sum to 1 within {cfg.simplex_tol!r}, "
                f"got {weights.sum()!r}"
            )
        require_same_support(*points)
        weights.setflags(write=False)
        object.__setattr__(self, "spec", spec)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)


@dataclass(frozen=True, eq=False)
class MomentConstraintSet:
    """Linear expectation constraints: sum_z T_k(z) r(z) = m_k.

    statistics holds the K statistic vectors already evaluated on the atom
    labels; together with the all-ones vector they must be linearly
    independent, and K can be at most n - 1.
    """

    statistics: np.ndarray
    targets: np.ndarray

    def __post_init__(self) -> None:
        T = np.atleast_2d(np.asarray(self.statistics, dtype=float))
        m = np.atleast_1d(np.asarray(self.targets, dtype=float))
        K, n = T.shape
        if K < 1 or m.shape != (K,):
            raise InvalidSpec("need K >= 1 statistics with matching targets")
        if K > n - 1:
            raise InvalidSpec(f"K = {K} exceeds n - 1 = {n - 1}")
        stacked = np.vstack([T, np.ones(n)])
        if np.linalg.matrix_rank(stacked) != K + 1:
            raise InvalidSpec(
                "statistics plus the all-ones vector are linearly dependent"
            )
        T.setflags(write=False)
        m.setflags(write=False)
        object.__setattr__(self, "statistics", T)
        object.__setattr__(self, "targets", m)

    @property
    def n_constraints(self) -> int:
        return self.statistics.shape[0]


@dataclass(frozen=True)
class SolverReport:
    """Solution plus multipliers and convergence diagnostics."""

    solution: DiscreteDistribution
    multipliers: dict
    stationarity_residual: float
    constraint_residual: float
    iterations: int
    converged: bool


def centroid(
    problem: CentroidProblem,
    cfg: NumericConfig = DEFAULT_CONFIG,
) -> SolverReport:
    """The unique minimizer of the weighted divergence average.

    Starts Newton from the mixture of the inputs, which already solves the
    KL case exactly.  Atoms with zero weight are dropped before solving.
    """
    spec = problem.spec
    keep = problem.weights > 0.0
    if not np.any(keep):
        raise InvalidSpec("all centroid weights are zero")
    points = [p for p, k in zip(problem.points, keep) if k]
    weights = problem.weights[keep]
    for p in points:
        validate_for_family(p, spec, cfg)

    masses = np.vstack([p.mass for p in points])
    result = solve_weighted_stationarity(spec, masses, weights, cfg)
    solution = make_distribution(result.r, labels=points[0].labels, cfg=cfg)
    report = SolverReport(
        solution=solution,
        multipliers={"C": result.multiplier},
        stationarity_residual=result.stationarity_residual,
        constraint_residual=result.constraint_residual,
        iterations=result.iterations,
        converged=result.converged,
    )
    if not result.converged:
        raise NonConvergence(
            f"centroid for family '{spec.label}' stalled at stationarity "
            f"residual {result.stationarity_residual:.3e}",
            report=report,
        )
    return report


def bregman_centroid_vector(
    generator: GeneratorSpec,
    points: Sequence[Sequence[float]],
    weights: Sequence[float],
) -> np.ndarray:
    """Closed-form minimizer of the weighted vector-space divergence sum
    generated by a strictly convex function: the weighted arithmetic mean."""
    if not isinstance(generator, GeneratorSpec):
        raise InvalidSpec("generator must be a GeneratorSpec")
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] < 1:
        raise DimensionMismatch("points must be an N x d array with d >= 1")
    w = np.asarray(weights, dtype=float)
    if w.shape != (pts.shape[0],):
        raise DimensionMismatch("weights must match the number of points")
    if np.any(w < 0.0) or abs(w.sum() - 1.0) > DEFAULT_CONFIG.simplex_tol:
        raise InvalidSpec("weights must be nonnegative and sum to 1")
    return w @ pts


def _ball_line(spec, center, source, alpha, cfg):
    return line_point(spec, center, source, alpha, cfg)


def project_ball(
    ball: BallSpec,
    Q: DiscreteDistribution,
    cfg: NumericConfig = DEFAULT_CONFIG,
) -> SolverReport:
    """argmin of D(Q||r) over the divergence ball around ball.center.

    A source inside the ball (or grazing its boundary within solver_tol) is
    returned unchanged.  Otherwise the solution is the boundary point of the
    line from the center towards the source, located by bisection on the
    line position; the position is reported as multiplier 'alpha_star'.
    """
    spec = ball.spec
    center = ball.center
    require_same_support(center, Q)
    validate_for_family(Q, spec, cfg)
    kappa = float(ball.radius)
    d_source = float(eval_mass(spec, center.mass, Q.mass))

    def finish(result, alpha_star, iterations):
        boundary_gap = abs(
            float(eval_mass(spec, center.mass, result.point.mass)) - kappa
        )
        report = SolverReport(
            solution=result.point,
            multipliers={"C": result.multiplier, "alpha_star": alpha_star},
            stationarity_residual=result.residual,
            constraint_residual=boundary_gap,
            iterations=iterations,
            converged=result.residual <= cfg.solver_tol
            and boundary_gap <= cfg.solver_tol,
        )
        if not report.converged:
            raise NonConvergence(
                f"ball projection for family '{spec.label}' finished with "
                f"boundary gap {boundary_gap:.3e}",
                report=report,
            )
        return report

    if d_source <= kappa + cfg.solver_tol:
        # Source already feasible: it minimizes D(Q||.) over any set
        # containing it.
        g = grad_second_mass(spec, Q.mass, Q.mass)
        C = float(Q.mass @ g)
        return SolverReport(
            solution=Q,
            multipliers={"C": C, "alpha_star": 1.0},
            stationarity_residual=float(np.max(np.abs(g - C))),
            constraint_residual=0.0,
            iterations=0,
            converged=True,
        )
    if kappa <= cfg.solver_tol:
        # Degenerate ball: the only feasible point is the center.
        return finish(_ball_line(spec, center, Q, 0.0, cfg), 0.0, 0)

    def gap(alpha):
        res = _ball_line(spec, center, Q, alpha, cfg)
        return float(eval_mass(spec, center.mass, res.point.mass)) - kappa, res

    # Coarse scan for sign changes of D(center||L_alpha) - kappa; the value
    # runs from -kappa at alpha = 0 to d_source - kappa > 0 at alpha = 1.
    # Multiple crossings would mean a non-monotone profile; every bracket is
    # resolved and the candidate closest to the source in divergence wins.
    n_scan = 33
    alphas = np.linspace(0.0, 1.0, n_scan)
    values = []
    for a in alphas:
        values.append(gap(float(a))[0])
    brackets = [
        (float(alphas[i]), float(alphas[i + 1]))
        for i in range(n_scan - 1)
        if values[i] <= 0.0 <= values[i + 1] or values[i] >= 0.0 >= values[i + 1]
    ]
    if not brackets:
        raise NonConvergence(
            "ball projection found no boundary crossing although the source "
            f"lies outside the ball (family '{spec.label}')"
        )

    candidates = []
    iterations = 0
    for lo, hi in brackets:
        glo = gap(lo)[0]
        best = None
        for _ in range(200):
            iterations += 1
            mid = 0.5 * (lo + hi)
            gmid, res = gap(mid)
            best = (mid, res, gmid)
            if abs(gmid) <= 0.25 * cfg.solver_tol and hi - lo <= 1e-12:
                break
            if (glo <= 0.0) == (gmid <= 0.0):
                lo, glo = mid, gmid
            else:
                hi = mid
            if hi - lo < 1e-15:
                break
        candidates.append(best)

    alpha_star, result, _ = min(
        candidates,
        key=lambda c: float(eval_mass(spec, Q.mass, c[1].point.mass)),
    )
    return finish(result, alpha_star, iterations)


def _feasible_interior_point(T, m, n, cfg):
    A_eq = np.vstack([T, np.ones(n)])
    b_eq = np.concatenate([m, [1.0]])
    res = linprog(
        c=np.zeros(n),
        A_eq=A_eq,
        b_eq=b_eq,
        bounds=[(cfg.interior_floor, 1.0)] * n,
        method="highs",
    )
    if not res.success:
        raise InfeasibleConstraints(
            f"no interior distribution satisfies the moment constraints "
            f"({res.message})"
        )
    return np.asarray(res.x, dtype=float)


def project_moments(
    spec: DivergenceSpec,
    P: DiscreteDistribution,
    constraints: MomentConstraintSet,
    cfg: NumericConfig = DEFAULT_CONFIG,
) -> SolverReport:
    """argmin of D(P||r) over distributions matching the target moments.

    Feasibility of the constraint set over the interior of the simplex is
    established by a linear program before solving.  Newton starts from P
    pushed onto the constraint plane by the minimal Euclidean correction.
    """
    validate_for_family(P, spec, cfg)
    T = constraints.statistics
    m = constraints.targets
    n = P.support_size
    if T.shape[1] != n:
        raise SupportMismatch(
            f"constraint statistics have length {T.shape[1]} but the support "
            f"has {n} atoms"
        )

    feasible = _feasible_interior_point(T, m, n, cfg)

    # Minimal Euclidean correction of P onto the affine constraint set.
    A = np.vstack([T, np.ones(n)])
    b = np.concatenate([m, [1.0]])
    r0 = P.mass + A.T @ np.linalg.solve(A @ A.T, b - A @ P.mass)
    if np.any(r0 < 10.0 * cfg.interior_floor):
        r0 = 0.5 * np.maximum(r0, 10.0 * cfg.interior_floor) + 0.5 * feasible

    result = solve_weighted_stationarity(
        spec,
        P.mass[None, :],
        np.array([1.0]),
        cfg,
        T=T,
        m=m,
        r0=r0,
    )
    solution = make_distribution(result.r, labels=P.labels, cfg=cfg)
    report = SolverReport(
        solution=solution,
        multipliers={"C": result.multiplier, "beta": [float(b) for b in result.beta]},
        stationarity_residual=result.stationarity_residual,
        constraint_residual=result.constraint_residual,
        iterations=result.iterations,
        converged=result.converged,
    )
    if not result.converged:
        raise NonConvergence(
            f"moment projection for family '{spec.label}' stalled at "
            f"residuals ({result.stationarity_residual:.3e}, "
            f"{result.constraint_residual:.3e})",
            report=report,
        )
    return report
