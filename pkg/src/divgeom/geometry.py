"""Divergence inner products, orthogonality and ball predicates, and
numerical construction of points on divergence lines.

The inner product of the segment pair (P,Q) against (R,Q) is

    <PQ||RQ> = sum_z (q(z) - r(z)) * dD(P||Q)/dq(z)

which reduces to the ordinary inner product of p - q and r - q for the
squared Euclidean distance.  A point at position alpha on the line through
P and Q is the unique interior r solving

    (1 - alpha) * dD(P||r)/dr + alpha * dD(Q||r)/dr = C

together with normalization; C is determined jointly and reported.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._stationary import solve_weighted_stationarity
from .core import (
    DEFAULT_CONFIG,
    DiscreteDistribution,
    DivergenceSpec,
    InvalidSpec,
    NumericConfig,
    make_distribution,
    require_same_support,
    validate_for_family,
)
from .divergences import eval_mass, grad_second_mass

__all__ = [
    "BallSpec",
    "LinePointResult",
    "inner_product",
    "is_orthogonal",
    "ball_contains",
    "on_boundary",
    "line_point",
]


@dataclass(frozen=True)
class BallSpec:
    """The set of distributions Q with D(center||Q) <= radius."""

    center: DiscreteDistribution
    radius: float
    spec: DivergenceSpec

    def __post_init__(self) -> None:
        if not float(self.radius) >= 0.0:
            raise InvalidSpec(f"ball radius must be nonnegative, got {self.radius!r}")
        validate_for_family(self.center, self.spec, DEFAULT_CONFIG)


@dataclass(frozen=True)
class LinePointResult:
    """A solved point on a divergence line with its multiplier and residual."""

    point: DiscreteDistribution
    alpha: float
    multiplier: float
    residual: float


def inner_product(
    spec: DivergenceSpec,
    P: DiscreteDistribution,
    Q: DiscreteDistribution,
    R: DiscreteDistribution,
    cfg: NumericConfig = DEFAULT_CONFIG,
) -> float:
    """<PQ||RQ>, linear (affine) in the third argument."""
    require_same_support(P, Q, R)
    validate_for_family(P, spec, cfg)
    validate_for_family(Q, spec, cfg)
    g = grad_second_mass(spec, P.mass, Q.mass)
    return float((Q.mass - R.mass) @ g)


def is_orthogonal(
    spec: DivergenceSpec,
    P: DiscreteDistribution,
    Q: DiscreteDistribution,
    R: DiscreteDistribution,
    tol: float,
    cfg: NumericConfig = DEFAULT_CONFIG,
) -> bool:
    """Whether R lies in the orthogonal subspace at Q relative to P."""
    return abs(inner_product(spec, P, Q, R, cfg)) <= tol


def ball_contains(
    ball: BallSpec,
    Q: DiscreteDistribution,
    cfg: NumericConfig = DEFAULT_CONFIG,
) -> bool:
    require_same_support(ball.center, Q)
    validate_for_family(Q, ball.spec, cfg)
    value = float(eval_mass(ball.spec, ball.center.mass, Q.mass))
    return value <= ball.radius + cfg.solver_tol


def on_boundary(
    ball: BallSpec,
    Q: DiscreteDistribution,
    cfg: NumericConfig = DEFAULT_CONFIG,
) -> bool:
    require_same_support(ball.center, Q)
    validate_for_family(Q, ball.spec, cfg)
    value = float(eval_mass(ball.spec, ball.center.mass, Q.mass))
    return abs(value - ball.radius) <= cfg.solver_tol


def _line_stationarity(spec, p, q, alpha, r):
    g = (1.0 - alpha) * grad_second_mass(spec, p, r)
    g += alpha * grad_second_mass(spec, q, r)
    C = float(r @ g)
    return C, float(np.max(np.abs(g - C)))


def line_point(
    spec: DivergenceSpec,
    P: DiscreteDistribution,
    Q: DiscreteDistribution,
    alpha: float,
    cfg: NumericConfig = DEFAULT_CONFIG,
) -> LinePointResult:
    """The point at position alpha in [0, 1] on the divergence line through
    P and Q.

    Endpoints are returned exactly.  The Euclidean and KL lines are the
    mixture (1-alpha) P + alpha Q and the reverse-KL line is the normalized
    geometric mean, all returned in closed form; other families are solved
    by Newton starting from the mixture.  Raises NonConvergence when the
    stationarity system cannot be driven below cfg.solver_tol.
    """
    require_same_support(P, Q)
    validate_for_family(P, spec, cfg)
    validate_for_family(Q, spec, cfg)
    alpha = float(alpha)
    if not 0.0 <= alpha <= 1.0:
        raise InvalidSpec(f"line position alpha must lie in [0, 1], got {alpha!r}")

    p, q = P.mass, Q.mass
    if alpha == 0.0:
        mass = p
    elif alpha == 1.0:
        mass = q
    elif spec.family in ("euclidean", "kl"):
        mass = (1.0 - alpha) * p + alpha * q
    elif spec.family == "reverse_kl":
        logmass = (1.0 - alpha) * np.log(p) + alpha * np.log(q)
        mass = np.exp(logmass - logmass.max())
        mass /= mass.sum()
    else:
        points = np.vstack([p, q])
        weights = np.array([1.0 - alpha, alpha])
        result = solve_weighted_stationarity(spec, points, weights, cfg)
        if not result.converged:
            from .solvers import NonConvergence

            raise NonConvergence(
                f"line point at alpha={alpha:g} for family '{spec.label}' did "
                f"not converge (stationarity residual {result.stationarity_residual:.3e})"
            )
        mass = result.r

    point = make_distribution(mass, labels=P.labels, cfg=cfg)
    C, residual = _line_stationarity(spec, p, q, alpha, point.mass)
    return LinePointResult(point=point, alpha=alpha, multiplier=C, residual=residual)
