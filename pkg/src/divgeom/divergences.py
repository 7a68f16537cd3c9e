"""Divergence values and per-atom functional derivatives for each family.

Mass-level kernels broadcast over leading axes: arrays of shape (..., n)
yield values of shape (...) and gradients of shape (..., n).  The public
operations validate their inputs; the ``*_mass`` kernels do not, which lets
solvers and finite-difference probes evaluate freely on positive vectors.

Family conventions on a shared finite support (counting measure):

* euclidean      0.5 * sum((q - p)^2)
* kl             sum(p * log(p / q))
* reverse_kl     sum(q * log(q / p))
* bregman(f)     sum(f(q) - f(p) - f'(p) * (q - p)), the generated
                 divergence oriented so it is strictly convex in q
* f_divergence   sum(q * f(p / q)) with f(1) = 0
* renyi(a)       log(sum(p^a * q^(1-a))) / (a - 1)
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import logsumexp

from .core import (
    DEFAULT_CONFIG,
    DiscreteDistribution,
    DivergenceError,
    DivergenceSpec,
    DomainViolation,
    GeneratorSpec,
    InvalidSpec,
    NumericConfig,
    require_same_support,
    validate_for_family,
)

__all__ = [
    "GradientVector",
    "UnsupportedDerivative",
    "eval",
    "eval_mass",
    "grad_second",
    "grad_second_mass",
    "grad_first",
    "grad_first_mass",
    "grad_second_jacobian",
    "fd_check_gradient",
]


class UnsupportedDerivative(DivergenceError):
    """The requested derivative is not available for this family."""


@dataclass(frozen=True)
class GradientVector:
    """Per-atom functional derivative evaluated on the support."""

    values: np.ndarray
    wrt: str  # "first" or "second"

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(values)):
            raise DomainViolation("gradient has non-finite entries")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)


def _generator_deriv2(gen: GeneratorSpec) -> Callable:
    if gen.deriv2 is not None:
        return gen.deriv2

    def fd(x):
        h = 1e-6 * np.maximum(np.abs(x), 1e-3)
        return (gen.deriv(x + h) - gen.deriv(x - h)) / (2.0 * h)

    return fd


def _generator_dual_deriv2(gen: GeneratorSpec) -> Callable:
    if gen.dual_deriv2 is not None:
        return gen.dual_deriv2

    def fd(x):
        h = 1e-6 * np.maximum(np.abs(x), 1e-3)
        return (gen.dual_deriv(x + h) - gen.dual_deriv(x - h)) / (2.0 * h)

    return fd


def _renyi_lognorm(alpha: float, p: np.ndarray, q: np.ndarray) -> np.ndarray:
    # log sum p^a q^(1-a), evaluated in log space so large orders and skewed
    # mass ratios cannot overflow.
    return logsumexp(alpha * np.log(p) + (1.0 - alpha) * np.log(q), axis=-1)


def eval_mass(spec: DivergenceSpec, p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Divergence value on raw mass arrays, broadcasting over leading axes."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    family = spec.family
    if family == "euclidean":
        return 0.5 * np.sum((q - p) ** 2, axis=-1)
    if family == "kl":
        return np.sum(p * (np.log(p) - np.log(q)), axis=-1)
    if family == "reverse_kl":
        return eval_mass(DivergenceSpec("kl"), q, p)
    if family == "bregman":
        f = spec.generator
        return np.sum(f.eval(q) - f.eval(p) - f.deriv(p) * (q - p), axis=-1)
    if family == "f_divergence":
        f = spec.generator
        return np.sum(q * f.eval(p / q), axis=-1)
    if family == "renyi":
        a = float(spec.alpha)
        return _renyi_lognorm(a, p, q) / (a - 1.0)
    raise AssertionError(f"unhandled family {family!r}")


def grad_second_mass(spec: DivergenceSpec, p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Per-atom derivative of the divergence with respect to q."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    family = spec.family
    if family == "euclidean":
        return q - p
    if family == "kl":
        return -p / q
    if family == "reverse_kl":
        return np.log(q) - np.log(p) + 1.0
    if family == "bregman":
        f = spec.generator
        return f.deriv(q) - f.deriv(p)
    if family == "f_divergence":
        return spec.generator.dual_deriv(q / p)
    if family == "renyi":
        a = float(spec.alpha)
        lognorm = _renyi_lognorm(a, p, q)
        return -np.exp(a * (np.log(p) - np.log(q)) - lognorm[..., None])
    raise AssertionError(f"unhandled family {family!r}")


def grad_first_mass(spec: DivergenceSpec, p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Per-atom derivative of the divergence with respect to p."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    family = spec.family
    if family == "euclidean":
        return p - q
    if family == "kl":
        return np.log(p) - np.log(q) + 1.0
    if family == "reverse_kl":
        return -q / p
    if family == "bregman":
        f = spec.generator
        return _generator_deriv2(f)(p) * (p - q)
    if family == "f_divergence":
        return spec.generator.deriv(p / q)
    if family == "renyi":
        raise UnsupportedDerivative(
            "first-argument derivative is not available for family 'renyi'"
        )
    raise AssertionError(f"unhandled family {family!r}")


def grad_second_jacobian(spec: DivergenceSpec, p: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Jacobian of grad_second_mass(spec, p, .) at r, as a dense (n, n) matrix.

    Diagonal for every family except renyi, whose normalizer couples atoms
    through a rank-one term.
    """
    p = np.asarray(p, dtype=float)
    r = np.asarray(r, dtype=float)
    family = spec.family
    if family == "euclidean":
        return np.eye(r.size)
    if family == "kl":
        return np.diag(p / r**2)
    if family == "reverse_kl":
        return np.diag(1.0 / r)
    if family == "bregman":
        return np.diag(_generator_deriv2(spec.generator)(r))
    if family == "f_divergence":
        return np.diag(_generator_dual_deriv2(spec.generator)(r / p) / p)
    if family == "renyi":
        a = float(spec.alpha)
        g = grad_second_mass(spec, p, r)
        return np.diag(-a * g / r) + (1.0 - a) * np.outer(g, g)
    raise AssertionError(f"unhandled family {family!r}")


def _validated_pair(spec, P, Q, cfg):
    require_same_support(P, Q)
    validate_for_family(P, spec, cfg)
    validate_for_family(Q, spec, cfg)


def eval(
    spec: DivergenceSpec,
    P: DiscreteDistribution,
    Q: DiscreteDistribution,
    cfg: NumericConfig = DEFAULT_CONFIG,
) -> float:
    """D(P||Q), nonnegative and zero exactly when P equals Q."""
    _validated_pair(spec, P, Q, cfg)
    return float(eval_mass(spec, P.mass, Q.mass))


def grad_second(
    spec: DivergenceSpec,
    P: DiscreteDistribution,
    Q: DiscreteDistribution,
    cfg: NumericConfig = DEFAULT_CONFIG,
) -> GradientVector:
    """Functional derivative of D(P||Q) with respect to the second argument."""
    _validated_pair(spec, P, Q, cfg)
    return GradientVector(grad_second_mass(spec, P.mass, Q.mass), wrt="second")


def grad_first(
    spec: DivergenceSpec,
    P: DiscreteDistribution,
    Q: DiscreteDistribution,
    cfg: NumericConfig = DEFAULT_CONFIG,
) -> GradientVector:
    """Functional derivative of D(P||Q) with respect to the first argument."""
    _validated_pair(spec, P, Q, cfg)
    return GradientVector(grad_first_mass(spec, P.mass, Q.mass), wrt="first")


def fd_check_gradient(
    spec: DivergenceSpec,
    P: DiscreteDistribution,
    Q: DiscreteDistribution,
    wrt: str = "second",
    step: Optional[float] = None,
    cfg: NumericConfig = DEFAULT_CONFIG,
) -> float:
    """Worst-case disagreement between the analytic gradient and central
    differences over all mass-preserving perturbation directions.

    The directions are pairwise atom transfers e_i - e_j, which span every
    perturbation with zero total mass.  Steps are scaled by the smaller of
    the two atom masses so probes stay strictly positive.
    """
    if wrt not in ("first", "second"):
        raise InvalidSpec(f"wrt must be 'first' or 'second', got {wrt!r}")
    if step is None:
        step = cfg.grad_fd_step
    if wrt == "second":
        g = grad_second(spec, P, Q, cfg).values
        base, fixed = Q.mass, P.mass
    else:
        g = grad_first(spec, P, Q, cfg).values
        base, fixed = P.mass, Q.mass

    n = base.size
    ii, jj = np.triu_indices(n, k=1)
    eps = step * np.minimum(base[ii], base[jj])
    plus = np.tile(base, (ii.size, 1))
    minus = plus.copy()
    rows = np.arange(ii.size)
    plus[rows, ii] += eps
    plus[rows, jj] -= eps
    minus[rows, ii] -= eps
    minus[rows, jj] += eps

    if wrt == "second":
        v_plus = eval_mass(spec, fixed, plus)
        v_minus = eval_mass(spec, fixed, minus)
    else:
        v_plus = eval_mass(spec, plus, fixed)
        v_minus = eval_mass(spec, minus, fixed)

    directional = (v_plus - v_minus) / (2.0 * eps)
    predicted = g[ii] - g[jj]
    return float(np.max(np.abs(directional - predicted)))
