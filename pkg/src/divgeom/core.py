"""Shared domain types: finite-support distributions, divergence family
specifications, generator registry, and numeric tolerances.

Everything here is immutable after construction and safe for concurrent use.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = [
    "FAMILIES",
    "DivergenceError",
    "EmptySupport",
    "NegativeMass",
    "ZeroTotalMass",
    "DomainViolation",
    "SupportMismatch",
    "InvalidSpec",
    "NumericConfig",
    "DEFAULT_CONFIG",
    "GeneratorSpec",
    "make_generator",
    "get_generator",
    "GENERATORS",
    "DivergenceSpec",
    "DiscreteDistribution",
    "make_distribution",
    "validate_for_family",
    "requires_interior",
    "require_same_support",
    "standard_specs",
]

FAMILIES = ("euclidean", "kl", "reverse_kl", "bregman", "f_divergence", "renyi")

# Families whose value or derivative formulas contain log(x) or 1/x and
# therefore need every atom strictly positive.
_INTERIOR_FAMILIES = frozenset({"kl", "reverse_kl", "f_divergence", "renyi"})


class DivergenceError(Exception):
    """Base class for every error raised by this package."""


class EmptySupport(DivergenceError):
    """Support has fewer than two atoms."""


class NegativeMass(DivergenceError):
    """A weight entry is negative."""


class ZeroTotalMass(DivergenceError):
    """Weights sum to zero, so no normalization exists."""


class DomainViolation(DivergenceError):
    """A distribution lies outside the domain of the requested family."""


class SupportMismatch(DivergenceError):
    """Operands do not share a common support size."""


class InvalidSpec(DivergenceError):
    """A specification object violates its own invariants."""


@dataclass(frozen=True)
class NumericConfig:
    """Tolerances and iteration limits shared by all numeric routines.

    simplex_tol is an absolute tolerance on sum(mass) == 1; interior_floor
    is the minimum atom mass accepted by families with singular derivatives
    at zero; grad_fd_step scales finite-difference probes; solver_tol bounds
    stationarity and constraint residuals at convergence.
    """

    simplex_tol: float = 1e-9
    interior_floor: float = 1e-12
    grad_fd_step: float = 1e-6
    solver_tol: float = 1e-10
    max_iter: int = 200

    def __post_init__(self) -> None:
        for name in ("simplex_tol", "interior_floor", "grad_fd_step", "solver_tol"):
            if not float(getattr(self, name)) > 0.0:
                raise InvalidSpec(f"{name} must be strictly positive")
        if self.interior_floor > 1e-6:
            raise InvalidSpec("interior_floor must be at most 1e-6")
        if self.max_iter < 1:
            raise InvalidSpec("max_iter must be at least 1")


DEFAULT_CONFIG = NumericConfig()


@dataclass(frozen=True)
class GeneratorSpec:
    """A strictly convex scalar generator f with the derivatives the
    divergence formulas need.

    eval is f itself, deriv is f', and dual_deriv is the derivative of
    x*f(1/x), which drives second-argument gradients of ratio-based
    divergences.  deriv2/dual_deriv2 are optional curvatures used to build
    Newton Jacobians; they are finite-differenced when absent.
    needs_positive marks generators whose f or f' is singular at zero.
    """

    name: str
    eval: Callable[[np.ndarray], np.ndarray]
    deriv: Callable[[np.ndarray], np.ndarray]
    dual_deriv: Callable[[np.ndarray], np.ndarray]
    deriv2: Optional[Callable[[np.ndarray], np.ndarray]] = None
    dual_deriv2: Optional[Callable[[np.ndarray], np.ndarray]] = None
    needs_positive: bool = True


def _check_generator_convexity(gen: GeneratorSpec, n_points: int = 20) -> None:
    # Second differences of f on an interior sample grid must be strictly
    # positive; this is the numeric stand-in for strict convexity.
    grid = np.linspace(0.05, 1.95, n_points + 2)
    vals = np.asarray(gen.eval(grid), dtype=float)
    second = vals[:-2] - 2.0 * vals[1:-1] + vals[2:]
    if not np.all(second > 0.0):
        raise InvalidSpec(
            f"generator '{gen.name}' is not strictly convex on the sample grid"
        )


def make_generator(
    name: str,
    eval: Callable,
    deriv: Callable,
    dual_deriv: Callable,
    deriv2: Optional[Callable] = None,
    dual_deriv2: Optional[Callable] = None,
    needs_positive: bool = True,
) -> GeneratorSpec:
    """Build and numerically validate a user-supplied generator triple."""
    gen = GeneratorSpec(name, eval, deriv, dual_deriv, deriv2, dual_deriv2,
                        needs_positive)
    _check_generator_convexity(gen)
    return gen


def _square_deriv2(x):
    return np.full_like(np.asarray(x, dtype=float), 2.0)


# The 'square' generator is (x-1)^2 rather than x^2 so that f(1) = 0 holds
# for ratio-based use; the quadratic divergence it generates is unchanged
# because affine additions to f cancel in the generated divergence.
GENERATORS: dict[str, GeneratorSpec] = {
    "xlogx": GeneratorSpec(
        name="xlogx",
        eval=lambda x: x * np.log(x),
        deriv=lambda x: np.log(x) + 1.0,
        dual_deriv=lambda x: -1.0 / x,
        deriv2=lambda x: 1.0 / x,
        dual_deriv2=lambda x: 1.0 / x**2,
        needs_positive=True,
    ),
    "square": GeneratorSpec(
        name="square",
        eval=lambda x: (x - 1.0) ** 2,
        deriv=lambda x: 2.0 * (x - 1.0),
        dual_deriv=lambda x: 1.0 - 1.0 / x**2,
        deriv2=_square_deriv2,
        dual_deriv2=lambda x: 2.0 / x**3,
        needs_positive=False,
    ),
    "neg_log": GeneratorSpec(
        name="neg_log",
        eval=lambda x: -np.log(x),
        deriv=lambda x: -1.0 / x,
        dual_deriv=lambda x: np.log(x) + 1.0,
        deriv2=lambda x: 1.0 / x**2,
        dual_deriv2=lambda x: 1.0 / x,
        needs_positive=True,
    ),
    "squared_hellinger": GeneratorSpec(
        name="squared_hellinger",
        eval=lambda x: (np.sqrt(x) - 1.0) ** 2,
        deriv=lambda x: 1.0 - 1.0 / np.sqrt(x),
        dual_deriv=lambda x: 1.0 - 1.0 / np.sqrt(x),
        deriv2=lambda x: 0.5 * x**-1.5,
        dual_deriv2=lambda x: 0.5 * x**-1.5,
        needs_positive=True,
    ),
}

for _gen in GENERATORS.values():
    _check_generator_convexity(_gen)


def get_generator(name: str) -> GeneratorSpec:
    try:
        return GENERATORS[name]
    except KeyError:
        raise InvalidSpec(
            f"unknown generator '{name}'; registered: {sorted(GENERATORS)}"
        ) from None


@dataclass(frozen=True)
class DivergenceSpec:
    """Selects a divergence family plus its parameters.

    bregman and f_divergence require a generator; renyi requires alpha in
    (0, 1) or (1, inf).  alpha = 1 is rejected: that limit is family 'kl'.
    """

    family: str
    generator: Optional[GeneratorSpec] = None
    alpha: Optional[float] = None

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise InvalidSpec(
                f"unknown family '{self.family}'; expected one of {FAMILIES}"
            )
        if self.family == "renyi":
            if self.alpha is None:
                raise InvalidSpec("family 'renyi' requires alpha")
            a = float(self.alpha)
            if not (a > 0.0) or a == 1.0:
                raise InvalidSpec(
                    "renyi alpha must lie in (0, 1) or (1, inf); "
                    "alpha = 1 requests family 'kl'"
                )
        elif self.alpha is not None:
            raise InvalidSpec(f"family '{self.family}' takes no alpha")
        if self.family in ("bregman", "f_divergence"):
            if self.generator is None:
                raise InvalidSpec(f"family '{self.family}' requires a generator")
            if self.family == "f_divergence":
                if float(self.generator.eval(1.0)) != 0.0:
                    raise InvalidSpec(
                        f"generator '{self.generator.name}' has f(1) != 0, "
                        "required for f_divergence"
                    )
        elif self.generator is not None:
            raise InvalidSpec(f"family '{self.family}' takes no generator")

    @property
    def label(self) -> str:
        """Short stable identifier for reports, e.g. 'bregman:xlogx'."""
        if self.generator is not None:
            return f"{self.family}:{self.generator.name}"
        if self.alpha is not None:
            return f"{self.family}:a={self.alpha:g}"
        return self.family


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    """A probability vector on a finite support with scalar atom labels."""

    mass: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        mass = np.asarray(self.mass, dtype=float)
        labels = np.asarray(self.labels, dtype=float)
        if mass.ndim != 1 or labels.ndim != 1 or mass.shape != labels.shape:
            raise InvalidSpec("mass and labels must be 1-d vectors of equal length")
        mass.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "mass", mass)
        object.__setattr__(self, "labels", labels)

    @property
    def support_size(self) -> int:
        return self.mass.size

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DiscreteDistribution):
            return NotImplemented
        return np.array_equal(self.mass, other.mass) and np.array_equal(
            self.labels, other.labels
        )


def make_distribution(
    weights: Sequence[float],
    labels: Optional[Sequence[float]] = None,
    cfg: NumericConfig = DEFAULT_CONFIG,
) -> DiscreteDistribution:
    """Normalize nonnegative weights into a DiscreteDistribution.

    Labels default to the atom indices 0..n-1.
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1:
        raise InvalidSpec("weights must be a 1-d vector")
    if w.size < 2:
        raise EmptySupport(f"support size {w.size} < 2")
    if np.any(w < 0.0):
        bad = int(np.argmin(w))
        raise NegativeMass(f"weight {w[bad]!r} at atom {bad} is negative")
    total = float(w.sum())
    if not total > 0.0:
        raise ZeroTotalMass("weights sum to zero")
    if labels is None:
        lab = np.arange(w.size, dtype=float)
    else:
        lab = np.asarray(labels, dtype=float)
        if lab.shape != w.shape:
            raise InvalidSpec("labels must match the weight vector length")
    return DiscreteDistribution(mass=w / total, labels=lab)


def requires_interior(spec: DivergenceSpec) -> bool:
    """Whether the family's formulas need every atom strictly positive."""
    if spec.family in _INTERIOR_FAMILIES:
        return True
    if spec.family == "bregman":
        return spec.generator.needs_positive
    return False


def validate_for_family(
    dist: DiscreteDistribution,
    spec: DivergenceSpec,
    cfg: NumericConfig = DEFAULT_CONFIG,
) -> None:
    """Raise DomainViolation unless dist lies in the family's domain."""
    mass = dist.mass
    if np.any(mass < 0.0):
        bad = int(np.argmin(mass))
        raise DomainViolation(
            f"atom {bad} has negative mass {mass[bad]!r} (family '{spec.label}')"
        )
    if requires_interior(spec):
        bad = int(np.argmin(mass))
        if mass[bad] < cfg.interior_floor:
            raise DomainViolation(
                f"atom {bad} has mass {mass[bad]!r} below the interior floor "
                f"{cfg.interior_floor!r} required by family '{spec.label}'"
            )


def require_same_support(*dists: DiscreteDistribution) -> int:
    """Return the common support size, or raise SupportMismatch."""
    sizes = {d.support_size for d in dists}
    if len(sizes) != 1:
        raise SupportMismatch(f"support sizes differ: {sorted(sizes)}")
    return sizes.pop()


def standard_specs() -> list[DivergenceSpec]:
    """The canonical family matrix: every family, every applicable generator,
    and Rényi orders on both sides of 1."""
    specs = [
        DivergenceSpec("euclidean"),
        DivergenceSpec("kl"),
        DivergenceSpec("reverse_kl"),
    ]
    for name in ("xlogx", "square", "neg_log", "squared_hellinger"):
        specs.append(DivergenceSpec("bregman", generator=GENERATORS[name]))
    for name in ("xlogx", "square", "neg_log", "squared_hellinger"):
        specs.append(DivergenceSpec("f_divergence", generator=GENERATORS[name]))
    specs.append(DivergenceSpec("renyi", alpha=0.5))
    specs.append(DivergenceSpec("renyi", alpha=2.0))
    return specs
