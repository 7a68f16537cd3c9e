import math

import numpy as np
import pytest

from divgeom import (
    GENERATORS,
    DivergenceSpec,
    DomainViolation,
    SupportMismatch,
    UnsupportedDerivative,
    eval,
    fd_check_gradient,
    grad_first,
    grad_second,
    make_distribution,
)
from divgeom.divergences import eval_mass
from divgeom.verify import sample_interior

from conftest import ALL_SPECS, spec_id

KL = DivergenceSpec("kl")
EUCLID = DivergenceSpec("euclidean")
RKL = DivergenceSpec("reverse_kl")


def test_eval_kl_frozen_value():
    P = make_distribution([0.5, 0.5])
    Q = make_distribution([0.25, 0.75])
    # Independent summation of sum p log(p/q) with the scalar math library.
    expected = 0.5 * math.log(0.5 / 0.25) + 0.5 * math.log(0.5 / 0.75)
    assert abs(eval(KL, P, Q) - expected) < 1e-15
    assert abs(expected - 0.143841) < 1e-6


def test_eval_identity_is_zero():
    P = make_distribution([0.5, 0.5])
    assert eval(KL, P, P) == 0.0


def test_eval_euclidean_frozen_value():
    P = make_distribution([0.5, 0.5])
    Q = make_distribution([0.3, 0.7])
    assert abs(eval(EUCLID, P, Q) - 0.5 * (0.04 + 0.04)) < 1e-15


def test_grad_second_examples():
    P = make_distribution([0.5, 0.5])
    g = grad_second(EUCLID, P, make_distribution([0.3, 0.7]))
    np.testing.assert_allclose(g.values, [-0.2, 0.2], atol=1e-15)
    assert g.wrt == "second"

    g = grad_second(KL, P, make_distribution([0.25, 0.75]))
    np.testing.assert_allclose(g.values, [-2.0, -2.0 / 3.0], atol=1e-15)

    renyi2 = DivergenceSpec("renyi", alpha=2.0)
    g = grad_second(renyi2, P, make_distribution([0.5, 0.5]))
    np.testing.assert_allclose(g.values, [-1.0, -1.0], atol=1e-15)


def test_grad_first_examples():
    bregman_sq = DivergenceSpec("bregman", generator=GENERATORS["square"])
    P = make_distribution([0.3, 0.7])
    Q = make_distribution([0.5, 0.5])
    g = grad_first(bregman_sq, P, Q)
    np.testing.assert_allclose(g.values, [-0.4, 0.4], atol=1e-15)
    assert g.wrt == "first"

    fdiv = DivergenceSpec("f_divergence", generator=GENERATORS["xlogx"])
    U = make_distribution([0.5, 0.5])
    g = grad_first(fdiv, U, U)
    np.testing.assert_allclose(g.values, [1.0, 1.0], atol=1e-15)

    g = grad_first(KL, make_distribution([0.25, 0.75]), Q)
    np.testing.assert_allclose(
        g.values, [math.log(0.5) + 1.0, math.log(1.5) + 1.0], atol=1e-15
    )


def test_renyi_first_argument_unsupported():
    spec = DivergenceSpec("renyi", alpha=0.5)
    P = make_distribution([0.4, 0.6])
    with pytest.raises(UnsupportedDerivative):
        grad_first(spec, P, P)


def test_support_mismatch():
    with pytest.raises(SupportMismatch):
        eval(KL, make_distribution([1, 1]), make_distribution([1, 1, 1]))


def test_domain_violation_propagates():
    P = make_distribution([1, 1])
    Q = make_distribution([1e-15, 1.0])
    with pytest.raises(DomainViolation):
        eval(KL, P, Q)


def test_fd_examples():
    rng = np.random.default_rng(0)
    P = make_distribution(sample_interior(rng, 3))
    Q = make_distribution(sample_interior(rng, 3))
    assert fd_check_gradient(EUCLID, P, Q, "second", step=1e-6) < 1e-8
    P2 = make_distribution([0.5, 0.5])
    Q2 = make_distribution([0.25, 0.75])
    assert fd_check_gradient(KL, P2, Q2, "second", step=1e-6) < 1e-6
    renyi5 = DivergenceSpec("renyi", alpha=0.5)
    assert fd_check_gradient(renyi5, P, Q, "second", step=1e-6) < 1e-6


@pytest.mark.parametrize("spec", ALL_SPECS, ids=spec_id)
def test_nonnegativity_and_identity(spec):
    rng = np.random.default_rng(42)
    n = 4
    P = sample_interior(rng, n, 1000)
    Q = sample_interior(rng, n, 1000)
    values = eval_mass(spec, P, Q)
    assert np.all(values >= -1e-12)
    assert np.all(eval_mass(spec, P, P) <= 1e-12)
    separated = np.max(np.abs(P - Q), axis=-1) > 1e-6
    assert np.all(values[separated] > 0.0)


@pytest.mark.parametrize("spec", ALL_SPECS, ids=spec_id)
def test_strict_convexity_in_second_argument(spec):
    rng = np.random.default_rng(43)
    n = 3
    trials = 500
    P = sample_interior(rng, n, trials)
    Q = sample_interior(rng, n, trials)
    R = sample_interior(rng, n, trials)
    keep = np.max(np.abs(Q - R), axis=-1) > 1e-3
    P, Q, R = P[keep], Q[keep], R[keep]
    t = rng.uniform(0.1, 0.9, size=P.shape[0])[:, None]
    mix = (1.0 - t) * Q + t * R
    gap = (
        (1.0 - t[:, 0]) * eval_mass(spec, P, Q)
        + t[:, 0] * eval_mass(spec, P, R)
        - eval_mass(spec, P, mix)
    )
    assert np.all(gap > 0.0)


@pytest.mark.parametrize("spec", ALL_SPECS, ids=spec_id)
def test_gradient_consistency_100_pairs(spec):
    rng = np.random.default_rng(44)
    for _ in range(100):
        n = int(rng.integers(2, 6))
        P = make_distribution(sample_interior(rng, n))
        Q = make_distribution(sample_interior(rng, n))
        assert fd_check_gradient(spec, P, Q, "second") < 1e-5
        try:
            err = fd_check_gradient(spec, P, Q, "first")
        except UnsupportedDerivative:
            continue
        assert err < 1e-5


def test_reverse_kl_shares_kl_code_path():
    rng = np.random.default_rng(45)
    for _ in range(50):
        P = make_distribution(sample_interior(rng, 4))
        Q = make_distribution(sample_interior(rng, 4))
        assert eval(RKL, P, Q) == eval(KL, Q, P)


def test_f_divergence_xlogx_equals_kl():
    fdiv = DivergenceSpec("f_divergence", generator=GENERATORS["xlogx"])
    rng = np.random.default_rng(46)
    for _ in range(50):
        P = make_distribution(sample_interior(rng, 4))
        Q = make_distribution(sample_interior(rng, 4))
        assert abs(eval(fdiv, P, Q) - eval(KL, P, Q)) < 1e-12


def test_f_divergence_neg_log_equals_reverse_kl():
    fdiv = DivergenceSpec("f_divergence", generator=GENERATORS["neg_log"])
    rng = np.random.default_rng(47)
    for _ in range(20):
        P = make_distribution(sample_interior(rng, 3))
        Q = make_distribution(sample_interior(rng, 3))
        assert abs(eval(fdiv, P, Q) - eval(RKL, P, Q)) < 1e-12


def test_bregman_square_doubles_euclidean():
    spec = DivergenceSpec("bregman", generator=GENERATORS["square"])
    rng = np.random.default_rng(48)
    for _ in range(20):
        P = make_distribution(sample_interior(rng, 3))
        Q = make_distribution(sample_interior(rng, 3))
        assert abs(eval(spec, P, Q) - 2.0 * eval(EUCLID, P, Q)) < 1e-13


def test_renyi_large_order_stays_finite():
    spec = DivergenceSpec("renyi", alpha=8.0)
    rng = np.random.default_rng(49)
    for _ in range(20):
        P = make_distribution(sample_interior(rng, 4))
        Q = make_distribution(sample_interior(rng, 4))
        v = eval(spec, P, Q)
        assert np.isfinite(v) and v >= -1e-12
        assert np.all(np.isfinite(grad_second(spec, P, Q).values))
