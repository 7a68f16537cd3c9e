import numpy as np
import pytest

from divgeom import (
    BallSpec,
    DivergenceSpec,
    InvalidSpec,
    ball_contains,
    eval,
    inner_product,
    is_orthogonal,
    line_point,
    make_distribution,
    on_boundary,
)
from divgeom.divergences import eval_mass, grad_second_mass
from divgeom.verify import sample_interior

from conftest import ALL_SPECS, spec_id

KL = DivergenceSpec("kl")
EUCLID = DivergenceSpec("euclidean")
RKL = DivergenceSpec("reverse_kl")


def test_inner_product_examples():
    P = make_distribution([0.5, 0.5])
    Q = make_distribution([0.3, 0.7])
    R = make_distribution([0.5, 0.5])
    assert inner_product(EUCLID, P, Q, Q) == 0.0
    assert abs(inner_product(EUCLID, P, Q, R) - 0.08) < 1e-15

    Q2 = make_distribution([0.25, 0.75])
    assert abs(inner_product(KL, P, Q2, R) - 1.0 / 3.0) < 1e-15


@pytest.mark.parametrize("spec", ALL_SPECS, ids=spec_id)
def test_inner_product_vanishes_at_r_equal_q(spec):
    rng = np.random.default_rng(1)
    P = make_distribution(sample_interior(rng, 3))
    Q = make_distribution(sample_interior(rng, 3))
    assert inner_product(spec, P, Q, Q) == 0.0


def test_inner_product_affine_in_r():
    rng = np.random.default_rng(2)
    for spec in ALL_SPECS:
        P = make_distribution(sample_interior(rng, 4))
        Q = make_distribution(sample_interior(rng, 4))
        R1 = make_distribution(sample_interior(rng, 4))
        R2 = make_distribution(sample_interior(rng, 4))
        t = 0.3
        mix = make_distribution((1 - t) * R1.mass + t * R2.mass)
        lhs = inner_product(spec, P, Q, mix)
        rhs = (1 - t) * inner_product(spec, P, Q, R1) + t * inner_product(spec, P, Q, R2)
        assert abs(lhs - rhs) < 1e-12


def test_is_orthogonal_examples():
    P = make_distribution([0.5, 0.5])
    Q = make_distribution([0.3, 0.7])
    assert is_orthogonal(EUCLID, P, Q, Q, tol=1e-12)
    R = make_distribution([0.1, 0.9])
    assert abs(inner_product(EUCLID, P, Q, R) - (-0.08)) < 1e-15
    assert not is_orthogonal(EUCLID, P, Q, R, tol=1e-7)

    P2 = make_distribution([0.6, 0.4])
    Q2 = make_distribution([0.5, 0.5])
    R2 = make_distribution([0.4, 0.6])
    assert abs(inner_product(EUCLID, P2, Q2, R2) - (-0.02)) < 1e-15
    assert not is_orthogonal(EUCLID, P2, Q2, R2, tol=1e-7)
    assert is_orthogonal(EUCLID, P2, Q2, Q2, tol=1e-12)


def test_ball_predicates():
    center = make_distribution([0.5, 0.5])
    assert ball_contains(BallSpec(center, 0.0, EUCLID), center)
    ball = BallSpec(center, 0.04, EUCLID)
    Q = make_distribution([0.3, 0.7])
    assert ball_contains(ball, Q)
    assert on_boundary(ball, Q)
    tight = BallSpec(center, 0.01, EUCLID)
    assert not ball_contains(tight, Q)
    with pytest.raises(InvalidSpec):
        BallSpec(center, -0.1, EUCLID)


def test_line_point_kl_is_mixture():
    P = make_distribution([0.5, 0.5])
    Q = make_distribution([0.25, 0.75])
    res = line_point(KL, P, Q, 0.5)
    np.testing.assert_allclose(res.point.mass, [0.375, 0.625], atol=0)
    assert res.residual <= 1e-10


def test_line_point_reverse_kl_geometric_mean():
    P = make_distribution([0.5, 0.5])
    Q = make_distribution([0.25, 0.75])
    res = line_point(RKL, P, Q, 0.5)
    raw = np.sqrt(P.mass * Q.mass)
    np.testing.assert_allclose(res.point.mass, raw / raw.sum(), atol=1e-15)
    np.testing.assert_allclose(res.point.mass, [0.36603, 0.63397], atol=1e-5)


@pytest.mark.parametrize("spec", ALL_SPECS, ids=spec_id)
def test_line_endpoints_exact(spec):
    rng = np.random.default_rng(3)
    P = make_distribution(sample_interior(rng, 3))
    Q = make_distribution(sample_interior(rng, 3))
    assert line_point(spec, P, Q, 0.0).point == P
    assert line_point(spec, P, Q, 1.0).point == Q


@pytest.mark.parametrize("spec", ALL_SPECS, ids=spec_id)
def test_line_stationarity_residual(spec):
    rng = np.random.default_rng(4)
    for _ in range(5):
        P = make_distribution(sample_interior(rng, 3))
        Q = make_distribution(sample_interior(rng, 3))
        alpha = float(rng.uniform(0.1, 0.9))
        res = line_point(spec, P, Q, alpha)
        assert res.residual <= 1e-10
        assert abs(res.point.mass.sum() - 1.0) <= 1e-12


def test_line_alpha_out_of_range():
    P = make_distribution([0.5, 0.5])
    Q = make_distribution([0.25, 0.75])
    with pytest.raises(InvalidSpec):
        line_point(KL, P, Q, 1.5)


@pytest.mark.parametrize("spec", ALL_SPECS, ids=spec_id)
def test_three_point_inequality(spec):
    rng = np.random.default_rng(5)
    n = 3
    P = sample_interior(rng, n, 300)
    Q = sample_interior(rng, n, 300)
    R = sample_interior(rng, n, 300)
    g = grad_second_mass(spec, P, Q)
    ip = np.sum((Q - R) * g, axis=-1)
    slack = eval_mass(spec, P, R) - eval_mass(spec, P, Q) + ip
    assert np.all(slack >= -1e-10)
    sep = np.max(np.abs(Q - R), axis=-1) > 1e-4
    assert np.all(slack[sep] > 0.0)


@pytest.mark.parametrize("spec", ALL_SPECS, ids=spec_id)
def test_self_inner_product_exceeds_divergence(spec):
    rng = np.random.default_rng(6)
    for _ in range(50):
        P = make_distribution(sample_interior(rng, 3))
        Q = make_distribution(sample_interior(rng, 3))
        if np.max(np.abs(P.mass - Q.mass)) <= 1e-6:
            continue
        assert inner_product(spec, P, Q, P) > eval(spec, P, Q)


@pytest.mark.parametrize("spec", ALL_SPECS, ids=spec_id)
def test_line_inner_product_identity(spec):
    # For R at position alpha: (1-alpha)<PR||SR> + alpha<QR||SR> = 0.
    rng = np.random.default_rng(7)
    P = make_distribution(sample_interior(rng, 3))
    Q = make_distribution(sample_interior(rng, 3))
    alpha = 0.37
    R = line_point(spec, P, Q, alpha).point
    for _ in range(20):
        S = make_distribution(sample_interior(rng, 3))
        combo = (1 - alpha) * inner_product(spec, P, R, S) + alpha * inner_product(
            spec, Q, R, S
        )
        assert abs(combo) < 1e-8


@pytest.mark.parametrize("spec", ALL_SPECS, ids=spec_id)
def test_orthogonal_subspaces_coincide_on_line(spec):
    # <PR||SR> and <QR||SR> are proportional with ratio -alpha/(1-alpha),
    # so the two orthogonality predicates agree along the line.
    rng = np.random.default_rng(8)
    P = make_distribution(sample_interior(rng, 3))
    Q = make_distribution(sample_interior(rng, 3))
    alpha = 0.6
    R = line_point(spec, P, Q, alpha).point
    tol = 1e-7
    for _ in range(100):
        S = make_distribution(sample_interior(rng, 3))
        ip_p = inner_product(spec, P, R, S)
        ip_q = inner_product(spec, Q, R, S)
        assert abs(ip_p + alpha / (1 - alpha) * ip_q) < 1e-8
        big = max(abs(ip_p), abs(ip_q))
        if big > 10 * tol or big <= 0.1 * tol:
            # Away from the predicate threshold the two answers must agree.
            assert is_orthogonal(spec, P, R, S, tol) == is_orthogonal(
                spec, Q, R, S, tol
            )
