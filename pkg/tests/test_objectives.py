import numpy as np
import pytest
import scipy.sparse

from volcd.linalg import CsrSymmetricUpper
from volcd.objectives import (
    HuberLoss,
    LogSumExpLoss,
    LogisticLoss,
    QuadraticObjective,
    RegularizedObjective,
    SeparableObjective,
    SqrtNormLoss,
    SquareLoss,
)

RNG = np.random.default_rng(0)


def make_objectives(rng, m=9, n=6):
    """One instance of every objective family, dense and sparse."""
    a_dense = rng.standard_normal((m, n))
    a_sparse = scipy.sparse.random(m, n, density=0.4, random_state=2, format="csr")
    offsets = rng.standard_normal(m)
    labels = np.sign(rng.standard_normal(m))
    g = rng.standard_normal((n, n))
    quad_a = g @ g.T + np.eye(n)
    quad = QuadraticObjective(quad_a, rng.standard_normal(n))
    quad_sp = QuadraticObjective(
        CsrSymmetricUpper.from_dense(np.diag(rng.uniform(1, 3, n))), rng.standard_normal(n)
    )
    objs = {
        "quadratic": quad,
        "quadratic_sparse": quad_sp,
        "least_squares": SeparableObjective(a_dense, offsets, SquareLoss()),
        "logistic": SeparableObjective(a_dense, labels, LogisticLoss()),
        "huber": SeparableObjective(a_dense, offsets, HuberLoss(0.5)),
        "logsumexp": SeparableObjective(a_dense, offsets, LogSumExpLoss(0.3)),
        "sqrtnorm": SeparableObjective(a_dense, offsets, SqrtNormLoss(0.3)),
        "logistic_sparse": SeparableObjective(a_sparse, labels, LogisticLoss()),
        "ridge_logistic": RegularizedObjective(
            SeparableObjective(a_dense, labels, LogisticLoss()), 1.0
        ),
    }
    return objs


# ---------------------------------------------------------------------------
# closed-form values and gradients


def test_quadratic_closed_form():
    obj = QuadraticObjective(np.diag([1.0, 2.0]), np.zeros(2))
    assert obj.value([1.0, 1.0]) == pytest.approx(1.5)
    assert np.allclose(obj.gradient([1.0, 1.0]), [1.0, 2.0])


def test_huber_pointwise_values():
    h = HuberLoss(1.0)
    z = np.array([0.0, 0.5, 2.0])
    assert np.allclose(h.values(z, np.zeros(3)), [0.0, 0.125, 1.5])


def test_logistic_at_origin():
    obj = SeparableObjective(np.array([[1.0]]), np.array([1.0]), LogisticLoss())
    assert obj.value([0.0]) == pytest.approx(np.log(2.0))
    assert obj.gradient([0.0]) == pytest.approx(-0.5)


def test_logistic_extreme_margins_stable():
    loss = LogisticLoss()
    z = np.array([1e4, -1e4])
    b = np.array([1.0, 1.0])
    vals = loss.values(z, b)
    assert np.isfinite(vals).all()
    assert vals[0] == pytest.approx(0.0, abs=1e-300)
    assert vals[1] == pytest.approx(1e4)


def test_gradients_match_finite_differences():
    rng = np.random.default_rng(1)
    objs = make_objectives(rng)
    eps = 1e-6
    for name, obj in objs.items():
        for _ in range(100):
            x = rng.standard_normal(obj.n)
            g = obj.gradient(x)
            for i in rng.choice(obj.n, size=2, replace=False):
                e = np.zeros(obj.n)
                e[i] = eps
                fd = (obj.value(x + e) - obj.value(x - e)) / (2 * eps)
                scale = max(1.0, abs(fd))
                assert abs(g[i] - fd) <= 1e-5 * scale, name


# ---------------------------------------------------------------------------
# the defining smoothness certificate


def test_curvature_matrix_certifies_smoothness():
    rng = np.random.default_rng(2)
    objs = make_objectives(rng)
    for name, obj in objs.items():
        b = obj.curvature_matrix()
        b_dense = b.to_dense() if isinstance(b, CsrSymmetricUpper) else b
        for _ in range(1000):
            x = rng.standard_normal(obj.n)
            y = rng.standard_normal(obj.n)
            d = y - x
            upper = obj.value(x) + obj.gradient(x) @ d + 0.5 * d @ (b_dense @ d)
            assert obj.value(y) <= upper + 1e-8, name


# ---------------------------------------------------------------------------
# curvature matrices


def test_least_squares_curvature_identity_rows():
    obj = SeparableObjective(np.eye(2), np.zeros(2), SquareLoss())
    assert np.allclose(obj.curvature_matrix(), np.eye(2))


def test_ridge_logistic_curvature():
    a = np.array([[1.0, 0.0], [0.0, 2.0]])
    obj = RegularizedObjective(
        SeparableObjective(a, np.array([1.0, -1.0]), LogisticLoss()), 1.0
    )
    assert np.allclose(obj.curvature_matrix(), np.diag([1.25, 2.0]))


def test_huber_curvature_scale_rule():
    rng = np.random.default_rng(3)
    a = rng.standard_normal((5, 4))
    obj = SeparableObjective(a, np.zeros(5), HuberLoss(0.01))
    assert np.allclose(obj.curvature_matrix(), 100.0 * a.T @ a)


def test_vector_loss_curvature_is_gram_over_mu():
    rng = np.random.default_rng(4)
    a = rng.standard_normal((6, 4))
    for loss in (LogSumExpLoss(0.25), SqrtNormLoss(0.25)):
        obj = SeparableObjective(a, np.zeros(6), loss)
        assert np.allclose(obj.curvature_matrix(), 4.0 * a.T @ a)


def test_sparse_curvature_matches_dense():
    a = scipy.sparse.random(12, 7, density=0.4, random_state=5, format="csr")
    obj = SeparableObjective(a, np.zeros(12), SquareLoss())
    b = obj.curvature_matrix()
    assert isinstance(b, CsrSymmetricUpper)
    assert np.allclose(b.to_dense(), (a.T @ a).toarray(), atol=1e-12)


def test_ridge_sparse_curvature_adds_diagonal():
    a = scipy.sparse.random(10, 6, density=0.3, random_state=6, format="csr")
    inner = SeparableObjective(a, np.sign(np.arange(10) - 4.5), LogisticLoss())
    b = RegularizedObjective(inner, 2.0).curvature_matrix()
    assert isinstance(b, CsrSymmetricUpper)
    assert np.allclose(
        b.to_dense(), 0.25 * (a.T @ a).toarray() + 2.0 * np.eye(6), atol=1e-12
    )


# ---------------------------------------------------------------------------
# partial gradients and incremental state


def test_partial_gradient_restriction():
    obj = QuadraticObjective(np.diag([1.0, 2.0]), np.zeros(2))
    state = obj.init_state([1.0, 1.0])
    assert np.allclose(state.partial_gradient(np.array([1])), [2.0])
    assert np.allclose(
        state.partial_gradient(np.array([0, 1])), state.full_gradient()
    )


def test_partial_gradient_least_squares_at_origin():
    rng = np.random.default_rng(6)
    a = rng.standard_normal((7, 5))
    b = rng.standard_normal(7)
    obj = SeparableObjective(a, b, SquareLoss())
    state = obj.init_state(np.zeros(5))
    s = np.array([1, 3])
    assert np.allclose(state.partial_gradient(s), -(b @ a)[s], atol=1e-12)


def test_zero_step_leaves_state_unchanged():
    rng = np.random.default_rng(7)
    objs = make_objectives(rng)
    for name, obj in objs.items():
        state = obj.init_state(rng.standard_normal(obj.n))
        before_x = state.x.copy()
        before_v = state.value
        state.apply_step(np.array([0]), np.array([0.0]))
        assert np.array_equal(state.x, before_x), name
        assert state.value == pytest.approx(before_v, rel=1e-12), name


@pytest.mark.parametrize("steps", [10_000])
def test_incremental_state_drift(steps):
    rng = np.random.default_rng(8)
    objs = make_objectives(rng)
    for name, obj in objs.items():
        state = obj.init_state(rng.standard_normal(obj.n) * 0.1)
        n = obj.n
        for _ in range(steps):
            tau = int(rng.integers(1, 3))
            s = np.sort(rng.choice(n, size=tau, replace=False))
            state.apply_step(s, 0.01 * rng.standard_normal(tau))
        fresh_value = obj.value(state.x)
        scale = max(1.0, abs(fresh_value))
        assert abs(state.value - fresh_value) <= 1e-6 * scale, name
        fresh_grad = obj.gradient(state.x)
        gscale = max(1.0, float(np.linalg.norm(fresh_grad)))
        assert (
            np.linalg.norm(state.full_gradient() - fresh_grad) <= 1e-6 * gscale
        ), name
        # maintained and recomputed partial gradients agree on a subset
        s = np.sort(rng.choice(n, size=2, replace=False))
        assert np.allclose(
            state.partial_gradient(s), fresh_grad[s], atol=1e-8
        ), name


def test_apply_step_matches_fresh_recompute():
    rng = np.random.default_rng(9)
    a = rng.standard_normal((6, 4))
    b = rng.standard_normal(6)
    obj = SeparableObjective(a, b, SquareLoss())
    state = obj.init_state(np.zeros(4))
    s = np.array([0, 2])
    h = np.array([0.3, -0.7])
    state.apply_step(s, h)
    x = np.zeros(4)
    x[s] -= h
    assert np.allclose(state._z, a @ x, atol=1e-12)
    assert state.value == pytest.approx(obj.value(x), rel=1e-12)


def test_huber_smoothing_sandwich():
    rng = np.random.default_rng(10)
    m, n = 8, 5
    a = rng.standard_normal((m, n))
    b = rng.standard_normal(m)
    mu = 0.2
    obj = SeparableObjective(a, b, HuberLoss(mu))
    for _ in range(50):
        x = rng.standard_normal(n)
        l1 = float(np.abs(a @ x - b).sum())
        smooth = obj.value(x)
        assert smooth <= l1 + 1e-12
        assert l1 <= smooth + m * mu / 2 + 1e-12
