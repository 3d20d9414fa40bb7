from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ordersup import losses
from ordersup.errors import LabelOutOfRange, LengthMismatch
from ordersup.gradcheck import grad_check, numeric_gradient, relative_error


def oracle_cos(a, b):
    na = np.sqrt(sum(x * x for x in a))
    nb = np.sqrt(sum(x * x for x in b))
    if na == 0 or nb == 0:
        return 0.0
    return sum(x * y for x, y in zip(a, b)) / (na * nb)


def oracle_hinge(h, zs, delta):
    total = 0.0
    m = len(zs)
    for i in range(m - 1):
        for j in range(i + 1, m):
            total += max(0.0, -oracle_cos(h, zs[i]) + oracle_cos(h, zs[j]) + delta)
    return total


# cosine -------------------------------------------------------------------

def test_cosine_cases():
    v = np.array([1.0, 2.0, -3.0])
    assert losses.cosine_score(v, v) == pytest.approx(1.0)
    assert losses.cosine_score([1.0, 0.0], [0.0, 5.0]) == 0.0
    assert losses.cosine_score(v, np.zeros(3)) == 0.0
    with pytest.raises(LengthMismatch):
        losses.cosine_score([1.0], [1.0, 2.0])


vecs = arrays(np.float64, 5, elements=st.floats(-10, 10, allow_nan=False))


@given(vecs, vecs, st.floats(1e-3, 1e3))
def test_cosine_scale_invariant_and_bounded(h, z, alpha):
    s = losses.cosine_score(h, z)
    assert -1.0 - 1e-12 <= s <= 1.0 + 1e-12
    if np.linalg.norm(h) > 1e-6 and np.linalg.norm(z) > 1e-6:
        assert losses.cosine_score(alpha * h, z) == pytest.approx(s, abs=1e-9)


# hinge --------------------------------------------------------------------

def test_hinge_from_scores():
    assert losses.hinge_from_scores([0.9, 0.5, 0.1], 0.1) == 0.0
    assert losses.hinge_from_scores([0.1, 0.5], 0.1) == 0.5


def vectors_with_scores(scores, dim=3):
    """Context e1 and targets whose cosines with it are exactly ``scores``-ish."""
    h = np.zeros(dim)
    h[0] = 1.0
    zs = np.array([[s, np.sqrt(1 - s * s)] + [0.0] * (dim - 2) for s in scores])
    return h, zs


def test_hinge_vector_examples():
    h, zs = vectors_with_scores([0.9, 0.5, 0.1])
    assert losses.hinge_rank_loss(h, zs, 0.1)[0] == 0.0
    h, zs = vectors_with_scores([0.1, 0.5])
    assert losses.hinge_rank_loss(h, zs, 0.1)[0] == pytest.approx(0.5, abs=1e-15)


def test_hinge_matches_double_loop():
    rng = np.random.default_rng(0)
    for _ in range(200):
        m = int(rng.integers(2, 7))
        h = rng.normal(size=6)
        zs = rng.normal(size=(m, 6))
        delta = float(rng.uniform(0, 0.5))
        assert abs(losses.hinge_rank_loss(h, zs, delta)[0] - oracle_hinge(h, zs, delta)) < 1e-12


@settings(max_examples=100)
@given(st.lists(st.floats(-1, 1), min_size=2, max_size=6), st.floats(0, 0.5))
def test_hinge_zero_set(scores, delta):
    loss = losses.hinge_from_scores(scores, delta)
    assert loss >= 0.0
    # exact rationals: a float sum can round a positive margin away
    fs, fd = [Fraction(v) for v in scores], Fraction(delta)
    ordered = all(
        fs[i] >= fs[j] + fd
        for i in range(len(scores)) for j in range(i + 1, len(scores))
    )
    if ordered:
        assert loss == 0.0
    # strictly violated somewhere -> positive
    if any(scores[i] < scores[j] + delta - 1e-9
           for i in range(len(scores)) for j in range(i + 1, len(scores))):
        assert loss > 0.0


def test_hinge_gradient_zero_when_inactive():
    h, zs = vectors_with_scores([0.9, 0.5, 0.1])
    loss, dh, dz = losses.hinge_rank_loss(h, zs, 0.1)
    assert loss == 0.0 and not dh.any() and not dz.any()


def test_hinge_errors():
    with pytest.raises(ValueError):
        losses.hinge_rank_loss(np.ones(3), np.ones((1, 3)))
    with pytest.raises(LengthMismatch):
        losses.hinge_rank_loss(np.ones(3), np.ones((2, 4)))


# mse / ce -----------------------------------------------------------------

def test_mse_examples():
    assert losses.mse_loss([1, 2], [1, 2])[0] == 0.0
    loss, g = losses.mse_loss([0, 0, 0, 0], [0, 1, 2, 2])
    assert loss == 2.25
    assert np.allclose(g, [0, -0.5, -1.0, -1.0])
    with pytest.raises(LengthMismatch):
        losses.mse_loss([1.0], [1.0, 2.0])


def test_cross_entropy_examples():
    for c in (2, 10, 100):
        assert losses.cross_entropy_loss(np.zeros(c), 0)[0] == pytest.approx(np.log(c))
    loss, g = losses.cross_entropy_loss([1000.0, 0.0], 0)
    assert np.isfinite(loss) and loss == pytest.approx(0.0, abs=1e-300)
    loss, g = losses.cross_entropy_loss([1000.0, 0.0], 1)
    assert loss == pytest.approx(1000.0)
    _, g = losses.cross_entropy_loss([0.3, -1.2, 2.0], 2)
    assert abs(g.sum()) < 1e-15
    with pytest.raises(LabelOutOfRange):
        losses.cross_entropy_loss([0.0, 0.0], 2)


@given(arrays(np.float64, 4, elements=st.floats(-50, 50)),
       arrays(np.float64, 4, elements=st.floats(-50, 50)), st.integers(0, 3))
def test_losses_nonnegative(a, b, label):
    assert losses.mse_loss(a, b)[0] >= 0
    assert losses.cross_entropy_loss(a, label)[0] >= 0
    assert losses.hinge_rank_loss(a, np.stack([b, a + 1.0]), 0.1)[0] >= 0


# batched == mean of independent per-example ------------------------------

def test_batched_losses_equal_mean_of_singles():
    rng = np.random.default_rng(5)
    logits = rng.normal(size=(7, 5))
    labels = rng.integers(0, 5, size=7)
    loss, grad = losses.batch_cross_entropy(logits, labels)
    singles = [losses.cross_entropy_loss(l, int(y)) for l, y in zip(logits, labels)]
    assert loss == pytest.approx(np.mean([s[0] for s in singles]), abs=1e-12)
    assert np.allclose(grad, np.array([s[1] for s in singles]) / 7)

    pred, tgt = rng.normal(size=(7, 4)), rng.normal(size=(7, 4))
    loss, _ = losses.batch_mse(pred, tgt)
    assert loss == pytest.approx(np.mean([losses.mse_loss(p, t)[0] for p, t in zip(pred, tgt)]))

    hs = rng.normal(size=(7, 6))
    zss = [rng.normal(size=(4, 6)) for _ in range(7)]
    loss, _, _ = losses.batch_hinge(hs, zss, 0.2)
    assert loss == pytest.approx(np.mean([oracle_hinge(h, z, 0.2) for h, z in zip(hs, zss)]),
                                 abs=1e-12)


# finite differences -------------------------------------------------------

def test_numeric_gradient_of_known_function():
    x = np.array([1.0, -2.0, 0.5])
    g = numeric_gradient(lambda v: float(np.sum(v ** 3)), x)
    assert relative_error(3 * x ** 2, g) < 1e-8


def test_mse_gradient_matches_central_difference():
    rng = np.random.default_rng(1)
    p, t = rng.normal(size=6), rng.normal(size=6)
    _, g = losses.mse_loss(p, t)
    num = numeric_gradient(lambda v: losses.mse_loss(v, t)[0], p)
    assert np.allclose(g, num, rtol=1e-6, atol=0)


@pytest.mark.parametrize("loss", ["mse", "cross_entropy", "hinge"])
def test_grad_check_passes(loss):
    assert grad_check(loss, trials=30, seed=3) < 1e-4


def test_grad_check_detects_a_wrong_gradient(monkeypatch):
    real = losses.mse_loss
    monkeypatch.setattr(losses, "mse_loss", lambda p, t: (real(p, t)[0], 1.01 * real(p, t)[1]))
    assert grad_check("mse", trials=5) > 1e-3
