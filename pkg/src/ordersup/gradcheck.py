"""Central finite-difference verification of the analytic loss gradients."""

from __future__ import annotations

import numpy as np

from . import losses

LOSSES = ("mse", "cross_entropy", "hinge")
_ALIASES = {"ce": "cross_entropy", "xent": "cross_entropy", "hinge_rank": "hinge"}


def relative_error(analytic, numeric, floor=1e-5) -> float:
    a = np.asarray(analytic, dtype=np.float64).reshape(-1)
    n = np.asarray(numeric, dtype=np.float64).reshape(-1)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
    return float(np.max(np.abs(a - n) / denom))


def numeric_gradient(f, x, eps=1e-5) -> np.ndarray:
    x = np.array(x, dtype=np.float64)
    g = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = g.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + eps
        fp = f(x)
        flat[i] = old - eps
        fm = f(x)
        flat[i] = old
        gflat[i] = (fp - fm) / (2 * eps)
    return g


def _check_mse(rng, eps, dim):
    pred = rng.normal(size=dim)
    target = rng.normal(size=dim)
    _, g = losses.mse_loss(pred, target)
    num = numeric_gradient(lambda p: losses.mse_loss(p, target)[0], pred, eps)
    return relative_error(g, num)


def _check_cross_entropy(rng, eps, dim):
    logits = rng.normal(scale=2.0, size=dim)
    label = int(rng.integers(dim))
    _, g = losses.cross_entropy_loss(logits, label)
    num = numeric_gradient(lambda z: losses.cross_entropy_loss(z, label)[0], logits, eps)
    return relative_error(g, num)


def _hinge_margins(h, zs, delta):
    s = np.array([losses.cosine_score(h, z) for z in zs])
    i, j = np.triu_indices(len(s), k=1)
    return delta - s[i] + s[j]


def sample_hinge_point(rng, eps, dim, m=None, delta=0.1, max_tries=1000):
    """Random ``(h, targets)`` whose pairwise margins all lie at least ``10*eps`` from 0."""
    for _ in range(max_tries):
        mm = int(rng.integers(2, 7)) if m is None else m
        h = rng.normal(size=dim)
        zs = rng.normal(size=(mm, dim))
        if np.all(np.abs(_hinge_margins(h, zs, delta)) >= 10 * eps):
            return h, zs
    raise RuntimeError("could not sample a point away from the hinge kinks")


def _check_hinge(rng, eps, dim, delta=0.1):
    h, zs = sample_hinge_point(rng, eps, dim, delta=delta)
    _, dh, dz = losses.hinge_rank_loss(h, zs, delta)
    num_h = numeric_gradient(lambda v: losses.hinge_rank_loss(v, zs, delta)[0], h, eps)
    num_z = numeric_gradient(lambda v: losses.hinge_rank_loss(h, v, delta)[0], zs, eps)
    return max(relative_error(dh, num_h), relative_error(dz, num_z))


_CHECKS = {"mse": _check_mse, "cross_entropy": _check_cross_entropy, "hinge": _check_hinge}


def grad_check(loss: str, trials: int = 100, eps: float = 1e-5, seed: int = 0,
               dim: int = 8) -> float:
    """Max relative error between analytic and central-difference gradients
    over ``trials`` random points."""
    name = _ALIASES.get(loss, loss)
    if name not in _CHECKS:
        raise ValueError(f"unknown loss {loss!r}; choose from {LOSSES}")
    rng = np.random.default_rng(seed)
    return max(_CHECKS[name](rng, eps, dim) for _ in range(trials))
