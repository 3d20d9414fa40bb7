"""Training losses with analytic gradients.

Every loss returns ``(value, gradient(s))``. Gradients are exact; at a hinge
kink the inactive branch (zero) is used.
"""

from __future__ import annotations

import numpy as np

from .errors import LabelOutOfRange, LengthMismatch


def _vec(x):
    return np.asarray(x, dtype=np.float64).reshape(-1)


def cosine_score(h, z) -> float:
    """Cosine similarity; 0 when either vector has zero norm."""
    return cosine_with_grad(h, z)[0]


def cosine_with_grad(h, z):
    h = _vec(h)
    z = _vec(z)
    if h.shape != z.shape:
        raise LengthMismatch(f"vector lengths differ: {h.size} vs {z.size}")
    nh = np.linalg.norm(h)
    nz = np.linalg.norm(z)
    if nh == 0.0 or nz == 0.0:
        return 0.0, np.zeros_like(h), np.zeros_like(z)
    s = float(h @ z / (nh * nz))
    dh = z / (nh * nz) - s * h / (nh * nh)
    dz = h / (nh * nz) - s * z / (nz * nz)
    return s, dh, dz


def hinge_rank_loss(h, targets, delta=0.1):
    """Pairwise ranking hinge over targets listed in recipe order.

    For every ``i < j`` the term ``max(0, delta - score_i + score_j)`` asks
    the earlier target to score at least ``delta`` above the later one.
    Returns ``(loss, dL/dh, dL/dtargets)`` with ``dL/dtargets`` shaped like
    ``targets``.
    """
    h = _vec(h)
    zs = np.asarray(targets, dtype=np.float64)
    if zs.ndim != 2 or zs.shape[0] < 2:
        raise ValueError("need at least two target vectors")
    if zs.shape[1] != h.size:
        raise LengthMismatch(f"context has length {h.size}, targets {zs.shape[1]}")
    m = zs.shape[0]
    scores = np.empty(m)
    ds_dh = np.empty((m, h.size))
    ds_dz = np.empty_like(zs)
    for i in range(m):
        scores[i], ds_dh[i], ds_dz[i] = cosine_with_grad(h, zs[i])

    loss = 0.0
    coef = np.zeros(m)  # dL/dscore_i
    for i in range(m - 1):
        for j in range(i + 1, m):
            margin = delta - scores[i] + scores[j]
            if margin > 0.0:
                loss += margin
                coef[i] -= 1.0
                coef[j] += 1.0
    dh = coef @ ds_dh
    dz = coef[:, None] * ds_dz
    return float(loss), dh, dz


def hinge_from_scores(scores, delta=0.1) -> float:
    s = _vec(scores)
    diff = delta - s[:, None] + s[None, :]
    return float(np.triu(np.maximum(diff, 0.0), k=1).sum())


def mse_loss(pred, target):
    pred = _vec(pred)
    target = _vec(target)
    if pred.shape != target.shape:
        raise LengthMismatch(f"prediction has length {pred.size}, target {target.size}")
    diff = pred - target
    return float(np.mean(diff * diff)), 2.0 * diff / diff.size


def log_softmax(logits):
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def cross_entropy_loss(logits, label: int):
    logits = _vec(logits)
    if not 0 <= label < logits.size:
        raise LabelOutOfRange(f"label {label} outside 0..{logits.size - 1}")
    lp = log_softmax(logits)
    grad = np.exp(lp)
    grad[label] -= 1.0
    return float(-lp[label]), grad


# ----------------------------------------------------------------- batched


def batch_cross_entropy(logits, labels):
    """Mean cross entropy over rows; gradient is w.r.t. the ``(B, C)`` logits."""
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    b, c = logits.shape
    if labels.min() < 0 or labels.max() >= c:
        raise LabelOutOfRange(f"labels must lie in 0..{c - 1}")
    lp = log_softmax(logits)
    rows = np.arange(b)
    loss = -lp[rows, labels].mean()
    grad = np.exp(lp)
    grad[rows, labels] -= 1.0
    return float(loss), grad / b


def batch_mse(pred, target):
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise LengthMismatch(f"shapes differ: {pred.shape} vs {target.shape}")
    diff = pred - target
    return float(np.mean(diff * diff)), 2.0 * diff / diff.size


def batch_hinge(contexts, targets, delta=0.1):
    """Mean hinge loss over a batch of ``(context, targets)`` pairs."""
    b = len(contexts)
    total = 0.0
    dhs = []
    dzs = []
    for h, zs in zip(contexts, targets):
        loss, dh, dz = hinge_rank_loss(h, zs, delta)
        total += loss
        dhs.append(dh / b)
        dzs.append(dz / b)
    return total / b, dhs, dzs
