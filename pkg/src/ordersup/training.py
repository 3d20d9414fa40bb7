"""Desk-scale training loop for the three pre-training tasks.

The model is the hashed encoder plus, for permutation classification and
embedding regression, a linear head over the concatenated per-slot step
encodings. Optimisation is SGD with linear warmup and decoupled weight
decay on the weight matrices.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, fields
from typing import Iterable

import numpy as np

from . import losses
from .encoder import EncoderModel
from .errors import NonFiniteLoss, SchemaMismatch
from .tasks import EmbRegExample, PermClassExample, SkipClipExample, read_examples

TASKS = ("perm_class", "emb_reg", "skip_clip")
TASK_ALIASES = {
    "perm_class": "perm_class",
    "permclass": "perm_class",
    "emb_reg": "emb_reg",
    "embreg": "emb_reg",
    "embreg-lehmer": "emb_reg",
    "embreg-hamming": "emb_reg",
    "skip_clip": "skip_clip",
    "skipclip": "skip_clip",
}
_EXAMPLE_TYPES = {
    "perm_class": (PermClassExample, EmbRegExample),
    "emb_reg": (EmbRegExample,),
    "skip_clip": (SkipClipExample,),
}


@dataclass
class TrainConfig:
    batch_size: int = 32
    learning_rate: float = 5e-5
    weight_decay: float = 0.01
    warmup_steps: int = 500
    margin: float = 0.1
    epochs: int = 1
    seed: int = 0
    feature_dim: int = 1024
    embed_dim: int = 64

    def __post_init__(self):
        if self.batch_size < 1 or self.epochs < 1:
            raise ValueError("batch_size and epochs must be positive")
        if self.feature_dim < 1 or self.embed_dim < 1:
            raise ValueError("feature_dim and embed_dim must be positive")
        for name in ("learning_rate", "weight_decay", "warmup_steps", "margin"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    def lr_at(self, step: int) -> float:
        """Learning rate for 0-based ``step``: linear warmup, then constant."""
        if self.warmup_steps <= 0:
            return self.learning_rate
        return self.learning_rate * min(1.0, (step + 1) / self.warmup_steps)

    @classmethod
    def from_dict(cls, d) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self):
        return asdict(self)


@dataclass
class TrainedModel:
    task: str
    encoder: EncoderModel
    n_steps: int
    head_weight: np.ndarray | None = None  # (outputs, n_steps * embed_dim)
    head_bias: np.ndarray | None = None
    config: TrainConfig | None = None

    # -- forward passes ---------------------------------------------------

    def slot_features(self, batch_steps) -> np.ndarray:
        """Hashed features for each slot, shape ``(B, n_steps, D)``."""
        flat = [s for steps in batch_steps for s in steps]
        f = self.encoder.features(flat)
        return f.reshape(len(batch_steps), self.n_steps, -1)

    def head_outputs(self, batch_steps):
        f = self.slot_features(batch_steps)
        x = (f @ self.encoder.projection).reshape(len(batch_steps), -1)
        return x @ self.head_weight.T + self.head_bias

    def predict_labels(self, batch_steps) -> np.ndarray:
        return np.argmax(self.head_outputs(batch_steps), axis=1)

    # -- checkpoint -------------------------------------------------------

    def to_dict(self, meta=None) -> dict:
        d = {
            "task": self.task,
            "D": self.encoder.feature_dim,
            "d": self.encoder.embed_dim,
            "n_steps": self.n_steps,
            "projection": self.encoder.projection.reshape(-1).tolist(),
        }
        if self.head_weight is not None:
            d["head"] = {
                "shape": list(self.head_weight.shape),
                "weight": self.head_weight.reshape(-1).tolist(),
                "bias": self.head_bias.tolist(),
            }
        d["config"] = self.config.to_dict() if self.config else None
        if meta is not None:
            d["meta"] = meta
        return d

    def save(self, path, meta=None):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(meta), fh, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "TrainedModel":
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
        proj = np.asarray(d["projection"], dtype=np.float64).reshape(d["D"], d["d"])
        m = cls(d["task"], EncoderModel(proj), int(d["n_steps"]))
        if "head" in d:
            m.head_weight = np.asarray(d["head"]["weight"], dtype=np.float64).reshape(
                d["head"]["shape"]
            )
            m.head_bias = np.asarray(d["head"]["bias"], dtype=np.float64)
        if d.get("config"):
            m.config = TrainConfig.from_dict(d["config"])
        return m


# ------------------------------------------------------------ loss + grads


def perm_class_loss(model: TrainedModel, batch):
    """Mean cross entropy of a batch; returns ``(loss, grads)`` keyed by parameter."""
    steps = [ex.permuted_steps for ex in batch]
    labels = np.array([ex.label for ex in batch], dtype=np.int64)
    f = model.slot_features(steps)
    return _head_loss(model, f, lambda out: losses.batch_cross_entropy(out, labels))


def emb_reg_loss(model: TrainedModel, batch):
    steps = [ex.permuted_steps for ex in batch]
    target = np.array([ex.target for ex in batch], dtype=np.float64)
    f = model.slot_features(steps)
    return _head_loss(model, f, lambda out: losses.batch_mse(out, target))


def _head_loss(model, f, loss_fn):
    b, n, _ = f.shape
    proj = model.encoder.projection
    x = (f @ proj).reshape(b, -1)
    out = x @ model.head_weight.T + model.head_bias
    loss, g = loss_fn(out)
    dx = (g @ model.head_weight).reshape(b, n, -1)
    grads = {
        "projection": np.einsum("bnk,bnj->kj", f, dx),
        "head_weight": g.T @ x,
        "head_bias": g.sum(axis=0),
    }
    return loss, grads


def skip_clip_loss(model: TrainedModel, batch, margin: float):
    proj = model.encoder.projection
    ctx_f = model.encoder.features([" ".join(ex.context_steps) for ex in batch])
    tgt_f = [model.encoder.features(ex.target_texts) for ex in batch]
    hs = ctx_f @ proj
    zs = [tf @ proj for tf in tgt_f]
    loss, dhs, dzs = losses.batch_hinge(hs, zs, margin)
    grad = ctx_f.T @ np.asarray(dhs)
    for tf, dz in zip(tgt_f, dzs):
        grad += tf.T @ dz
    return loss, {"projection": grad}


def batch_loss(model: TrainedModel, batch, margin: float = 0.1):
    if model.task == "perm_class":
        return perm_class_loss(model, batch)
    if model.task == "emb_reg":
        return emb_reg_loss(model, batch)
    return skip_clip_loss(model, batch, margin)


# ------------------------------------------------------------------ driver


def _iter_examples(examples):
    if isinstance(examples, (str, os.PathLike)):
        return read_examples(examples)
    return iter(examples)


def _batches(examples, size):
    batch = []
    for ex in examples:
        batch.append(ex)
        if len(batch) == size:
            yield batch
            batch = []
    if batch:
        yield batch


def _peek(examples):
    for ex in _iter_examples(examples):
        return ex
    raise SchemaMismatch("no training examples")


def init_model(task, first, cfg: TrainConfig, n_outputs=None) -> TrainedModel:
    encoder = EncoderModel.init(cfg.feature_dim, cfg.embed_dim, cfg.seed)
    if task == "skip_clip":
        return TrainedModel(task, encoder, len(first.context_steps), config=cfg)
    n_steps = len(first.permuted_steps)
    if task == "emb_reg":
        n_outputs = len(first.target)
    elif n_outputs is None:
        raise ValueError("perm_class training needs the number of classes")
    w = np.zeros((n_outputs, n_steps * cfg.embed_dim))
    b = np.zeros(n_outputs)
    return TrainedModel(task, encoder, n_steps, w, b, cfg)


def _check_type(task, ex, position):
    if not isinstance(ex, _EXAMPLE_TYPES[task]):
        raise SchemaMismatch(
            f"example {position} is a {type(ex).__name__}, not usable for task {task}"
        )


def _check_example(task, ex, model, n_outputs, position):
    _check_type(task, ex, position)
    if task == "skip_clip":
        return
    if len(ex.permuted_steps) != model.n_steps:
        raise SchemaMismatch(
            f"example {position} has {len(ex.permuted_steps)} steps, expected {model.n_steps}"
        )
    if task == "perm_class" and not 0 <= ex.label < n_outputs:
        raise SchemaMismatch(f"example {position} label {ex.label} outside 0..{n_outputs - 1}")
    if task == "emb_reg" and len(ex.target) != model.head_weight.shape[0]:
        raise SchemaMismatch(f"example {position} target length differs from the first example")


def train(task: str, examples, cfg: TrainConfig, n_classes: int | None = None,
          log_fh=None) -> tuple:
    """Train from ``examples`` (a JSONL path or an iterable of example objects).

    Returns ``(model, log)`` where ``log`` is the list of per-step
    ``{"step", "loss", "lr"}`` records; each record is also written to
    ``log_fh`` as JSONL when given. A path is re-read every epoch, so the
    corpus is never held in memory.
    """
    task = TASK_ALIASES.get(task, task)
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}")
    if not isinstance(examples, (str, os.PathLike)):
        examples = list(examples)
    first = _peek(examples)
    _check_type(task, first, 0)
    model = init_model(task, first, cfg, n_classes)
    n_out = None if model.head_weight is None else model.head_weight.shape[0]

    records = []
    step = 0
    for _ in range(cfg.epochs):
        position = 0
        for batch in _batches(_iter_examples(examples), cfg.batch_size):
            for ex in batch:
                _check_example(task, ex, model, n_out, position)
                position += 1
            loss, grads = batch_loss(model, batch, cfg.margin)
            if not math.isfinite(loss):
                raise NonFiniteLoss(f"non-finite loss {loss} at step {step}", step=step)
            lr = cfg.lr_at(step)
            _sgd_step(model, grads, lr, cfg.weight_decay)
            rec = {"step": step, "loss": loss, "lr": lr}
            records.append(rec)
            if log_fh is not None:
                log_fh.write(json.dumps(rec) + "\n")
            step += 1
    return model, records


def _sgd_step(model, grads, lr, weight_decay):
    if lr == 0.0:
        return
    enc = model.encoder
    enc.projection -= lr * (grads["projection"] + weight_decay * enc.projection)
    if "head_weight" in grads:
        model.head_weight -= lr * (grads["head_weight"] + weight_decay * model.head_weight)
        model.head_bias -= lr * grads["head_bias"]


def accuracy(model: TrainedModel, examples: Iterable, batch_size: int = 256) -> float:
    """Fraction of perm-class examples whose label is the arg-max logit."""
    correct = 0
    total = 0
    for batch in _batches(_iter_examples(examples), batch_size):
        pred = model.predict_labels([ex.permuted_steps for ex in batch])
        correct += int((pred == np.array([ex.label for ex in batch])).sum())
        total += len(batch)
    return correct / total if total else 0.0
