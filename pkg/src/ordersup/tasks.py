"""Training-example generators for the three order-supervised tasks.

Randomness for the recipe at stream position ``k`` (copy ``c``) comes from
``numpy.random.default_rng([seed, k, c])``, so a generator's output does not
depend on how the input stream is batched.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .corpus import Recipe
from .errors import SchemaMismatch, StepCountMismatch
from .permutation import (
    PermutationSet,
    apply_permutation,
    hamming_encode,
    lehmer_encode,
)

log = logging.getLogger(__name__)

EMBEDDING_KINDS = ("lehmer", "hamming")


@dataclass(frozen=True)
class PermClassExample:
    recipe_id: str
    permuted_steps: tuple
    label: int
    permset_ref: str

    def to_dict(self):
        return {
            "recipe_id": self.recipe_id,
            "permuted_steps": list(self.permuted_steps),
            "label": self.label,
            "permset_ref": self.permset_ref,
        }


@dataclass(frozen=True)
class EmbRegExample:
    recipe_id: str
    permuted_steps: tuple
    target: tuple
    kind: str
    permset_ref: str = ""
    label: int = -1

    def to_dict(self):
        return {
            "recipe_id": self.recipe_id,
            "permuted_steps": list(self.permuted_steps),
            "label": self.label,
            "permset_ref": self.permset_ref,
            "target": list(self.target),
            "kind": self.kind,
        }


@dataclass(frozen=True)
class SkipClipExample:
    recipe_id: str
    context_steps: tuple
    targets: tuple  # ((t, text), ...) with 1-indexed t, ascending

    def __post_init__(self):
        ts = [t for t, _ in self.targets]
        k = len(self.context_steps)
        if k < 1 or len(ts) < 2:
            raise ValueError("need K >= 1 context steps and M >= 2 targets")
        if ts[0] <= k or any(a >= b for a, b in zip(ts, ts[1:])):
            raise ValueError(f"target indices {ts} must be > {k} and strictly increasing")

    @property
    def target_indices(self):
        return [t for t, _ in self.targets]

    @property
    def target_texts(self):
        return [s for _, s in self.targets]

    def to_dict(self):
        return {
            "recipe_id": self.recipe_id,
            "context_steps": list(self.context_steps),
            "targets": [{"t": t, "text": s} for t, s in self.targets],
        }


@dataclass
class GenerationReport:
    """Counts for a generator run; ``errors`` lists ``(position, recipe_id, message)``."""

    seen: int = 0
    emitted: int = 0
    errors: list = field(default_factory=list)

    @property
    def skipped(self) -> int:
        return len(self.errors)

    def to_dict(self):
        return {"seen": self.seen, "emitted": self.emitted, "skipped": self.skipped}


def example_rng(seed: int, position: int, copy: int = 0) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(position), int(copy)])


def _choose(recipes, pset, seed, copies, report, strict):
    n = pset.n_steps
    for pos, r in enumerate(recipes):
        if report is not None:
            report.seen += 1
        if r.n_steps != n:
            msg = f"recipe {r.id!r} has {r.n_steps} steps, permutation set expects {n}"
            if strict:
                raise StepCountMismatch(msg, recipe_id=r.id)
            log.warning("position %d: %s", pos, msg)
            if report is not None:
                report.errors.append((pos, r.id, msg))
            continue
        for c in range(copies):
            label = int(example_rng(seed, pos, c).integers(len(pset)))
            yield r, label, apply_permutation(r.steps, pset[label])


def gen_perm_class(
    recipes: Iterable[Recipe],
    pset: PermutationSet,
    seed: int,
    permset_ref: str = "",
    copies: int = 1,
    report: GenerationReport | None = None,
    strict: bool = True,
) -> Iterator[PermClassExample]:
    """Shuffle each recipe by a uniformly chosen member of ``pset``; label is its index.

    With ``strict`` a recipe of the wrong length raises
    :class:`StepCountMismatch`; otherwise it is recorded in ``report`` and skipped.
    """
    for r, label, steps in _choose(recipes, pset, seed, copies, report, strict):
        if report is not None:
            report.emitted += 1
        yield PermClassExample(r.id, tuple(steps), label, permset_ref)


def embedding_target(p, kind):
    if kind == "lehmer":
        return lehmer_encode(p)
    if kind == "hamming":
        return hamming_encode(p)
    raise ValueError(f"unknown embedding kind {kind!r}; expected one of {EMBEDDING_KINDS}")


def gen_emb_reg(
    recipes: Iterable[Recipe],
    pset: PermutationSet,
    kind: str,
    seed: int,
    permset_ref: str = "",
    copies: int = 1,
    report: GenerationReport | None = None,
    strict: bool = True,
) -> Iterator[EmbRegExample]:
    """As :func:`gen_perm_class` but the target is the permutation's embedding."""
    if kind not in EMBEDDING_KINDS:
        raise ValueError(f"unknown embedding kind {kind!r}")
    for r, label, steps in _choose(recipes, pset, seed, copies, report, strict):
        target = tuple(int(v) for v in embedding_target(pset[label], kind))
        if report is not None:
            report.emitted += 1
        yield EmbRegExample(r.id, tuple(steps), target, kind, permset_ref, label)


def gen_skip_clip(
    recipes: Iterable[Recipe],
    K: int = 4,
    M: int = 4,
    seed: int = 0,
    copies: int = 1,
    report: GenerationReport | None = None,
) -> Iterator[SkipClipExample]:
    """Context = first ``K`` steps; targets = ``M`` distinct later steps, ascending.

    Recipes with fewer than ``K + M`` steps are skipped and counted.
    """
    if K < 1 or M < 2:
        raise ValueError("K must be >= 1 and M >= 2")
    for pos, r in enumerate(recipes):
        if report is not None:
            report.seen += 1
        n = r.n_steps
        if n - K < M:
            msg = f"recipe {r.id!r} has {n} steps, needs at least K+M = {K + M}"
            log.debug("position %d: %s", pos, msg)
            if report is not None:
                report.errors.append((pos, r.id, msg))
            continue
        for c in range(copies):
            rng = example_rng(seed, pos, c)
            picked = np.sort(rng.choice(np.arange(K + 1, n + 1), size=M, replace=False))
            targets = tuple((int(t), r.steps[t - 1]) for t in picked)
            if report is not None:
                report.emitted += 1
            yield SkipClipExample(r.id, tuple(r.steps[:K]), targets)


# ------------------------------------------------------------------ file io


def write_examples(examples, fh) -> int:
    n = 0
    for ex in examples:
        fh.write(json.dumps(ex.to_dict(), ensure_ascii=False))
        fh.write("\n")
        n += 1
    return n


def parse_example(obj) -> PermClassExample | EmbRegExample | SkipClipExample:
    """Inverse of ``to_dict`` for all three example kinds."""
    try:
        if "context_steps" in obj:
            return SkipClipExample(
                str(obj["recipe_id"]),
                tuple(obj["context_steps"]),
                tuple((int(t["t"]), str(t["text"])) for t in obj["targets"]),
            )
        if "target" in obj:
            return EmbRegExample(
                str(obj["recipe_id"]),
                tuple(obj["permuted_steps"]),
                tuple(obj["target"]),
                str(obj["kind"]),
                str(obj.get("permset_ref", "")),
                int(obj.get("label", -1)),
            )
        return PermClassExample(
            str(obj["recipe_id"]),
            tuple(obj["permuted_steps"]),
            int(obj["label"]),
            str(obj.get("permset_ref", "")),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaMismatch(f"malformed example record: {exc}") from exc


def read_examples(path) -> Iterator:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaMismatch(f"{path}:{lineno}: {exc.msg}") from exc
            yield parse_example(obj)
