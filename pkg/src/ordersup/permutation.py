"""Permutations of recipe steps, their distances, embeddings and label sets.

Permutations are 1-indexed at every public boundary: ``Permutation((4, 3, 1, 2))``
puts the original fourth step first. Internally kernels work on 0-indexed
int64 rows.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .errors import (
    InvalidHammingEmbedding,
    InvalidLehmerCode,
    LengthMismatch,
    NotABijection,
    SetSizeTooLarge,
)

EXHAUSTIVE_MAX_N = 8
DEFAULT_POOL_SIZE = 10_000


def _check_bijection(mapping):
    n = len(mapping)
    if n == 0:
        raise NotABijection("empty permutation", position=None)
    seen = {}
    for pos, v in enumerate(mapping, start=1):
        if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
            raise NotABijection(f"non-integer value {v!r} at position {pos}", position=pos)
        if not 1 <= v <= n:
            raise NotABijection(f"value {v} at position {pos} outside 1..{n}", position=pos)
        if v in seen:
            raise NotABijection(
                f"value {v} repeated at positions {seen[v]} and {pos}", position=pos
            )
        seen[v] = pos


@dataclass(frozen=True, order=True)
class Permutation:
    """A bijection over ``1..N``; ``mapping[i-1]`` is the step placed at slot ``i``."""

    mapping: tuple

    def __post_init__(self):
        mapping = tuple(int(v) if isinstance(v, np.integer) else v for v in self.mapping)
        _check_bijection(mapping)
        if len(mapping) < 2:
            raise NotABijection("a permutation needs at least 2 elements", position=1)
        object.__setattr__(self, "mapping", mapping)

    @property
    def n(self) -> int:
        return len(self.mapping)

    def __len__(self):
        return len(self.mapping)

    def __iter__(self):
        return iter(self.mapping)

    def __getitem__(self, i):
        return self.mapping[i]

    def __repr__(self):
        return f"Permutation({self.mapping})"

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(1, n + 1)))

    @classmethod
    def from_zero_based(cls, arr) -> "Permutation":
        return cls(tuple(int(v) + 1 for v in arr))

    def zero_based(self) -> np.ndarray:
        return np.asarray(self.mapping, dtype=np.int64) - 1

    def inverse(self) -> "Permutation":
        inv = [0] * self.n
        for i, v in enumerate(self.mapping, start=1):
            inv[v - 1] = i
        return Permutation(tuple(inv))

    def compose(self, other: "Permutation") -> "Permutation":
        """``(self ∘ other)(i) = self(other(i))``."""
        _same_length(self, other)
        return Permutation(tuple(self.mapping[j - 1] for j in other.mapping))


def validate(mapping: Sequence[int]) -> Permutation:
    """Build a :class:`Permutation`, raising :class:`NotABijection` on bad input."""
    return Permutation(tuple(mapping))


def _same_length(p, q):
    if len(p) != len(q):
        raise LengthMismatch(f"permutation lengths differ: {len(p)} vs {len(q)}")


def hamming_distance(p: Permutation, q: Permutation) -> int:
    _same_length(p, q)
    return sum(a != b for a, b in zip(p.mapping, q.mapping))


def kendall_tau_distance(p: Permutation, q: Permutation) -> int:
    """Number of position pairs ordered differently by ``p`` and ``q``."""
    _same_length(p, q)
    rel = q.compose(p.inverse())
    return int(kernels.inversion_counts(rel.zero_based()[None, :])[0])


def inversion_count(p: Permutation) -> int:
    return int(kernels.inversion_counts(p.zero_based()[None, :])[0])


# ---------------------------------------------------------------- embeddings


def lehmer_encode(p: Permutation) -> np.ndarray:
    """``out[i] = #{j < i : p(j) > p(i)}``."""
    return kernels.lehmer_codes(p.zero_based()[None, :])[0]


def check_lehmer(values) -> np.ndarray:
    v = np.asarray(values)
    if v.ndim != 1 or v.size < 2:
        raise InvalidLehmerCode("Lehmer code must be a vector of length >= 2")
    if not np.all(np.equal(np.mod(v, 1), 0)):
        raise InvalidLehmerCode("Lehmer code entries must be integers")
    v = v.astype(np.int64)
    for i, x in enumerate(v):
        if not 0 <= x <= i:
            raise InvalidLehmerCode(
                f"entry {x} at position {i + 1} outside 0..{i}", position=i + 1
            )
    return v


def lehmer_decode(values) -> Permutation:
    v = check_lehmer(values)
    n = len(v)
    remaining = list(range(1, n + 1))
    out = [0] * n
    for i in range(n - 1, -1, -1):
        # slot i holds the (v[i]+1)-th largest value not used further right
        out[i] = remaining.pop(len(remaining) - 1 - int(v[i]))
    return Permutation(tuple(out))


def hamming_encode(p: Permutation) -> np.ndarray:
    """Flattened permutation matrix: block ``i`` is the one-hot vector of ``p(i)``."""
    n = p.n
    h = np.zeros(n * n, dtype=np.int64)
    h[np.arange(n) * n + p.zero_based()] = 1
    return h


def check_hamming(values) -> np.ndarray:
    v = np.asarray(values)
    n = math.isqrt(v.size)
    if v.ndim != 1 or n * n != v.size or n < 2:
        raise InvalidHammingEmbedding(f"length {v.size} is not a square >= 4")
    if not np.all((v == 0) | (v == 1)):
        raise InvalidHammingEmbedding("entries must be 0 or 1")
    m = v.reshape(n, n).astype(np.int64)
    rows = m.sum(axis=1)
    bad = np.flatnonzero(rows != 1)
    if bad.size:
        raise InvalidHammingEmbedding(
            f"block {bad[0] + 1} has {rows[bad[0]]} ones, expected 1"
        )
    cols = m.sum(axis=0)
    bad = np.flatnonzero(cols != 1)
    if bad.size:
        raise InvalidHammingEmbedding(f"value {bad[0] + 1} is used by {cols[bad[0]]} blocks")
    return m.reshape(-1)


def hamming_decode(values) -> Permutation:
    m = check_hamming(values)
    n = math.isqrt(m.size)
    return Permutation.from_zero_based(m.reshape(n, n).argmax(axis=1))


def apply_permutation(steps: Sequence[str], p: Permutation) -> list:
    """Reorder ``steps`` so that output slot ``i`` holds input step ``p(i)``."""
    if len(steps) != p.n:
        raise LengthMismatch(f"{len(steps)} steps but permutation has length {p.n}")
    return [steps[j - 1] for j in p.mapping]


# ---------------------------------------------------------- permutation sets


@dataclass(frozen=True)
class PermutationSet:
    """Ordered, distinct permutations; list index is the classification label."""

    permutations: tuple
    generation_seed: int = 0
    candidate_pool_size: int = 0
    _index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        perms = tuple(p if isinstance(p, Permutation) else Permutation(tuple(p))
                      for p in self.permutations)
        if not perms:
            raise ValueError("permutation set is empty")
        n = perms[0].n
        for p in perms:
            if p.n != n:
                raise LengthMismatch(f"mixed permutation lengths {n} and {p.n}")
        index = {p: i for i, p in enumerate(perms)}
        if len(index) != len(perms):
            raise ValueError("permutation set contains duplicates")
        object.__setattr__(self, "permutations", perms)
        object.__setattr__(self, "_index", index)

    @property
    def n_steps(self) -> int:
        return self.permutations[0].n

    def __len__(self):
        return len(self.permutations)

    def __getitem__(self, label):
        return self.permutations[label]

    def __iter__(self):
        return iter(self.permutations)

    def label_of(self, p: Permutation) -> int:
        return self._index[p]

    def as_array(self) -> np.ndarray:
        """Zero-based rows, shape ``(set_size, n_steps)``."""
        return np.array([p.zero_based() for p in self.permutations], dtype=np.int64)

    def min_pairwise_distance(self) -> int:
        arr = self.as_array()
        best = self.n_steps
        for i in range(1, len(arr)):
            lo, _ = kernels.distances_to_set(arr[i:i + 1], arr[:i])
            best = min(best, int(lo[0]))
        return best

    def to_json(self, meta=None) -> str:
        """Serialise with one permutation per line; output is byte-stable."""
        head = {
            "n_steps": self.n_steps,
            "set_size": len(self),
            "seed": self.generation_seed,
            "pool_size": self.candidate_pool_size,
        }
        lines = ["{"]
        for k, v in head.items():
            lines.append(f"  {json.dumps(k)}: {json.dumps(v)},")
        if meta is not None:
            lines.append(f'  "meta": {json.dumps(meta, sort_keys=True)},')
        rows = [json.dumps(list(p.mapping)) for p in self.permutations]
        lines.append('  "permutations": [')
        lines.append(",\n".join("    " + r for r in rows))
        lines.append("  ]")
        lines.append("}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_dict(cls, obj) -> "PermutationSet":
        try:
            perms = obj["permutations"]
            pset = cls(
                tuple(Permutation(tuple(p)) for p in perms),
                generation_seed=int(obj.get("seed", 0)),
                candidate_pool_size=int(obj.get("pool_size", 0)),
            )
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed permutation-set object: {exc}") from exc
        if "n_steps" in obj and obj["n_steps"] != pset.n_steps:
            raise LengthMismatch(
                f"n_steps={obj['n_steps']} but permutations have length {pset.n_steps}"
            )
        if "set_size" in obj and obj["set_size"] != len(pset):
            raise ValueError(f"set_size={obj['set_size']} but {len(pset)} permutations listed")
        return pset

    def save(self, path, meta=None):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json(meta))

    @classmethod
    def load(cls, path) -> "PermutationSet":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def all_permutations(n: int) -> np.ndarray:
    """Every permutation of ``0..n-1`` in lexicographic order."""
    return np.array(list(itertools.permutations(range(n))), dtype=np.int64).reshape(-1, n)


def _sample_pool(rng, n, size, exclude):
    keys = rng.random((size, n))
    pool = np.argsort(keys, axis=1).astype(np.int64)
    pool = np.unique(pool, axis=0)  # dedupes and sorts lexicographically
    if exclude:
        drop = np.zeros(len(pool), dtype=bool)
        for row in exclude:
            drop |= (pool == row).all(axis=1)
        pool = pool[~drop]
    return pool


def generate_max_hamming_set(
    n_steps: int,
    set_size: int,
    seed: int,
    pool_size: int = DEFAULT_POOL_SIZE,
) -> PermutationSet:
    """Greedily grow a set of mutually distant permutations.

    Each new member maximises its minimum Hamming distance to the members
    already chosen; ties go to the larger total distance, then to the
    lexicographically smallest mapping. For ``n_steps <= 8`` every
    permutation is a candidate; above that a fresh seeded sample of
    ``pool_size`` permutations is drawn per iteration.
    """
    if n_steps < 2:
        raise ValueError("n_steps must be >= 2")
    if set_size < 2:
        raise ValueError("set_size must be >= 2")
    if set_size > math.factorial(n_steps):
        raise SetSizeTooLarge(
            f"set_size {set_size} exceeds {n_steps}! = {math.factorial(n_steps)}"
        )
    if pool_size < set_size:
        raise ValueError(f"pool_size {pool_size} smaller than set_size {set_size}")

    rng = np.random.default_rng(seed)
    if n_steps <= EXHAUSTIVE_MAX_N:
        pool = all_permutations(n_steps)
        first = int(rng.integers(len(pool)))
        rows = pool[kernels.greedy_select(pool, first, set_size)]
    else:
        pool = _sample_pool(rng, n_steps, pool_size, [])
        chosen = [pool[int(rng.integers(len(pool)))]]
        while len(chosen) < set_size:
            pool = _sample_pool(rng, n_steps, pool_size, chosen)
            min_d, sum_d = kernels.distances_to_set(pool, np.array(chosen))
            best = kernels.pick_best_np(min_d, sum_d, np.zeros(len(pool), dtype=bool))
            chosen.append(pool[best])
        rows = np.array(chosen)

    return PermutationSet(
        tuple(Permutation.from_zero_based(r) for r in rows),
        generation_seed=int(seed),
        candidate_pool_size=int(pool_size),
    )
