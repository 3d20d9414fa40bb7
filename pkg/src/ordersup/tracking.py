"""Entity-state derivation and category scoring for procedural text.

A grid holds one location value per step for a single entity, with index 0
meaning "before the process starts". ``"-"`` marks a non-existent entity,
``"?"`` an entity at an unknown location; anything else is a location span.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass
from typing import Iterable

from .errors import KeyMismatch, LengthMismatch, ParseError

NOT_EXISTS = "-"
UNKNOWN = "?"

CREATED = "created"
MOVED = "moved"
DESTROYED = "destroyed"
UNCHANGED = "unchanged"
EVENT_KINDS = (CREATED, DESTROYED, MOVED)


def normalize(value: str) -> str:
    return value.strip().casefold()


@dataclass(frozen=True)
class EntityGrid:
    procedure_id: str
    entity: str
    locations: tuple

    def __post_init__(self):
        locs = tuple(str(v).strip() for v in self.locations)
        if len(locs) < 2:
            raise ParseError(
                f"{self.procedure_id}/{self.entity}: need at least 2 location values"
            )
        if any(not v for v in locs):
            raise ParseError(f"{self.procedure_id}/{self.entity}: empty location value")
        object.__setattr__(self, "locations", locs)

    @property
    def key(self):
        return (self.procedure_id, self.entity)

    @property
    def n_steps(self) -> int:
        return len(self.locations) - 1


def _transition(before: str, after: str) -> str:
    b_exists = before != NOT_EXISTS
    a_exists = after != NOT_EXISTS
    if not b_exists and a_exists:
        return CREATED
    if b_exists and not a_exists:
        return DESTROYED
    if b_exists and a_exists and normalize(before) != normalize(after):
        return MOVED
    return UNCHANGED


def derive_states(grid: EntityGrid) -> list:
    """One state per step ``1..S`` from consecutive location pairs."""
    locs = grid.locations
    return [_transition(locs[s - 1], locs[s]) for s in range(1, len(locs))]


def events(states) -> dict:
    """Map each event kind present to the sorted 1-based steps where it occurs."""
    out = {}
    for step, st in enumerate(states, start=1):
        if st != UNCHANGED:
            out.setdefault(st, []).append(step)
    return out


@dataclass
class CategoryScores:
    cat1_acc: float
    cat2_acc: float
    cat3_acc: float
    avg_cat_acc: float
    status_acc: float
    location_acc: float
    transition_acc: float

    def to_dict(self):
        return asdict(self)


def _index(grids: Iterable[EntityGrid], what: str) -> dict:
    out = {}
    for g in grids:
        if g.key in out:
            raise KeyMismatch(f"duplicate {what} entry for {g.key}")
        out[g.key] = g
    return out


def score(gold: Iterable[EntityGrid], pred: Iterable[EntityGrid]) -> CategoryScores:
    """Score predicted grids against gold grids keyed by ``(procedure_id, entity)``.

    ``status_acc`` compares existence after each step, ``transition_acc``
    compares the derived per-step states and ``location_acc`` compares all
    ``S + 1`` location values.
    """
    gold_ix = _index(gold, "gold")
    pred_ix = _index(pred, "prediction")
    if not gold_ix:
        raise KeyMismatch("gold set is empty")
    missing = sorted(set(gold_ix) - set(pred_ix))
    extra = sorted(set(pred_ix) - set(gold_ix))
    if missing or extra:
        parts = []
        if missing:
            parts.append(f"missing predictions for {missing[:5]}")
        if extra:
            parts.append(f"unexpected predictions for {extra[:5]}")
        raise KeyMismatch("; ".join(parts))

    cat = [0, 0, 0]
    status_hits = status_total = 0
    trans_hits = 0
    loc_hits = loc_total = 0
    for key in sorted(gold_ix):
        g = gold_ix[key]
        p = pred_ix[key]
        if len(g.locations) != len(p.locations):
            raise LengthMismatch(
                f"{key}: gold has {len(g.locations)} locations, prediction {len(p.locations)}"
            )
        gs, ps = derive_states(g), derive_states(p)
        ge, pe = events(gs), events(ps)

        cat[0] += set(ge) == set(pe)
        cat[1] += all(pe.get(kind) == steps for kind, steps in ge.items())
        gold_steps = sorted({s for steps in ge.values() for s in steps})
        cat[2] += all(
            normalize(g.locations[s]) == normalize(p.locations[s]) for s in gold_steps
        )

        # status: does the entity exist after each step 1..S
        status_hits += sum(
            (a != NOT_EXISTS) == (b != NOT_EXISTS)
            for a, b in zip(g.locations[1:], p.locations[1:])
        )
        status_total += len(gs)
        trans_hits += sum(a == b for a, b in zip(gs, ps))
        loc_hits += sum(normalize(a) == normalize(b) for a, b in zip(g.locations, p.locations))
        loc_total += len(g.locations)

    n = len(gold_ix)
    c1, c2, c3 = (c / n for c in cat)
    return CategoryScores(
        cat1_acc=c1,
        cat2_acc=c2,
        cat3_acc=c3,
        avg_cat_acc=(c1 + c2 + c3) / 3,
        status_acc=status_hits / status_total,
        location_acc=loc_hits / loc_total,
        transition_acc=trans_hits / status_total,
    )


# ------------------------------------------------------------------ readers


def read_grids_tsv(path) -> list:
    """Rows ``procedure_id, entity, loc_0 .. loc_S``; an optional header row is skipped."""
    grids = []
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh, delimiter="\t"), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if lineno == 1 and row[0].strip().lower() == "procedure_id":
                continue
            if len(row) < 4:
                raise ParseError(f"{path}:{lineno}: expected at least 4 columns", lineno)
            grids.append(EntityGrid(row[0].strip(), row[1].strip(), tuple(row[2:])))
    return grids


def read_grids_jsonl(path) -> list:
    grids = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                grids.append(
                    EntityGrid(str(obj["procedure_id"]), str(obj["entity"]),
                               tuple(obj["locations"]))
                )
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ParseError(f"{path}:{lineno}: {exc}", lineno) from exc
    return grids


def read_grids(path, fmt: str = "tsv") -> list:
    if fmt == "tsv":
        return read_grids_tsv(path)
    if fmt == "jsonl":
        return read_grids_jsonl(path)
    raise ValueError(f"unknown grid format {fmt!r}")


def write_grids_tsv(grids, fh):
    w = csv.writer(fh, delimiter="\t", lineterminator="\n")
    width = max(len(g.locations) for g in grids)
    w.writerow(["procedure_id", "entity"] + [f"loc_{i}" for i in range(width)])
    for g in grids:
        w.writerow([g.procedure_id, g.entity, *g.locations])
