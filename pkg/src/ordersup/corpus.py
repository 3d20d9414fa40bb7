"""Recipe corpus ingestion: JSONL parsing, ingredient-step augmentation,
step-count filtering and descriptive statistics.

All transforms are generators so that multi-million recipe corpora stream
through in constant memory.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable, Iterator

from .errors import ParseError

log = logging.getLogger(__name__)

INGREDIENT_PREFIX = "Ingredients: "


@dataclass(frozen=True)
class Recipe:
    id: str
    title: str
    ingredients: tuple
    steps: tuple
    source: str = ""
    ingredients_prepended: bool = False

    def __post_init__(self):
        object.__setattr__(self, "ingredients", tuple(self.ingredients))
        object.__setattr__(self, "steps", tuple(self.steps))
        if not self.steps:
            raise ParseError(f"recipe {self.id!r} has no steps")
        for i, s in enumerate(self.steps, start=1):
            if not isinstance(s, str):
                raise ParseError(f"recipe {self.id!r} step {i} is not a string")
            if not s.strip():
                raise ParseError(f"recipe {self.id!r} step {i} is blank")
        for i, s in enumerate(self.ingredients, start=1):
            if not isinstance(s, str):
                raise ParseError(f"recipe {self.id!r} ingredient {i} is not a string")

    @property
    def n_steps(self) -> int:
        return len(self.steps)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ingredients"] = list(self.ingredients)
        d["steps"] = list(self.steps)
        if not self.ingredients_prepended:
            del d["ingredients_prepended"]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False)

    @classmethod
    def from_dict(cls, obj, source_tag=None) -> "Recipe":
        if not isinstance(obj, dict):
            raise ParseError("record is not a JSON object")
        missing = [k for k in ("id", "steps") if k not in obj]
        if missing:
            raise ParseError(f"missing field(s): {', '.join(missing)}")
        steps = obj["steps"]
        ingredients = obj.get("ingredients") or []
        if not isinstance(steps, list):
            raise ParseError("'steps' must be a list")
        if not isinstance(ingredients, list):
            raise ParseError("'ingredients' must be a list")
        source = source_tag if source_tag else obj.get("source", "")
        return cls(
            id=str(obj["id"]),
            title=str(obj.get("title", "")),
            ingredients=ingredients,
            steps=steps,
            source=str(source),
            ingredients_prepended=bool(obj.get("ingredients_prepended", False)),
        )


@dataclass
class CorpusStats:
    recipe_count: int = 0
    step_word_count: int = 0
    ingredient_word_count: int = 0
    step_count_histogram: dict = field(default_factory=dict)

    def add(self, r: Recipe):
        self.recipe_count += 1
        own_steps = r.steps[1:] if r.ingredients_prepended else r.steps
        self.step_word_count += sum(_words(s) for s in own_steps)
        self.ingredient_word_count += sum(_words(i) for i in r.ingredients)
        self.step_count_histogram[r.n_steps] = self.step_count_histogram.get(r.n_steps, 0) + 1

    def to_dict(self) -> dict:
        d = asdict(self)
        d["step_count_histogram"] = {
            str(k): v for k, v in sorted(self.step_count_histogram.items())
        }
        return d


class CorpusReader:
    """Iterate over the recipes of a JSONL file.

    Malformed lines are logged and skipped; after iteration ``skipped`` holds
    ``(line_number, message)`` pairs. A missing file raises immediately.
    """

    def __init__(self, path, source_tag=None):
        self.path = os.fspath(path)
        self.source_tag = source_tag
        if not os.path.isfile(self.path):
            raise FileNotFoundError(f"no such corpus file: {self.path}")
        self.skipped = []

    @property
    def skip_count(self) -> int:
        return len(self.skipped)

    def __iter__(self) -> Iterator[Recipe]:
        self.skipped = []
        with open(self.path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                    yield Recipe.from_dict(obj, self.source_tag)
                except (json.JSONDecodeError, ParseError) as exc:
                    msg = exc.msg if isinstance(exc, json.JSONDecodeError) else str(exc)
                    log.warning("%s:%d: skipped: %s", self.path, lineno, msg)
                    self.skipped.append((lineno, msg))


def load_corpus(path, source_tag=None) -> CorpusReader:
    return CorpusReader(path, source_tag)


def ingredient_sentence(ingredients) -> str:
    items = [i.strip() for i in ingredients if i.strip()]
    return INGREDIENT_PREFIX + ", ".join(items) + "."


def prepend_ingredient_step(r: Recipe) -> Recipe:
    """Insert an ``Ingredients: a, b, c.`` step in front; no-op if already done."""
    if r.ingredients_prepended or not any(i.strip() for i in r.ingredients):
        return r
    return replace(
        r,
        steps=(ingredient_sentence(r.ingredients),) + r.steps,
        ingredients_prepended=True,
    )


def filter_min_steps(recipes: Iterable[Recipe], min_steps_exclusive: int = 4):
    if min_steps_exclusive < 0:
        raise ValueError("min_steps_exclusive must be >= 0")
    return (r for r in recipes if r.n_steps > min_steps_exclusive)


def select_fixed_step_subset(recipes: Iterable[Recipe], n_steps: int):
    if n_steps < 2:
        raise ValueError("n_steps must be >= 2")
    return (r for r in recipes if r.n_steps == n_steps)


def _words(text):
    return len(text.split())


def compute_stats(recipes: Iterable[Recipe]) -> CorpusStats:
    """Whitespace word counts; a prepended ingredient step is not counted as step text."""
    stats = CorpusStats()
    for r in recipes:
        stats.add(r)
    return stats


def write_recipes(recipes: Iterable[Recipe], fh) -> int:
    count = 0
    for r in recipes:
        fh.write(r.to_json())
        fh.write("\n")
        count += 1
    return count
