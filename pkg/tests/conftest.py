import json

import pytest

from ordersup.tracking import EntityGrid

FLOWER_GOLD = ("-", "-", "-", "-", "tree", "-", "-")
FLOWER_PERMCLASS = ("-", "-", "-", "-", "tree", "-", "-")
FLOWER_BASELINE = ("-", "-", "-", "-", "tree", "tree", "tree")


@pytest.fixture
def flower():
    return {
        "gold": [EntityGrid("flower-proc", "flower", FLOWER_GOLD)],
        "permclass": [EntityGrid("flower-proc", "flower", FLOWER_PERMCLASS)],
        "baseline": [EntityGrid("flower-proc", "flower", FLOWER_BASELINE)],
    }


def write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        for r in rows:
            fh.write(r if isinstance(r, str) else json.dumps(r))
            fh.write("\n")
    return path


def recipe_row(rid, n_steps, ingredients=("flour", "water")):
    return {
        "id": rid,
        "title": f"recipe {rid}",
        "ingredients": list(ingredients),
        "steps": [f"do thing {k} of {rid}" for k in range(1, n_steps + 1)],
        "source": "fixture",
    }


# acceptance criteria register a one-line verdict here; printed after the run
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
