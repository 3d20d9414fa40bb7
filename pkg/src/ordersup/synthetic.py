"""Synthetic recipe corpora for smoke tests and learnability checks.

Step ``k`` of every generated recipe carries the marker token ``stepk`` plus
random filler words, so step order is recoverable from the text alone.
"""

from __future__ import annotations

import numpy as np

from .corpus import Recipe

FILLER = (
    "add mix stir chop slice dice whisk fold pour bake boil simmer fry roast "
    "grill season salt pepper sugar flour butter oil water milk egg onion garlic "
    "tomato carrot potato cheese cream rice pasta sauce bowl pan pot oven heat "
    "minutes until golden soft smooth thick gently slowly well then and the a"
).split()


def synthetic_recipes(n_recipes: int, n_steps: int = 6, seed: int = 0,
                      filler_words: int = 3, markers: bool = True):
    """Yield ``n_recipes`` recipes of exactly ``n_steps`` steps each."""
    rng = np.random.default_rng(seed)
    vocab = np.array(FILLER)
    for r in range(n_recipes):
        steps = []
        for k in range(1, n_steps + 1):
            words = list(rng.choice(vocab, size=filler_words))
            if markers:
                words.insert(int(rng.integers(filler_words + 1)), f"step{k}")
            # trailing index keeps every step text distinct
            steps.append(" ".join(words) + f" ({r}.{k})")
        ingredients = list(rng.choice(vocab[:30], size=3, replace=False))
        yield Recipe(
            id=f"synth-{r}",
            title=f"synthetic recipe {r}",
            ingredients=ingredients,
            steps=steps,
            source="synthetic",
        )
