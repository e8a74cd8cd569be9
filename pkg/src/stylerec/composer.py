"""Beam-search composition of complete outfits over a fixed slot order.

The search starts from random products of the first slot, extends every beam
with every candidate of the next slot, and ranks beams by the cumulative mean
of the incremental outfit-model scores collected so far, keeping the best b.
Start products come from a seed-deterministic permutation, so widening the
beam can only add start outfits, never replace them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .catalog import Product, Slot
from .errors import EmptyPoolError

OutfitScorer = Callable[[Product, Sequence[Product]], float]


@dataclass(frozen=True)
class BeamConfig:
    """Slot order, beam width, per-slot candidate pools, and the start seed."""

    slot_order: tuple[Slot, ...]
    beam_width: int
    pools: Mapping[Slot, Sequence[Product]]
    rng_seed: int = 0


@dataclass(frozen=True)
class ScoredOutfit:
    """A complete outfit with its aggregate score and per-step scores."""

    products: tuple[Product, ...]
    score: float
    step_scores: tuple[float, ...]


def _sorted_pool(config: BeamConfig, slot: Slot) -> list[Product]:
    pool = list(config.pools.get(slot, ()))
    if not pool:
        raise EmptyPoolError(f"empty candidate pool for slot {slot.value!r}")
    pool.sort(key=lambda p: p.id)
    return pool


def beam_search(scorer: OutfitScorer, config: BeamConfig) -> list[ScoredOutfit]:
    """Compose up to ``beam_width`` outfits covering every slot in order.

    Start products are drawn without replacement when the first pool is large
    enough; otherwise the whole pool is used (fewer beams than requested).
    Deterministic given seed, pools, and model.
    """
    if config.beam_width < 1:
        raise ValueError("beam_width must be >= 1")
    if len(set(config.slot_order)) != len(config.slot_order):
        raise ValueError("slot_order must not repeat slots")
    if not config.slot_order:
        raise ValueError("slot_order must not be empty")

    rng = np.random.default_rng(config.rng_seed)
    first_pool = _sorted_pool(config, config.slot_order[0])
    permutation = rng.permutation(len(first_pool))
    starts = permutation[: min(config.beam_width, len(first_pool))]

    beams: list[tuple[tuple[Product, ...], tuple[float, ...]]] = [
        ((first_pool[int(i)],), ()) for i in starts
    ]
    for slot in config.slot_order[1:]:
        pool = _sorted_pool(config, slot)
        extensions = []
        for products, steps in beams:
            for candidate in pool:
                increment = float(scorer(candidate, products))
                new_steps = steps + (increment,)
                aggregate = sum(new_steps) / len(new_steps)
                extensions.append((aggregate, products + (candidate,), new_steps))
        extensions.sort(key=lambda e: (-e[0], tuple(p.id for p in e[1])))
        beams = [(products, steps) for _, products, steps in extensions[: config.beam_width]]

    results = [
        ScoredOutfit(
            products=products,
            score=sum(steps) / len(steps) if steps else 0.0,
            step_scores=steps,
        )
        for products, steps in beams
    ]
    results.sort(key=lambda o: (-o.score, tuple(p.id for p in o.products)))
    return results
