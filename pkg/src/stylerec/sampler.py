"""Positive-pair, negative-pair, and partial-outfit sample generation.

Positive pairs are all ordered heterogeneous dyads inside an outfit; frequent
context products are probabilistically discarded (subsampling).  Negatives
are drawn from the same functional slot and the same time window as the
positive they shadow, weighted by their occurrence frequency in that window
(a uniform alternative is available behind a flag).  All draws are
deterministic given the seed.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .catalog import Outfit, Product, Slot, TimeWindow
from .errors import EmptyPoolError, UnknownProductError


class Label(enum.Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"


@dataclass(slots=True)
class PairSample:
    """One (target, context) dyad; target and context never share a slot."""

    target: Product
    context: Product
    label: Label
    window_index: int


@dataclass(slots=True)
class TrainingBatch:
    """One positive pair plus its slot-and-window-matched negatives."""

    positive: PairSample
    negatives: list[PairSample]


@dataclass(slots=True)
class OutfitSample:
    """A fixed partial outfit, a held-out positive query, and negative queries."""

    partial_outfit: tuple[Product, ...]
    positive_query: Product
    negative_queries: list[Product]
    window_index: int


class WindowStats:
    """Occurrence counts and per-slot sampling pools for one time window.

    Building the stats is O(window); samplers then draw in O(pool) per call.
    """

    def __init__(self, window: TimeWindow):
        self.window_index = window.index
        counts: dict[Product, int] = {}
        for outfit in window.outfits:
            for product in outfit.products:
                counts[product] = counts.get(product, 0) + 1
        self.counts = counts
        self.total = sum(counts.values())
        pools: dict[Slot, tuple[list[Product], np.ndarray, dict[str, int]]] = {}
        by_slot: dict[Slot, list[Product]] = {}
        for product in counts:
            by_slot.setdefault(product.slot, []).append(product)
        for slot, items in by_slot.items():
            items.sort(key=lambda p: p.id)
            weights = np.array([counts[p] for p in items], dtype=np.float64)
            pools[slot] = (items, weights, {p.id: i for i, p in enumerate(items)})
        self._pools = pools

    def frequency(self, product: Product) -> float:
        """Relative occurrence frequency of ``product`` within this window."""
        try:
            return self.counts[product] / self.total
        except KeyError:
            raise UnknownProductError(
                f"product {product.id!r} does not occur in window {self.window_index}"
            ) from None

    def pool(self, slot: Slot) -> list[Product]:
        entry = self._pools.get(slot)
        return list(entry[0]) if entry else []

    def sample(
        self,
        slot: Slot,
        n: int,
        rng: np.random.Generator,
        exclude: Product | None = None,
        uniform: bool = False,
    ) -> list[Product]:
        """Draw ``n`` products of ``slot`` with replacement, frequency-weighted.

        ``exclude`` is removed from the pool.  Raises EmptyPoolError when no
        candidate remains.
        """
        entry = self._pools.get(slot)
        if entry is None:
            raise EmptyPoolError(
                f"no products of slot {slot.value!r} in window {self.window_index}"
            )
        items, weights, positions = entry
        w = np.ones_like(weights) if uniform else weights.copy()
        if exclude is not None:
            pos = positions.get(exclude.id)
            if pos is not None:
                w[pos] = 0.0
        cumulative = np.cumsum(w)
        if cumulative[-1] <= 0.0:
            raise EmptyPoolError(
                f"no candidates of slot {slot.value!r} in window "
                f"{self.window_index} besides the excluded product"
            )
        draws = rng.random(n) * cumulative[-1]
        picks = np.searchsorted(cumulative, draws, side="right")
        return [items[int(i)] for i in picks]


def _stats_of(window: TimeWindow | WindowStats) -> WindowStats:
    return window if isinstance(window, WindowStats) else WindowStats(window)


@dataclass(frozen=True)
class SubsampleConfig:
    """Threshold and per-window relative frequencies driving context discards."""

    rho: float
    frequencies: Mapping[Product, float]

    def __post_init__(self) -> None:
        if self.rho <= 0:
            raise ValueError("rho must be positive")

    @classmethod
    def from_window(
        cls, window: TimeWindow | WindowStats, rho: float
    ) -> "SubsampleConfig":
        stats = _stats_of(window)
        freqs = {p: c / stats.total for p, c in stats.counts.items()}
        return cls(rho=rho, frequencies=freqs)

    def keep_probability_of(self, product: Product) -> float:
        return keep_probability(self.frequencies[product], self.rho)


def keep_probability(frequency: float, rho: float) -> float:
    """Probability of keeping a positive context with the given frequency.

    min(sqrt(rho / frequency), 1); products rarer than rho are always kept.
    The discard probability is one minus this value.
    """
    if frequency <= 0:
        raise ValueError(f"frequency must be positive, got {frequency}")
    if rho <= 0:
        raise ValueError(f"rho must be positive, got {rho}")
    return min(math.sqrt(rho / frequency), 1.0)


def positive_pairs(outfit: Outfit, window_index: int = -1) -> list[PairSample]:
    """All ordered product pairs of an outfit: n*(n-1) heterogeneous dyads.

    Both orderings are emitted because target and context roles are
    asymmetric.  Pair order follows the outfit's canonical product order.
    """
    products = outfit.products
    pairs: list[PairSample] = []
    for i, target in enumerate(products):
        for j, context in enumerate(products):
            if i != j:
                pairs.append(PairSample(target, context, Label.POSITIVE, window_index))
    return pairs


def draw_negatives(
    positive: PairSample,
    window: TimeWindow | WindowStats,
    n: int,
    rng: int | np.random.Generator,
    uniform: bool = False,
) -> TrainingBatch:
    """Attach ``n`` negative pairs to a positive: same target, same context
    slot, same window, sampled with replacement and weighted by window
    occurrence frequency (uniform when the flag is set).  The positive context
    itself is excluded from the pool."""
    if n < 1:
        raise ValueError("n must be >= 1")
    stats = _stats_of(window)
    rng = np.random.default_rng(rng)
    drawn = stats.sample(
        positive.context.slot, n, rng, exclude=positive.context, uniform=uniform
    )
    negatives = [
        PairSample(positive.target, p, Label.NEGATIVE, stats.window_index)
        for p in drawn
    ]
    return TrainingBatch(positive=positive, negatives=negatives)


def outfit_samples(
    outfit: Outfit,
    n_neg: int,
    rng: int | np.random.Generator,
    window: TimeWindow | WindowStats,
    uniform: bool = False,
) -> list[OutfitSample]:
    """One sample per partial-outfit size 1..|outfit|-1 (balanced).

    Each sample fixes a uniformly random subset, holds out one uniformly
    random remaining product as the positive query, and attaches ``n_neg``
    negatives sharing the query's slot and window.
    """
    if outfit.size < 2:
        raise ValueError(f"outfit {outfit.id!r} has fewer than 2 products")
    stats = _stats_of(window)
    rng = np.random.default_rng(rng)
    products = outfit.products
    samples: list[OutfitSample] = []
    for size in range(1, outfit.size):
        chosen = rng.choice(outfit.size, size=size, replace=False)
        chosen_set = {int(i) for i in chosen}
        partial = tuple(products[i] for i in sorted(chosen_set))
        remaining = [p for i, p in enumerate(products) if i not in chosen_set]
        query = remaining[int(rng.integers(len(remaining)))]
        negatives = stats.sample(query.slot, n_neg, rng, exclude=query, uniform=uniform)
        samples.append(OutfitSample(partial, query, negatives, stats.window_index))
    return samples


def pair_training_stream(
    windows: Sequence[TimeWindow],
    n_pair: int,
    rho: float,
    rng: int | np.random.Generator,
    uniform: bool = False,
) -> Iterator[TrainingBatch]:
    """Positive pairs with subsampling and negatives, over windows in order.

    A positive whose context is discarded by subsampling generates no batch.
    The stream is byte-for-byte deterministic given the seed.
    """
    rng = np.random.default_rng(rng)
    for window in windows:
        stats = WindowStats(window)
        for outfit in window.outfits:
            for pair in positive_pairs(outfit, window.index):
                keep = keep_probability(stats.frequency(pair.context), rho)
                if rng.random() >= keep:
                    continue
                yield draw_negatives(pair, stats, n_pair, rng, uniform=uniform)


def outfit_sample_stream(
    windows: Sequence[TimeWindow],
    n_neg: int,
    rng: int | np.random.Generator,
    uniform: bool = False,
) -> Iterator[OutfitSample]:
    """Partial-outfit samples over windows in order; deterministic given seed."""
    rng = np.random.default_rng(rng)
    for window in windows:
        stats = WindowStats(window)
        for outfit in window.outfits:
            yield from outfit_samples(outfit, n_neg, rng, stats, uniform=uniform)


def _product_record(product: Product) -> dict:
    return {"id": product.id, "slot": product.slot.value}


def dump_samples(
    samples: Iterable[TrainingBatch | OutfitSample], path: str | Path
) -> None:
    """Debug dump of generated samples as JSON Lines."""
    with open(path, "w", encoding="utf-8") as fh:
        for sample in samples:
            if isinstance(sample, TrainingBatch):
                record = {
                    "kind": "pair_batch",
                    "window": sample.positive.window_index,
                    "target": _product_record(sample.positive.target),
                    "positive_context": _product_record(sample.positive.context),
                    "negative_contexts": [
                        _product_record(n.context) for n in sample.negatives
                    ],
                }
            else:
                record = {
                    "kind": "outfit_sample",
                    "window": sample.window_index,
                    "partial_outfit": [
                        _product_record(p) for p in sample.partial_outfit
                    ],
                    "positive_query": _product_record(sample.positive_query),
                    "negative_queries": [
                        _product_record(p) for p in sample.negative_queries
                    ],
                }
            fh.write(json.dumps(record, separators=(",", ":")) + "\n")
