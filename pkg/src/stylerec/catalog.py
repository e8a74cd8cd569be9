"""Product and outfit data model, corpus ingestion, preprocessing, and splits.

A corpus is an ordered list of outfits (sorted by send-out sequence number).
Each product fills exactly one functional slot and an outfit holds at most one
product per slot once preprocessed.  Outfits are partitioned into contiguous
time windows which are then assigned wholesale to train/validation/test.
"""

from __future__ import annotations

import enum
import itertools
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    CorpusFormatError,
    SlotConflictError,
    UnknownProductError,
    UnknownSlotError,
)

logger = logging.getLogger(__name__)


class Slot(enum.Enum):
    """Functional role a product fills inside an outfit.

    The declaration order is the canonical total order used by file formats
    and by the slot-pair attention matrix.
    """

    SHIRT = "shirt"
    OVER_SHIRT = "over_shirt"
    SUIT = "suit"
    JACKET = "jacket"
    BELT = "belt"
    TROUSER = "trouser"
    SHOES = "shoes"
    OTHER = "other"

    @property
    def index(self) -> int:
        return _SLOT_INDEX[self]

    @classmethod
    def from_name(cls, name: str) -> "Slot":
        try:
            return _SLOT_BY_NAME[name]
        except KeyError:
            raise UnknownSlotError(
                f"unknown slot {name!r}; expected one of {', '.join(SLOT_NAMES)}"
            ) from None


SLOT_ORDER: tuple[Slot, ...] = tuple(Slot)
SLOT_NAMES: tuple[str, ...] = tuple(s.value for s in SLOT_ORDER)
_SLOT_INDEX = {slot: i for i, slot in enumerate(SLOT_ORDER)}
_SLOT_BY_NAME = {slot.value: slot for slot in SLOT_ORDER}


@dataclass(frozen=True, slots=True)
class Product:
    """A fashion item identity bound to exactly one functional slot."""

    id: str
    slot: Slot


def product_key(product: Product) -> tuple[int, str]:
    """Canonical ordering key: slot order first, then id."""
    return (product.slot.index, product.id)


@dataclass(frozen=True, slots=True)
class Outfit:
    """A set of products curated to be worn together; the co-occurrence context.

    Products are stored in canonical order (slot order, then id).  Duplicate
    slots are legal only in raw, not-yet-preprocessed outfits.
    """

    id: str
    seq: int
    products: tuple[Product, ...]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "products", tuple(sorted(self.products, key=product_key))
        )

    @property
    def size(self) -> int:
        return len(self.products)

    def slot_set(self) -> frozenset[Slot]:
        return frozenset(p.slot for p in self.products)

    def has_distinct_slots(self) -> bool:
        return len(self.slot_set()) == len(self.products)


@dataclass(frozen=True)
class Corpus:
    """Seq-ordered outfits plus the vocabulary of every referenced product."""

    outfits: tuple[Outfit, ...]
    vocabulary: tuple[Product, ...]
    _by_id: dict[str, Product] = field(
        init=False, repr=False, compare=False, default_factory=dict
    )

    def __post_init__(self) -> None:
        self._by_id.update({p.id: p for p in self.vocabulary})

    @classmethod
    def from_outfits(cls, outfits: Iterable[Outfit]) -> "Corpus":
        """Sort outfits by seq and derive the vocabulary.

        Raises SlotConflictError if one product id appears with two slots.
        """
        ordered = tuple(sorted(outfits, key=lambda o: (o.seq, o.id)))
        seen: dict[str, Product] = {}
        for outfit in ordered:
            for product in outfit.products:
                known = seen.get(product.id)
                if known is None:
                    seen[product.id] = product
                elif known.slot is not product.slot:
                    raise SlotConflictError(
                        f"product {product.id!r} declared with slot "
                        f"{known.slot.value!r} and slot {product.slot.value!r}"
                    )
        vocabulary = tuple(sorted(seen.values(), key=lambda p: p.id))
        return cls(outfits=ordered, vocabulary=vocabulary)

    def product(self, product_id: str) -> Product:
        try:
            return self._by_id[product_id]
        except KeyError:
            raise UnknownProductError(f"unknown product id {product_id!r}") from None

    def __len__(self) -> int:
        return len(self.outfits)


@dataclass(frozen=True)
class TimeWindow:
    """A contiguous block of consecutively sent outfits; the unit of stock."""

    index: int
    outfits: tuple[Outfit, ...]
    window_vocabulary: tuple[Product, ...]


class Split(enum.Enum):
    TRAIN = "train"
    VALIDATION = "validation"
    TEST = "test"


@dataclass(frozen=True)
class SplitAssignment:
    """Wholesale assignment of window indices to train/validation/test."""

    by_window: Mapping[int, Split]

    def windows(self, split: Split) -> tuple[int, ...]:
        return tuple(sorted(i for i, s in self.by_window.items() if s is split))

    def split_of(self, window_index: int) -> Split:
        return self.by_window[window_index]


def _parse_outfit_line(payload: object, lineno: int) -> Outfit:
    if not isinstance(payload, dict):
        raise CorpusFormatError(f"line {lineno}: expected a JSON object")
    try:
        outfit_id = payload["outfit_id"]
        seq = payload["seq"]
        raw_products = payload["products"]
    except KeyError as exc:
        raise CorpusFormatError(f"line {lineno}: missing key {exc.args[0]!r}") from None
    if not isinstance(outfit_id, str):
        raise CorpusFormatError(f"line {lineno}: outfit_id must be a string")
    if not isinstance(seq, int) or isinstance(seq, bool) or seq < 0:
        raise CorpusFormatError(f"line {lineno}: seq must be a non-negative integer")
    if not isinstance(raw_products, list):
        raise CorpusFormatError(f"line {lineno}: products must be a list")
    products = []
    for entry in raw_products:
        if not isinstance(entry, dict) or "id" not in entry or "slot" not in entry:
            raise CorpusFormatError(
                f"line {lineno}: each product needs 'id' and 'slot'"
            )
        if not isinstance(entry["id"], str):
            raise CorpusFormatError(f"line {lineno}: product id must be a string")
        try:
            slot = Slot.from_name(entry["slot"])
        except UnknownSlotError as exc:
            raise UnknownSlotError(f"line {lineno}: {exc}") from None
        products.append(Product(id=entry["id"], slot=slot))
    # Exact duplicates within one line collapse; slot conflicts are caught later.
    return Outfit(id=outfit_id, seq=seq, products=tuple(dict.fromkeys(products)))


def load_corpus(path: str | Path) -> Corpus:
    """Load an outfit corpus from a UTF-8 JSON Lines file.

    Lines beginning with '#' and blank lines are ignored.  Raises
    CorpusFormatError (with line number), UnknownSlotError, or
    SlotConflictError on malformed input.
    """
    outfits: list[Outfit] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            try:
                payload = json.loads(stripped)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"line {lineno}: invalid JSON: {exc.msg}") from None
            outfits.append(_parse_outfit_line(payload, lineno))
    return Corpus.from_outfits(outfits)


def write_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write a corpus in the canonical JSON Lines format (stable byte output)."""
    with open(path, "w", encoding="utf-8") as fh:
        for outfit in corpus.outfits:
            record = {
                "outfit_id": outfit.id,
                "seq": outfit.seq,
                "products": [
                    {"id": p.id, "slot": p.slot.value} for p in outfit.products
                ],
            }
            fh.write(json.dumps(record, separators=(",", ":")) + "\n")


def preprocess(raw: Corpus, min_frequency: int = 3, rng_seed: int = 0) -> Corpus:
    """Apply the preprocessing pipeline, in fixed order.

    (a) remove products appearing in fewer than ``min_frequency`` outfits over
    the whole raw corpus (applied once, not iterated); (b) where an outfit
    holds several products of one slot, keep one uniformly at random;
    (c) drop outfits left with fewer than two products.  Deterministic given
    ``rng_seed``.
    """
    if min_frequency < 1:
        raise ValueError("min_frequency must be >= 1")
    counts = Counter(p for outfit in raw.outfits for p in outfit.products)
    keep = {p for p, c in counts.items() if c >= min_frequency}

    rng = np.random.default_rng(rng_seed)
    kept_outfits: list[Outfit] = []
    for outfit in raw.outfits:
        survivors = [p for p in outfit.products if p in keep]
        deduped: list[Product] = []
        for _, group_iter in itertools.groupby(survivors, key=lambda p: p.slot):
            group = list(group_iter)
            if len(group) == 1:
                deduped.append(group[0])
            else:
                deduped.append(group[int(rng.integers(len(group)))])
        if len(deduped) >= 2:
            kept_outfits.append(Outfit(outfit.id, outfit.seq, tuple(deduped)))

    corpus = Corpus.from_outfits(kept_outfits)
    removed_products = len(counts) - len(keep)
    dropped_outfits = len(raw.outfits) - len(kept_outfits)
    if not corpus.outfits:
        logger.warning(
            "preprocess produced an empty corpus: %d products below "
            "min_frequency=%d, %d outfits dropped",
            removed_products, min_frequency, dropped_outfits,
        )
    else:
        logger.debug(
            "preprocess removed %d rare products and %d outfits",
            removed_products, dropped_outfits,
        )
    return corpus


def window_split(corpus: Corpus, window_size: int = 1000) -> list[TimeWindow]:
    """Partition the corpus into contiguous windows of ``window_size`` outfits.

    The last window may be smaller.  Window vocabularies hold every product
    appearing in the window, sorted by id.
    """
    if window_size < 1:
        raise ValueError("window_size must be >= 1")
    windows: list[TimeWindow] = []
    for start in range(0, len(corpus.outfits), window_size):
        chunk = corpus.outfits[start : start + window_size]
        vocab = {p.id: p for o in chunk for p in o.products}
        windows.append(
            TimeWindow(
                index=len(windows),
                outfits=chunk,
                window_vocabulary=tuple(
                    sorted(vocab.values(), key=lambda p: p.id)
                ),
            )
        )
    return windows


def assign_splits(
    windows: Sequence[TimeWindow],
    fractions: tuple[float, float, float] = (0.8, 0.1, 0.1),
    rng_seed: int = 0,
) -> SplitAssignment:
    """Assign whole windows to train/validation/test by uniform shuffling.

    Counts are fixed by rounding the cumulative fractions, so every split size
    is within one window of the requested fraction.  Deterministic given seed.
    """
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions must sum to 1, got {fractions}")
    if any(f < 0 for f in fractions):
        raise ValueError(f"fractions must be non-negative, got {fractions}")
    if not windows:
        raise ValueError("cannot assign splits over zero windows")

    rng = np.random.default_rng(rng_seed)
    order = rng.permutation(len(windows))
    n = len(windows)
    b1 = int(np.floor(fractions[0] * n + 0.5))
    b2 = int(np.floor((fractions[0] + fractions[1]) * n + 0.5))
    by_window: dict[int, Split] = {}
    for pos, widx in enumerate(order):
        window = windows[int(widx)]
        if pos < b1:
            by_window[window.index] = Split.TRAIN
        elif pos < b2:
            by_window[window.index] = Split.VALIDATION
        else:
            by_window[window.index] = Split.TEST
    return SplitAssignment(by_window=by_window)
