"""Listwise ranking metrics over candidate lists with a single positive.

Every instance scores one positive against same-slot, same-window negatives
and sorts descending; ties break by ascending product id so reports are
reproducible regardless of the scorer.  With a single positive per list the
average precision of an instance reduces to the reciprocal of its rank.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from . import sampler
from .catalog import Product, TimeWindow

PairScorer = Callable[[Product, Product], float]
OutfitScorer = Callable[[Product, Sequence[Product]], float]


@dataclass(frozen=True)
class EvalInstance:
    """Candidates sorted descending by score plus the positive's 1-based rank."""

    candidates: tuple[tuple[Product, float], ...]
    positive_rank: int

    @property
    def candidate_count(self) -> int:
        return len(self.candidates)


@dataclass
class MetricReport:
    """All evaluation measures computed for one model/split/instance set."""

    instance_count: int
    top2: float | None = None
    hit_rate_by_rank: tuple[float, ...] | None = None
    mrr: float | None = None
    fitb: dict[int, float] = field(default_factory=dict)
    aps: float | None = None


def rank(
    scorer: Callable[[Product, object], float],
    positive: Product,
    negatives: Sequence[Product],
    context: object,
) -> EvalInstance:
    """Score every candidate against the context and locate the positive.

    Ties in score break by ascending product id.
    """
    candidates = [positive, *negatives]
    scored = [(p, float(scorer(p, context))) for p in candidates]
    ordered = sorted(scored, key=lambda t: (-t[1], t[0].id))
    position = next(i for i, (p, _) in enumerate(ordered) if p is positive)
    return EvalInstance(candidates=tuple(ordered), positive_rank=position + 1)


def _require_instances(instances: Sequence[EvalInstance]) -> None:
    if not instances:
        raise ValueError("no evaluation instances")


def top2(instances: Sequence[EvalInstance]) -> float:
    """Precision at 2, averaged over instances; the ceiling is 0.5."""
    _require_instances(instances)
    if any(inst.candidate_count < 2 for inst in instances):
        raise ValueError("top2 requires at least 2 candidates per instance")
    return float(
        np.mean([0.5 if inst.positive_rank <= 2 else 0.0 for inst in instances])
    )


def hit_rate_by_rank(
    instances: Sequence[EvalInstance],
) -> tuple[list[float], float]:
    """Histogram of the positive's rank plus the mean reciprocal rank."""
    _require_instances(instances)
    counts = {inst.candidate_count for inst in instances}
    if len(counts) != 1:
        raise ValueError(f"inconsistent candidate counts: {sorted(counts)}")
    n = counts.pop()
    histogram = [0.0] * n
    for inst in instances:
        histogram[inst.positive_rank - 1] += 1.0
    histogram = [c / len(instances) for c in histogram]
    mrr = float(np.mean([1.0 / inst.positive_rank for inst in instances]))
    return histogram, mrr


def fitb_accuracy(instances: Sequence[EvalInstance], n: int) -> float:
    """Fraction of instances ranking the held-out positive first among n."""
    _require_instances(instances)
    bad = [inst.candidate_count for inst in instances if inst.candidate_count != n]
    if bad:
        raise ValueError(
            f"expected {n} candidates per instance, found counts {sorted(set(bad))}"
        )
    return float(np.mean([1.0 if inst.positive_rank == 1 else 0.0 for inst in instances]))


def average_precision(instances: Sequence[EvalInstance]) -> float:
    """Macro-averaged AP; with one positive per list this is mean 1/rank."""
    _require_instances(instances)
    return float(np.mean([1.0 / inst.positive_rank for inst in instances]))


def _select(count: int, max_instances: int | None, rng: np.random.Generator):
    if max_instances is None or count <= max_instances:
        return range(count)
    chosen = rng.choice(count, size=max_instances, replace=False)
    return sorted(int(i) for i in chosen)


def pair_eval_instances(
    scorer: PairScorer,
    windows: Sequence[TimeWindow],
    n_candidates: int = 20,
    rng: int | np.random.Generator = 0,
    max_instances: int | None = None,
    uniform_negatives: bool = False,
) -> list[EvalInstance]:
    """Rank each positive context against sampled same-slot negatives.

    One instance per positive pair (no subsampling at evaluation time);
    ``max_instances`` keeps a uniform random subset.  ``scorer(target,
    candidate)`` must return the pair style-fit score.
    """
    rng = np.random.default_rng(rng)
    positives: list[tuple[sampler.PairSample, sampler.WindowStats]] = []
    for window in sorted(windows, key=lambda w: w.index):
        stats = sampler.WindowStats(window)
        for outfit in window.outfits:
            for pair in sampler.positive_pairs(outfit, window.index):
                positives.append((pair, stats))
    instances = []
    for i in _select(len(positives), max_instances, rng):
        pair, stats = positives[i]
        negatives = stats.sample(
            pair.context.slot, n_candidates - 1, rng,
            exclude=pair.context, uniform=uniform_negatives,
        )
        instances.append(
            rank(
                lambda cand, target: scorer(target, cand),
                pair.context,
                negatives,
                pair.target,
            )
        )
    return instances


def fitb_instances(
    scorer: OutfitScorer,
    windows: Sequence[TimeWindow],
    n_candidates: int,
    rng: int | np.random.Generator = 0,
    max_instances: int | None = None,
    uniform_negatives: bool = False,
) -> list[EvalInstance]:
    """Fill-in-the-blank instances: hold one product out of an outfit, rank it
    against ``n_candidates - 1`` same-slot, same-window negatives given the
    rest of the outfit.  ``scorer(query, partial)`` is the outfit model."""
    if n_candidates < 2:
        raise ValueError("n_candidates must be >= 2")
    rng = np.random.default_rng(rng)
    outfits: list[tuple[object, sampler.WindowStats]] = []
    for window in sorted(windows, key=lambda w: w.index):
        stats = sampler.WindowStats(window)
        for outfit in window.outfits:
            if outfit.size >= 2:
                outfits.append((outfit, stats))
    instances = []
    for i in _select(len(outfits), max_instances, rng):
        outfit, stats = outfits[i]
        held_idx = int(rng.integers(outfit.size))
        positive = outfit.products[held_idx]
        partial = tuple(p for j, p in enumerate(outfit.products) if j != held_idx)
        negatives = stats.sample(
            positive.slot, n_candidates - 1, rng,
            exclude=positive, uniform=uniform_negatives,
        )
        instances.append(rank(scorer, positive, negatives, partial))
    return instances


def write_report(
    report: MetricReport, path: str | Path, metadata: Mapping[str, object]
) -> None:
    """Serialize a report with experiment metadata; output bytes are stable."""
    payload = {
        "format_version": 1,
        "kind": "metric_report",
        "metrics": {
            "instance_count": report.instance_count,
            "top2": report.top2,
            "hit_rate_by_rank": (
                list(report.hit_rate_by_rank)
                if report.hit_rate_by_rank is not None
                else None
            ),
            "mrr": report.mrr,
            "fitb": {str(k): v for k, v in sorted(report.fitb.items())},
            "aps": report.aps,
        },
        "metadata": dict(metadata),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
