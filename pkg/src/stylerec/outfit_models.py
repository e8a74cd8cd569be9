"""Scoring a query product against a partial outfit.

The mean model averages the pair scores between the query and every outfit
member and needs no training.  The attention model reweights the same pair
scores with trainable slot-pair logits, soft-max normalized over the slots
actually present, so the weights always form a simplex.  Zero logits make
the attention model coincide with the mean model.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import sampler
from .catalog import SLOT_NAMES, SLOT_ORDER, Product, Slot, TimeWindow, product_key
from .errors import SlotCollisionError
from .pair_model import PairModel, pair_score, pair_score_matrix

N_SLOTS = len(SLOT_ORDER)


@dataclass
class AttentionModel:
    """Slot-pair weight logits (query slot x context slot) over a frozen pair model."""

    logits: np.ndarray
    pair_model: PairModel
    epoch_loss: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        self.logits = np.asarray(self.logits, dtype=np.float64)
        if self.logits.shape != (N_SLOTS, N_SLOTS):
            raise ValueError(
                f"logits must be {N_SLOTS}x{N_SLOTS}, got {self.logits.shape}"
            )

    @classmethod
    def zeros(cls, pair_model: PairModel) -> "AttentionModel":
        return cls(logits=np.zeros((N_SLOTS, N_SLOTS)), pair_model=pair_model)


@dataclass
class AttentionTrainConfig:
    epochs: int = 10
    learning_rate: float = 1.0
    n_outfit: int = 19
    rng_seed: int = 0
    uniform_negatives: bool = False


def _validate_partial(
    model: PairModel, query: Product | str, partial: Sequence[Product | str]
) -> tuple[Product, tuple[Product, ...]]:
    """Resolve products, enforce distinct slots, canonical summation order."""
    if not partial:
        raise ValueError("partial outfit must not be empty")
    q = model.resolve(query)
    items = tuple(sorted((model.resolve(p) for p in partial), key=product_key))
    slots = [p.slot for p in items]
    if len(set(slots)) != len(slots):
        raise SlotCollisionError("partial outfit holds two products of one slot")
    if q.slot in slots:
        raise SlotCollisionError(
            f"query slot {q.slot.value!r} is already present in the partial outfit"
        )
    return q, items


def mean_score(
    pair_model: PairModel, query: Product | str, partial: Sequence[Product | str]
) -> float:
    """Arithmetic mean of the query's pair scores against each outfit member."""
    q, items = _validate_partial(pair_model, query, partial)
    scores = np.array([pair_score(pair_model, q, p) for p in items])
    return float(np.mean(scores))


def softmax(values: np.ndarray) -> np.ndarray:
    shifted = values - np.max(values)
    exps = np.exp(shifted)
    return exps / np.sum(exps)


def attention_weights(
    model: AttentionModel, query_slot: Slot, partial_slots: Sequence[Slot]
) -> np.ndarray:
    """Soft-max of the query-slot logits restricted to the slots present."""
    cols = [s.index for s in partial_slots]
    return softmax(model.logits[query_slot.index, cols])


def attention_score(
    model: AttentionModel, query: Product | str, partial: Sequence[Product | str]
) -> float:
    """Slot-pair weighted sum of pair scores; weights sum to one."""
    q, items = _validate_partial(model.pair_model, query, partial)
    weights = attention_weights(model, q.slot, [p.slot for p in items])
    scores = np.array([pair_score(model.pair_model, q, p) for p in items])
    return float(np.dot(weights, scores))


def train_attention(
    pair_model: PairModel,
    windows: Sequence[TimeWindow],
    config: AttentionTrainConfig,
) -> AttentionModel:
    """Fit the slot-pair logits on partial-outfit samples, pair model frozen.

    Each sample ranks the positive query against its negatives; the loss is
    soft-max cross-entropy over the candidate scores with the positive as the
    label.  Only the logits are updated (AdaGrad, ascent on -loss).  Logits
    start at zero so the untrained model reproduces the mean model exactly.
    """
    windows = sorted(windows, key=lambda w: w.index)
    model = AttentionModel.zeros(pair_model)
    logits = model.logits
    acc = np.zeros_like(logits)
    eps = 1e-8
    rng = np.random.default_rng(np.random.SeedSequence(config.rng_seed))
    stats_by_window = [sampler.WindowStats(w) for w in windows]

    history: list[float] = []
    for _ in range(config.epochs):
        loss_sum = 0.0
        count = 0
        for window, stats in zip(windows, stats_by_window):
            for outfit in window.outfits:
                samples = sampler.outfit_samples(
                    outfit, config.n_outfit, rng, stats,
                    uniform=config.uniform_negatives,
                )
                for sample in samples:
                    partial = sample.partial_outfit
                    candidates = [sample.positive_query] + sample.negative_queries
                    scores_matrix = pair_score_matrix(pair_model, candidates, partial)
                    q_idx = sample.positive_query.slot.index
                    cols = [p.slot.index for p in partial]
                    weights = softmax(logits[q_idx, cols])
                    cand_scores = scores_matrix @ weights

                    shifted = cand_scores - np.max(cand_scores)
                    log_z = np.log(np.sum(np.exp(shifted)))
                    loss = log_z - shifted[0]
                    probs = np.exp(shifted) / np.sum(np.exp(shifted))

                    d_scores = probs.copy()
                    d_scores[0] -= 1.0
                    g_alpha = scores_matrix.T @ d_scores
                    g_logits = weights * (g_alpha - float(weights @ g_alpha))

                    ascent = -g_logits
                    acc_row = acc[q_idx, cols]
                    acc_row += ascent * ascent
                    logits[q_idx, cols] += (
                        config.learning_rate * ascent / (np.sqrt(acc_row) + eps)
                    )
                    acc[q_idx, cols] = acc_row

                    loss_sum += float(loss)
                    count += 1
        history.append(loss_sum / count if count else 0.0)

    model.epoch_loss = tuple(history)
    return model


def save_attention(
    model: AttentionModel, path: str | Path, pair_model_ref: str
) -> None:
    """Write the versioned attention-model file (stable bytes)."""
    payload = {
        "format_version": 1,
        "kind": "attention_model",
        "slot_order": list(SLOT_NAMES),
        "logits": [[float(x) for x in row] for row in model.logits],
        "pair_model_ref": pair_model_ref,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, separators=(",", ":"))
        fh.write("\n")


def load_attention(path: str | Path, pair_model: PairModel) -> AttentionModel:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("kind") != "attention_model":
        raise ValueError(f"{path}: not an attention_model file")
    if payload.get("format_version") != 1:
        raise ValueError(f"{path}: unsupported format_version")
    if tuple(payload.get("slot_order", ())) != SLOT_NAMES:
        raise ValueError(f"{path}: slot_order does not match the canonical order")
    logits = np.array(payload["logits"], dtype=np.float64)
    return AttentionModel(logits=logits, pair_model=pair_model)
