"""Target/context embedding training and the symmetric style-fit score.

Each product owns one row in a target matrix and one in a context matrix.
Training maximizes, per batch, log sigma(u.v_ctx) + sum_l log sigma(-u.v_l)
with AdaGrad updates; the style-fit score of two products averages the two
cross-space cosine similarities and is therefore symmetric and scale
invariant.  Training is single-threaded and bit-reproducible given the seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import sampler
from .catalog import Product, Slot, TimeWindow
from .errors import SlotCollisionError, UnknownProductError


def sigmoid(x):
    """Numerically stable logistic function."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out if out.ndim else float(out)


def log_sigmoid(x):
    """Numerically stable log(sigmoid(x))."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = -np.log1p(np.exp(-x[pos]))
    out[~pos] = x[~pos] - np.log1p(np.exp(x[~pos]))
    return out if out.ndim else float(out)


@dataclass
class PairModel:
    """Vocabulary plus the target (U) and context (V) embedding matrices.

    Row i of both matrices belongs to vocabulary[i].
    """

    m: int
    vocabulary: tuple[Product, ...]
    target: np.ndarray
    context: np.ndarray
    epoch_log_prob: tuple[float, ...] = ()
    _row: dict[str, int] = field(
        init=False, repr=False, compare=False, default_factory=dict
    )
    _norms: tuple[np.ndarray, np.ndarray] | None = field(
        init=False, repr=False, compare=False, default=None
    )

    def __post_init__(self) -> None:
        self._row.update({p.id: i for i, p in enumerate(self.vocabulary)})
        if len(self._row) != len(self.vocabulary):
            raise ValueError("vocabulary contains duplicate product ids")
        if self.target.shape != (len(self.vocabulary), self.m) or (
            self.context.shape != self.target.shape
        ):
            raise ValueError(
                f"embedding shapes {self.target.shape}/{self.context.shape} do not "
                f"match vocabulary size {len(self.vocabulary)} and m={self.m}"
            )

    def resolve(self, product: Product | str) -> Product:
        pid = product.id if isinstance(product, Product) else product
        try:
            return self.vocabulary[self._row[pid]]
        except KeyError:
            raise UnknownProductError(f"unknown product id {pid!r}") from None

    def row(self, product: Product | str) -> int:
        pid = product.id if isinstance(product, Product) else product
        try:
            return self._row[pid]
        except KeyError:
            raise UnknownProductError(f"unknown product id {pid!r}") from None

    def row_norms(self) -> tuple[np.ndarray, np.ndarray]:
        """Cached L2 norms of the target and context rows.

        Only valid once the embeddings are frozen; training never calls this.
        """
        if self._norms is None:
            self._norms = (
                np.linalg.norm(self.target, axis=1),
                np.linalg.norm(self.context, axis=1),
            )
        return self._norms


@dataclass
class TrainConfig:
    """Pair-model training hyperparameters (defaults follow the production setup)."""

    m: int = 40
    n_pair: int = 80
    rho: float = 0.0002
    learning_rate: float = 1.0
    epochs: int = 30
    rng_seed: int = 0
    uniform_negatives: bool = False
    weight_by_outfit_size: bool = False


@dataclass
class AdaGradState:
    """Per-parameter accumulated squared gradients for both matrices."""

    target_acc: np.ndarray
    context_acc: np.ndarray
    epsilon: float = 1e-8

    @classmethod
    def for_model(cls, model: PairModel, epsilon: float = 1e-8) -> "AdaGradState":
        return cls(
            target_acc=np.zeros_like(model.target),
            context_acc=np.zeros_like(model.context),
            epsilon=epsilon,
        )


def init_model(
    vocabulary: Sequence[Product],
    m: int,
    rng_seed: int | np.random.SeedSequence = 0,
) -> PairModel:
    """Initialize both matrices uniformly in [-0.5/m, 0.5/m].

    The target and context draws come from independent child streams of the
    seed, so the two matrices are uncorrelated but fully reproducible.
    """
    vocabulary = tuple(vocabulary)
    if not vocabulary:
        raise ValueError("vocabulary must not be empty")
    if m < 1:
        raise ValueError("m must be >= 1")
    ss = (
        rng_seed
        if isinstance(rng_seed, np.random.SeedSequence)
        else np.random.SeedSequence(rng_seed)
    )
    u_ss, v_ss = ss.spawn(2)
    bound = 0.5 / m
    shape = (len(vocabulary), m)
    target = np.random.default_rng(u_ss).uniform(-bound, bound, shape)
    context = np.random.default_rng(v_ss).uniform(-bound, bound, shape)
    return PairModel(m=m, vocabulary=vocabulary, target=target, context=context)


def _as_batch(u_target, v_context, v_negatives):
    u = np.asarray(u_target, dtype=np.float64)
    v = np.asarray(v_context, dtype=np.float64)
    negs = np.asarray(v_negatives, dtype=np.float64)
    if negs.size == 0:
        negs = negs.reshape(0, u.shape[0])
    if u.ndim != 1 or v.shape != u.shape or negs.ndim != 2 or negs.shape[1] != u.shape[0]:
        raise ValueError(
            f"dimension mismatch: u {u.shape}, v_context {v.shape}, "
            f"v_negatives {negs.shape}"
        )
    return u, v, negs


def batch_log_prob(u_target, v_context, v_negatives) -> float:
    """log sigma(u.v_ctx) + sum_l log sigma(-u.v_l) for one training batch."""
    u, v, negs = _as_batch(u_target, v_context, v_negatives)
    value = log_sigmoid(float(u @ v))
    if len(negs):
        value += float(np.sum(log_sigmoid(-(negs @ u))))
    return float(value)


def batch_gradients(u_target, v_context, v_negatives):
    """Analytic gradient of batch_log_prob (ascent direction).

    Returns (grad_u, grad_v_context, grad_v_negatives) where the last has one
    row per negative vector.
    """
    u, v, negs = _as_batch(u_target, v_context, v_negatives)
    s_pos = sigmoid(float(u @ v))
    coeff = 1.0 - s_pos
    if len(negs):
        s_neg = sigmoid(negs @ u)
        grad_u = coeff * v - s_neg @ negs
        grad_negs = -s_neg[:, None] * u[None, :]
    else:
        grad_u = coeff * v
        grad_negs = np.zeros_like(negs)
    grad_v = coeff * u
    return grad_u, grad_v, grad_negs


def adagrad_step(param, grad, accumulator, learning_rate, epsilon=1e-8):
    """One AdaGrad ascent update, in place on ``param`` and ``accumulator``.

    accumulator += grad**2; param += lr * grad / (sqrt(accumulator) + eps).
    Returns the updated (param, accumulator) views for convenience.
    """
    grad = np.asarray(grad, dtype=np.float64)
    accumulator += grad * grad
    param += learning_rate * grad / (np.sqrt(accumulator) + epsilon)
    return param, accumulator


def _adagrad_rows(matrix, acc, rows, grads, learning_rate, epsilon):
    """AdaGrad over a set of unique row indices (gather, update, scatter)."""
    acc_rows = acc[rows]
    acc_rows += grads * grads
    matrix[rows] += learning_rate * grads / (np.sqrt(acc_rows) + epsilon)
    acc[rows] = acc_rows


def train(
    windows: Sequence[TimeWindow],
    config: TrainConfig,
    vocabulary: Sequence[Product] | None = None,
) -> PairModel:
    """Train a pair model over the given (training-split) windows.

    Per epoch, outfits are visited in seq order and every surviving positive
    pair yields one batch (subsampling re-drawn per epoch).  ``vocabulary``
    defaults to the union of the window vocabularies; pass the full corpus
    vocabulary when held-out products must stay scoreable.  The per-epoch
    average batch log-probability is recorded on the returned model.
    """
    windows = sorted(windows, key=lambda w: w.index)
    if vocabulary is None:
        merged = {p.id: p for w in windows for p in w.window_vocabulary}
        vocabulary = [merged[pid] for pid in sorted(merged)]
    vocabulary = tuple(sorted(vocabulary, key=lambda p: p.id))

    root = np.random.SeedSequence(config.rng_seed)
    init_ss, stream_ss = root.spawn(2)
    model = init_model(vocabulary, config.m, init_ss)
    state = AdaGradState.for_model(model)
    rng = np.random.default_rng(stream_ss)

    row = model._row
    target_m, context_m = model.target, model.context
    lr, eps = config.learning_rate, state.epsilon
    stats_by_window = [sampler.WindowStats(w) for w in windows]

    history: list[float] = []
    for _ in range(config.epochs):
        log_prob_sum = 0.0
        batches = 0
        for window, stats in zip(windows, stats_by_window):
            for outfit in window.outfits:
                weight = (
                    1.0 / outfit.size if config.weight_by_outfit_size else 1.0
                )
                for pair in sampler.positive_pairs(outfit, window.index):
                    keep = sampler.keep_probability(
                        stats.frequency(pair.context), config.rho
                    )
                    if rng.random() >= keep:
                        continue
                    batch = sampler.draw_negatives(
                        pair, stats, config.n_pair, rng,
                        uniform=config.uniform_negatives,
                    )
                    ti = row[pair.target.id]
                    ci = row[pair.context.id]
                    ni = np.array(
                        [row[n.context.id] for n in batch.negatives], dtype=np.intp
                    )
                    u = target_m[ti]
                    v_ctx = context_m[ci]
                    v_negs = context_m[ni]

                    s_pos = float(u @ v_ctx)
                    s_negs = v_negs @ u
                    log_prob_sum += log_sigmoid(s_pos) + float(
                        np.sum(log_sigmoid(-s_negs))
                    )
                    batches += 1

                    sig_pos = sigmoid(s_pos)
                    sig_negs = sigmoid(s_negs)
                    coeff = 1.0 - sig_pos
                    grad_u = weight * (coeff * v_ctx - sig_negs @ v_negs)
                    grad_v = weight * (coeff * u)
                    grad_negs = weight * (-sig_negs[:, None] * u[None, :])

                    adagrad_step(target_m[ti], grad_u, state.target_acc[ti], lr, eps)
                    adagrad_step(context_m[ci], grad_v, state.context_acc[ci], lr, eps)
                    # Repeated draws of one negative must act as a summed gradient.
                    unique, inverse = np.unique(ni, return_inverse=True)
                    if len(unique) == len(ni):
                        agg = grad_negs
                    else:
                        agg = np.zeros((len(unique), model.m))
                        np.add.at(agg, inverse, grad_negs)
                    _adagrad_rows(
                        context_m, state.context_acc, unique, agg, lr, eps
                    )
        history.append(log_prob_sum / batches if batches else 0.0)

    model.epoch_log_prob = tuple(history)
    return model


def _cosine(x: np.ndarray, y: np.ndarray) -> float:
    nx = float(np.linalg.norm(x))
    ny = float(np.linalg.norm(y))
    if nx == 0.0 or ny == 0.0:
        raise ValueError("cosine similarity undefined for a zero vector")
    return float(x @ y) / (nx * ny)


def pair_score(model: PairModel, a: Product | str, b: Product | str) -> float:
    """Symmetric style-fit score: the mean of the two cross-space cosines.

    Rejects same-slot pairs: the embedding spaces carry no fit meaning for
    homogeneous dyads (within-space similarity is style similarity instead).
    """
    pa, pb = model.resolve(a), model.resolve(b)
    if pa.slot is pb.slot:
        raise SlotCollisionError(
            f"products {pa.id!r} and {pb.id!r} share slot {pa.slot.value!r}; "
            "the style-fit score is defined only for heterogeneous dyads"
        )
    ia, ib = model.row(pa), model.row(pb)
    return 0.5 * (
        _cosine(model.target[ia], model.context[ib])
        + _cosine(model.target[ib], model.context[ia])
    )


def pair_score_matrix(
    model: PairModel,
    queries: Sequence[Product],
    items: Sequence[Product],
) -> np.ndarray:
    """Vectorized pair scores, rows = queries, columns = items.

    Slot checks are the caller's duty; intended for trainers and evaluators
    that already guarantee heterogeneous dyads.
    """
    q_rows = np.array([model.row(p) for p in queries], dtype=np.intp)
    i_rows = np.array([model.row(p) for p in items], dtype=np.intp)
    u_norms, v_norms = model.row_norms()
    uq, vq = model.target[q_rows], model.context[q_rows]
    ui, vi = model.target[i_rows], model.context[i_rows]
    first = (uq @ vi.T) / np.outer(u_norms[q_rows], v_norms[i_rows])
    second = (vq @ ui.T) / np.outer(v_norms[q_rows], u_norms[i_rows])
    return 0.5 * (first + second)


def save_model(model: PairModel, path: str | Path) -> None:
    """Write the versioned pair-model file (64-bit values, stable bytes)."""
    payload = {
        "format_version": 1,
        "kind": "pair_model",
        "m": model.m,
        "vocabulary": [{"id": p.id, "slot": p.slot.value} for p in model.vocabulary],
        "target": [[float(x) for x in row] for row in model.target],
        "context": [[float(x) for x in row] for row in model.context],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, separators=(",", ":"))
        fh.write("\n")


def load_model(path: str | Path) -> PairModel:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("kind") != "pair_model":
        raise ValueError(f"{path}: not a pair_model file")
    if payload.get("format_version") != 1:
        raise ValueError(f"{path}: unsupported format_version")
    vocabulary = tuple(
        Product(id=e["id"], slot=Slot.from_name(e["slot"]))
        for e in payload["vocabulary"]
    )
    target = np.array(payload["target"], dtype=np.float64)
    context = np.array(payload["context"], dtype=np.float64)
    return PairModel(
        m=int(payload["m"]), vocabulary=vocabulary, target=target, context=context
    )


def export_tsv(model: PairModel, path: str | Path) -> None:
    """Write target-space embeddings as TSV for external projection tools."""
    header = "id\tslot\t" + "\t".join(f"d{i}" for i in range(model.m))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for product, row in zip(model.vocabulary, model.target):
            coords = "\t".join(repr(float(x)) for x in row)
            fh.write(f"{product.id}\t{product.slot.value}\t{coords}\n")


def export_embeddings(
    model: PairModel, model_path: str | Path, tsv_path: str | Path
) -> None:
    """Persist the model file plus the embedding TSV."""
    save_model(model, model_path)
    export_tsv(model, tsv_path)
