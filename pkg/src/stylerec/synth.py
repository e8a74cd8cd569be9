"""Synthetic outfit corpora with planted style structure.

Products carry hidden unit style vectors grouped around orthogonal cluster
centroids; outfits are assembled by drawing a cluster, seeding one slot from
it, and filling the remaining slots with products weighted by popularity and
by soft-max similarity to the seed's style.  Low temperature yields pure
single-cluster outfits; high temperature washes the signal out to the
popularity-weighted background.  The hidden fields live only in a sidecar
truth file so model code can never consume them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .catalog import SLOT_ORDER, Corpus, Outfit, Product

STYLE_NOISE = 0.05


@dataclass(frozen=True)
class SynthConfig:
    """Catalog and corpus generation parameters.

    ``outfit_sizes`` are drawn uniformly.  Every cluster populates every slot,
    which requires n_products >= n_clusters * 8 and n_clusters <= d_true (the
    centroids are built orthonormal).
    """

    n_products: int = 400
    n_outfits: int = 20000
    n_clusters: int = 5
    d_true: int = 16
    outfit_sizes: tuple[int, ...] = (4, 5, 6)
    noise_temperature: float = 0.1
    rng_seed: int = 0
    popularity_exponent: float = 1.0

    def validate(self) -> None:
        n_slots = len(SLOT_ORDER)
        if self.n_products < self.n_clusters * n_slots:
            raise ValueError(
                f"n_products={self.n_products} cannot populate every cluster in "
                f"every slot (need >= {self.n_clusters * n_slots})"
            )
        if self.n_clusters > self.d_true:
            raise ValueError("n_clusters must not exceed d_true")
        if self.n_clusters < 1 or self.n_outfits < 1:
            raise ValueError("n_clusters and n_outfits must be positive")
        if not self.outfit_sizes or any(
            s < 2 or s > n_slots for s in self.outfit_sizes
        ):
            raise ValueError(f"outfit sizes must lie in 2..{n_slots}")
        if self.noise_temperature <= 0:
            raise ValueError("noise_temperature must be positive")


@dataclass(frozen=True)
class SynthCatalog:
    """Products plus their hidden cluster labels, style vectors, and popularity."""

    products: tuple[Product, ...]
    clusters: np.ndarray
    styles: np.ndarray
    popularity: np.ndarray

    def cluster_of(self, product_id: str) -> int:
        return int(self.clusters[self._index[product_id]])

    def style_of(self, product_id: str) -> np.ndarray:
        return self.styles[self._index[product_id]]

    @property
    def _index(self) -> dict[str, int]:
        index = getattr(self, "_index_cache", None)
        if index is None:
            index = {p.id: i for i, p in enumerate(self.products)}
            object.__setattr__(self, "_index_cache", index)
        return index


def _streams(config: SynthConfig) -> tuple[np.random.Generator, np.random.Generator]:
    catalog_ss, outfit_ss = np.random.SeedSequence(config.rng_seed).spawn(2)
    return np.random.default_rng(catalog_ss), np.random.default_rng(outfit_ss)


def generate_catalog(config: SynthConfig) -> SynthCatalog:
    """Create products with slots round-robin and well-separated style clusters.

    Cluster centroids are orthonormal (pairwise cosine 0); each product sits
    at its centroid plus small isotropic noise, normalized to unit length.
    Popularity follows a power law over a seed-shuffled rank order.
    """
    config.validate()
    rng, _ = _streams(config)
    n_slots = len(SLOT_ORDER)

    gaussian = rng.standard_normal((config.d_true, config.n_clusters))
    centroids, _ = np.linalg.qr(gaussian)
    centroids = centroids.T  # row per cluster, orthonormal

    products = []
    clusters = np.empty(config.n_products, dtype=np.int64)
    width = len(str(config.n_products - 1))
    for i in range(config.n_products):
        slot = SLOT_ORDER[i % n_slots]
        clusters[i] = (i // n_slots) % config.n_clusters
        products.append(Product(id=f"p{i:0{width}d}", slot=slot))

    noise = STYLE_NOISE * rng.standard_normal((config.n_products, config.d_true))
    styles = centroids[clusters] + noise
    styles /= np.linalg.norm(styles, axis=1, keepdims=True)

    ranks = rng.permutation(config.n_products)
    popularity = (ranks + 1.0) ** (-config.popularity_exponent)

    return SynthCatalog(
        products=tuple(products),
        clusters=clusters,
        styles=styles,
        popularity=popularity,
    )


def _weighted_pick(weights: np.ndarray, rng: np.random.Generator) -> int:
    cumulative = np.cumsum(weights)
    return int(np.searchsorted(cumulative, rng.random() * cumulative[-1], side="right"))


def generate_outfits(
    catalog: SynthCatalog, config: SynthConfig
) -> tuple[Corpus, list[dict]]:
    """Assemble the outfit corpus plus the truth sidecar records.

    Per outfit: draw a size and a cluster, choose that many distinct slots,
    seed the first slot from the drawn cluster (popularity-weighted), then
    fill each remaining slot from its full pool with weights
    popularity * exp(cos(style, seed_style) / noise_temperature).
    """
    config.validate()
    _, rng = _streams(config)
    n_slots = len(SLOT_ORDER)

    slot_indices: list[np.ndarray] = []
    for s in range(n_slots):
        idx = np.array(
            sorted(
                (i for i, p in enumerate(catalog.products) if p.slot.index == s),
                key=lambda i: catalog.products[i].id,
            ),
            dtype=np.intp,
        )
        slot_indices.append(idx)
    seed_pools = {
        (s, c): slot_indices[s][catalog.clusters[slot_indices[s]] == c]
        for s in range(n_slots)
        for c in range(config.n_clusters)
    }

    sizes = np.asarray(config.outfit_sizes)
    width = len(str(config.n_outfits - 1))
    outfits = []
    for k in range(config.n_outfits):
        size = int(sizes[rng.integers(len(sizes))])
        cluster = int(rng.integers(config.n_clusters))
        chosen_slots = rng.choice(n_slots, size=size, replace=False)

        seed_slot = int(chosen_slots[0])
        pool = seed_pools[(seed_slot, cluster)]
        seed_idx = int(pool[_weighted_pick(catalog.popularity[pool], rng)])
        seed_style = catalog.styles[seed_idx]

        member_indices = [seed_idx]
        for slot_pos in chosen_slots[1:]:
            idx = slot_indices[int(slot_pos)]
            sims = catalog.styles[idx] @ seed_style
            logits = (sims - np.max(sims)) / config.noise_temperature
            weights = catalog.popularity[idx] * np.exp(logits)
            member_indices.append(int(idx[_weighted_pick(weights, rng)]))

        outfits.append(
            Outfit(
                id=f"o{k:0{width}d}",
                seq=k,
                products=tuple(catalog.products[i] for i in member_indices),
            )
        )

    truth = [
        {
            "id": p.id,
            "cluster": int(catalog.clusters[i]),
            "style": [float(x) for x in catalog.styles[i]],
        }
        for i, p in enumerate(catalog.products)
    ]
    return Corpus.from_outfits(outfits), truth


def write_truth(truth: Sequence[dict], path: str | Path) -> None:
    """Write the truth sidecar as JSON Lines (id, cluster, style)."""
    with open(path, "w", encoding="utf-8") as fh:
        for record in truth:
            fh.write(json.dumps(record, separators=(",", ":")) + "\n")


def load_truth(path: str | Path) -> tuple[dict[str, int], dict[str, np.ndarray]]:
    """Read a truth sidecar into cluster and style lookups."""
    clusters: dict[str, int] = {}
    styles: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            clusters[record["id"]] = int(record["cluster"])
            styles[record["id"]] = np.asarray(record["style"], dtype=np.float64)
    return clusters, styles


def style_oracle_scorer(styles: Mapping[str, np.ndarray]):
    """Outfit scorer that consults the hidden style vectors directly.

    Used only as an evaluation ceiling; never available to the models.
    """

    def score(query: Product, partial: Sequence[Product]) -> float:
        q = styles[query.id]
        sims = [float(q @ styles[p.id]) for p in partial]
        return float(np.mean(sims))

    return score
