"""Shared fixtures: handcrafted corpora and session-scoped synthetic datasets."""

from __future__ import annotations

from types import SimpleNamespace

import pytest

from stylerec import catalog, pair_model, synth
from stylerec.catalog import Outfit, Product, Slot


def make_product(pid: str, slot: Slot) -> Product:
    return Product(id=pid, slot=slot)


@pytest.fixture
def mini_corpus() -> catalog.Corpus:
    """Six tiny outfits over three slots; every product appears >= 3 times."""
    shirts = [make_product(f"sh{i}", Slot.SHIRT) for i in range(2)]
    trousers = [make_product(f"tr{i}", Slot.TROUSER) for i in range(2)]
    shoes = [make_product(f"so{i}", Slot.SHOES) for i in range(2)]
    outfits = [
        Outfit("o0", 0, (shirts[0], trousers[0], shoes[0])),
        Outfit("o1", 1, (shirts[0], trousers[0], shoes[1])),
        Outfit("o2", 2, (shirts[1], trousers[1], shoes[0])),
        Outfit("o3", 3, (shirts[1], trousers[1], shoes[1])),
        Outfit("o4", 4, (shirts[0], trousers[1], shoes[0])),
        Outfit("o5", 5, (shirts[1], trousers[0], shoes[1])),
    ]
    return catalog.Corpus.from_outfits(outfits)


@pytest.fixture(scope="session")
def small_synth() -> SimpleNamespace:
    """A desk-scale planted corpus: 80 products, 4 clusters, 600 outfits."""
    config = synth.SynthConfig(
        n_products=80,
        n_outfits=600,
        n_clusters=4,
        d_true=8,
        noise_temperature=0.05,
        rng_seed=11,
    )
    cat = synth.generate_catalog(config)
    corpus, truth = synth.generate_outfits(cat, config)
    windows = catalog.window_split(corpus, 200)
    assignment = catalog.assign_splits(windows, (0.8, 0.1, 0.1), rng_seed=3)
    return SimpleNamespace(
        config=config,
        catalog=cat,
        corpus=corpus,
        truth=truth,
        windows=windows,
        assignment=assignment,
    )


@pytest.fixture(scope="session")
def small_model(small_synth) -> pair_model.PairModel:
    config = pair_model.TrainConfig(m=8, n_pair=5, rho=0.01, epochs=5, rng_seed=1)
    return pair_model.train(
        small_synth.windows, config, vocabulary=small_synth.corpus.vocabulary
    )
