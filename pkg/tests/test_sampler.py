"""Pair/outfit sampling: positives, subsampling, slot-and-window negatives."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stylerec import catalog, sampler
from stylerec.catalog import Corpus, Outfit, Product, Slot
from stylerec.errors import EmptyPoolError
from stylerec.sampler import Label, PairSample


def single_window(outfits):
    corpus = Corpus.from_outfits(outfits)
    (window,) = catalog.window_split(corpus, len(corpus.outfits))
    return window


class TestPositivePairs:
    def test_two_products_two_ordered_pairs(self):
        outfit = Outfit("o", 0, (Product("a", Slot.SHIRT), Product("b", Slot.SHOES)))
        pairs = sampler.positive_pairs(outfit)
        assert [(p.target.id, p.context.id) for p in pairs] == [("a", "b"), ("b", "a")]

    def test_three_products_six_pairs(self):
        outfit = Outfit("o", 0, (
            Product("a", Slot.SHIRT), Product("b", Slot.SHOES),
            Product("c", Slot.TROUSER),
        ))
        pairs = sampler.positive_pairs(outfit)
        assert len(pairs) == 6
        assert len({(p.target.id, p.context.id) for p in pairs}) == 6

    def test_pairs_are_heterogeneous_dyads(self, small_synth):
        for outfit in small_synth.corpus.outfits[:50]:
            for pair in sampler.positive_pairs(outfit):
                assert pair.target.slot is not pair.context.slot

    def test_multiplicity_matches_cooccurrence(self):
        a, b = Product("a", Slot.SHIRT), Product("b", Slot.SHOES)
        outfits = [Outfit(f"o{i}", i, (a, b)) for i in range(4)]
        stream = [p for o in outfits for p in sampler.positive_pairs(o)]
        forward = [p for p in stream if (p.target, p.context) == (a, b)]
        assert len(forward) == 4


class TestKeepProbability:
    def test_frequency_equal_rho_never_discarded(self):
        assert sampler.keep_probability(0.001, 0.001) == 1.0

    def test_four_rho_keeps_half(self):
        assert sampler.keep_probability(0.0008, 0.0002) == pytest.approx(0.5)

    def test_rare_product_clamped_to_one(self):
        assert sampler.keep_probability(0.00005, 0.0002) == 1.0

    def test_non_positive_frequency_rejected(self):
        with pytest.raises(ValueError):
            sampler.keep_probability(0.0, 0.1)

    @settings(max_examples=50, deadline=None)
    @given(
        frequency=st.floats(1e-8, 1.0, allow_nan=False),
        rho=st.floats(1e-8, 1.0, allow_nan=False),
    )
    def test_stays_in_unit_interval(self, frequency, rho):
        p = sampler.keep_probability(frequency, rho)
        assert 0.0 <= p <= 1.0

    def test_empirical_keep_rate_matches_over_grid(self):
        rng = np.random.default_rng(123)
        trials = 100_000
        for rho in (0.0002, 0.01):
            for factor in (0.25, 1.0, 2.0, 4.0, 16.0):
                frequency = rho * factor
                expected = sampler.keep_probability(frequency, rho)
                kept = int(np.sum(rng.random(trials) < expected))
                rate = kept / trials
                stderr = math.sqrt(expected * (1 - expected) / trials)
                assert abs(rate - expected) <= 3 * stderr + 1e-12


class TestDrawNegatives:
    def _window_and_positive(self):
        shirt = Product("shirt0", Slot.SHIRT)
        ctx = Product("ctx", Slot.SHOES)
        x, y = Product("x", Slot.SHOES), Product("y", Slot.SHOES)
        outfits = [Outfit("oc", 0, (shirt, ctx))]
        outfits += [Outfit(f"ox{i}", i + 1, (shirt, x)) for i in range(30)]
        outfits += [Outfit(f"oy{i}", i + 31, (shirt, y)) for i in range(10)]
        window = single_window(outfits)
        positive = PairSample(shirt, ctx, Label.POSITIVE, window.index)
        return window, positive, x, y

    def test_pool_of_one_returns_that_product(self):
        shirt = Product("shirt0", Slot.SHIRT)
        ctx = Product("ctx", Slot.SHOES)
        only = Product("only", Slot.SHOES)
        window = single_window(
            [Outfit("o0", 0, (shirt, ctx)), Outfit("o1", 1, (shirt, only))]
        )
        batch = sampler.draw_negatives(
            PairSample(shirt, ctx, Label.POSITIVE, 0), window, 5, rng=0
        )
        assert all(n.context == only for n in batch.negatives)

    def test_negatives_share_context_slot(self, small_synth):
        window = small_synth.windows[0]
        stats = sampler.WindowStats(window)
        rng = np.random.default_rng(5)
        outfit = window.outfits[0]
        for pair in sampler.positive_pairs(outfit, window.index):
            batch = sampler.draw_negatives(pair, stats, 7, rng)
            assert all(n.context.slot is pair.context.slot for n in batch.negatives)
            assert all(n.window_index == window.index for n in batch.negatives)

    def test_frequency_weighted_ratio(self):
        """Draws follow the 30:10 window occurrence counts (chi-square oracle)."""
        window, positive, x, y = self._window_and_positive()
        batch = sampler.draw_negatives(positive, window, 100_000, rng=42)
        count_x = sum(1 for n in batch.negatives if n.context == x)
        count_y = len(batch.negatives) - count_x
        assert count_y > 0
        ratio = count_x / count_y
        assert abs(ratio - 3.0) / 3.0 <= 0.05
        expected = np.array([0.75, 0.25]) * 100_000
        chi2 = float(np.sum((np.array([count_x, count_y]) - expected) ** 2 / expected))
        assert chi2 < 6.63  # 1% critical value, 1 degree of freedom

    def test_uniform_flag_ignores_frequency(self):
        window, positive, x, y = self._window_and_positive()
        batch = sampler.draw_negatives(positive, window, 100_000, rng=42, uniform=True)
        count_x = sum(1 for n in batch.negatives if n.context == x)
        assert abs(count_x / 100_000 - 0.5) < 0.01

    def test_positive_context_excluded(self):
        window, positive, _, _ = self._window_and_positive()
        batch = sampler.draw_negatives(positive, window, 1000, rng=3)
        assert all(n.context != positive.context for n in batch.negatives)

    def test_empty_pool_raises(self):
        shirt = Product("shirt0", Slot.SHIRT)
        ctx = Product("ctx", Slot.SHOES)
        window = single_window([Outfit("o0", 0, (shirt, ctx))])
        with pytest.raises(EmptyPoolError):
            sampler.draw_negatives(
                PairSample(shirt, ctx, Label.POSITIVE, 0), window, 3, rng=0
            )


class TestOutfitSamples:
    def test_size_two_single_sample(self):
        a, b = Product("a", Slot.SHIRT), Product("b", Slot.SHOES)
        c, d = Product("c", Slot.SHOES), Product("d", Slot.SHIRT)
        window = single_window([Outfit("o0", 0, (a, b)), Outfit("o1", 1, (d, c))])
        samples = sampler.outfit_samples(window.outfits[0], 2, 0, window)
        assert len(samples) == 1
        (sample,) = samples
        assert len(sample.partial_outfit) == 1
        assert sample.positive_query not in sample.partial_outfit

    def test_balanced_partial_sizes(self, small_synth):
        window = small_synth.windows[0]
        outfit = next(o for o in window.outfits if o.size == 6)
        samples = sampler.outfit_samples(outfit, 3, 1, window)
        assert sorted(len(s.partial_outfit) for s in samples) == [1, 2, 3, 4, 5]

    def test_query_slot_disjoint_from_partial(self, small_synth):
        window = small_synth.windows[0]
        stats = sampler.WindowStats(window)
        rng = np.random.default_rng(9)
        for outfit in window.outfits[:40]:
            for sample in sampler.outfit_samples(outfit, 4, rng, stats):
                partial_slots = {p.slot for p in sample.partial_outfit}
                assert sample.positive_query.slot not in partial_slots
                for negative in sample.negative_queries:
                    assert negative.slot is sample.positive_query.slot


class TestStreams:
    def test_pair_stream_deterministic_byte_for_byte(self, small_synth, tmp_path):
        dumps = []
        for run in range(2):
            path = tmp_path / f"dump{run}.jsonl"
            stream = sampler.pair_training_stream(
                small_synth.windows[:2], n_pair=4, rho=0.01, rng=77
            )
            sampler.dump_samples(stream, path)
            dumps.append(path.read_bytes())
        assert dumps[0] == dumps[1]
        assert len(dumps[0]) > 0

    def test_outfit_stream_deterministic(self, small_synth, tmp_path):
        dumps = []
        for run in range(2):
            path = tmp_path / f"odump{run}.jsonl"
            stream = sampler.outfit_sample_stream(small_synth.windows[:1], 3, rng=13)
            sampler.dump_samples(stream, path)
            dumps.append(path.read_bytes())
        assert dumps[0] == dumps[1]

    def test_stream_purity(self, small_synth):
        by_index = {w.index: w for w in small_synth.windows}
        for batch in sampler.pair_training_stream(
            small_synth.windows, n_pair=3, rho=0.005, rng=5
        ):
            window = by_index[batch.positive.window_index]
            vocab_ids = {p.id for p in window.window_vocabulary}
            for negative in batch.negatives:
                assert negative.context.slot is batch.positive.context.slot
                assert negative.window_index == batch.positive.window_index
                assert negative.context.id in vocab_ids
