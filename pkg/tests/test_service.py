"""HTTP service endpoints, error envelope, purity, and cache transparency."""

from __future__ import annotations

import numpy as np
import pytest
from fastapi.testclient import TestClient

from stylerec import outfit_models, pair_model, service
from stylerec.catalog import Slot
from stylerec.service import GenerateRequest, RankRequest, ServiceState, create_app


@pytest.fixture(scope="module")
def state(small_synth, small_model):
    attention = outfit_models.AttentionModel.zeros(small_model)
    attention.logits += np.random.default_rng(2).normal(scale=0.3, size=(8, 8))
    return ServiceState(
        corpus=small_synth.corpus,
        windows=small_synth.windows,
        pair_model=small_model,
        attention_model=attention,
    )


@pytest.fixture(scope="module")
def client(state):
    return TestClient(create_app(state))


def product_of_slot(state, slot, index=0):
    return [p for p in state.corpus.vocabulary if p.slot is slot][index]


class TestBasicEndpoints:
    def test_health(self, client):
        response = client.get("/health")
        assert response.status_code == 200
        assert response.json() == {"status": "ok"}

    def test_slots_lists_all_eight(self, client):
        assert client.get("/slots").json() == [
            "shirt", "over_shirt", "suit", "jacket", "belt", "trouser",
            "shoes", "other",
        ]

    def test_products_filters_by_slot(self, client, state):
        response = client.get("/products", params={"slot": "shoes"})
        assert response.status_code == 200
        body = response.json()
        assert body and all(entry["slot"] == "shoes" for entry in body)

    def test_products_unknown_slot_400(self, client):
        response = client.get("/products", params={"slot": "hat"})
        assert response.status_code == 400
        assert response.json()["error"]["code"] == "unknown_slot"

    def test_products_unknown_window_404(self, client):
        response = client.get("/products", params={"window": 99})
        assert response.status_code == 404

    def test_score_pair(self, client, state):
        a = product_of_slot(state, Slot.SHOES)
        b = product_of_slot(state, Slot.TROUSER)
        response = client.post("/score/pair", json={"a": a.id, "b": b.id})
        assert response.status_code == 200
        expected = pair_model.pair_score(state.pair_model, a, b)
        assert response.json()["score"] == pytest.approx(expected)

    def test_score_pair_same_slot_422(self, client, state):
        a = product_of_slot(state, Slot.SHOES, 0)
        b = product_of_slot(state, Slot.SHOES, 1)
        response = client.post("/score/pair", json={"a": a.id, "b": b.id})
        assert response.status_code == 422
        assert response.json()["error"]["code"] == "slot_collision"

    def test_score_pair_unknown_404(self, client):
        response = client.post("/score/pair", json={"a": "ghost", "b": "ghoul"})
        assert response.status_code == 404
        assert response.json()["error"]["code"] == "unknown_product"


class TestRank:
    def test_single_reference_pair_model(self, client, state):
        shoe = product_of_slot(state, Slot.SHOES)
        response = client.post("/rank", json={
            "reference": shoe.id, "target_slot": "trouser", "model": "pair",
            "top_k": 5,
        })
        assert response.status_code == 200
        body = response.json()
        assert 0 < len(body) <= 5
        assert all(entry["slot"] == "trouser" for entry in body)
        scores = [entry["score"] for entry in body]
        assert scores == sorted(scores, reverse=True)
        expected_top = pair_model.pair_score(
            state.pair_model, shoe, state.corpus.product(body[0]["product_id"])
        )
        assert body[0]["score"] == pytest.approx(expected_top)

    def test_partial_outfit_mean_model(self, client, state):
        reference = [
            product_of_slot(state, Slot.SHOES).id,
            product_of_slot(state, Slot.SHIRT).id,
            product_of_slot(state, Slot.BELT).id,
        ]
        response = client.post("/rank", json={
            "reference": reference, "target_slot": "trouser", "model": "mean",
            "top_k": 3,
        })
        assert response.status_code == 200
        body = response.json()
        top = state.corpus.product(body[0]["product_id"])
        refs = [state.corpus.product(pid) for pid in reference]
        assert body[0]["score"] == pytest.approx(
            outfit_models.mean_score(state.pair_model, top, refs)
        )

    def test_attention_model_route(self, client, state):
        reference = [product_of_slot(state, Slot.SHOES).id]
        response = client.post("/rank", json={
            "reference": reference, "target_slot": "belt", "model": "attention",
        })
        assert response.status_code == 200

    def test_rank_never_returns_reference_slot(self, client, state):
        shoe = product_of_slot(state, Slot.SHOES)
        response = client.post("/rank", json={
            "reference": shoe.id, "target_slot": "jacket", "model": "mean",
            "top_k": 50,
        })
        for entry in response.json():
            assert entry["slot"] == "jacket"
            assert entry["product_id"] != shoe.id

    def test_slot_collision_422(self, client, state):
        shoe = product_of_slot(state, Slot.SHOES)
        response = client.post("/rank", json={
            "reference": shoe.id, "target_slot": "shoes",
        })
        assert response.status_code == 422

    def test_unknown_reference_404(self, client):
        response = client.post("/rank", json={
            "reference": "ghost", "target_slot": "shoes",
        })
        assert response.status_code == 404

    def test_malformed_body_400(self, client):
        response = client.post("/rank", json={"reference": 7})
        assert response.status_code == 400
        assert response.json()["error"]["code"] == "malformed"

    def test_pair_model_multi_reference_400(self, client, state):
        refs = [product_of_slot(state, Slot.SHOES).id,
                product_of_slot(state, Slot.SHIRT).id]
        response = client.post("/rank", json={
            "reference": refs, "target_slot": "belt", "model": "pair",
        })
        assert response.status_code == 400

    def test_repeated_requests_byte_identical(self, client, state):
        payload = {
            "reference": product_of_slot(state, Slot.SHOES).id,
            "target_slot": "suit", "model": "mean", "top_k": 7,
        }
        first = client.post("/rank", json=payload)
        second = client.post("/rank", json=payload)
        assert first.content == second.content

    def test_cache_has_no_semantic_effect(self, state):
        cold = ServiceState(
            corpus=state.corpus, windows=state.windows,
            pair_model=state.pair_model, attention_model=state.attention_model,
            cache_enabled=False,
        )
        request = RankRequest(
            reference=[p.id for p in state.corpus.vocabulary[:1]],
            target_slot="shoes"
            if state.corpus.vocabulary[0].slot is not Slot.SHOES
            else "trouser",
            model="mean", top_k=9,
        )
        warmed = service.handle_rank(request, state)
        assert service.handle_rank(request, state) == warmed  # cache hit path
        assert service.handle_rank(request, cold) == warmed


class TestGenerate:
    def test_greedy_single_outfit(self, client):
        response = client.post("/outfits/generate", json={
            "beam_width": 1, "seed": 4,
        })
        assert response.status_code == 200
        (outfit,) = response.json()
        slots = [p["slot"] for p in outfit["products"]]
        assert slots == [s.value for s in service.DEFAULT_SLOT_ORDER]

    def test_identical_seed_identical_response(self, client):
        payload = {"beam_width": 3, "seed": 11}
        first = client.post("/outfits/generate", json=payload)
        second = client.post("/outfits/generate", json=payload)
        assert first.content == second.content

    def test_duplicate_slot_order_400(self, client):
        response = client.post("/outfits/generate", json={
            "beam_width": 2, "slot_order": ["shoes", "shoes"], "seed": 0,
        })
        assert response.status_code == 400

    def test_invalid_beam_width_400(self, client):
        response = client.post("/outfits/generate", json={
            "beam_width": 0, "seed": 0,
        })
        assert response.status_code == 400

    def test_no_model_409(self, state):
        empty = ServiceState(
            corpus=state.corpus, windows=state.windows, pair_model=None
        )
        with pytest.raises(service.ApiError) as excinfo:
            service.handle_generate(GenerateRequest(beam_width=1, seed=0), empty)
        assert excinfo.value.status == 409
