"""HTTP service exposing scoring, ranking, and outfit generation.

State (corpus, windows, models) is loaded once and immutable afterwards;
every response is a pure function of the request and that state, so repeated
identical requests return byte-identical bodies.  Errors use the envelope
{"error": {"code": ..., "message": ...}}.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from fastapi import FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import composer, outfit_models, pair_model as pm
from .catalog import SLOT_NAMES, Corpus, Product, Slot, TimeWindow
from .errors import (
    EmptyPoolError,
    SlotCollisionError,
    UnknownProductError,
    UnknownSlotError,
)

DEFAULT_ADDR = "127.0.0.1:8080"
ADDR_ENV_VAR = "STYLEREC_ADDR"
DEFAULT_SLOT_ORDER = (
    Slot.JACKET, Slot.SUIT, Slot.SHIRT, Slot.TROUSER, Slot.SHOES, Slot.BELT
)


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


class RankRequest(BaseModel):
    reference: str | list[str]
    target_slot: str
    model: str | None = None
    top_k: int = 10
    window_index: int | None = None


class PairScoreRequest(BaseModel):
    a: str
    b: str


class GenerateRequest(BaseModel):
    beam_width: int
    slot_order: list[str] | None = None
    window_index: int | None = None
    seed: int = 0


@dataclass
class ServiceState:
    """Immutable corpus, windows, and models shared by all requests."""

    corpus: Corpus
    windows: Sequence[TimeWindow]
    pair_model: pm.PairModel | None
    attention_model: outfit_models.AttentionModel | None = None
    default_model: str = "mean"
    max_top_k: int = 100
    cache_enabled: bool = True
    _rank_cache: dict = field(default_factory=dict, repr=False)
    _stock_cache: dict = field(default_factory=dict, repr=False)

    def window(self, index: int | None) -> TimeWindow:
        if not self.windows:
            raise ApiError(409, "no_windows", "service has no loaded windows")
        if index is None:
            return self.windows[-1]
        if not 0 <= index < len(self.windows):
            raise ApiError(
                404, "unknown_window",
                f"window {index} does not exist (0..{len(self.windows) - 1})",
            )
        return self.windows[index]

    def stock(self, window: TimeWindow, slot: Slot) -> list[Product]:
        key = (window.index, slot)
        if key not in self._stock_cache:
            self._stock_cache[key] = [
                p for p in window.window_vocabulary if p.slot is slot
            ]
        return self._stock_cache[key]

    def product(self, product_id: str) -> Product:
        try:
            return self.corpus.product(product_id)
        except UnknownProductError as exc:
            raise ApiError(404, "unknown_product", str(exc)) from None


def _parse_slot(name: str) -> Slot:
    try:
        return Slot.from_name(name)
    except UnknownSlotError as exc:
        raise ApiError(400, "unknown_slot", str(exc)) from None


def _score_candidates(
    state: ServiceState,
    model_name: str,
    references: list[Product],
    candidates: Sequence[Product],
) -> list[tuple[Product, float]]:
    if state.pair_model is None:
        raise ApiError(409, "no_model", "no pair model loaded")
    if model_name == "pair":
        if len(references) != 1:
            raise ApiError(
                400, "invalid_reference",
                "the pair model scores against a single reference product",
            )
        ref = references[0]
        return [(c, pm.pair_score(state.pair_model, ref, c)) for c in candidates]
    if model_name == "mean":
        return [
            (c, outfit_models.mean_score(state.pair_model, c, references))
            for c in candidates
        ]
    if model_name == "attention":
        if state.attention_model is None:
            raise ApiError(409, "no_model", "no attention model loaded")
        return [
            (c, outfit_models.attention_score(state.attention_model, c, references))
            for c in candidates
        ]
    raise ApiError(400, "unknown_model", f"unknown model {model_name!r}")


def handle_rank(request: RankRequest, state: ServiceState) -> list[dict]:
    """Rank the window's stock of the target slot against the reference."""
    reference_ids = (
        [request.reference]
        if isinstance(request.reference, str)
        else list(request.reference)
    )
    if not reference_ids:
        raise ApiError(400, "invalid_reference", "reference must not be empty")
    references = [state.product(pid) for pid in reference_ids]
    target_slot = _parse_slot(request.target_slot)
    ref_slots = [p.slot for p in references]
    if len(set(ref_slots)) != len(ref_slots):
        raise ApiError(
            422, "slot_collision", "reference holds two products of one slot"
        )
    if target_slot in ref_slots:
        raise ApiError(
            422, "slot_collision",
            f"target slot {target_slot.value!r} already present in the reference",
        )
    if request.top_k < 1:
        raise ApiError(400, "invalid_top_k", "top_k must be >= 1")
    top_k = min(request.top_k, state.max_top_k)
    model_name = request.model or state.default_model
    window = state.window(request.window_index)

    cache_key = (
        model_name, tuple(sorted(p.id for p in references)),
        target_slot, window.index,
    )
    ordered = state._rank_cache.get(cache_key) if state.cache_enabled else None
    if ordered is None:
        candidates = state.stock(window, target_slot)
        if not candidates:
            raise ApiError(
                422, "empty_pool",
                f"window {window.index} has no stock of slot {target_slot.value!r}",
            )
        try:
            scored = _score_candidates(state, model_name, references, candidates)
        except (SlotCollisionError, UnknownProductError) as exc:
            raise ApiError(422, "slot_collision", str(exc)) from None
        ordered = sorted(scored, key=lambda t: (-t[1], t[0].id))
        if state.cache_enabled:
            state._rank_cache[cache_key] = ordered
    return [
        {"product_id": p.id, "slot": p.slot.value, "score": score}
        for p, score in ordered[:top_k]
    ]


def handle_generate(request: GenerateRequest, state: ServiceState) -> list[dict]:
    """Beam-search complete outfits from the window's stock."""
    if state.pair_model is None:
        raise ApiError(409, "no_model", "no pair model loaded")
    if request.beam_width < 1:
        raise ApiError(400, "invalid_beam_width", "beam_width must be >= 1")
    if request.slot_order is not None:
        slots = tuple(_parse_slot(name) for name in request.slot_order)
        if len(set(slots)) != len(slots):
            raise ApiError(400, "invalid_slot_order", "slot_order repeats a slot")
        if not slots:
            raise ApiError(400, "invalid_slot_order", "slot_order must not be empty")
    else:
        slots = DEFAULT_SLOT_ORDER
    window = state.window(request.window_index)
    pools = {slot: state.stock(window, slot) for slot in slots}

    if state.default_model == "attention" and state.attention_model is not None:
        model = state.attention_model

        def scorer(candidate, partial):
            return outfit_models.attention_score(model, candidate, partial)
    else:
        pair = state.pair_model

        def scorer(candidate, partial):
            return outfit_models.mean_score(pair, candidate, partial)

    config = composer.BeamConfig(
        slot_order=slots,
        beam_width=request.beam_width,
        pools=pools,
        rng_seed=request.seed,
    )
    try:
        outfits = composer.beam_search(scorer, config)
    except EmptyPoolError as exc:
        raise ApiError(422, "empty_pool", str(exc)) from None
    return [
        {
            "products": [{"id": p.id, "slot": p.slot.value} for p in o.products],
            "score": o.score,
            "step_scores": list(o.step_scores),
        }
        for o in outfits
    ]


def create_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="stylerec", docs_url=None, redoc_url=None)
    # The browser workbench is typically served from another local origin.
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(ApiError)
    async def api_error_handler(_: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status,
            content={"error": {"code": exc.code, "message": exc.message}},
        )

    @app.exception_handler(RequestValidationError)
    async def validation_handler(_: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"error": {"code": "malformed", "message": str(exc.errors())}},
        )

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.get("/slots")
    def slots():
        return list(SLOT_NAMES)

    @app.get("/products")
    def products(slot: str | None = Query(default=None),
                 window: int | None = Query(default=None)):
        time_window = state.window(window)
        wanted = _parse_slot(slot) if slot is not None else None
        return [
            {"id": p.id, "slot": p.slot.value}
            for p in time_window.window_vocabulary
            if wanted is None or p.slot is wanted
        ]

    @app.post("/score/pair")
    def score_pair(request: PairScoreRequest):
        if state.pair_model is None:
            raise ApiError(409, "no_model", "no pair model loaded")
        a = state.product(request.a)
        b = state.product(request.b)
        try:
            return {"score": pm.pair_score(state.pair_model, a, b)}
        except SlotCollisionError as exc:
            raise ApiError(422, "slot_collision", str(exc)) from None

    @app.post("/rank")
    def rank_endpoint(request: RankRequest):
        return handle_rank(request, state)

    @app.post("/outfits/generate")
    def generate_endpoint(request: GenerateRequest):
        return handle_generate(request, state)

    return app


def serve(state: ServiceState, addr: str) -> None:
    """Run the service with uvicorn; blocks until interrupted."""
    import uvicorn

    host, _, port = addr.partition(":")
    uvicorn.run(create_app(state), host=host or "127.0.0.1", port=int(port or 8080))
