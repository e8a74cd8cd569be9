"""Command-line entry points for the full pipeline.

Subcommands: ingest, synth, train-pair, train-attention, eval, generate,
export, serve.  Every stochastic subcommand accepts --seed; dataset flags
(--window-size, --fractions, --split-seed) derive the same deterministic
window/split assignment in every subcommand, so training and evaluation agree
on the split without an extra file.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

from . import catalog, composer, metrics, outfit_models, pair_model, service, synth
from .catalog import Slot, Split


def file_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _add_dataset_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--corpus", required=True, help="canonical corpus JSONL")
    parser.add_argument("--window-size", type=int, default=1000)
    parser.add_argument(
        "--fractions", type=float, nargs=3, default=(0.8, 0.1, 0.1),
        metavar=("TRAIN", "VAL", "TEST"),
    )
    parser.add_argument("--split-seed", type=int, default=0)


def _load_dataset(args):
    corpus = catalog.load_corpus(args.corpus)
    windows = catalog.window_split(corpus, args.window_size)
    assignment = catalog.assign_splits(
        windows, tuple(args.fractions), args.split_seed
    )
    return corpus, windows, assignment


def _split_windows(windows, assignment, split: Split):
    wanted = set(assignment.windows(split))
    return [w for w in windows if w.index in wanted]


def _cmd_ingest(args) -> int:
    raw = catalog.load_corpus(args.input)
    processed = catalog.preprocess(raw, args.min_frequency, args.seed)
    catalog.write_corpus(processed, args.output)
    windows = catalog.window_split(processed, args.window_size)
    assignment = catalog.assign_splits(windows, tuple(args.fractions), args.split_seed)
    if args.splits_out:
        payload = {
            "window_size": args.window_size,
            "fractions": list(args.fractions),
            "split_seed": args.split_seed,
            "assignments": {
                str(i): s.value for i, s in sorted(assignment.by_window.items())
            },
        }
        Path(args.splits_out).write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    counts = {s.value: len(assignment.windows(s)) for s in Split}
    print(
        f"ingested {len(raw)} outfits -> {len(processed)} after preprocessing; "
        f"{len(windows)} windows ({counts})"
    )
    return 0


def _cmd_synth(args) -> int:
    config = synth.SynthConfig(
        n_products=args.products,
        n_outfits=args.outfits,
        n_clusters=args.clusters,
        d_true=args.d_true,
        outfit_sizes=tuple(args.sizes),
        noise_temperature=args.noise_temperature,
        rng_seed=args.seed,
        popularity_exponent=args.popularity_exponent,
    )
    cat = synth.generate_catalog(config)
    corpus, truth = synth.generate_outfits(cat, config)
    catalog.write_corpus(corpus, args.output)
    if args.truth_output:
        synth.write_truth(truth, args.truth_output)
    print(
        f"generated {len(corpus)} outfits over {len(corpus.vocabulary)} products "
        f"({config.n_clusters} planted clusters)"
    )
    return 0


def _cmd_train_pair(args) -> int:
    corpus, windows, assignment = _load_dataset(args)
    train_windows = _split_windows(windows, assignment, Split.TRAIN)
    config = pair_model.TrainConfig(
        m=args.m,
        n_pair=args.negatives,
        rho=args.rho,
        learning_rate=args.lr,
        epochs=args.epochs,
        rng_seed=args.seed,
        uniform_negatives=args.uniform_negatives,
    )
    model = pair_model.train(train_windows, config, vocabulary=corpus.vocabulary)
    pair_model.save_model(model, args.output)
    for epoch, lp in enumerate(model.epoch_log_prob):
        print(f"epoch {epoch}: mean batch log-probability {lp:.6f}")
    print(f"saved pair model ({len(model.vocabulary)} products, m={model.m})")
    return 0


def _cmd_train_attention(args) -> int:
    _, windows, assignment = _load_dataset(args)
    train_windows = _split_windows(windows, assignment, Split.TRAIN)
    base = pair_model.load_model(args.pair_model)
    config = outfit_models.AttentionTrainConfig(
        epochs=args.epochs,
        learning_rate=args.lr,
        n_outfit=args.negatives,
        rng_seed=args.seed,
        uniform_negatives=args.uniform_negatives,
    )
    model = outfit_models.train_attention(base, train_windows, config)
    outfit_models.save_attention(
        model, args.output, pair_model_ref=file_digest(args.pair_model)
    )
    for epoch, loss in enumerate(model.epoch_loss):
        print(f"epoch {epoch}: mean loss {loss:.6f}")
    print("saved attention model")
    return 0


def _make_outfit_scorer(args, base):
    if args.scorer == "mean":
        return lambda query, partial: outfit_models.mean_score(base, query, partial)
    attention = outfit_models.load_attention(args.attention_model, base)
    return lambda query, partial: outfit_models.attention_score(
        attention, query, partial
    )


def _cmd_eval(args) -> int:
    _, windows, assignment = _load_dataset(args)
    split = Split(args.split)
    eval_windows = _split_windows(windows, assignment, split)
    if not eval_windows:
        print(f"error: split {split.value!r} holds no windows", file=sys.stderr)
        return 1
    base = pair_model.load_model(args.model)
    max_instances = args.max_instances or None

    report = metrics.MetricReport(instance_count=0)
    wants = lambda name: args.metric in (name, "all")

    if args.scorer == "pair":
        scorer = lambda target, cand: pair_model.pair_score(base, target, cand)
        instances = metrics.pair_eval_instances(
            scorer, eval_windows, n_candidates=args.candidates,
            rng=args.seed, max_instances=max_instances,
        )
        if args.metric == "fitb":
            print("error: fitb needs an outfit scorer (mean or attention)",
                  file=sys.stderr)
            return 1
    else:
        outfit_scorer = _make_outfit_scorer(args, base)
        instances = metrics.fitb_instances(
            outfit_scorer, eval_windows, n_candidates=args.candidates,
            rng=args.seed, max_instances=max_instances,
        )
        if wants("fitb"):
            fitb_set = metrics.fitb_instances(
                outfit_scorer, eval_windows, n_candidates=args.n,
                rng=args.seed + 1, max_instances=max_instances,
            )
            report.fitb[args.n] = metrics.fitb_accuracy(fitb_set, args.n)

    report.instance_count = len(instances)
    if wants("top2"):
        report.top2 = metrics.top2(instances)
    if wants("hitrate"):
        histogram, mrr = metrics.hit_rate_by_rank(instances)
        report.hit_rate_by_rank = tuple(histogram)
        report.mrr = mrr
    if wants("aps"):
        report.aps = metrics.average_precision(instances)

    metadata = {
        "corpus": os.path.basename(args.corpus),
        "model_digest": file_digest(args.model),
        "attention_digest": (
            file_digest(args.attention_model) if args.attention_model else None
        ),
        "scorer": args.scorer,
        "split": split.value,
        "seed": args.seed,
        "candidates": args.candidates,
        "window_size": args.window_size,
        "split_seed": args.split_seed,
    }
    metrics.write_report(report, args.output, metadata)
    shown = {
        "top2": report.top2,
        "mrr": report.mrr,
        "aps": report.aps,
        "fitb": report.fitb or None,
    }
    summary = ", ".join(f"{k}={v}" for k, v in shown.items() if v is not None)
    print(f"evaluated {report.instance_count} instances: {summary}")
    return 0


def _cmd_generate(args) -> int:
    _, windows, _ = _load_dataset(args)
    base = pair_model.load_model(args.model)
    window = windows[args.window if args.window >= 0 else len(windows) - 1]
    slots = tuple(Slot.from_name(name) for name in args.slot_order)
    pools = {
        slot: [p for p in window.window_vocabulary if p.slot is slot]
        for slot in slots
    }
    scorer = _make_outfit_scorer(args, base)
    config = composer.BeamConfig(
        slot_order=slots, beam_width=args.beam_width, pools=pools,
        rng_seed=args.seed,
    )
    outfits = composer.beam_search(scorer, config)
    payload = [
        {
            "products": [{"id": p.id, "slot": p.slot.value} for p in o.products],
            "score": o.score,
            "step_scores": list(o.step_scores),
        }
        for o in outfits
    ]
    text = json.dumps(payload, indent=2)
    if args.output:
        Path(args.output).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return 0


def _cmd_export(args) -> int:
    model = pair_model.load_model(args.model)
    pair_model.export_tsv(model, args.tsv)
    if args.model_out:
        pair_model.save_model(model, args.model_out)
    print(f"exported {len(model.vocabulary)} embeddings (m={model.m})")
    return 0


def _cmd_serve(args) -> int:
    corpus, windows, _ = _load_dataset(args)
    base = pair_model.load_model(args.model)
    attention = (
        outfit_models.load_attention(args.attention_model, base)
        if args.attention_model
        else None
    )
    state = service.ServiceState(
        corpus=corpus,
        windows=windows,
        pair_model=base,
        attention_model=attention,
        default_model=args.default_model,
    )
    addr = args.addr or os.environ.get(service.ADDR_ENV_VAR, service.DEFAULT_ADDR)
    print(f"serving on {addr}")
    service.serve(state, addr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stylerec",
        description="Outfit compatibility engine: train, evaluate, compose, serve.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load, preprocess, window, and split a corpus")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--min-frequency", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--window-size", type=int, default=1000)
    p.add_argument("--fractions", type=float, nargs=3, default=(0.8, 0.1, 0.1))
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--splits-out", default=None)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("synth", help="generate a synthetic corpus with planted clusters")
    p.add_argument("--products", type=int, default=400)
    p.add_argument("--outfits", type=int, default=20000)
    p.add_argument("--clusters", type=int, default=5)
    p.add_argument("--d-true", type=int, default=16)
    p.add_argument("--sizes", type=int, nargs="+", default=(4, 5, 6))
    p.add_argument("--noise-temperature", type=float, default=0.1)
    p.add_argument("--popularity-exponent", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True)
    p.add_argument("--truth-output", default=None)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("train-pair", help="train the pair embedding model")
    _add_dataset_args(p)
    p.add_argument("--m", type=int, default=40)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--negatives", type=int, default=80)
    p.add_argument("--rho", type=float, default=0.0002)
    p.add_argument("--lr", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--uniform-negatives", action="store_true")
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_train_pair)

    p = sub.add_parser("train-attention", help="train the slot-pair attention model")
    _add_dataset_args(p)
    p.add_argument("--pair-model", required=True)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--negatives", type=int, default=19)
    p.add_argument("--lr", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--uniform-negatives", action="store_true")
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_train_attention)

    p = sub.add_parser("eval", help="evaluate a scorer on a split")
    _add_dataset_args(p)
    p.add_argument("--model", required=True, help="pair model file")
    p.add_argument("--attention-model", default=None)
    p.add_argument("--scorer", choices=("pair", "mean", "attention"), default="mean")
    p.add_argument(
        "--metric", choices=("top2", "hitrate", "fitb", "aps", "all"), default="all"
    )
    p.add_argument("--candidates", type=int, default=20,
                   help="candidate count for top2/hitrate/aps instances")
    p.add_argument("--n", type=int, default=4, help="FITB candidate count")
    p.add_argument("--split", choices=("train", "validation", "test"), default="test")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-instances", type=int, default=0, help="0 = all")
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("generate", help="compose outfits by beam search")
    _add_dataset_args(p)
    p.add_argument("--model", required=True)
    p.add_argument("--attention-model", default=None)
    p.add_argument("--scorer", choices=("mean", "attention"), default="mean")
    p.add_argument("--beam-width", type=int, default=20)
    p.add_argument(
        "--slot-order", nargs="+",
        default=[s.value for s in service.DEFAULT_SLOT_ORDER],
    )
    p.add_argument("--window", type=int, default=-1, help="-1 = latest window")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", default=None)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("export", help="export the embedding TSV (and model copy)")
    p.add_argument("--model", required=True)
    p.add_argument("--tsv", required=True)
    p.add_argument("--model-out", default=None)
    p.set_defaults(func=_cmd_export)

    p = sub.add_parser("serve", help="run the HTTP recommendation service")
    _add_dataset_args(p)
    p.add_argument("--model", required=True)
    p.add_argument("--attention-model", default=None)
    p.add_argument("--default-model", choices=("pair", "mean", "attention"),
                   default="mean")
    p.add_argument("--addr", default=None,
                   help=f"bind address (default ${service.ADDR_ENV_VAR} or "
                        f"{service.DEFAULT_ADDR})")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
