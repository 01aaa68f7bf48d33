"""Command-line surface for the retrieval pipeline.

Exit codes: 0 success, 2 configuration problems, 3 backend transport
failures, 4 contract violations (bad inputs, broken invariants),
5 capability gaps.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .adapter import TrainConfig, train, write_adapter
from .config import RunConfig, load_config, resolve_layer
from .datasets import ingest, read_pairs, write_manifest
from .errors import (
    CapabilityError,
    ConfigError,
    ContractViolation,
    IngestError,
    TransportError,
    VidtextError,
)
from .pipeline import StageError, embed_corpus, run_pipeline
from .rerank import RerankConfig
from .retrieval import Direction
from .sweep import LayerSweeper, sweep_to_csv, sweep_to_json
from .types import Split

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_TRANSPORT = 3
EXIT_CONTRACT = 4
EXIT_CAPABILITY = 5


def _classify(exc: Exception) -> int:
    if isinstance(exc, StageError):
        exc = exc.cause
    if isinstance(exc, (ConfigError, IngestError)):
        return EXIT_CONFIG
    if isinstance(exc, TransportError):
        return EXIT_TRANSPORT
    if isinstance(exc, CapabilityError):
        return EXIT_CAPABILITY
    if isinstance(exc, (ContractViolation, VidtextError)):
        return EXIT_CONTRACT
    raise exc


def _load(args) -> RunConfig:
    cfg = load_config(args.config)
    if getattr(args, "layer", None) is not None:
        cfg.layer = args.layer
    if getattr(args, "direction", None):
        cfg.direction = Direction(args.direction)
    if getattr(args, "output_dir", None):
        cfg.output_dir = args.output_dir
    if getattr(args, "rerank_k", None) is not None:
        cfg.rerank = RerankConfig(k=args.rerank_k)
    if getattr(args, "prompt_variant", None):
        cfg.prompt_prefixed = args.prompt_variant == "video_eol_prefixed"
    return cfg


def cmd_ingest(args) -> int:
    manifest = ingest(args.input, paragraph=args.paragraph, split=Split(args.split))
    write_manifest(manifest, args.output)
    print(f"{manifest.n_items} items, {manifest.n_captions} captions -> {args.output}")
    return EXIT_OK


def cmd_embed(args) -> int:
    cfg = _load(args)
    cfg.validate()
    backend = cfg.backend.build()
    manifest = ingest(cfg.dataset, paragraph=cfg.paragraph)
    layer = resolve_layer(cfg.layer, backend.descriptor().num_layers)
    caps, vids = embed_corpus(
        backend, manifest, cfg, layer, cache_dir=Path(cfg.output_dir) / "cache"
    )
    print(f"embedded {len(caps)} captions and {len(vids)} videos at layer {layer}")
    return EXIT_OK


def _run(args, force_rerank: bool) -> int:
    cfg = _load(args)
    if force_rerank and cfg.rerank is None:
        cfg.rerank = RerankConfig()
    result = run_pipeline(cfg)
    print(result.stage1.format_table(), end="")
    if result.stage2 is not None:
        print(result.stage2.format_table(), end="")
    print(f"# config_hash={result.config_hash}")
    return EXIT_OK


def cmd_eval(args) -> int:
    return _run(args, force_rerank=False)


def cmd_rerank(args) -> int:
    return _run(args, force_rerank=True)


def cmd_train_adapter(args) -> int:
    cfg = _load(args)
    pairs = read_pairs(args.pairs)
    backend = cfg.backend.build()
    tc = TrainConfig(
        batch_size=args.batch_size,
        epochs=args.epochs,
        learning_rate=args.learning_rate,
        seed=args.seed,
        rank=args.rank,
        alpha=args.alpha,
    )
    result = train(pairs, backend, tc, layer=cfg.layer)
    write_adapter(args.output, result.params)
    if args.log:
        result.write_log_csv(args.log)
    last = result.log[-1].loss if result.log else float("nan")
    print(f"trained adapter rank={args.rank} on {len(pairs)} pairs, final loss {last:.4f}")
    return EXIT_OK


def cmd_layer_sweep(args) -> int:
    cfg = _load(args)
    cfg.validate()
    backend = cfg.backend.build()
    manifest = ingest(cfg.dataset, paragraph=cfg.paragraph)
    layers = [int(x) for x in args.layers.split(",")] if args.layers else list(
        range(backend.descriptor().num_layers)
    )
    sweeper = LayerSweeper(backend, fps=cfg.fps, max_frames=cfg.max_frames)
    rows = sweeper.sweep(
        manifest, layers, direction=cfg.direction, prefixed_prompt=cfg.prompt_prefixed,
        calibration=cfg.calibration if cfg.calibration.enabled else None,
    )
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_text = sweep_to_csv(rows, out / "layer-sweep.csv")
    sweep_to_json(rows, out / "layer-sweep.json")
    print(csv_text, end="")
    return EXIT_OK


def cmd_report(args) -> int:
    payload = json.loads(Path(args.input).read_text())
    ks = sorted(int(k) for k in payload["recall_at"])
    print("direction  " + "  ".join(f"R@{k}" for k in ks))
    print(
        f"{payload['direction']:<9s}  "
        + "  ".join(f"{100.0 * payload['recall_at'][str(k)]:4.1f}" for k in ks)
    )
    if "config_hash" in payload:
        print(f"# config_hash={payload['config_hash']}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vidtext", description=__doc__)
    p.add_argument("--version", action="version", version=f"vidtext {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("ingest", help="validate a raw JSONL dataset into a manifest")
    sp.add_argument("--input", required=True)
    sp.add_argument("--output", required=True)
    sp.add_argument("--paragraph", action="store_true",
                    help="concatenate captions into one paragraph per item")
    sp.add_argument("--split", default="test", choices=[s.value for s in Split])
    sp.set_defaults(func=cmd_ingest)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="TOML run configuration")
    common.add_argument("--layer", type=int, default=None)
    common.add_argument("--direction", choices=[d.value for d in Direction], default=None)
    common.add_argument("--output-dir", default=None)

    sp = sub.add_parser("embed", parents=[common], help="embed the corpus into the cache")
    sp.set_defaults(func=cmd_embed)

    sp = sub.add_parser("eval", parents=[common], help="first-stage evaluation")
    sp.add_argument("--rerank-k", type=int, default=None)
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("rerank", parents=[common],
                        help="evaluation with second-stage reranking")
    sp.add_argument("--rerank-k", type=int, default=None)
    sp.set_defaults(func=cmd_rerank)

    sp = sub.add_parser("train-adapter", parents=[common], help="train the text-only adapter")
    sp.add_argument("--pairs", required=True, help="JSONL of dense/summary pairs")
    sp.add_argument("--output", required=True, help="adapter output file")
    sp.add_argument("--log", default=None, help="training log CSV")
    sp.add_argument("--rank", type=int, default=64)
    sp.add_argument("--alpha", type=float, default=128.0)
    sp.add_argument("--batch-size", type=int, default=288)
    sp.add_argument("--epochs", type=int, default=1)
    sp.add_argument("--learning-rate", type=float, default=1e-3)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_train_adapter)

    sp = sub.add_parser("layer-sweep", parents=[common],
                        help="zero-shot recall per readout layer")
    sp.add_argument("--layers", default=None, help="comma-separated layer indices")
    sp.add_argument("--prompt-variant", default=None,
                    choices=["video_eol", "video_eol_prefixed"])
    sp.set_defaults(func=cmd_layer_sweep)

    sp = sub.add_parser("report", help="pretty-print a report JSON")
    sp.add_argument("--input", required=True)
    sp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except VidtextError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _classify(exc)


if __name__ == "__main__":
    sys.exit(main())
