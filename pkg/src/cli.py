"""Command-line entry point.

    python -m src.cli <command> [options]

Commands: train, evaluate, summarize, lead3, label-oracle, sweep-iterations,
heatmap, gen-synth. Exit codes: 0 success, 1 usage error, 2 data error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import jsonlines

from src.config import (
    Ablation,
    ConfigError,
    ItsConfig,
    TrainConfig,
    apply_overrides,
    get_settings,
    load_config_file,
    parse_assignments,
)
from src.corpus import CorpusError, load_corpus, write_corpus, write_records
from src.filesystem import atomic_write_text, ensure_directory, require_file
from src.network import Checkpoint, CheckpointError, load_checkpoint, save_checkpoint
from src.oracle import SCORERS, LabelingStats, label_documents
from src.rouge import METRICS, TruncationPolicy, default_measure, format_table
from src.summarize import (
    ORDERS,
    evaluate_summaries,
    heatmap_csv,
    iteration_heatmap,
    lead3,
    summarize,
    write_heatmap,
)
from src.synthetic import MarkerCorpusOptions, generate_marker_corpus
from src.tensor import RngState
from src.training import NumericalError, train
from src.vocabulary import EmbeddingFormatError, build_vocabulary, load_embeddings

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3

MAX_SWEEP_ITERATIONS = 8

# rng sub-stream for embedding rows missing from the embedding file
_EMBEDDING_STREAM = 3


class UsageError(Exception):
    """Arguments that parse but do not make sense together."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ##################################################################
# shared helpers


def _load_configs(args) -> tuple[ItsConfig, TrainConfig]:
    """Defaults, then --config file, then --set, then the dedicated flags."""
    values: dict[str, str] = {}
    if args.config:
        values.update(load_config_file(require_file(args.config)))
    values.update(parse_assignments(args.set or []))
    its, train_config = apply_overrides(ItsConfig(), TrainConfig(), values)
    if getattr(args, "iterations", None) is not None:
        its = replace(its, iterations=args.iterations)
    if getattr(args, "epochs", None) is not None:
        train_config = replace(train_config, epochs=args.epochs)
    if args.seed is not None:
        train_config = replace(train_config, seed=args.seed)
    return its, train_config


def _out_dir(args) -> Path:
    return ensure_directory(args.out or get_settings().runs_dir)


def _progress() -> bool:
    return sys.stderr.isatty()


def _write_jsonl(path: str | None, records: list[dict]) -> None:
    if path:
        write_records(path, records)
        return
    with jsonlines.Writer(sys.stdout, compact=True, flush=True) as writer:
        writer.write_all(records)


# ##################################################################
# commands


def cmd_train(args) -> int:
    its, train_config = _load_configs(args)
    documents = load_corpus(args.corpus)
    out = _out_dir(args)

    resume = load_checkpoint(args.resume) if args.resume else None
    vocabulary = resume.vocabulary if resume else build_vocabulary(documents)
    embeddings = None
    if args.embeddings and resume is None:
        rng = RngState(train_config.seed).derive(_EMBEDDING_STREAM)
        embeddings = load_embeddings(args.embeddings, vocabulary, rng, width=its.embedding)

    result = train(
        documents,
        its,
        train_config,
        ablation=args.ablation,
        vocabulary=vocabulary,
        embeddings=embeddings,
        checkpoint_path=args.checkpoint or out / "checkpoints" / "epoch-{epoch}.json",
        metrics_path=out / "metrics.csv",
        resume=resume,
        workers=args.workers,
        progress=_progress(),
    )
    final_epoch = result.history[-1].epoch if result.history else (resume.epoch if resume else 0)
    model_path = save_checkpoint(
        out / "model.json",
        Checkpoint(
            params=result.params,
            vocabulary=result.vocabulary,
            epoch=final_epoch,
            train_config=train_config,
            optimizer=result.optimizer.to_dict() if result.optimizer else None,
        ),
    )
    print(f"Model written to {model_path}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    if not args.checkpoint and not args.baseline:
        raise UsageError("evaluate needs --checkpoint, --baseline lead3, or both")
    documents = load_corpus(args.corpus)
    systems = {}
    if args.baseline:
        systems["Lead-3"] = evaluate_summaries(lead3(documents), documents, args.policy)
    if args.checkpoint:
        checkpoint = load_checkpoint(args.checkpoint)
        summaries = summarize(documents, checkpoint.params, checkpoint.vocabulary, order=args.order, workers=args.workers)
        systems["ITS"] = evaluate_summaries(summaries, documents, args.policy)

    measure = args.measure or default_measure(args.policy)
    table = format_table(systems, measure) + "\n"
    sys.stdout.write(table)
    if args.out:
        out = ensure_directory(args.out)
        payload = {"measure": measure, "systems": {name: report.to_dict() for name, report in systems.items()}}
        atomic_write_text(out / "report.json", json.dumps(payload, indent=2) + "\n")
        details = "\n\n".join(f"{name}\n{report.to_table()}" for name, report in systems.items())
        atomic_write_text(out / "report.txt", table + "\n" + details + "\n")
    return EXIT_OK


def cmd_summarize(args) -> int:
    checkpoint = load_checkpoint(args.checkpoint)
    documents = load_corpus(args.corpus)
    summaries = summarize(documents, checkpoint.params, checkpoint.vocabulary, order=args.order, workers=args.workers)
    _write_jsonl(args.out, [s.to_record() for s in summaries])
    return EXIT_OK


def cmd_lead3(args) -> int:
    _write_jsonl(args.out, [s.to_record() for s in lead3(load_corpus(args.corpus))])
    return EXIT_OK


def cmd_label_oracle(args) -> int:
    stats = LabelingStats()
    labeled = list(
        label_documents(
            load_corpus(args.corpus), args.max_select, args.scorer, stats=stats, progress=_progress()
        )
    )
    if args.out:
        write_corpus(args.out, labeled)
    else:
        _write_jsonl(None, [doc.to_record() for doc in labeled])
    logger.info("Labeled %d documents, skipped %d without a gold summary", stats.labeled, stats.skipped)
    return EXIT_OK


def cmd_sweep_iterations(args) -> int:
    if not 1 <= args.k_min <= args.k_max <= MAX_SWEEP_ITERATIONS:
        raise UsageError(f"iteration range must satisfy 1 <= k-min <= k-max <= {MAX_SWEEP_ITERATIONS}")
    if Ablation(args.ablation) is Ablation.NO_ITERATION:
        raise UsageError("sweep-iterations cannot be combined with --ablation no_iteration")
    its, train_config = _load_configs(args)
    train_documents = load_corpus(args.corpus)
    eval_documents = load_corpus(args.eval_corpus) if args.eval_corpus else train_documents
    measure = args.measure or default_measure(args.policy)
    out = _out_dir(args)

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["iterations", "epochs", *METRICS])
    systems = {}
    for k in range(args.k_min, args.k_max + 1):
        logger.info("Sweep: training with %d iterations", k)
        result = train(
            train_documents,
            replace(its, iterations=k),
            train_config,
            ablation=args.ablation,
            workers=args.workers,
            progress=_progress(),
        )
        summaries = summarize(eval_documents, result.params, result.vocabulary, order=args.order, workers=args.workers)
        report = evaluate_summaries(summaries, eval_documents, args.policy)
        systems[f"K={k}"] = report
        writer.writerow([k, train_config.epochs, *(getattr(report.metric(m), measure) for m in METRICS)])

    atomic_write_text(out / "sweep.csv", buffer.getvalue())
    sys.stdout.write(format_table(systems, measure) + "\n")
    return EXIT_OK


def cmd_heatmap(args) -> int:
    checkpoint = load_checkpoint(args.checkpoint)
    documents = load_corpus(args.corpus)
    if not documents:
        raise CorpusError(f"{args.corpus} holds no documents")
    if args.doc_id is None:
        document = documents[0]
    else:
        matches = [doc for doc in documents if doc.id == args.doc_id]
        if not matches:
            raise CorpusError(f"Document '{args.doc_id}' not found in {args.corpus}")
        document = matches[0]
    if checkpoint.config.iterations < 2:
        logger.warning("Checkpoint has a single iteration; the heatmap has one row")
    matrix = iteration_heatmap(document, checkpoint.params, checkpoint.vocabulary)
    if args.out:
        write_heatmap(args.out, matrix)
    else:
        sys.stdout.write(heatmap_csv(matrix))
    return EXIT_OK


def cmd_gen_synth(args) -> int:
    options = MarkerCorpusOptions(documents=args.documents, min_marker_index=args.min_marker_index)
    seed = args.seed if args.seed is not None else 1
    count = write_corpus(args.out, generate_marker_corpus(options, RngState(seed)))
    print(f"Wrote {count} documents to {args.out}")
    return EXIT_OK


# ##################################################################
# argument parsing


def _policy(text: str) -> TruncationPolicy:
    try:
        return TruncationPolicy.parse(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _common(parser: argparse.ArgumentParser, out_help: str) -> None:
    parser.add_argument("--out", help=out_help)


def _model_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key=value config file (model.* and train.* keys)")
    parser.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE", help="Config override, repeatable")
    parser.add_argument("--ablation", choices=[a.value for a in Ablation], default=Ablation.FULL.value)
    parser.add_argument("--epochs", type=int, help="Training epochs (overrides train.epochs)")
    parser.add_argument("--seed", type=int, help="Random seed (overrides train.seed)")
    parser.add_argument("--workers", type=int, help="Worker threads (default ITS_WORKERS)")


def _evaluation_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--policy", type=_policy, default=TruncationPolicy(), help="none, bytes:N or words:N")
    parser.add_argument("--measure", choices=["precision", "recall", "f1"], help="Score shown in tables")
    parser.add_argument("--order", choices=ORDERS, default="score", help="Order of summary sentences")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="its", description="Iterative extractive summarization")
    parser.add_argument(
        "--log-level",
        type=str.upper,
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Logging level (default ITS_LOG_LEVEL or INFO)",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("train", help="Train a model on a labeled or highlighted corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--embeddings", help="Text file of 'token v1 ... vE' lines")
    p.add_argument("--checkpoint", help="Per-epoch checkpoint path; may contain {epoch}")
    p.add_argument("--resume", help="Checkpoint to continue from")
    p.add_argument("--iterations", type=int, help="Polishing iterations K (overrides model.iterations)")
    _common(p, "Output directory for model.json and metrics.csv")
    _model_options(p)
    p.set_defaults(handler=cmd_train)

    p = commands.add_parser("evaluate", help="ROUGE of a model and/or Lead-3 against highlights")
    p.add_argument("--corpus", required=True)
    p.add_argument("--checkpoint")
    p.add_argument("--baseline", choices=["lead3"])
    p.add_argument("--workers", type=int)
    _common(p, "Directory for report.json and report.txt")
    _evaluation_options(p)
    p.set_defaults(handler=cmd_evaluate)

    p = commands.add_parser("summarize", help="Top-3 sentences per document")
    p.add_argument("--corpus", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--order", choices=ORDERS, default="score")
    p.add_argument("--workers", type=int)
    _common(p, "JSONL output file (default stdout)")
    p.set_defaults(handler=cmd_summarize)

    p = commands.add_parser("lead3", help="First three sentences per document")
    p.add_argument("--corpus", required=True)
    _common(p, "JSONL output file (default stdout)")
    p.set_defaults(handler=cmd_lead3)

    p = commands.add_parser("label-oracle", help="Attach greedy oracle labels to a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--max-select", type=int, default=3)
    p.add_argument("--scorer", choices=sorted(SCORERS), default="mean_f1")
    _common(p, "Labeled JSONL corpus (default stdout)")
    p.set_defaults(handler=cmd_label_oracle)

    p = commands.add_parser("sweep-iterations", help="Train and score one model per iteration count")
    p.add_argument("--corpus", required=True)
    p.add_argument("--eval-corpus", help="Corpus to score on (default: the training corpus)")
    p.add_argument("--k-min", type=int, default=1)
    p.add_argument("--k-max", type=int, default=7)
    _common(p, "Output directory for sweep.csv")
    _model_options(p)
    _evaluation_options(p)
    p.set_defaults(handler=cmd_sweep_iterations)

    p = commands.add_parser("heatmap", help="Per-iteration sentence probabilities for one document")
    p.add_argument("--corpus", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--doc-id", help="Document id (default: first document)")
    _common(p, "CSV output file (default stdout)")
    p.set_defaults(handler=cmd_heatmap)

    p = commands.add_parser("gen-synth", help="Write a synthetic marker corpus")
    p.add_argument("--documents", type=int, default=32)
    p.add_argument("--min-marker-index", type=int, default=0)
    p.add_argument("--out", required=True, help="JSONL output file")
    p.add_argument("--seed", type=int)
    p.set_defaults(handler=cmd_gen_synth)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = (args.log_level or get_settings().log_level).upper()
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.handler(args)
    except UsageError as e:
        logger.error("%s", e)
        return EXIT_USAGE
    except NumericalError as e:
        logger.error("Numerical failure: %s", e)
        return EXIT_NUMERICAL
    except (
        ConfigError,
        CorpusError,
        CheckpointError,
        EmbeddingFormatError,
        FileNotFoundError,
        NotADirectoryError,
        ValueError,
    ) as e:
        logger.error("%s", e)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
