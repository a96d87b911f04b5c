"""Command-line entry point: corpora, training, evaluation, reconstruction, synthesis.

Every command writes a manifest (arguments, seed, config digest, input file
digests) alongside its outputs so runs are reproducible. Exit codes: 0 ok,
1 validation error, 2 numeric failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import re
import sys
from pathlib import Path

import numpy as np

from .config import TrainConfig, load_train_config
from .errors import NumericError, ValidationError
from .evaluation import (
    baseline_all_first,
    baseline_all_previous,
    baseline_cos_sim,
    discriminate,
    inverse_eval,
    reconstruct,
    reconstruction_metrics,
    reconstruction_table,
)
from .grids import build_grid, with_entity_order
from .io import (
    grid_to_tsv,
    read_documents_jsonl,
    read_threads_jsonl,
    sha256_file,
    write_documents_jsonl,
    write_threads_jsonl,
)
from .models import ConversationCoherenceRanker, GridCoherenceRanker, load_model, save_model
from .pairs import SETTINGS, generate_pairs, sample_permutations, split_dev
from .rng import substream
from .synth import SynthConfig, generate_documents, generate_threads

logger = logging.getLogger(__name__)


class _Parser(argparse.ArgumentParser):
    """argparse with exit code 1 on usage errors (2 is reserved for numeric failures)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        sys.exit(1)


def _sanitize(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", name) or "unnamed"


def _json_text(payload) -> str:
    return json.dumps(payload, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _config_digest(cfg: TrainConfig) -> str:
    return hashlib.sha256(_json_text(cfg.to_dict()).encode("utf-8")).hexdigest()


def write_manifest(directory: Path, command: str, args: argparse.Namespace,
                   inputs: list[Path], outputs: list[str], extra: dict | None = None) -> None:
    manifest = {
        "command": command,
        "arguments": {
            k: v for k, v in sorted(vars(args).items()) if k != "func" and not k.startswith("_")
        },
        "inputs": {str(p): sha256_file(p) for p in inputs},
        "outputs": sorted(outputs),
    }
    if extra:
        manifest.update(extra)
    (directory / "manifest.json").write_text(_json_text(manifest), encoding="utf-8")


def _out_dir(path_str: str) -> Path:
    path = Path(path_str)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _read_corpus(path: str, setting: str):
    if setting == "monologue":
        return read_documents_jsonl(path)
    return read_threads_jsonl(path)


def _estimator_for(setting: str, cfg: TrainConfig, seed: int):
    common = dict(
        embedding_dim=cfg.embedding_dim,
        num_filters=cfg.num_filters,
        filter_length=cfg.filter_length,
        pool_length=cfg.pool_length,
        lexicalized=cfg.lexicalized,
        batchnorm=cfg.batchnorm,
        batch_size=cfg.batch_size,
        max_epochs=cfg.max_epochs,
        learning_rate=cfg.learning_rate,
        rho=cfg.rho,
        epsilon=cfg.epsilon,
        permutations_per_doc=cfg.permutations_per_doc,
        dev_fraction=cfg.dev_fraction,
        seed=seed,
        embeddings_path=cfg.embeddings_path,
        max_tokens=cfg.max_tokens,
    )
    if setting == "tree":
        return ConversationCoherenceRanker(
            filter_width=cfg.filter_width, pool_width=cfg.pool_width,
            max_paths=cfg.max_paths, **common,
        )
    return GridCoherenceRanker(**common)


# ------------------------------------------------------------------- commands


def cmd_synth(args) -> int:
    out = _out_dir(args.output)
    cfg = SynthConfig()
    inputs = []
    if args.config:
        raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
        fields = {f.name for f in dataclasses.fields(SynthConfig)}
        unknown = set(raw) - fields
        if unknown:
            raise ValidationError(f"unknown synth config keys: {sorted(unknown)}")
        cfg = SynthConfig(**{k: tuple(v) if isinstance(v, list) else v for k, v in raw.items()})
        inputs.append(Path(args.config))
    outputs = []
    jobs = [
        ("documents_train.jsonl", args.docs_train, generate_documents, write_documents_jsonl, "docs-train", "train"),
        ("documents_test.jsonl", args.docs_test, generate_documents, write_documents_jsonl, "docs-test", "test"),
        ("threads_train.jsonl", args.threads_train, generate_threads, write_threads_jsonl, "threads-train", "ttrain"),
        ("threads_test.jsonl", args.threads_test, generate_threads, write_threads_jsonl, "threads-test", "ttest"),
    ]
    for filename, count, generate, write, stream, prefix in jobs:
        if count <= 0:
            continue
        items = generate(count, substream(args.seed, f"synth/{stream}"), cfg, prefix=prefix)
        write(items, out / filename)
        outputs.append(filename)
        logger.info("wrote %d records to %s", count, out / filename)
    write_manifest(out, "synth", args, inputs, outputs)
    return 0


def cmd_grid_build(args) -> int:
    out = _out_dir(args.output)
    docs = read_documents_jsonl(args.input)
    outputs = []
    for doc in docs:
        grid = build_grid(doc)
        if args.sort_entities:
            grid = with_entity_order(grid, sorted(grid.entities))
        name = f"{_sanitize(doc.doc_id)}.tsv"
        (out / name).write_text(grid_to_tsv(grid), encoding="utf-8")
        outputs.append(name)
    write_manifest(out, "grid build", args, [Path(args.input)], outputs)
    return 0


def cmd_permute(args) -> int:
    out = _out_dir(args.output)
    rng = substream(args.seed, "permute")
    if args.kind == "documents":
        sources = [(d.doc_id, d.num_sentences) for d in read_documents_jsonl(args.input)]
    else:
        sources = [(t.thread_id, t.total_sentences) for t in read_threads_jsonl(args.input)]
    name = "permutations.jsonl"
    with (out / name).open("w", encoding="utf-8") as fh:
        for doc_id, size in sources:
            if size < 2:
                logger.warning("skipping %s: fewer than 2 sentences", doc_id)
                continue
            for perm_id, perm in enumerate(sample_permutations(size, args.n, rng)):
                record = {"doc_id": doc_id, "perm_id": perm_id, "permutation": list(perm)}
                fh.write(json.dumps(record, sort_keys=True) + "\n")
    write_manifest(out, "permute", args, [Path(args.input)], [name])
    return 0


def _train_once(corpus, setting: str, cfg: TrainConfig, seed: int, out: Path) -> dict:
    model = _estimator_for(setting, cfg, seed)
    pairs = generate_pairs(corpus, setting, cfg.permutations_per_doc, substream(seed, "pairs"))
    train_pairs, dev_pairs = split_dev(pairs, cfg.dev_fraction, substream(seed, "dev-split"))
    model.fit_pairs(train_pairs, dev_pairs)
    save_model(model, out / "checkpoint.json")
    with (out / "training_log.jsonl").open("w", encoding="utf-8") as fh:
        for row in model.history_:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    best = model.history_[model.best_epoch_ - 1]
    return {
        "seed": seed,
        "best_epoch": model.best_epoch_,
        "best_dev_acc": best["dev_acc"],
        "train_pairs": model.n_train_pairs_,
        "dev_pairs": model.n_dev_pairs_,
    }


def cmd_train(args) -> int:
    out = _out_dir(args.output)
    cfg = load_train_config(args.config, seed=args.seed)
    corpus = _read_corpus(args.input, args.setting)
    outputs = []
    if args.runs == 1:
        summary = [_train_once(corpus, args.setting, cfg, cfg.seed, out)]
        outputs += ["checkpoint.json", "training_log.jsonl"]
    else:
        summary = []
        for r in range(args.runs):
            run_dir = _out_dir(str(out / f"run{r}"))
            summary.append(_train_once(corpus, args.setting, cfg, cfg.seed + r, run_dir))
            outputs += [f"run{r}/checkpoint.json", f"run{r}/training_log.jsonl"]
    accs = [row["best_dev_acc"] for row in summary]
    aggregate = {
        "runs": summary,
        "mean_best_dev_acc": float(np.mean(accs)) if not any(np.isnan(accs)) else None,
        "setting": args.setting,
    }
    (out / "summary.json").write_text(_json_text(aggregate), encoding="utf-8")
    outputs.append("summary.json")
    inputs = [Path(args.input)] + ([Path(args.config)] if args.config else [])
    write_manifest(out, "train", args, inputs, outputs,
                   extra={"seed": cfg.seed, "config_digest": _config_digest(cfg)})
    return 0


def _write_eval_outputs(out: Path, report, args, inputs, cfg: TrainConfig | None) -> None:
    (out / "report.json").write_text(_json_text(report.to_json_dict()), encoding="utf-8")
    (out / "report.txt").write_text(report.to_text(), encoding="utf-8")
    (out / "decisions.csv").write_text(report.decisions_csv(), encoding="utf-8")
    extra = {"config_digest": _config_digest(cfg)} if cfg else None
    write_manifest(out, "eval", args, inputs,
                   ["report.json", "report.txt", "decisions.csv"], extra=extra)


def cmd_eval_discriminate(args) -> int:
    out = _out_dir(args.output)
    model = load_model(args.model)
    cfg = load_train_config(args.config, seed=args.seed)
    corpus = _read_corpus(args.input, args.setting)
    pairs = generate_pairs(corpus, args.setting, cfg.permutations_per_doc,
                           substream(cfg.seed, "eval-pairs"))
    report = discriminate(model, pairs, workers=args.workers)
    print(report.to_text(), end="")
    _write_eval_outputs(out, report, args, [Path(args.model), Path(args.input)], cfg)
    return 0


def cmd_eval_inverse(args) -> int:
    out = _out_dir(args.output)
    model = load_model(args.model)
    corpus = _read_corpus(args.input, args.setting)
    report = inverse_eval(model, corpus, args.setting, workers=args.workers)
    print(report.to_text(), end="")
    _write_eval_outputs(out, report, args, [Path(args.model), Path(args.input)], None)
    return 0


def cmd_reconstruct(args) -> int:
    out = _out_dir(args.output)
    model = load_model(args.model)
    threads = read_threads_jsonl(args.input)
    systems = {
        "conv_grid": lambda t: reconstruct(model, t, cap=args.cap, workers=args.workers),
        "all_previous": baseline_all_previous,
        "all_first": baseline_all_first,
        "cos_sim": baseline_cos_sim,
    }
    predictions = {name: [fn(t) for t in threads] for name, fn in systems.items()}
    with (out / "predictions.jsonl").open("w", encoding="utf-8") as fh:
        for i, thread in enumerate(threads):
            record = {
                "thread_id": thread.thread_id,
                "gold": list(thread.parent_vector),
                "predicted": {name: list(predictions[name][i]) for name in systems},
            }
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    reports = {name: reconstruction_metrics(predictions[name], threads) for name in systems}
    payload = {name: report.to_json_dict() for name, report in reports.items()}
    (out / "report.json").write_text(_json_text(payload), encoding="utf-8")
    table = reconstruction_table(reports)
    (out / "report.txt").write_text(table, encoding="utf-8")
    print(table, end="")
    write_manifest(out, "reconstruct", args, [Path(args.model), Path(args.input)],
                   ["predictions.jsonl", "report.json", "report.txt"])
    return 0


# --------------------------------------------------------------------- parser


def build_parser() -> _Parser:
    parser = _Parser(prog="entgrid", description="Entity-grid coherence models")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    synth = sub.add_parser("synth", help="generate a synthetic corpus")
    synth.add_argument("--output", required=True)
    synth.add_argument("--config", default=None)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--docs-train", type=int, default=0)
    synth.add_argument("--docs-test", type=int, default=0)
    synth.add_argument("--threads-train", type=int, default=0)
    synth.add_argument("--threads-test", type=int, default=0)
    synth.set_defaults(func=cmd_synth)

    grid = sub.add_parser("grid", help="entity grid utilities")
    grid_sub = grid.add_subparsers(dest="grid_command", required=True, parser_class=_Parser)
    gbuild = grid_sub.add_parser("build", help="build TSV grids from documents")
    gbuild.add_argument("--input", required=True)
    gbuild.add_argument("--output", required=True)
    gbuild.add_argument("--sort-entities", action="store_true",
                        help="canonical (alphabetical) entity column order")
    gbuild.set_defaults(func=cmd_grid_build)

    permute = sub.add_parser("permute", help="sample sentence permutations")
    permute.add_argument("--input", required=True)
    permute.add_argument("--output", required=True)
    permute.add_argument("--n", type=int, default=20)
    permute.add_argument("--seed", type=int, default=0)
    permute.add_argument("--kind", choices=("documents", "threads"), default="documents")
    permute.set_defaults(func=cmd_permute)

    train = sub.add_parser("train", help="train a coherence ranker")
    train.add_argument("--input", required=True)
    train.add_argument("--setting", choices=SETTINGS, required=True)
    train.add_argument("--output", required=True)
    train.add_argument("--config", default=None)
    train.add_argument("--seed", type=int, default=None)
    train.add_argument("--runs", type=int, default=1, help="seed-replicate count")
    train.set_defaults(func=cmd_train)

    ev = sub.add_parser("eval", help="evaluate a trained model")
    ev_sub = ev.add_subparsers(dest="eval_command", required=True, parser_class=_Parser)
    disc = ev_sub.add_parser("discriminate", help="original vs shuffled discrimination")
    disc.add_argument("--model", required=True)
    disc.add_argument("--input", required=True)
    disc.add_argument("--setting", choices=SETTINGS, required=True)
    disc.add_argument("--output", required=True)
    disc.add_argument("--config", default=None)
    disc.add_argument("--seed", type=int, default=None)
    disc.add_argument("--workers", type=int, default=1)
    disc.set_defaults(func=cmd_eval_discriminate)
    inv = ev_sub.add_parser("inverse", help="original vs reversed discrimination")
    inv.add_argument("--model", required=True)
    inv.add_argument("--input", required=True)
    inv.add_argument("--setting", choices=SETTINGS, required=True)
    inv.add_argument("--output", required=True)
    inv.add_argument("--workers", type=int, default=1)
    inv.set_defaults(func=cmd_eval_inverse)

    recon = sub.add_parser("reconstruct", help="predict thread reply structure")
    recon.add_argument("--model", required=True)
    recon.add_argument("--input", required=True)
    recon.add_argument("--output", required=True)
    recon.add_argument("--cap", type=int, default=8, help="tree enumeration cap")
    recon.add_argument("--workers", type=int, default=1)
    recon.set_defaults(func=cmd_reconstruct)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=logging.INFO, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s"
    )
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
