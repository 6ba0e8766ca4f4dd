"""Command-line entry point.

Commands: train, cv, eval, params, moments. Every run is driven by a flat
dotted-key config file plus --set overrides, and every command that
produces files also writes a manifest so the run can be audited and
reproduced. All outputs except the manifest's timestamp are byte-identical
across reruns with the same config and seed.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import scnn
from scnn import checkpoint as ckpt
from scnn import kernels
from scnn import model as M
from scnn import moments as MO
from scnn import rng as R
from scnn import text as TX
# "from scnn import train" would pick up the train() function that the
# package re-exports, not the module, so import the module contents directly.
from scnn.train import evaluate, history_rows, kfold_cv
from scnn.train import train as train_model
from scnn.config import RunConfig, load_config
from scnn.errors import ConfigError, ScnnError
from scnn.layers import DropoutSpec


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_history_csv(path: Path, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["fold", "epoch", "split", "metric", "value"])
        for fold, epoch, split, metric, value in rows:
            writer.writerow([fold, epoch, split, metric, repr(float(value))])


def _manifest(command: str, rc: RunConfig, out_dir: Path, **extra) -> None:
    body = {
        "command": command,
        "config": rc.to_dict(),
        "kernel_backend": kernels.BACKEND,
        "version": scnn.__version__,
        "created": datetime.now(timezone.utc).isoformat(),
    }
    body.update(extra)
    _write_json(out_dir / "manifest.json", body)


def _out_dir(rc: RunConfig) -> Path:
    out = Path(rc.get("output.dir"))
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# Shared data preparation
# ---------------------------------------------------------------------------


def _load_corpus(rc: RunConfig) -> TX.Dataset:
    path = rc.get("dataset.path")
    if path is None:
        raise ConfigError("dataset.path is required")
    return TX.load_dataset(path, rc.get("dataset.layout"))


def _resolve_classes(rc: RunConfig, dataset: TX.Dataset) -> int:
    if rc.is_explicit("model.num_classes"):
        wanted = rc.get("model.num_classes")
        if wanted != dataset.num_classes:
            raise ConfigError(
                f"model.num_classes is {wanted} but the dataset has "
                f"{dataset.num_classes} classes ({', '.join(dataset.class_names)})"
            )
        return wanted
    return dataset.num_classes


def _vocab_for(rc: RunConfig, dataset: TX.Dataset) -> TX.Vocabulary:
    """Vocabulary from the train split when one is predefined, else all text."""
    if dataset.split is not None:
        source = [ex.tokens for ex, s in zip(dataset.examples, dataset.split) if s == "train"]
    else:
        source = [ex.tokens for ex in dataset.examples]
    return TX.build_vocab(source, rc.get("model.vocab_size"))


def _embeddings_for(rc: RunConfig, vocab: TX.Vocabulary, seed: int) -> TX.EmbeddingTable:
    fmt = rc.get("embeddings.format")
    dim = rc.get("embeddings.dim")
    if fmt in ("text", "binary") and not rc.is_explicit("embeddings.dim"):
        dim = None  # let the file declare its dimension
    return TX.make_embeddings(
        fmt, vocab, dim, path=rc.get("embeddings.path"), rng=R.stream(seed, R.EMBED)
    )


def _prepare(rc: RunConfig):
    dataset = _load_corpus(rc)
    num_classes = _resolve_classes(rc, dataset)
    vocab = _vocab_for(rc, dataset)
    seed = rc.get("training.seed")
    table = _embeddings_for(rc, vocab, seed)
    model_cfg = rc.model_config(num_classes, vocab.size, table.dim)
    encoded = TX.encode_dataset(dataset, vocab, model_cfg.max_len)
    return dataset, vocab, table, model_cfg, encoded


def _dataset_stats(dataset: TX.Dataset) -> dict:
    n_train = n_test = None
    if dataset.split is not None:
        n_train = sum(1 for s in dataset.split if s == "train")
        n_test = len(dataset) - n_train
    return {
        "n_examples": len(dataset),
        "n_train": n_train,
        "n_test": n_test,
        "classes": list(dataset.class_names),
    }


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_train(args, rc: RunConfig) -> int:
    dataset, vocab, table, model_cfg, encoded = _prepare(rc)
    out = _out_dir(rc)
    if encoded.split is not None:
        train_enc, test_enc = encoded.train_test()
    else:
        train_enc, test_enc = encoded, None
    train_cfg = rc.train_config()
    params, history = train_model(train_cfg, model_cfg, train_enc, table, val=test_enc)
    vocab_sha = TX.export_vocabulary(vocab, out / "vocab.txt")
    ckpt.save(out / "checkpoint.scnn", params, model_cfg, vocab_sha)
    _write_json(out / "history.json", history)
    _write_history_csv(out / "history.csv", history_rows(history))
    final = evaluate(params, model_cfg, test_enc if test_enc is not None else train_enc)
    metrics_doc = final.to_dict()
    metrics_doc["split"] = "test" if test_enc is not None else "train"
    _write_json(out / "metrics.json", metrics_doc)
    _manifest(
        "train",
        rc,
        out,
        seed=train_cfg.seed,
        vocab_sha256=vocab_sha,
        embedding_coverage=table.coverage,
        dataset=_dataset_stats(dataset),
    )
    print(
        f"trained {model_cfg.variant} on {len(train_enc)} examples "
        f"({train_cfg.epochs} epochs, seed {train_cfg.seed})"
    )
    print(f"{metrics_doc['split']} accuracy {final.accuracy:.4f}, macro-F1 {final.macro_f1:.4f}")
    print(f"outputs in {out}")
    return 0


def cmd_cv(args, rc: RunConfig) -> int:
    dataset, vocab, table, model_cfg, encoded = _prepare(rc)
    if encoded.split is not None and not rc.get("cv.force"):
        raise ConfigError(
            "dataset has a predefined train/test split; use the train command "
            "or set cv.force=true to cross-validate anyway"
        )
    out = _out_dir(rc)
    train_cfg = rc.train_config()
    k = rc.get("cv.k")
    result = kfold_cv(train_cfg, model_cfg, encoded, table, k=k, jobs=args.jobs)
    _write_json(out / "folds.json", result.to_dict())
    rows = []
    for fold_idx, history in enumerate(result.histories):
        rows.extend(history_rows(history, fold=fold_idx))
    _write_history_csv(out / "folds.csv", rows)
    vocab_sha = TX.export_vocabulary(vocab, out / "vocab.txt")
    _manifest(
        "cv",
        rc,
        out,
        seed=train_cfg.seed,
        vocab_sha256=vocab_sha,
        embedding_coverage=table.coverage,
        dataset=_dataset_stats(dataset),
        k=k,
    )
    acc = result.mean["accuracy"]
    std = result.std["accuracy"]
    print(f"{k}-fold CV of {model_cfg.variant} on {len(encoded)} examples (seed {train_cfg.seed})")
    print(f"accuracy {acc:.4f} +/- {std:.4f}, macro-F1 {result.mean['macro_f1']:.4f}")
    print(f"outputs in {out}")
    return 0


def cmd_eval(args, rc: RunConfig) -> int:
    if args.checkpoint is None:
        raise ConfigError("eval requires --checkpoint PATH")
    dataset = _load_corpus(rc)
    vocab = _vocab_for(rc, dataset)
    params, model_cfg, stored_hash = ckpt.load(args.checkpoint, expected_vocab_sha256=vocab.sha256)
    if dataset.num_classes != model_cfg.num_classes:
        raise ConfigError(
            f"checkpoint expects {model_cfg.num_classes} classes but the dataset "
            f"has {dataset.num_classes}"
        )
    encoded = TX.encode_dataset(dataset, vocab, model_cfg.max_len)
    if encoded.split is not None:
        _, encoded = encoded.train_test()
        split = "test"
    else:
        split = "all"
    out = _out_dir(rc)
    metrics = evaluate(params, model_cfg, encoded)
    doc = metrics.to_dict()
    doc["split"] = split
    _write_json(out / "metrics.json", doc)
    _manifest(
        "eval",
        rc,
        out,
        checkpoint=str(args.checkpoint),
        vocab_sha256=stored_hash,
        dataset=_dataset_stats(dataset),
    )
    print(f"evaluated {model_cfg.variant} on {len(encoded)} {split} examples")
    print(f"accuracy {metrics.accuracy:.4f}, macro-F1 {metrics.macro_f1:.4f}")
    print(f"outputs in {out}")
    return 0


def cmd_params(args, rc: RunConfig) -> int:
    embed_dim = rc.get("embeddings.dim")
    override = rc.get("model.filters_per_width")
    rows = []
    for variant in M.VARIANTS:
        cfg = M.ModelConfig(
            variant=variant,
            kernel_widths=rc.get("model.kernel_widths"),
            filters_per_width=override,
            embed_dim=embed_dim,
            max_len=rc.get("model.max_len"),
            vocab_size=rc.get("model.vocab_size"),
            num_classes=rc.get("model.num_classes"),
            trainable_embeddings=rc.get("model.trainable_embeddings"),
        )
        rows.append(
            (
                variant,
                str(cfg.filters_per_width),
                cfg.activation,
                cfg.conv_init,
                f"{M.parameter_count(cfg):,}",
            )
        )
        embedding_params = M.embedding_parameter_count(cfg)
        trainable = cfg.trainable_embeddings
    header = ("variant", "filters", "activation", "init", "params")
    widths = [max(len(row[i]) for row in rows + [header]) for i in range(len(header))]

    def fmt_row(row):
        return "  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip()

    print(fmt_row(header))
    for row in rows:
        print(fmt_row(row))
    state = "trainable, included above" if trainable else "frozen, not counted"
    print(
        f"embedding table: {rc.get('model.vocab_size')} x {embed_dim} = "
        f"{embedding_params:,} ({state})"
    )
    return 0


def cmd_moments(args, rc: RunConfig) -> int:
    out = _out_dir(rc)
    seed = rc.get("training.seed")
    kind = rc.get("moments.dropout_kind")
    if kind == "none":
        dropout = None
    else:
        dropout = DropoutSpec(kind=kind, rate=rc.get("moments.dropout_rate"))
    activations = rc.get("moments.activations")
    reports = []
    for i, activation in enumerate(activations):
        report = MO.propagate(
            depth=rc.get("moments.depth"),
            width=rc.get("moments.width"),
            activation=activation,
            init=rc.get("moments.init"),
            dropout=dropout,
            input_dist=rc.get("moments.input_dist"),
            input_sigma=rc.get("moments.input_sigma"),
            n_samples=rc.get("moments.samples"),
            rng=R.stream(seed, R.MOMENTS, i),
        )
        reports.append(report)
        (out / f"moments_{activation}.csv").write_text(report.to_csv(), encoding="utf-8")
        (out / f"moments_{activation}.json").write_text(report.to_json(), encoding="utf-8")
        first_m, first_v = report.layer(1)
        last_m, last_v = report.layer(report.depth)
        print(
            f"{report.label()}: layer 1 mean {first_m:+.4f} var {first_v:.4f}; "
            f"layer {report.depth} mean {last_m:+.4f} var {last_v:.4f}"
        )
    if len(reports) >= 2:
        rows = MO.compare(reports)
        (out / "moments_comparison.csv").write_text(MO.comparison_csv(rows), encoding="utf-8")
    _manifest("moments", rc, out, seed=seed, activations=list(activations))
    print(f"outputs in {out}")
    return 0


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

_COMMANDS = {
    "train": (cmd_train, "train on the dataset (its predefined split if present)"),
    "cv": (cmd_cv, "k-fold cross-validation"),
    "eval": (cmd_eval, "evaluate a checkpoint on the dataset"),
    "params": (cmd_params, "print parameter counts for every variant"),
    "moments": (cmd_moments, "moment-propagation probes"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="config file of key = value lines")
    common.add_argument("--seed", type=int, metavar="INT", help="override training.seed")
    common.add_argument("--jobs", type=int, default=1, metavar="INT", help="parallel CV folds")
    common.add_argument("--out", metavar="DIR", help="override output.dir")
    common.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override any config key (repeatable)",
    )
    parser = argparse.ArgumentParser(
        prog="scnn",
        description="Self-normalizing convolutional text classification",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name, (_, help_text) in _COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text)
        if name == "eval":
            p.add_argument("--checkpoint", metavar="PATH", help="checkpoint file to evaluate")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        rc = load_config(args.config, args.set)
        if args.seed is not None:
            rc.set("training.seed", str(args.seed))
        if args.out is not None:
            rc.set("output.dir", args.out)
        if args.jobs < 1:
            raise ConfigError(f"--jobs must be >= 1, got {args.jobs}")
        return _COMMANDS[args.command][0](args, rc)
    except (ScnnError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
