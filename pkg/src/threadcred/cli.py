"""Command-line pipeline: threads, labels, stance, features, selection, transfer.

Exit codes: 0 success, 1 completed with lenient-mode skips, 2 fatal error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

from threadcred import align, features, ingest, select, stance

log = logging.getLogger("threadcred")

EXIT_OK, EXIT_DEGRADED, EXIT_FATAL = 0, 1, 2

# keys accepted in a --config file and their types
CONFIG_KEYS = {"seed": int, "jobs": int, "repeats": int, "folds": int, "trees": int,
               "strict": lambda v: v.strip().lower() in ("1", "true", "yes", "on")}
DEFAULTS = {"jobs": 1, "folds": 10, "strict": True}


class CliError(Exception):
    """Fatal error reported on standard error with exit code 2."""


def read_config(path) -> dict:
    """Parse a ``key = value`` file; ``#`` starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise CliError(f"{path}: line {line_no}: expected key=value")
            key, value = (part.strip() for part in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in CONFIG_KEYS:
                raise CliError(f"{path}: line {line_no}: unknown key {key!r}")
            try:
                out[key] = CONFIG_KEYS[key](value)
            except ValueError:
                raise CliError(f"{path}: line {line_no}: bad value for {key}") from None
    return out


def setting(args, key, default=None):
    """Flag value, else config-file value, else ``default``."""
    val = getattr(args, key, None)
    if val is not None:
        return val
    return args.file_config.get(key, DEFAULTS.get(key, default))


def require_seed(args) -> int:
    seed = setting(args, "seed")
    if seed is None:
        raise CliError(f"{args.command} is stochastic: pass --seed or set seed in --config")
    return seed


def write_json(doc, path) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text, encoding="utf-8")


def write_text(text: str, path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(text, encoding="utf-8")


# --- subcommands -------------------------------------------------------------


def cmd_build_threads(args) -> int:
    strict = setting(args, "strict")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    skipped = 0
    entries = []
    summary = {"mode": args.mode, "threads": 0, "dropped_orphans": 0, "discarded_events": [],
               "skipped_lines": 0}

    def emit(tree: ingest.ThreadTree, event_id: str | None = None):
        path = out_dir / f"{tree.id}.jsonl"
        ingest.write_tweets(tree.records(), path)
        entries.append(ingest.ManifestEntry(Path(path.name), args.label, event_id))
        summary["threads"] += 1

    if args.mode == "reply-tree":
        records = []
        for p in args.tweets:
            res = ingest.read_tweets(p, strict=strict)
            skipped += res.skipped
            records.extend(res.records)
        trees = ingest.build_threads(records)
        for tree in trees:
            emit(tree)
        summary["dropped_orphans"] = trees.dropped_orphans
    else:
        # each input file holds one event's flat tweet set
        for p in args.tweets:
            res = ingest.read_tweets(p, strict=strict)
            skipped += res.skipped
            event_id = Path(p).stem
            tree = align.root_event(res.records)
            if tree is None:
                summary["discarded_events"].append(event_id)
                log.info("event %s has no reactions; discarded", event_id)
                continue
            summary["dropped_orphans"] += tree.dropped_orphans
            emit(tree, event_id)

    summary["skipped_lines"] = skipped
    entries.sort(key=lambda e: str(e.path))
    manifest = ingest.DatasetManifest(args.name or out_dir.name, args.source_kind, entries)
    manifest.save(out_dir / "manifest.json")
    write_json(summary, args.summary)
    return EXIT_DEGRADED if skipped else EXIT_OK


def cmd_label_credbank(args) -> int:
    ratings = align.read_ratings(args.ratings)
    if not ratings:
        raise CliError(f"{args.ratings}: no rating vectors")
    if args.quantile is not None:
        thresholds = align.compute_thresholds([r.mean for r in ratings], args.quantile)
    else:
        thresholds = align.LabelThresholds(
            args.low if args.low is not None else align.DEFAULT_LOW,
            args.high if args.high is not None else align.DEFAULT_HIGH,
        )
    by_event = {r.event_id: r for r in ratings}
    if args.manifest:
        base = ingest.load_manifest(args.manifest, labels=None, check_paths=False)
        targets = [(e.event_id or e.path.stem, e.path) for e in base.threads]
        name = base.name
    else:
        targets = [(r.event_id, Path(f"{r.event_id}.jsonl")) for r in ratings]
        name = Path(args.ratings).stem
    out_path = Path(args.out)
    counts = {align.ACCURATE: 0, align.INACCURATE: 0, align.UNLABELED: 0}
    entries = []
    for event_id, path in targets:
        if event_id not in by_event:
            raise CliError(f"no ratings for event {event_id!r}")
        label = align.label_by_mean(by_event[event_id], thresholds)
        counts[label] += 1
        if args.manifest:
            path = Path(os.path.relpath(path.resolve(), out_path.parent.resolve()))
        entries.append(ingest.ManifestEntry(path, label, event_id))
    out_path.parent.mkdir(parents=True, exist_ok=True)
    ingest.DatasetManifest(name, "credbank-like", entries).save(out_path)
    print(f"thresholds low={thresholds.low:.4g} high={thresholds.high:.4g}")
    print(" ".join(f"{k}={v}" for k, v in counts.items()))
    return EXIT_OK


def cmd_train_stance(args) -> int:
    seed = require_seed(args)
    corpus = stance.read_corpus(args.corpus) if args.corpus else stance.bundled_corpus()
    config = stance.StanceConfig(hash_bits=args.hash_bits, epochs=args.epochs, seed=seed)
    if args.cv:
        aucs = stance.cross_validate(corpus, config, folds=args.cv)
        print(f"cv_auc={sum(aucs) / len(aucs):.6f}")
    model = stance.train_stance(corpus, config)
    model.save(args.out)
    return EXIT_OK


def _load_threads(manifest_path, strict: bool):
    """Yield (entry, tree, skipped_lines) for a labelled manifest."""
    manifest = ingest.load_manifest(manifest_path, labels=None)
    if any(e.label not in ingest.LABELS for e in manifest.threads):
        unified = align.unify_labels(manifest)
        for entry, reason in unified.excluded:
            log.info("excluding %s: %s", entry.path, reason)
        manifest = unified.manifest
    for entry in manifest.threads:
        res = ingest.read_tweets(entry.path, strict=strict)
        trees = ingest.build_threads(res.records)
        if len(trees) != 1:
            raise CliError(f"{entry.path}: expected exactly one thread root, found {len(trees)}")
        yield entry, trees[0], res.skipped


def cmd_apply_stance(args) -> int:
    model = stance.StanceModel.load(args.model)
    flags, skipped = {}, 0
    for _, tree, sk in _load_threads(args.manifest, setting(args, "strict")):
        skipped += sk
        flags[tree.id] = features.model_flags(tree, model)
    write_json(flags, args.out)
    return EXIT_DEGRADED if skipped else EXIT_OK


def cmd_featurize(args) -> int:
    strict = setting(args, "strict")
    lexicon = features.Lexicon.load(args.lexicon) if args.lexicon else features.default_lexicon()
    model = stance.StanceModel.load(args.stance_model) if args.stance_model else None
    given = json.loads(Path(args.flags).read_text(encoding="utf-8")) if args.flags else None
    threads, flags, labels, skipped = [], [], [], 0
    for entry, tree, sk in _load_threads(args.manifest, strict):
        skipped += sk
        if given is not None:
            if tree.id not in given:
                raise CliError(f"no stance flags for thread {tree.id}")
            f = given[tree.id]
        else:
            f = features.annotation_flags(tree)
            if f is None:
                if model is None:
                    raise CliError(f"thread {tree.id} lacks support annotations; "
                                   "pass --stance-model or --flags")
                f = features.model_flags(tree, model)
        threads.append(tree)
        flags.append(f)
        labels.append(entry.label)
    vectors = features.extract_many(threads, flags, lexicon, labels, jobs=setting(args, "jobs"))
    vectors.sort(key=lambda v: v.thread_id)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    features.write_matrix(vectors, args.out)
    log.info("wrote %d feature vectors to %s", len(vectors), args.out)
    return EXIT_DEGRADED if skipped else EXIT_OK


def _eval_config(args, seed: int, default_repeats: int) -> select.EvalConfig:
    return select.EvalConfig(
        repeats=setting(args, "repeats", default_repeats),
        folds=setting(args, "folds"),
        trees=setting(args, "trees", 100),
        seed=seed,
        jobs=setting(args, "jobs"),
    )


def _subset(path, dataset: select.Dataset) -> list[str]:
    ids = select.load_subset(path) if path else list(dataset.feature_ids)
    missing = [f for f in ids if f not in dataset.feature_ids]
    if missing:
        raise CliError(f"{dataset.name}: unknown features {', '.join(missing)}")
    return ids


def cmd_crossval(args) -> int:
    seed = require_seed(args)
    ds = select.read_dataset(args.matrix)
    ids = _subset(args.features, ds)
    score = select.evaluate_feature_set(ds, ids, _eval_config(args, seed, 30))
    write_json({"dataset": ds.name, "features": ids, "aucs": score.aucs, "mean_auc": score.mean},
               args.out)
    return EXIT_OK


def cmd_rfe(args) -> int:
    seed = require_seed(args)
    ds = select.read_dataset(args.matrix)
    ids = _subset(args.features, ds)
    trace = select.rfe(ds, _eval_config(args, seed, 30), features=ids)
    write_json(trace.to_json(), args.out)
    if args.curve:
        write_text(trace.curve_csv(), args.curve)
    return EXIT_OK


def _transfer_config(args, seed: int) -> select.TransferConfig:
    return select.TransferConfig(repeats=setting(args, "repeats", 20),
                                 trees=setting(args, "trees", 100), seed=seed)


def _emit_result(result: select.TransferResult, model: str, roc_dir: Path) -> dict:
    roc_path = roc_dir / f"roc_{model}.csv"
    write_text(result.roc.to_csv(), roc_path)
    doc = result.to_json()
    doc["model"] = model
    doc["roc_csv"] = roc_path.name
    return doc


def cmd_transfer(args) -> int:
    seed = require_seed(args)
    target = select.read_dataset(args.target)
    sources = [select.read_dataset(p) for p in args.source]
    if len({s.name for s in sources}) != len(sources):
        raise CliError("source matrices must have distinct file names")
    if args.features and len(args.features) not in (1, len(sources)):
        raise CliError("pass one --features file, or one per --source")
    feature_files = args.features or [None]
    if len(feature_files) == 1:
        feature_files = feature_files * len(sources)
    subsets = [_subset(f, s) for f, s in zip(feature_files, sources)]
    for subset in subsets:
        missing = [f for f in subset if f not in target.feature_ids]
        if missing:
            raise CliError(f"target lacks features {', '.join(missing)}")
    config = _transfer_config(args, seed)
    roc_dir = Path(args.out).parent
    models = []
    for src, subset in zip(sources, subsets):
        models.append(_emit_result(select.transfer(src, target, subset, config),
                                   f"source_{src.name}", roc_dir))
    if len(sources) >= 2:
        models.append(_emit_result(select.pooled_transfer(list(zip(sources, subsets)), target,
                                                          config), "pooled", roc_dir))
    if not args.no_baseline:
        models.append(_emit_result(select.random_baseline(target, seed, config.repeats),
                                   "baseline", roc_dir))
    write_json({"target": target.name, "config": vars_config(config), "models": models}, args.out)
    return EXIT_OK


def vars_config(config) -> dict:
    return {k: getattr(config, k) for k in config.__dataclass_fields__}


def cmd_baseline(args) -> int:
    seed = require_seed(args)
    target = select.read_dataset(args.target)
    result = select.random_baseline(target, seed, setting(args, "repeats", 20))
    doc = _emit_result(result, "baseline", Path(args.out).parent)
    write_json(doc, args.out)
    return EXIT_OK


def _read_roc(path: Path) -> list[tuple[str, str]]:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows or rows[0][:2] != ["fpr", "tpr"]:
        raise CliError(f"{path}: not a ROC CSV")
    return [(r[0], r[1]) for r in rows[1:]]


def cmd_report(args) -> int:
    series: list[tuple[str, Path]] = []
    for raw in args.inputs:
        p = Path(raw)
        if p.suffix == ".json":
            doc = json.loads(p.read_text(encoding="utf-8"))
            models = doc["models"] if "models" in doc else [doc]
            for m in models:
                series.append((m["model"], p.parent / m["roc_csv"]))
        else:
            name = p.stem[4:] if p.stem.startswith("roc_") else p.stem
            series.append((name, p))
    lines = ["model,fpr,tpr"]
    for name, path in series:
        lines.extend(f"{name},{fpr},{tpr}" for fpr, tpr in _read_roc(path))
    text = "\n".join(lines) + "\n"
    if args.out:
        write_text(text, args.out)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# --- parser ------------------------------------------------------------------


def _globals_parser(suppress: bool) -> argparse.ArgumentParser:
    # shared by the top level and every subcommand so flags work in either position
    default = argparse.SUPPRESS if suppress else None
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=default, help="master seed")
    g.add_argument("--jobs", type=int, default=default, help="worker processes")
    g.add_argument("--config", default=default, help="key=value settings file")
    g.add_argument("--strict", dest="strict", action="store_true", default=default,
                   help="abort on the first malformed input line (default)")
    g.add_argument("--lenient", dest="strict", action="store_false", default=default,
                   help="skip malformed lines and exit 1")
    g.add_argument("--log-level", choices=("error", "warn", "info"), default=default)
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="threadcred", description=__doc__.splitlines()[0],
                                     parents=[_globals_parser(False)])
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    common = [_globals_parser(True)]

    def add(name, fn, help_text):
        sp = sub.add_parser(name, parents=common, help=help_text, description=help_text)
        sp.set_defaults(func=fn)
        return sp

    def eval_flags(sp):
        sp.add_argument("--repeats", type=int)
        sp.add_argument("--trees", type=int)

    sp = add("build-threads", cmd_build_threads, "reconstruct thread files from tweet JSONL")
    sp.add_argument("tweets", nargs="+", help="tweet JSONL file(s); one event per file in root-event mode")
    sp.add_argument("--mode", choices=("reply-tree", "root-event"), default="reply-tree")
    sp.add_argument("--out", required=True, help="output directory")
    sp.add_argument("--label", default="unlabeled", help="label for the written manifest")
    sp.add_argument("--source-kind", choices=ingest.SOURCE_KINDS, default="pheme-like")
    sp.add_argument("--name", help="dataset name (default: output directory name)")
    sp.add_argument("--summary", help="summary JSON path (default: stdout)")

    sp = add("label-credbank", cmd_label_credbank, "label events from crowd rating vectors")
    sp.add_argument("ratings")
    sp.add_argument("--manifest", help="manifest whose entries to label (by event_id)")
    sp.add_argument("--out", required=True, help="labelled manifest path")
    sp.add_argument("--low", type=float)
    sp.add_argument("--high", type=float)
    sp.add_argument("--quantile", type=float, help="derive thresholds from this tail quantile")

    sp = add("train-stance", cmd_train_stance, "train the disagreement classifier")
    sp.add_argument("--corpus", help="labelled JSONL corpus (default: bundled synthetic)")
    sp.add_argument("--out", required=True)
    sp.add_argument("--epochs", type=int, default=10)
    sp.add_argument("--hash-bits", type=int, default=18)
    sp.add_argument("--cv", type=int, metavar="K", help="also report K-fold CV AUC")

    sp = add("apply-stance", cmd_apply_stance, "write per-reply disagreement flags")
    sp.add_argument("--model", required=True)
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--out", required=True)

    sp = add("featurize", cmd_featurize, "write the 45-feature matrix CSV")
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--stance-model", help="used for threads without support annotations")
    sp.add_argument("--flags", help="flags JSON from apply-stance")
    sp.add_argument("--lexicon", help="sentiment lexicon TSV (default: bundled)")

    sp = add("crossval", cmd_crossval, "repeated stratified k-fold forest AUC")
    sp.add_argument("--matrix", required=True)
    sp.add_argument("--features", help="feature subset JSON (default: all columns)")
    sp.add_argument("--folds", type=int)
    sp.add_argument("--out", help="result JSON (default: stdout)")
    eval_flags(sp)

    sp = add("rfe", cmd_rfe, "leave-one-out recursive feature elimination")
    sp.add_argument("--matrix", required=True)
    sp.add_argument("--features", help="starting feature subset JSON (default: all columns)")
    sp.add_argument("--folds", type=int)
    sp.add_argument("--out", required=True, help="trace JSON")
    sp.add_argument("--curve", help="iteration/best-AUC CSV")
    eval_flags(sp)

    sp = add("transfer", cmd_transfer, "train on source matrices, score the target")
    sp.add_argument("--source", action="append", required=True)
    sp.add_argument("--target", required=True)
    sp.add_argument("--features", action="append",
                    help="subset JSON; once for all sources or once per source")
    sp.add_argument("--out", required=True, help="result JSON; ROC CSVs go beside it")
    sp.add_argument("--no-baseline", action="store_true")
    eval_flags(sp)

    sp = add("baseline", cmd_baseline, "coin-toss baseline on the target")
    sp.add_argument("--target", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--repeats", type=int)

    sp = add("report", cmd_report, "combine ROC series into one model,fpr,tpr CSV")
    sp.add_argument("inputs", nargs="+", help="transfer/baseline JSON or ROC CSV files")
    sp.add_argument("--out", help="combined CSV (default: stdout)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO}
    logging.basicConfig(level=level[args.log_level or "warn"], stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.file_config = read_config(args.config) if args.config else {}
        return args.func(args)
    except ingest.ParseError as exc:
        message = f"parse error: {exc}"
    except (CliError, OSError, ValueError, KeyError) as exc:
        message = str(exc)
    print(f"threadcred: error: {message}", file=sys.stderr)
    return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
