"""``humanal`` command-line entry point.

Every command resolves its configuration (file, then flags), writes its
outputs into ``--out`` atomically and echoes the effective configuration
there. Failures print a JSON object to stderr and exit nonzero:
1 = corpus failed validation, 2 = bad configuration or usage,
3 = unreadable or unusable data, 4 = internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import secrets
import sys
from dataclasses import asdict
from pathlib import Path

from . import formats
from .config import RunConfig, effective_config, load_config, with_overrides
from .core import AnnotationCorpus, corpus_stats, validate_corpus
from .errors import ConfigError, HumanALError
from .features import featurize_corpus
from .harness import SplitSetting, ablation, run_experiment, summarize
from .pipeline import calibrate
from .simulator import SimTruth, generate_corpus, verify_targets
from .zoo import model_to_dict

EXIT_INVALID, EXIT_CONFIG, EXIT_DATA, EXIT_INTERNAL = 1, 2, 3, 4


_SEEDED = ("simulate", "calibrate", "evaluate", "ablate")


class _Usage(ConfigError):
    pass


# ---------------------------------------------------------------- helpers


def _resolve(args) -> RunConfig:
    config = load_config(args.config)
    over = {"seed": args.seed, "out": args.out}
    if getattr(args, "strict", False):
        over["strict"] = True
    for name in ("runs", "mask", "corpus", "train", "test"):
        over[name] = getattr(args, name, None)
    setting = getattr(args, "setting", None)
    if setting is not None:
        key = "ablation_setting" if args.command == "ablate" else "settings"
        over[key] = setting if key == "ablation_setting" else tuple(setting.split(","))
    if getattr(args, "mode", None) is not None:
        over["ablation_mode"] = args.mode
    config = with_overrides(config, **over)
    if config.seed is None and args.command in _SEEDED:
        config = with_overrides(config, seed=secrets.randbelow(2**31))
        logging.getLogger("humanal").warning("no --seed given; using random seed %d", config.seed)
    return config.validate()


def _require_out(config: RunConfig) -> Path:
    if not config.out:
        raise _Usage("--out DIR is required for this command")
    return Path(config.out)


def _load(path: str, config: RunConfig) -> AnnotationCorpus:
    return formats.read_corpus(path, strict=config.strict)


def _corpus_and_truth(config: RunConfig) -> tuple[AnnotationCorpus, SimTruth | None]:
    if config.corpus:
        return _load(config.corpus, config), formats.read_sim_truth(config.corpus)
    return generate_corpus(config.sim_config, config.seed)


def _emit(obj) -> None:
    sys.stdout.write(formats.dumps(obj))


# ---------------------------------------------------------------- commands


def cmd_simulate(config: RunConfig) -> int:
    out = _require_out(config)
    corpus, truth = generate_corpus(config.sim_config, config.seed)
    report = verify_targets(corpus, config.sim_config.targets)
    with formats.atomic_directory(out) as tmp:
        formats.write_corpus(corpus, tmp, truth)
        formats.write_json(tmp / "config.json", effective_config(config))
        formats.write_json(tmp / "targets.json", {"format_version": 1, **report.to_dict()})
    _emit({"out": str(out), "seed": config.seed, "decisions": len(corpus),
           "annotators": len(corpus.annotators), "targets_passed": report.passed})
    return 0


def cmd_validate(config: RunConfig, paths: list[str]) -> int:
    results = []
    for p in paths:
        warnings: list[str] = []
        corpus = formats.read_corpus(p, strict=config.strict, warnings=warnings)
        violations = validate_corpus(corpus)
        results.append({"path": p, "decisions": len(corpus), "annotators": len(corpus.annotators),
                        "clean": not violations, "warnings": warnings,
                        "violations": [{"kind": v.kind, "record": v.record, "message": v.message}
                                       for v in violations]})
    report = {"format_version": 1, "clean": all(r["clean"] for r in results), "corpora": results}
    if config.out:
        with formats.atomic_directory(config.out) as tmp:
            formats.write_json(tmp / "validation.json", report)
    _emit(report)
    return 0 if report["clean"] else EXIT_INVALID


def cmd_featurize(config: RunConfig, path: str) -> int:
    corpus = _load(path, config)
    text = formats.features_csv(corpus, featurize_corpus(corpus, config.feature_mask))
    if not config.out:
        sys.stdout.write(text)
        return 0
    with formats.atomic_directory(config.out) as tmp:
        (tmp / "features.csv").write_text(text, encoding="utf-8")
        formats.write_json(tmp / "config.json", effective_config(config))
    return 0


def cmd_calibrate(config: RunConfig) -> int:
    out = _require_out(config)
    if not (config.train and config.test):
        raise _Usage("calibrate needs --train and --test corpus paths")
    train, test = _load(config.train, config), _load(config.test, config)
    run = calibrate(train, test, config.feature_mask, config.specs, config.seed, config.folds,
                    config.selection)
    records = [{"annotator_id": d.annotator_id, "domain": d.domain, "sample_id": d.sample_id,
                "original_label": int(d.label), "humanal_label": int(p), "model_kind": run.model_kind}
               for d, p in zip(test.decisions, run.predictions)]
    with formats.atomic_directory(out) as tmp:
        (tmp / "labels.jsonl").write_text("".join(json.dumps(r) + "\n" for r in records),
                                          encoding="utf-8")
        formats.write_json(tmp / "model.json", model_to_dict(run.model))
        selection = None if run.selection is None else run.selection.to_dict()
        formats.write_json(tmp / "selection.json", {"format_version": 1, "selection": selection,
                                                    "fallback": run.fallback, "seed": run.seed})
        formats.write_json(tmp / "config.json", effective_config(config))
    _emit({"out": str(out), "seed": config.seed, "decisions": len(records),
           "model_kind": run.model_kind, "fallback": run.fallback})
    return 0


def cmd_evaluate(config: RunConfig) -> int:
    out = _require_out(config)
    corpus, truth = _corpus_and_truth(config)
    report = run_experiment(corpus, config.split_settings, config.runs, config.specs,
                            config.feature_mask, config.seed, sim_truth=truth,
                            train_frac=config.train_frac, folds=config.folds,
                            selection=config.selection, vary_split=config.vary_split,
                            vary_model_seed=config.vary_model_seed, workers=config.workers)
    with formats.atomic_directory(out) as tmp:
        formats.write_json(tmp / "report.json", report.to_dict())
        (tmp / "settings.csv").write_text(formats.settings_csv(report), encoding="utf-8")
        (tmp / "domains.csv").write_text(formats.domains_csv(report), encoding="utf-8")
        (tmp / "runs.csv").write_text(formats.runs_csv(report), encoding="utf-8")
        formats.write_json(tmp / "config.json", effective_config(config))
    print(summarize(report))
    return 0


def cmd_ablate(config: RunConfig) -> int:
    out = _require_out(config)
    corpus, truth = _corpus_and_truth(config)
    (setting,) = SplitSetting.parse(config.ablation_setting)
    rows = ablation(corpus, config.ablation_mode, setting, config.runs, config.specs, config.seed,
                    sim_truth=truth, train_frac=config.train_frac, folds=config.folds,
                    selection=config.selection, vary_split=config.vary_split,
                    vary_model_seed=config.vary_model_seed, workers=config.workers)
    with formats.atomic_directory(out) as tmp:
        (tmp / "ablation.csv").write_text(formats.ablation_csv(rows), encoding="utf-8")
        formats.write_json(tmp / "ablation.json", {
            "format_version": 1, "mode": config.ablation_mode, "setting": setting.name,
            "runs": config.runs, "seed": config.seed, "rows": [asdict(r) for r in rows]})
        formats.write_json(tmp / "config.json", effective_config(config))
    sys.stdout.write(formats.ablation_csv(rows))
    return 0


def cmd_stats(config: RunConfig, path: str) -> int:
    corpus = _load(path, config)
    stats = formats.stats_dict(corpus_stats(corpus))
    if config.out:
        with formats.atomic_directory(config.out) as tmp:
            formats.write_json(tmp / "stats.json", stats)
            (tmp / "buckets.csv").write_text(
                formats.buckets_csv(formats.confidence_buckets(corpus)), encoding="utf-8")
    _emit(stats)
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="YAML or JSON run configuration")
    common.add_argument("--seed", type=int, metavar="N", help="master seed (random and recorded if omitted)")
    common.add_argument("--out", metavar="DIR", help="output directory (replaced atomically)")
    common.add_argument("--strict", action="store_true", help="reject unknown record fields")

    p = argparse.ArgumentParser(prog="humanal", description="Calibrate crowd matching labels "
                                "from annotators' behavioral profiles.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("simulate", parents=[common], help="generate a synthetic corpus")

    v = sub.add_parser("validate", parents=[common], help="check corpus files")
    v.add_argument("paths", nargs="+", metavar="PATH")

    f = sub.add_parser("featurize", parents=[common], help="write the behavioral feature matrix")
    f.add_argument("path", metavar="PATH")
    f.add_argument("--mask", metavar="SET[,SET...]")

    c = sub.add_parser("calibrate", parents=[common], help="train on one corpus, relabel another")
    c.add_argument("--train", metavar="PATH")
    c.add_argument("--test", metavar="PATH")
    c.add_argument("--mask", metavar="SET[,SET...]")

    for name, help_ in (("evaluate", "baseline vs. calibrated accuracy per setting"),
                        ("ablate", "isolate or drop each feature set")):
        e = sub.add_parser(name, parents=[common], help=help_)
        e.add_argument("--corpus", metavar="PATH", help="corpus directory (default: simulate one)")
        e.add_argument("--runs", type=int, metavar="N")
        e.add_argument("--mask", metavar="SET[,SET...]")
        choices = "{v1,v2,v3,v4,all}" if name == "evaluate" else "{v1,v2,v3,v4}"
        e.add_argument("--setting", metavar=choices)
        if name == "ablate":
            e.add_argument("--mode", choices=("isolate", "drop"))

    s = sub.add_parser("stats", parents=[common], help="summary statistics and confidence buckets")
    s.add_argument("path", metavar="PATH")
    return p


def _fail(exc: BaseException, code: int) -> int:
    details = exc.details() if isinstance(exc, HumanALError) else {}
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc),
                                 "details": details, "exit_code": code}, sort_keys=True) + "\n")
    return code


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = _resolve(args)
        if args.command == "simulate":
            return cmd_simulate(config)
        if args.command == "validate":
            return cmd_validate(config, args.paths)
        if args.command == "featurize":
            return cmd_featurize(config, args.path)
        if args.command == "calibrate":
            return cmd_calibrate(config)
        if args.command == "evaluate":
            return cmd_evaluate(config)
        if args.command == "ablate":
            return cmd_ablate(config)
        return cmd_stats(config, args.path)
    except BrokenPipeError:
        # Output piped into e.g. ``head``: not an error.
        sys.stdout = open(os.devnull, "w")
        return 0
    except ConfigError as exc:
        return _fail(exc, EXIT_CONFIG)
    except (HumanALError, ValueError, OSError) as exc:
        return _fail(exc, EXIT_DATA)
    except Exception as exc:  # pragma: no cover - last-resort JSON report
        return _fail(exc, EXIT_INTERNAL)


if __name__ == "__main__":
    sys.exit(main())
