"""On-disk formats: corpus directories, JSON artifacts and CSV tables.

A corpus directory holds ``decisions.jsonl``, ``annotators.jsonl``, an
optional ``truths.jsonl``, a ``manifest.json`` and, for simulated corpora,
a ``sim_truth.json`` sidecar. Times are integer milliseconds on disk and
seconds in memory.
"""

from __future__ import annotations

import contextlib
import csv
import io
import json
import logging
import math
import os
import shutil
import tempfile
from dataclasses import asdict
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .core import AnnotationCorpus, AnnotatorMeta, Decision, SummaryStats
from .errors import ParseError
from .features import SLOTS, FeatureMatrix
from .harness import AblationRow, EvalReport
from .simulator import SimTruth

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
NA = "NA"

DECISIONS_FILE = "decisions.jsonl"
ANNOTATORS_FILE = "annotators.jsonl"
TRUTHS_FILE = "truths.jsonl"
MANIFEST_FILE = "manifest.json"
SIM_TRUTH_FILE = "sim_truth.json"

DECISION_FIELDS = ("annotator_id", "domain", "sample_id", "label", "confidence",
                   "decision_time_ms", "position")
ANNOTATOR_FIELDS = ("annotator_id", "riddle_score", "total_session_time_ms", "session_length")
TRUTH_FIELDS = ("domain", "sample_id", "truth")


# ---------------------------------------------------------------- JSON helpers


def to_jsonable(obj):
    """Plain JSON types; NaN and infinities become null."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path: str | Path, obj) -> None:
    Path(path).write_text(dumps(obj), encoding="utf-8")


def read_json(path: str | Path):
    path = Path(path)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ParseError("file not found", path, 0) from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", path, exc.lineno) from None


def _jsonl_lines(records: Iterable[dict]) -> str:
    return "".join(json.dumps(r, sort_keys=False, allow_nan=False) + "\n" for r in records)


def _read_jsonl(path: Path) -> Iterator[tuple[int, dict]]:
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", path, lineno) from None
            if not isinstance(obj, dict):
                raise ParseError("record is not a JSON object", path, lineno)
            yield lineno, obj


# ---------------------------------------------------------------- records


def _check_fields(obj: dict, expected: Sequence[str], required: Sequence[str], strict: bool,
                  path, lineno, warnings: list[str]) -> None:
    missing = [f for f in required if f not in obj]
    if missing:
        raise ParseError(f"missing field(s) {missing}", path, lineno)
    unknown = sorted(set(obj) - set(expected))
    if unknown:
        msg = f"unknown field(s) {unknown}"
        if strict:
            raise ParseError(msg, path, lineno)
        warnings.append(f"{path}:{lineno}: {msg} ignored")


def _string(obj, name, path, lineno) -> str:
    v = obj[name]
    if not isinstance(v, str):
        raise ParseError(f"{name} must be a string, got {v!r}", path, lineno)
    return v


def _integer(obj, name, path, lineno) -> int:
    v = obj[name]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ParseError(f"{name} must be an integer, got {v!r}", path, lineno)
    return v


def _number(obj, name, path, lineno) -> float:
    v = obj[name]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ParseError(f"{name} must be a number, got {v!r}", path, lineno)
    return float(v)


def decision_to_record(d: Decision) -> dict:
    return {"annotator_id": d.annotator_id, "domain": d.domain, "sample_id": d.sample_id,
            "label": int(d.label), "confidence": float(d.confidence),
            "decision_time_ms": int(round(d.decision_time * 1000.0)), "position": int(d.position)}


def decision_from_record(obj: dict, strict: bool = False, path=None, lineno: int | None = None,
                         warnings: list[str] | None = None) -> Decision:
    """Parse one wire record. Ranges are left to ``validate_corpus``; types are not."""
    warnings = [] if warnings is None else warnings
    _check_fields(obj, DECISION_FIELDS, DECISION_FIELDS, strict, path, lineno, warnings)
    return Decision(
        annotator_id=_string(obj, "annotator_id", path, lineno),
        domain=_string(obj, "domain", path, lineno),
        sample_id=_string(obj, "sample_id", path, lineno),
        label=_integer(obj, "label", path, lineno),
        confidence=_number(obj, "confidence", path, lineno),
        decision_time=_integer(obj, "decision_time_ms", path, lineno) / 1000.0,
        position=_integer(obj, "position", path, lineno),
    )


def annotator_to_record(m: AnnotatorMeta) -> dict:
    return {"annotator_id": m.annotator_id, "riddle_score": float(m.riddle_score),
            "total_session_time_ms": int(round(m.total_session_time * 1000.0)),
            "session_length": m.session_length}


def annotator_from_record(obj: dict, strict: bool = False, path=None, lineno=None,
                          warnings: list[str] | None = None) -> AnnotatorMeta:
    warnings = [] if warnings is None else warnings
    _check_fields(obj, ANNOTATOR_FIELDS, ANNOTATOR_FIELDS[:3], strict, path, lineno, warnings)
    length = obj.get("session_length")
    if length is not None:
        length = _integer(obj, "session_length", path, lineno)
    return AnnotatorMeta(
        annotator_id=_string(obj, "annotator_id", path, lineno),
        riddle_score=_number(obj, "riddle_score", path, lineno),
        total_session_time=_integer(obj, "total_session_time_ms", path, lineno) / 1000.0,
        session_length=length,
    )


# ---------------------------------------------------------------- corpus directories


def write_corpus(corpus: AnnotationCorpus, directory: str | Path,
                 sim_truth: SimTruth | None = None) -> Path:
    """Write ``corpus`` (and an optional simulator sidecar) into ``directory``."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    (out / DECISIONS_FILE).write_text(
        _jsonl_lines(decision_to_record(d) for d in corpus.decisions), encoding="utf-8")
    (out / ANNOTATORS_FILE).write_text(
        _jsonl_lines(annotator_to_record(corpus.annotators[a]) for a in sorted(corpus.annotators)),
        encoding="utf-8")
    files = [DECISIONS_FILE, ANNOTATORS_FILE]
    if corpus.truths is not None:
        rows = ({"domain": k[0], "sample_id": k[1], "truth": int(v)}
                for k, v in sorted(corpus.truths.items()))
        (out / TRUTHS_FILE).write_text(_jsonl_lines(rows), encoding="utf-8")
        files.append(TRUTHS_FILE)
    if sim_truth is not None:
        write_json(out / SIM_TRUTH_FILE, sim_truth.to_dict())
        files.append(SIM_TRUTH_FILE)
    write_json(out / MANIFEST_FILE, {
        "format_version": FORMAT_VERSION, "kind": "corpus", "files": files,
        "decisions": len(corpus), "annotators": len(corpus.annotators),
        "truths": None if corpus.truths is None else len(corpus.truths)})
    return out


def read_corpus(path: str | Path, strict: bool = False,
                warnings: list[str] | None = None) -> AnnotationCorpus:
    """Load a corpus directory, or a bare ``decisions.jsonl`` with its siblings.

    Unknown fields raise ParseError under ``strict``; otherwise they are
    collected into ``warnings`` and logged.
    """
    warnings = [] if warnings is None else warnings
    path = Path(path)
    directory = path if path.is_dir() else path.parent
    decisions_path = path if path.is_file() else directory / DECISIONS_FILE
    if not decisions_path.exists():
        raise ParseError(f"no {DECISIONS_FILE} found", decisions_path, 0)
    manifest = directory / MANIFEST_FILE
    if manifest.exists():
        version = read_json(manifest).get("format_version")
        if version != FORMAT_VERSION:
            raise ParseError(f"unsupported format_version {version!r}", manifest, 1)

    decisions = [decision_from_record(obj, strict, decisions_path, n, warnings)
                 for n, obj in _read_jsonl(decisions_path)]
    annotators = {}
    ann_path = directory / ANNOTATORS_FILE
    if ann_path.exists():
        for n, obj in _read_jsonl(ann_path):
            meta = annotator_from_record(obj, strict, ann_path, n, warnings)
            if meta.annotator_id in annotators:
                raise ParseError(f"duplicate annotator {meta.annotator_id!r}", ann_path, n)
            annotators[meta.annotator_id] = meta
    truths = None
    truth_path = directory / TRUTHS_FILE
    if truth_path.exists():
        truths = {}
        for n, obj in _read_jsonl(truth_path):
            _check_fields(obj, TRUTH_FIELDS, TRUTH_FIELDS, strict, truth_path, n, warnings)
            key = (_string(obj, "domain", truth_path, n), _string(obj, "sample_id", truth_path, n))
            if key in truths:
                raise ParseError(f"duplicate truth for {key[0]}/{key[1]}", truth_path, n)
            truths[key] = _integer(obj, "truth", truth_path, n)
    for w in warnings:
        log.warning(w)
    return AnnotationCorpus(decisions, annotators, truths)


def read_sim_truth(path: str | Path) -> SimTruth | None:
    """The simulator sidecar next to a corpus, or None if there is none."""
    path = Path(path)
    sidecar = (path if path.is_dir() else path.parent) / SIM_TRUTH_FILE
    if not sidecar.exists():
        return None
    d = read_json(sidecar)
    if d.get("format_version") != FORMAT_VERSION:
        raise ParseError(f"unsupported format_version {d.get('format_version')!r}", sidecar, 1)
    return SimTruth.from_dict(d)


# ---------------------------------------------------------------- atomic output


@contextlib.contextmanager
def atomic_directory(target: str | Path) -> Iterator[Path]:
    """Yield a scratch directory that replaces ``target`` only on success."""
    target = Path(target).resolve()
    target.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{target.name}.tmp-", dir=target.parent))
    try:
        yield tmp
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    old = None
    if target.exists():
        old = target.with_name(f".{target.name}.old-{os.getpid()}")
        os.replace(target, old)
    os.replace(tmp, target)
    if old is not None:
        shutil.rmtree(old, ignore_errors=True)


# ---------------------------------------------------------------- CSV tables


def _fmt(v) -> str:
    if v is None:
        return NA
    if isinstance(v, (float, np.floating)):
        return NA if math.isnan(v) else repr(float(v))
    return str(v)


def _csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    Path(path).write_text(_csv_text(header, rows), encoding="utf-8")


def features_csv(corpus: AnnotationCorpus, features: FeatureMatrix) -> str:
    header = ("annotator_id", "domain", "sample_id", *SLOTS)
    rows = ((d.annotator_id, d.domain, d.sample_id, *features.values[i].tolist())
            for i, d in enumerate(corpus.decisions))
    return _csv_text(header, rows)


def settings_csv(report: EvalReport) -> str:
    """One row per setting: the aggregated table."""
    return _csv_text(("setting", "baseline", "humanal", "improvement_pct", "domains"),
                     ((s.setting, s.baseline, s.humanal, s.improvement_pct, s.domains)
                      for s in report.settings))


def domains_csv(report: EvalReport) -> str:
    """One row per (setting, domain): the per-domain bars."""
    return _csv_text(("setting", "domain", "baseline", "humanal", "improvement_pct", "oracle",
                      "runs", "skipped"),
                     ((c.setting, c.domain, c.baseline, c.humanal, c.improvement_pct, c.oracle,
                       c.runs, c.skipped) for c in report.cells))


def runs_csv(report: EvalReport) -> str:
    cols = ("setting", "domain", "run", "split_seed", "model_seed", "mask", "baseline", "humanal",
            "oracle", "model_kind", "n_train", "n_test", "error")
    return _csv_text(cols, ([asdict(r)[c] for c in cols] for r in report.run_results))


def ablation_csv(rows: Sequence[AblationRow]) -> str:
    return _csv_text(("mode", "feature_set", "mask", "baseline", "accuracy", "improvement_pct"),
                     ((r.mode, r.feature_set, r.mask, r.baseline, r.accuracy, r.improvement_pct)
                      for r in rows))


# ---------------------------------------------------------------- stats


def stats_dict(stats: SummaryStats) -> dict:
    return {"format_version": FORMAT_VERSION, **stats.to_dict()}


def confidence_buckets(corpus: AnnotationCorpus, n_buckets: int = 10) -> list[dict]:
    """Mean normalized decision time per reported-confidence bucket.

    Buckets split [0, 1] into ``n_buckets`` equal-width bins (the last one
    closed). Times are divided by the mean time of the group, so 1.0 means
    "average speed". Rows are emitted per domain and for ``ALL``.
    """
    t, c = corpus.times, corpus.confidences
    dom = np.array([d.domain for d in corpus.decisions], dtype=object)
    rows = []
    groups = [(name, dom == name) for name in sorted(corpus.domains)]
    groups.append(("ALL", np.ones(len(corpus), dtype=bool)))
    for name, sel in groups:
        tg, cg = t[sel], c[sel]
        if len(tg) == 0:
            continue
        norm = tg / tg.mean()
        bucket = np.minimum((cg * n_buckets).astype(np.int64), n_buckets - 1)
        for b in range(n_buckets):
            hit = bucket == b
            rows.append({"domain": name, "bucket": b, "conf_low": b / n_buckets,
                         "conf_high": (b + 1) / n_buckets, "count": int(hit.sum()),
                         "mean_normalized_time": float(norm[hit].mean()) if hit.any() else None})
    return rows


def buckets_csv(rows: Sequence[dict]) -> str:
    cols = ("domain", "bucket", "conf_low", "conf_high", "count", "mean_normalized_time")
    return _csv_text(cols, ([r[c] for c in cols] for r in rows))
