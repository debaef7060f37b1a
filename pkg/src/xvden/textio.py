"""Text formats: TSV manifests, report JSON, and plot-data CSVs.

Manifests are headerless UTF-8 TSV with newline line endings; fields must
not contain tabs or newlines.  Report files are versioned JSON with a fixed
key order so identical runs serialize byte-identically.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Sequence

from .archive import write_atomic
from .errors import DataError, EmptyInputError, FormatError
from .evaluation import (
    DURATION_BUCKETS,
    BucketResult,
    EvalReport,
    ScoreSet,
    Trial,
    relative_improvement,
)
from .nnet import TrainHistory

REPORT_SCHEMA_VERSION = 1


def _field(value: str) -> str:
    if "\t" in value or "\n" in value or "\r" in value:
        raise DataError(f"manifest field contains tab/newline: {value!r}")
    return value


def _write_tsv(path: str | Path, rows: Iterable[Sequence[str]]) -> None:
    lines = ["\t".join(_field(col) for col in row) for row in rows]
    payload = "".join(line + "\n" for line in lines)
    write_atomic(path, payload.encode("utf-8"))


def _read_tsv(path: str | Path, n_cols: int, what: str) -> list[list[str]]:
    text = Path(path).read_text(encoding="utf-8")
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line:
            continue
        cols = line.split("\t")
        if len(cols) != n_cols:
            raise FormatError(f"{path}:{lineno}: expected {n_cols} {what} fields, got {len(cols)}")
        rows.append(cols)
    return rows


# -- pair manifest: noisy_key  clean_key  snr_db  noise_id ------------------

def write_pair_keys(pair_keys: Iterable[tuple[str, str, float | None, str | None]], path: str | Path) -> None:
    rows = []
    for noisy_key, clean_key, snr, noise_id in pair_keys:
        rows.append([noisy_key, clean_key, "" if snr is None else repr(float(snr)), noise_id or ""])
    _write_tsv(path, rows)


def read_pair_keys(path: str | Path) -> list[tuple[str, str, float | None, str | None]]:
    out = []
    for noisy_key, clean_key, snr, noise_id in _read_tsv(path, 4, "pair"):
        out.append((noisy_key, clean_key, float(snr) if snr else None, noise_id or None))
    return out


# -- label manifest: key  speaker_id  duration_s ----------------------------

def write_labels(
    speaker_of: dict[str, str], duration_of: dict[str, float], path: str | Path
) -> None:
    rows = []
    for key in speaker_of:
        dur = duration_of.get(key)
        rows.append([key, speaker_of[key], "" if dur is None else repr(float(dur))])
    _write_tsv(path, rows)


def read_labels(path: str | Path) -> tuple[dict[str, str], dict[str, float]]:
    speaker_of: dict[str, str] = {}
    duration_of: dict[str, float] = {}
    for key, speaker, dur in _read_tsv(path, 3, "label"):
        if key in speaker_of:
            raise FormatError(f"{path}: duplicate label for key '{key}'")
        speaker_of[key] = speaker
        if dur:
            duration_of[key] = float(dur)
    return speaker_of, duration_of


# -- trial list: enroll_key  test_key  target|nontarget ---------------------

def _target_word(is_target: bool) -> str:
    return "target" if is_target else "nontarget"


def write_trials(trials: Iterable[Trial], path: str | Path) -> None:
    _write_tsv(path, ([t.enroll_key, t.test_key, _target_word(t.is_target)] for t in trials))


def read_trials(path: str | Path, duration_of: dict[str, float] | None = None) -> list[Trial]:
    trials = []
    for enroll_key, test_key, label in _read_tsv(path, 3, "trial"):
        if label not in ("target", "nontarget"):
            raise FormatError(f"{path}: bad trial label '{label}'")
        dur = duration_of.get(test_key) if duration_of else None
        trials.append(
            Trial(enroll_key=enroll_key, test_key=test_key, is_target=label == "target", test_duration_s=dur)
        )
    return trials


# -- score file: trial columns plus the score -------------------------------

def write_scores(scores: ScoreSet, path: str | Path) -> None:
    rows = [
        [t.enroll_key, t.test_key, _target_word(t.is_target), repr(float(s))]
        for t, s in zip(scores.trials, scores.scores)
    ]
    _write_tsv(path, rows)


def read_scores(path: str | Path, duration_of: dict[str, float] | None = None) -> ScoreSet:
    trials = []
    values = []
    for enroll_key, test_key, label, score in _read_tsv(path, 4, "score"):
        if label not in ("target", "nontarget"):
            raise FormatError(f"{path}: bad trial label '{label}'")
        dur = duration_of.get(test_key) if duration_of else None
        trials.append(
            Trial(enroll_key=enroll_key, test_key=test_key, is_target=label == "target", test_duration_s=dur)
        )
        values.append(float(score))
    if not trials:
        raise EmptyInputError(f"{path}: no score records")
    return ScoreSet(trials=trials, scores=values)


# -- evaluation report JSON --------------------------------------------------

def report_to_dict(report: EvalReport) -> dict:
    buckets = {}
    for label, _, _ in DURATION_BUCKETS:
        if label in report.buckets:
            b = report.buckets[label]
            buckets[label] = {
                "eer": b.eer,
                "threshold": b.threshold,
                "n_target": b.n_target,
                "n_nontarget": b.n_nontarget,
            }
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "n_trials": report.n_trials,
        "overall": {"eer": report.overall_eer, "threshold": report.overall_threshold},
        "buckets": buckets,
        "bucket_counts": {label: report.bucket_counts.get(label, 0) for label, _, _ in DURATION_BUCKETS},
        "unbucketed": report.unbucketed,
    }


def write_report(report: EvalReport, path: str | Path) -> None:
    payload = json.dumps(report_to_dict(report), indent=2) + "\n"
    write_atomic(path, payload.encode("utf-8"))


def read_report(path: str | Path) -> dict:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON: {exc}") from exc
    version = data.get("schema_version")
    if version != REPORT_SCHEMA_VERSION:
        raise FormatError(
            f"{path}: report schema version {version} unsupported (expected {REPORT_SCHEMA_VERSION})"
        )
    return data


def report_from_dict(data: dict) -> EvalReport:
    report = EvalReport(
        overall_eer=float(data["overall"]["eer"]),
        overall_threshold=float(data["overall"]["threshold"]),
        n_trials=int(data.get("n_trials", 0)),
        unbucketed=int(data.get("unbucketed", 0)),
    )
    for label, vals in data.get("buckets", {}).items():
        report.buckets[label] = BucketResult(
            eer=float(vals["eer"]),
            threshold=float(vals["threshold"]),
            n_target=int(vals["n_target"]),
            n_nontarget=int(vals["n_nontarget"]),
        )
    report.bucket_counts = {k: int(v) for k, v in data.get("bucket_counts", {}).items()}
    return report


# -- plot data ----------------------------------------------------------------

def write_det_csv(det: Sequence[tuple[float, float]], path: str | Path) -> None:
    lines = ["far,frr"] + [f"{far!r},{frr!r}" for far, frr in det]
    write_atomic(path, ("\n".join(lines) + "\n").encode("utf-8"))


def write_history_csv(history: TrainHistory, path: str | Path) -> None:
    lines = ["epoch,train_mse,dev_mse"]
    for i, train_loss in enumerate(history.train_mse):
        dev = repr(history.dev_mse[i]) if i < len(history.dev_mse) else ""
        lines.append(f"{i},{train_loss!r},{dev}")
    dev_final = repr(history.final_dev_mse) if history.dev_mse else ""
    lines.append(f"final,{history.final_train_mse!r},{dev_final}")
    write_atomic(path, ("\n".join(lines) + "\n").encode("utf-8"))


def write_improvement_table(
    baseline: dict, system: dict, path: str | Path
) -> list[tuple[str, float]]:
    """Per-bucket relative EER improvement of ``system`` over ``baseline``.

    Buckets present in both reports with a nonzero baseline are compared
    (a zero baseline has no defined relative improvement and is skipped);
    the overall row is always emitted.  Returns the rows as written.
    """
    rows: list[tuple[str, float]] = []
    base_buckets = baseline.get("buckets", {})
    sys_buckets = system.get("buckets", {})
    for label, _, _ in DURATION_BUCKETS:
        if label in base_buckets and label in sys_buckets and base_buckets[label]["eer"] > 0:
            pct = relative_improvement(base_buckets[label]["eer"], sys_buckets[label]["eer"])
            rows.append((label, pct))
    rows.append(
        ("overall", relative_improvement(baseline["overall"]["eer"], system["overall"]["eer"]))
    )
    _write_tsv(
        path,
        (
            [label, repr(float(base_buckets[label]["eer"])) if label in base_buckets else repr(float(baseline["overall"]["eer"])),
             repr(float(sys_buckets[label]["eer"])) if label in sys_buckets else repr(float(system["overall"]["eer"])),
             f"{pct:.2f}"]
            for label, pct in rows
        ),
    )
    return rows
