"""Trial scoring, equal error rate, duration buckets, and reports.

Conventions, pinned so independent implementations of the same sweep agree
exactly:

* Thresholds sweep every distinct score value in ascending order, plus one
  virtual threshold above the maximum so the (FAR=0, FRR=1) endpoint is
  always present.
* A score equal to the threshold counts as an acceptance, so
  FRR(t) = P(target score < t) and FAR(t) = P(nontarget score >= t).
* The EER is read off the operating-point polyline by linear interpolation
  between the two adjacent points where FAR - FRR changes sign.

Duration buckets follow the seven-column layout used for reporting:
lower bound inclusive, upper bound exclusive, with an open-ended final
bucket at 12 seconds.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .embeddings import EmbeddingSet
from .errors import ConfigError, DataError, MissingKeyError
from .plda import PldaModel, PldaScorer, preprocess

# (label, low, high); high=None means open-ended.
DURATION_BUCKETS: tuple[tuple[str, float, float | None], ...] = (
    ("s<2", 0.0, 2.0),
    ("2<=s<4", 2.0, 4.0),
    ("4<=s<6", 4.0, 6.0),
    ("6<=s<8", 6.0, 8.0),
    ("8<=s<10", 8.0, 10.0),
    ("10<=s<12", 10.0, 12.0),
    ("s>=12", 12.0, None),
)

UNBUCKETED = "unbucketed"


@dataclass(frozen=True)
class Trial:
    """One verification trial: an enrollment key against a test key."""

    enroll_key: str
    test_key: str
    is_target: bool
    test_duration_s: float | None = None

    def __post_init__(self):
        if not self.enroll_key or not self.test_key:
            raise DataError("trial keys must be nonempty")
        if self.test_duration_s is not None and self.test_duration_s <= 0:
            raise DataError(
                f"trial ({self.enroll_key}, {self.test_key}) has non-positive duration"
            )


@dataclass
class ScoreSet:
    """Trials paired with their scores, in a fixed order."""

    trials: list[Trial]
    scores: np.ndarray

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64).reshape(-1)
        if len(self.trials) != self.scores.shape[0]:
            raise DataError(
                f"{len(self.trials)} trials but {self.scores.shape[0]} scores"
            )
        if self.scores.size and not np.all(np.isfinite(self.scores)):
            raise DataError("scores contain non-finite values")

    def split(self) -> tuple[np.ndarray, np.ndarray]:
        mask = np.array([t.is_target for t in self.trials], dtype=bool)
        return self.scores[mask], self.scores[~mask]

    def __len__(self) -> int:
        return len(self.trials)


def _operating_points(
    target_scores: np.ndarray, nontarget_scores: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(thresholds, FAR, FRR) swept over distinct scores plus +inf."""
    if target_scores.size == 0 or nontarget_scores.size == 0:
        raise DataError("EER needs at least one target and one nontarget score")
    thresholds = np.unique(np.concatenate([target_scores, nontarget_scores]))
    tgt = np.sort(target_scores)
    non = np.sort(nontarget_scores)
    # targets strictly below t  /  nontargets at or above t
    frr = np.searchsorted(tgt, thresholds, side="left") / tgt.size
    far = (non.size - np.searchsorted(non, thresholds, side="left")) / non.size
    thresholds = np.append(thresholds, np.inf)
    frr = np.append(frr, 1.0)
    far = np.append(far, 0.0)
    return thresholds, far, frr


def _interpolate_crossing(
    thresholds: np.ndarray, far: np.ndarray, frr: np.ndarray
) -> tuple[float, float]:
    """EER and threshold where the FAR/FRR polyline crosses."""
    diff = far - frr
    k = int(np.argmax(diff < 0.0))  # first strictly negative (exists: last diff = -1)
    if k == 0:
        return float(far[0]), float(thresholds[0])
    t = diff[k - 1] / (diff[k - 1] - diff[k])
    eer = far[k - 1] + t * (far[k] - far[k - 1])
    if np.isinf(thresholds[k]):
        threshold = float(thresholds[k - 1])
    else:
        threshold = float(thresholds[k - 1] + t * (thresholds[k] - thresholds[k - 1]))
    return float(eer), threshold


def eer_from_scores(
    target_scores: Sequence[float], nontarget_scores: Sequence[float]
) -> tuple[float, float]:
    """(EER, threshold) from raw score arrays."""
    tgt = np.asarray(target_scores, dtype=np.float64).reshape(-1)
    non = np.asarray(nontarget_scores, dtype=np.float64).reshape(-1)
    return _interpolate_crossing(*_operating_points(tgt, non))


def compute_eer(scores: ScoreSet) -> tuple[float, float]:
    """(EER, threshold) for a scored trial list."""
    tgt, non = scores.split()
    return eer_from_scores(tgt, non)


def det_points(scores: ScoreSet) -> list[tuple[float, float]]:
    """(FAR, FRR) operating points sorted by threshold, endpoints included."""
    tgt, non = scores.split()
    _, far, frr = _operating_points(tgt, non)
    return [(float(a), float(r)) for a, r in zip(far, frr)]


def bucket_trials(trials: Iterable[Trial]) -> dict[str, list[Trial]]:
    """Partition trials by test duration into the seven reporting buckets.

    Trials without a duration land under the ``unbucketed`` key rather than
    being dropped.  Every trial appears exactly once.
    """
    buckets: dict[str, list[Trial]] = {label: [] for label, _, _ in DURATION_BUCKETS}
    buckets[UNBUCKETED] = []
    for trial in trials:
        dur = trial.test_duration_s
        if dur is None:
            buckets[UNBUCKETED].append(trial)
            continue
        for label, low, high in DURATION_BUCKETS:
            if dur >= low and (high is None or dur < high):
                buckets[label].append(trial)
                break
    return buckets


def relative_improvement(baseline_eer: float, system_eer: float) -> float:
    """Percent EER reduction of a system against a baseline."""
    if baseline_eer <= 0:
        raise DataError(f"baseline EER must be > 0, got {baseline_eer}")
    return 100.0 * (baseline_eer - system_eer) / baseline_eer


@dataclass
class BucketResult:
    eer: float
    threshold: float
    n_target: int
    n_nontarget: int


@dataclass
class EvalReport:
    """Overall and per-bucket EER, plus DET points for plotting."""

    overall_eer: float
    overall_threshold: float
    buckets: dict[str, BucketResult] = field(default_factory=dict)
    bucket_counts: dict[str, int] = field(default_factory=dict)
    unbucketed: int = 0
    det: list[tuple[float, float]] = field(default_factory=list)
    n_trials: int = 0


def evaluate_scores(scores: ScoreSet) -> EvalReport:
    """Overall EER plus per-duration-bucket EER where both classes exist.

    Buckets that are empty, or that lack one of the two classes, are absent
    from ``buckets`` (their raw trial counts remain in ``bucket_counts``).
    """
    if len(scores) == 0:
        raise DataError("empty score set")
    overall_eer, overall_threshold = compute_eer(scores)
    report = EvalReport(
        overall_eer=overall_eer,
        overall_threshold=overall_threshold,
        det=det_points(scores),
        n_trials=len(scores),
    )
    bucket_of = []
    for trial in scores.trials:
        if trial.test_duration_s is None:
            bucket_of.append(UNBUCKETED)
            continue
        for label, low, high in DURATION_BUCKETS:
            if trial.test_duration_s >= low and (high is None or trial.test_duration_s < high):
                bucket_of.append(label)
                break
    bucket_of = np.array(bucket_of)
    is_target = np.array([t.is_target for t in scores.trials], dtype=bool)
    report.unbucketed = int(np.sum(bucket_of == UNBUCKETED))
    for label, _, _ in DURATION_BUCKETS:
        mask = bucket_of == label
        report.bucket_counts[label] = int(np.sum(mask))
        tgt = scores.scores[mask & is_target]
        non = scores.scores[mask & ~is_target]
        if tgt.size == 0 or non.size == 0:
            continue
        eer, threshold = eer_from_scores(tgt, non)
        report.buckets[label] = BucketResult(
            eer=eer, threshold=threshold, n_target=int(tgt.size), n_nontarget=int(non.size)
        )
    return report


def score_trials(
    model: PldaModel,
    enroll: EmbeddingSet,
    test: EmbeddingSet,
    trials: Sequence[Trial],
    denoiser=None,
    denoise_sides: str = "both",
) -> ScoreSet:
    """Optionally denoise, preprocess, and PLDA-score a trial list.

    ``denoise_sides`` chooses whether the denoiser (when given) is applied
    to both archives or only the test side.
    """
    if denoise_sides not in ("both", "test"):
        raise ConfigError(f"denoise_sides must be 'both' or 'test', got '{denoise_sides}'")
    for trial in trials:
        if trial.enroll_key not in enroll:
            raise MissingKeyError(f"enroll key '{trial.enroll_key}' not in enrollment archive")
        if trial.test_key not in test:
            raise MissingKeyError(f"test key '{trial.test_key}' not in test archive")
    if denoiser is not None:
        from .denoiser import denoise as apply_denoiser

        test = apply_denoiser(denoiser, test)
        if denoise_sides == "both":
            enroll = apply_denoiser(denoiser, enroll)
    enroll = preprocess(enroll, model.fingerprint)
    test = preprocess(test, model.fingerprint)
    scorer = PldaScorer(model)
    e_rows = enroll.subset([t.enroll_key for t in trials])
    t_rows = test.subset([t.test_key for t in trials])
    return ScoreSet(trials=list(trials), scores=scorer.score_many(e_rows, t_rows))


def run_protocol(
    enroll: EmbeddingSet,
    test: EmbeddingSet,
    plda_model: PldaModel,
    trials: Sequence[Trial],
    denoiser=None,
    denoise_sides: str = "both",
) -> EvalReport:
    """Full pipeline for one condition: (denoise) -> preprocess -> score -> EER."""
    scores = score_trials(
        plda_model, enroll, test, trials, denoiser=denoiser, denoise_sides=denoise_sides
    )
    return evaluate_scores(scores)
