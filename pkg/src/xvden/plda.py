"""Two-covariance PLDA back-end with a cosine fallback scorer.

Model: an embedding x from speaker s is x = mu + y_s + e, with speaker
offset y_s ~ N(0, B) shared by all of that speaker's utterances and
residual e ~ N(0, W).  Both covariances are full; B may be singular
(no speaker variability) while W is kept positive definite by flooring.

Training is expectation-maximization over the latent speaker offsets.
Scoring computes the log-likelihood ratio between the same-speaker and
different-speaker hypotheses for an (enroll, test) pair:

    score = log N([e; t]; 0, [[B+W, B], [B, B+W]])
          - log N([e; t]; 0, [[B+W, 0], [0, B+W]])

evaluated on vectors already preprocessed (centered / length-normalized)
with the fingerprint recorded at training time.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .embeddings import EmbeddingSet
from .errors import ConfigError, DataError, IdentifiabilityError, ShapeError
from .linalg import LOG_2PI, chol_logdet, chol_solve, cholesky_spd, gaussian_logpdf_many

logger = logging.getLogger(__name__)

# Monotonicity slack for the EM log-likelihood sequence.
EM_LL_SLACK = 1e-8


# ---------------------------------------------------------------------------
# Preprocessing
# ---------------------------------------------------------------------------

@dataclass
class Fingerprint:
    """Preprocessing recipe recorded with a model so train and apply match.

    Centering subtracts the stored training mean; length normalization then
    scales each vector to unit Euclidean norm.
    """

    center: bool = False
    length_norm: bool = False
    mean: np.ndarray | None = None

    @classmethod
    def identity(cls) -> "Fingerprint":
        return cls(center=False, length_norm=False, mean=None)

    def validate(self, dim: int) -> None:
        if self.center:
            if self.mean is None:
                raise ConfigError("centering fingerprint is missing its training mean")
            if self.mean.shape != (dim,):
                raise ShapeError(
                    f"fingerprint mean has dim {self.mean.shape}, expected ({dim},)"
                )


def fit_fingerprint(matrix: np.ndarray, center: bool = True, length_norm: bool = True) -> Fingerprint:
    """Fingerprint whose mean is the empirical mean of ``matrix`` rows."""
    matrix = np.asarray(matrix, dtype=np.float64)
    mean = matrix.mean(axis=0) if center else None
    return Fingerprint(center=center, length_norm=length_norm, mean=mean)


def apply_fingerprint(matrix: np.ndarray, fingerprint: Fingerprint, keys=None) -> np.ndarray:
    """Apply a fingerprint to (n, dim) rows; raises on zero-norm rows."""
    matrix = np.asarray(matrix, dtype=np.float64)
    single = matrix.ndim == 1
    if single:
        matrix = matrix[None, :]
    fingerprint.validate(matrix.shape[1])
    out = matrix - fingerprint.mean if fingerprint.center else matrix.copy()
    if fingerprint.length_norm:
        norms = np.linalg.norm(out, axis=1)
        bad = np.flatnonzero(norms == 0.0)
        if bad.size:
            name = keys[bad[0]] if keys is not None else f"row {bad[0]}"
            raise DataError(f"cannot length-normalize zero vector ({name})")
        out = out / norms[:, None]
    return out[0] if single else out


def preprocess(embeddings: EmbeddingSet, fingerprint: Fingerprint) -> EmbeddingSet:
    """Key-preserving fingerprint application over a whole embedding set."""
    if len(embeddings) == 0:
        return embeddings.replace_vectors(embeddings.matrix)
    return embeddings.replace_vectors(
        apply_fingerprint(embeddings.matrix, fingerprint, keys=embeddings.keys)
    )


# ---------------------------------------------------------------------------
# Labeled data
# ---------------------------------------------------------------------------

class LabeledEmbeddingSet:
    """Embeddings grouped by speaker, validated for PLDA identifiability."""

    def __init__(self, by_speaker: dict[str, np.ndarray]):
        if len(by_speaker) < 2:
            raise IdentifiabilityError("PLDA training needs at least 2 speakers")
        groups = {}
        dim = None
        multi = False
        for spk, mat in by_speaker.items():
            mat = np.atleast_2d(np.asarray(mat, dtype=np.float64))
            if dim is None:
                dim = mat.shape[1]
            elif mat.shape[1] != dim:
                raise ShapeError(f"speaker '{spk}' has dim {mat.shape[1]}, expected {dim}")
            if mat.shape[0] >= 2:
                multi = True
            groups[spk] = mat
        if not multi:
            raise IdentifiabilityError(
                "every speaker has a single utterance; within-speaker covariance is unidentifiable"
            )
        self.by_speaker = groups
        self.dim = dim

    @classmethod
    def from_labels(cls, embeddings: EmbeddingSet, speaker_of: dict[str, str]) -> "LabeledEmbeddingSet":
        groups: dict[str, list[np.ndarray]] = {}
        for key, vec in embeddings.items():
            if key not in speaker_of:
                raise DataError(f"no speaker label for key '{key}'")
            groups.setdefault(speaker_of[key], []).append(vec)
        return cls({spk: np.vstack(rows) for spk, rows in sorted(groups.items())})

    @property
    def n_speakers(self) -> int:
        return len(self.by_speaker)

    @property
    def n_total(self) -> int:
        return sum(m.shape[0] for m in self.by_speaker.values())

    def stacked(self) -> np.ndarray:
        return np.vstack([m for m in self.by_speaker.values()])

    def map_vectors(self, fn) -> "LabeledEmbeddingSet":
        return LabeledEmbeddingSet({spk: fn(mat) for spk, mat in self.by_speaker.items()})


# ---------------------------------------------------------------------------
# Model and EM training
# ---------------------------------------------------------------------------

@dataclass
class PldaModel:
    """Global mean plus between-speaker (B) and within-speaker (W) covariances."""

    mu: np.ndarray
    between: np.ndarray
    within: np.ndarray
    fingerprint: Fingerprint = field(default_factory=Fingerprint.identity)

    @property
    def dim(self) -> int:
        return self.mu.shape[0]


def _floor_spd(mat: np.ndarray, what: str) -> np.ndarray:
    """Add eps*I (eps = 1e-6 tr/d) until Cholesky succeeds; logged, never silent."""
    d = mat.shape[0]
    floored = mat
    for _ in range(60):
        try:
            cholesky_spd(floored)
            return floored
        except Exception:
            eps = 1e-6 * max(np.trace(floored), d * 1e-30) / d
            logger.warning("flooring %s covariance by %.3e * I", what, eps)
            floored = floored + eps * np.eye(d)
    raise DataError(f"{what} covariance could not be floored to positive definite")


def _speaker_stats(data: LabeledEmbeddingSet):
    """Per-speaker counts and means, plus the pooled within scatter."""
    counts = np.array([m.shape[0] for m in data.by_speaker.values()], dtype=np.int64)
    means = np.vstack([m.mean(axis=0) for m in data.by_speaker.values()])
    scatter = np.zeros((data.dim, data.dim))
    for mat in data.by_speaker.values():
        c = mat - mat.mean(axis=0)
        scatter += c.T @ c
    return counts, means, scatter


def plda_train_em(
    data: LabeledEmbeddingSet, iters: int = 10, init: PldaModel | None = None
) -> tuple[PldaModel, list[float]]:
    """Fit mu, B, W by EM; returns the model and per-iteration log-likelihoods.

    ``loglik[i]`` is the marginal log-likelihood of the parameters entering
    iteration i, so the sequence is non-decreasing (up to roundoff).  The
    returned model has an identity fingerprint; ``train_plda`` wires in
    preprocessing.
    """
    if iters < 1:
        raise ConfigError(f"iters must be >= 1, got {iters}")
    d = data.dim
    n_spk = data.n_speakers
    n_tot = data.n_total
    counts, means, within_scatter = _speaker_stats(data)

    if init is not None:
        mu = init.mu.copy()
        between = init.between.copy()
        within = _floor_spd(init.within.copy(), "within")
    else:
        mu = (counts @ means) / n_tot
        centered = means - mu
        between = (centered.T * counts) @ centered / n_spk
        within = _floor_spd(within_scatter / max(n_tot - n_spk, 1), "within")

    logliks: list[float] = []
    log_counts = float(np.sum(np.log(counts)))
    for _ in range(iters):
        chol_w = cholesky_spd(within)
        logdet_w = chol_logdet(chol_w)
        trace_term = float(np.trace(chol_solve(chol_w, within_scatter)))

        centered = means - mu
        post_mean = np.empty_like(means)
        ll = (
            -0.5 * (n_tot - n_spk) * d * LOG_2PI
            - 0.5 * (n_tot - n_spk) * logdet_w
            - 0.5 * d * log_counts
            - 0.5 * trace_term
        )
        cov_sum_b = np.zeros((d, d))  # sum over speakers of posterior covariance
        cov_sum_w = np.zeros((d, d))  # same, weighted by utterance count
        # Group speakers by utterance count: the posterior gain and the
        # marginal covariance B + W/n depend only on n.
        for n in np.unique(counts):
            idx = np.flatnonzero(counts == n)
            t_cov = between + within / float(n)
            chol_t = cholesky_spd(t_cov)
            ll += float(np.sum(gaussian_logpdf_many(centered[idx], np.zeros(d), t_cov)))
            gain = between @ chol_solve(chol_t, np.eye(d))  # B (B + W/n)^{-1}
            post_mean[idx] = centered[idx] @ gain.T
            post_cov = between - gain @ between
            cov_sum_b += len(idx) * post_cov
            cov_sum_w += len(idx) * float(n) * post_cov
        logliks.append(ll)

        # M-step
        mu = (counts @ (means - post_mean)) / n_tot
        between = (cov_sum_b + post_mean.T @ post_mean) / n_spk
        between = 0.5 * (between + between.T)
        resid = means - mu - post_mean
        w_new = (within_scatter + (resid.T * counts) @ resid + cov_sum_w) / n_tot
        within = _floor_spd(0.5 * (w_new + w_new.T), "within")

    model = PldaModel(mu=mu, between=between, within=within)
    return model, logliks


def train_plda(
    data: LabeledEmbeddingSet,
    iters: int = 10,
    center: bool = True,
    length_norm: bool = True,
) -> tuple[PldaModel, list[float]]:
    """Preprocess (center + length-normalize by default), then run EM.

    The fitted fingerprint is stored on the model; score-time inputs must be
    preprocessed with it.
    """
    fingerprint = fit_fingerprint(data.stacked(), center=center, length_norm=length_norm)
    prepped = data.map_vectors(lambda m: apply_fingerprint(m, fingerprint))
    model, logliks = plda_train_em(prepped, iters=iters)
    model.fingerprint = fingerprint
    return model, logliks


# ---------------------------------------------------------------------------
# Scoring
# ---------------------------------------------------------------------------

class PldaScorer:
    """Precomputes the factorizations so per-trial scoring is two solves.

    Both hypotheses use the same 2d-dimensional construction (the
    different-speaker covariance is the block-diagonal special case), so a
    model with zero between-speaker covariance scores exactly 0 everywhere.
    """

    def __init__(self, model: PldaModel):
        d = model.dim
        total = model.between + model.within

        def coupled(offdiag: np.ndarray) -> np.ndarray:
            cov = np.zeros((2 * d, 2 * d))
            cov[:d, :d] = total
            cov[d:, d:] = total
            cov[:d, d:] = offdiag
            cov[d:, :d] = offdiag
            return cov

        self.model = model
        self.dim = d
        self._chol_same = cholesky_spd(coupled(model.between))
        self._chol_diff = cholesky_spd(coupled(np.zeros((d, d))))
        self._logdet_same = chol_logdet(self._chol_same)
        self._logdet_diff = chol_logdet(self._chol_diff)

    def score_many(self, enroll: np.ndarray, test: np.ndarray) -> np.ndarray:
        """Log-likelihood ratios for row-aligned (n, d) enroll/test stacks."""
        enroll = np.atleast_2d(np.asarray(enroll, dtype=np.float64)) - self.model.mu
        test = np.atleast_2d(np.asarray(test, dtype=np.float64)) - self.model.mu
        if enroll.shape != test.shape or enroll.shape[1] != self.dim:
            raise ShapeError(
                f"enroll {enroll.shape} / test {test.shape} incompatible with dim {self.dim}"
            )
        stacked = np.hstack([enroll, test]).T
        z_same = solve_triangular(self._chol_same, stacked, lower=True)
        z_diff = solve_triangular(self._chol_diff, stacked, lower=True)
        quad_same = np.sum(z_same * z_same, axis=0)
        quad_diff = np.sum(z_diff * z_diff, axis=0)
        return -0.5 * ((self._logdet_same - self._logdet_diff) + (quad_same - quad_diff))

    def score(self, enroll: np.ndarray, test: np.ndarray) -> float:
        return float(self.score_many(enroll[None, :], test[None, :])[0])


def plda_score(model: PldaModel, enroll: np.ndarray, test: np.ndarray) -> float:
    """Log-likelihood ratio for one preprocessed (enroll, test) pair."""
    enroll = np.asarray(enroll, dtype=np.float64).reshape(-1)
    test = np.asarray(test, dtype=np.float64).reshape(-1)
    return PldaScorer(model).score(enroll, test)


def cosine_score(enroll: np.ndarray, test: np.ndarray) -> float:
    """Cosine similarity in [-1, 1]; rejects zero vectors."""
    enroll = np.asarray(enroll, dtype=np.float64).reshape(-1)
    test = np.asarray(test, dtype=np.float64).reshape(-1)
    ne = np.linalg.norm(enroll)
    nt = np.linalg.norm(test)
    if ne == 0.0 or nt == 0.0:
        raise DataError("cosine score of a zero vector is undefined")
    return float(enroll @ test / (ne * nt))
