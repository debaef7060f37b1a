"""Synthetic desk-scale corpus of speaker embeddings with additive noise.

Clean embeddings follow a Gaussian speaker model: speaker means carry a
total between-speaker variance of 4 and utterances a total within-speaker
variance of 1, spread evenly over the dimensions so norms and task
difficulty do not depend on the configured dim.  Corruption is additive in
embedding space: a unit noise direction scaled so the perturbation norm is
10^(-snr/20) times the clean norm, plus optional isotropic jitter.  Train
and test corruptions draw from disjoint prototype registries, so test noise
is always unseen.

Everything is generated from named substreams of one seed, so a fixed
configuration reproduces the corpus byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .embeddings import EmbeddingPair, EmbeddingSet
from .errors import ConfigError, DataError
from .evaluation import Trial
from .plda import LabeledEmbeddingSet

# Total (trace) variances of the speaker model; per-dimension variance is
# total/dim so embedding norms and task difficulty do not drift with dim.
BETWEEN_VAR_TOTAL = 4.0
WITHIN_VAR_TOTAL = 1.0


@dataclass
class CorpusConfig:
    """Sizing and corruption knobs; defaults run the full benchmark in minutes."""

    dim: int = 64
    n_speakers: int = 200  # training speakers (denoiser pairs + PLDA)
    utts_per_speaker: int = 10
    n_test_speakers: int = 40
    test_utts_per_speaker: int = 10
    enroll_per_speaker: int = 3
    n_noise_prototypes_train: int = 50
    n_noise_prototypes_unseen: int = 20
    noise_subspace_dim: int = 8  # 0 draws fully isotropic directions
    snr_range_db: tuple[float, float] = (0.0, 15.0)
    noisy_versions_per_clean: int = 1
    jitter_sigma: float = 0.1  # diffuse component no denoiser can fully undo
    duration_range_s: tuple[float, float] = (1.0, 15.0)  # log-uniform
    duration_noise_scale: float = 0.0  # >0 adds short-utterance within-speaker variance
    dev_fraction: float = 0.1
    max_nontarget_per_enroll: int = 100
    seed: int = 42

    def validate(self) -> None:
        if self.dim < 2:
            raise ConfigError(f"dim must be >= 2, got {self.dim}")
        for name in (
            "n_speakers",
            "utts_per_speaker",
            "n_test_speakers",
            "test_utts_per_speaker",
            "enroll_per_speaker",
            "n_noise_prototypes_train",
            "n_noise_prototypes_unseen",
            "noisy_versions_per_clean",
        ):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        low, high = self.snr_range_db
        if low > high:
            raise ConfigError(f"snr_range_db low {low} > high {high}")
        dlow, dhigh = self.duration_range_s
        if dlow <= 0 or dlow > dhigh:
            raise ConfigError(f"invalid duration_range_s {self.duration_range_s}")
        if not 0.0 <= self.dev_fraction < 1.0:
            raise ConfigError(f"dev_fraction must be in [0, 1), got {self.dev_fraction}")
        if self.jitter_sigma < 0:
            raise ConfigError(f"jitter_sigma must be >= 0, got {self.jitter_sigma}")
        if not 0 <= self.noise_subspace_dim <= self.dim:
            raise ConfigError(
                f"noise_subspace_dim must be in [0, dim], got {self.noise_subspace_dim}"
            )
        if self.max_nontarget_per_enroll < 0:
            raise ConfigError("max_nontarget_per_enroll must be >= 0")


@dataclass(frozen=True)
class NoisePrototype:
    """A named corruption direction in embedding space."""

    id: str
    direction: np.ndarray


@dataclass
class SynthCorpus:
    """Everything one benchmark run needs, keyed and labeled."""

    config: CorpusConfig
    train_pairs: list[EmbeddingPair]
    dev_pairs: list[EmbeddingPair]
    train_clean: EmbeddingSet
    train_noisy: EmbeddingSet
    plda_data: LabeledEmbeddingSet
    enroll: EmbeddingSet
    test_clean: EmbeddingSet
    test_noisy: EmbeddingSet
    trials: list[Trial]
    speaker_of: dict[str, str]
    duration_of: dict[str, float]
    clean_key_of: dict[str, str] = field(default_factory=dict)  # noisy pair key -> clean key
    noise_id_of: dict[str, str] = field(default_factory=dict)
    prototypes_train: list[NoisePrototype] = field(default_factory=list)
    prototypes_unseen: list[NoisePrototype] = field(default_factory=list)


def add_embedding_noise(
    clean: np.ndarray,
    proto: NoisePrototype,
    snr_db: float,
    jitter_sigma: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Corrupt a clean embedding along a prototype direction at a given SNR.

    noisy = clean + g * unit(direction) + jitter, with
    g = 10^(-snr_db/20) * ||clean||, so at jitter 0 the perturbation norm is
    exactly the SNR-controlled fraction of the clean norm.
    """
    clean = np.asarray(clean, dtype=np.float64)
    norm = np.linalg.norm(clean)
    if norm == 0.0:
        raise DataError("cannot add relative noise to a zero embedding")
    direction = np.asarray(proto.direction, dtype=np.float64)
    dnorm = np.linalg.norm(direction)
    if dnorm == 0.0:
        raise DataError(f"noise prototype '{proto.id}' has zero direction")
    gain = 10.0 ** (-snr_db / 20.0) * norm
    noisy = clean + gain * (direction / dnorm)
    if jitter_sigma > 0.0:
        noisy = noisy + rng.normal(0.0, jitter_sigma, size=clean.shape)
    return noisy


def _make_prototypes(
    rng: np.random.Generator,
    prefix: str,
    count: int,
    dim: int,
    basis: np.ndarray | None = None,
) -> list[NoisePrototype]:
    protos = []
    for i in range(count):
        direction = np.zeros(dim)
        while np.linalg.norm(direction) == 0.0:
            if basis is None:
                direction = rng.standard_normal(dim)
            else:
                direction = basis @ rng.standard_normal(basis.shape[1])
        protos.append(NoisePrototype(id=f"{prefix}{i:03d}", direction=direction))
    return protos


def _noise_basis(rng: np.random.Generator, dim: int, rank: int) -> np.ndarray | None:
    """Orthonormal basis of the shared noise subspace (None = isotropic).

    Real extractors respond to different noises along a common low-rank
    manifold; drawing every prototype from one subspace is what makes
    compensation of held-out noises learnable at all.
    """
    if rank == 0:
        return None
    gauss = rng.standard_normal((dim, rank))
    q, _ = np.linalg.qr(gauss)
    return q


def _substream(seed: int, label: str) -> np.random.Generator:
    """Independent generator stream keyed by the corpus seed and a label."""
    digest = np.frombuffer(label.encode("utf-8"), dtype=np.uint8)
    return np.random.default_rng([seed, *digest.tolist()])


def _sample_durations(rng: np.random.Generator, n: int, low: float, high: float) -> np.ndarray:
    return np.exp(rng.uniform(np.log(low), np.log(high), size=n))


def gen_corpus(config: CorpusConfig) -> SynthCorpus:
    """Generate train pairs, PLDA data, enroll/test archives, and trials."""
    config.validate()
    d = config.dim
    b_std = np.sqrt(BETWEEN_VAR_TOTAL / d)
    w_std = np.sqrt(WITHIN_VAR_TOTAL / d)

    proto_rng = _substream(config.seed, "prototypes")
    basis = _noise_basis(proto_rng, d, config.noise_subspace_dim)
    protos_train = _make_prototypes(
        proto_rng, "trainnoise", config.n_noise_prototypes_train, d, basis
    )
    protos_unseen = _make_prototypes(
        proto_rng, "unseennoise", config.n_noise_prototypes_unseen, d, basis
    )

    snr_low, snr_high = config.snr_range_db

    # Training speakers: clean utterances, then per-version corruptions.
    train_rng = _substream(config.seed, "train")
    train_clean = EmbeddingSet(d)
    train_noisy = EmbeddingSet(d)
    pairs: list[EmbeddingPair] = []
    clean_key_of: dict[str, str] = {}
    plda_groups: dict[str, np.ndarray] = {}
    for s in range(config.n_speakers):
        speaker = f"tr{s:04d}"
        mean = train_rng.normal(0.0, b_std, size=d)
        utts = mean + w_std * train_rng.standard_normal((config.utts_per_speaker, d))
        plda_groups[speaker] = utts
        for u in range(config.utts_per_speaker):
            clean_key = f"train/{speaker}/u{u:03d}"
            train_clean.add(clean_key, utts[u])
            for v in range(config.noisy_versions_per_clean):
                noisy_key = f"{clean_key}/n{v}"
                proto = protos_train[int(train_rng.integers(len(protos_train)))]
                snr = float(train_rng.uniform(snr_low, snr_high))
                noisy = add_embedding_noise(utts[u], proto, snr, config.jitter_sigma, train_rng)
                train_noisy.add(noisy_key, noisy)
                clean_key_of[noisy_key] = clean_key
                pairs.append(
                    EmbeddingPair(
                        key=noisy_key, noisy=noisy, clean=utts[u], snr_db=snr, noise_id=proto.id
                    )
                )

    split_rng = _substream(config.seed, "devsplit")
    order = split_rng.permutation(len(pairs))
    n_dev = int(round(config.dev_fraction * len(pairs)))
    dev_idx = set(order[:n_dev].tolist())
    dev_pairs = [pairs[i] for i in range(len(pairs)) if i in dev_idx]
    train_pairs = [pairs[i] for i in range(len(pairs)) if i not in dev_idx]
    if not train_pairs:
        raise DataError("dev split left no training pairs")

    # Test speakers: clean enrollment plus clean/noisy test utterances.
    test_rng = _substream(config.seed, "test")
    enroll = EmbeddingSet(d)
    test_clean = EmbeddingSet(d)
    test_noisy = EmbeddingSet(d)
    speaker_of: dict[str, str] = {}
    duration_of: dict[str, float] = {}
    noise_id_of: dict[str, str] = {}
    for s in range(config.n_test_speakers):
        speaker = f"te{s:04d}"
        mean = test_rng.normal(0.0, b_std, size=d)
        for e in range(config.enroll_per_speaker):
            key = f"enroll/{speaker}/e{e:02d}"
            dur = float(_sample_durations(test_rng, 1, *config.duration_range_s)[0])
            enroll.add(key, mean + w_std * test_rng.standard_normal(d))
            speaker_of[key] = speaker
            duration_of[key] = dur
        for u in range(config.test_utts_per_speaker):
            key = f"test/{speaker}/u{u:03d}"
            dur = float(_sample_durations(test_rng, 1, *config.duration_range_s)[0])
            within_std = w_std
            if config.duration_noise_scale > 0.0:
                within_std = w_std * float(np.sqrt(1.0 + config.duration_noise_scale / dur))
            clean = mean + within_std * test_rng.standard_normal(d)
            test_clean.add(key, clean)
            proto = protos_unseen[int(test_rng.integers(len(protos_unseen)))]
            snr = float(test_rng.uniform(snr_low, snr_high))
            noisy = add_embedding_noise(clean, proto, snr, config.jitter_sigma, test_rng)
            test_noisy.add(key, noisy)
            speaker_of[key] = speaker
            duration_of[key] = dur
            noise_id_of[key] = proto.id

    trials = make_trial_list(
        enroll,
        test_clean,
        speaker_of,
        max_nontarget_per_enroll=config.max_nontarget_per_enroll,
        seed=config.seed,
        duration_of=duration_of,
    )

    return SynthCorpus(
        config=config,
        train_pairs=train_pairs,
        dev_pairs=dev_pairs,
        train_clean=train_clean,
        train_noisy=train_noisy,
        plda_data=LabeledEmbeddingSet(plda_groups),
        enroll=enroll,
        test_clean=test_clean,
        test_noisy=test_noisy,
        trials=trials,
        speaker_of=speaker_of,
        duration_of=duration_of,
        clean_key_of=clean_key_of,
        noise_id_of=noise_id_of,
        prototypes_train=protos_train,
        prototypes_unseen=protos_unseen,
    )


def make_trial_list(
    enroll: EmbeddingSet,
    test: EmbeddingSet,
    speaker_of: dict[str, str],
    max_nontarget_per_enroll: int,
    seed: int = 0,
    duration_of: dict[str, float] | None = None,
) -> list[Trial]:
    """Exhaustive targets plus capped, deterministically sampled nontargets.

    Every same-speaker (enroll, test) pair becomes a target trial; for each
    enrollment key up to ``max_nontarget_per_enroll`` different-speaker test
    keys are drawn without replacement from a seeded stream.
    """
    if len(enroll) == 0 or len(test) == 0:
        raise DataError("trial list needs nonempty enroll and test archives")
    for key in list(enroll.keys) + list(test.keys):
        if key not in speaker_of:
            raise DataError(f"no speaker label for key '{key}'")
    rng = _substream(seed, "trials")
    test_keys = test.keys
    trials: list[Trial] = []
    for ekey in enroll.keys:
        espk = speaker_of[ekey]
        same = [k for k in test_keys if speaker_of[k] == espk]
        other = [k for k in test_keys if speaker_of[k] != espk]
        for tkey in same:
            trials.append(
                Trial(
                    enroll_key=ekey,
                    test_key=tkey,
                    is_target=True,
                    test_duration_s=duration_of.get(tkey) if duration_of else None,
                )
            )
        n_non = min(max_nontarget_per_enroll, len(other))
        if n_non:
            chosen = rng.choice(len(other), size=n_non, replace=False)
            for i in sorted(chosen.tolist()):
                tkey = other[i]
                trials.append(
                    Trial(
                        enroll_key=ekey,
                        test_key=tkey,
                        is_target=False,
                        test_duration_s=duration_of.get(tkey) if duration_of else None,
                    )
                )
    return trials
