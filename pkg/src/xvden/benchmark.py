"""End-to-end benchmark: corpus -> denoisers -> PLDA -> bucketed EER.

Runs the four standard conditions on one generated corpus:

* clean: clean test vectors, no denoiser (upper bound),
* noisy: corrupted test vectors, no denoiser (degraded baseline),
* dae / stacked: corrupted test vectors through each trained denoiser.

Desk-scale training defaults (hidden width, epochs, batch size) are sized
for the 64-dimensional synthetic corpus so the whole run takes minutes on
one core; the learning-rate schedule keeps the 0.02 / 1e-4 defaults.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .denoiser import DenoiserModel, build_dae, build_stacked, train_denoiser
from .evaluation import EvalReport, relative_improvement, run_protocol
from .nnet import TrainConfig
from .plda import PldaModel, train_plda
from .synthcorpus import CorpusConfig, SynthCorpus, gen_corpus


@dataclass
class BenchmarkConfig:
    """Corpus plus denoiser-training knobs for one benchmark run."""

    corpus: CorpusConfig = field(default_factory=CorpusConfig)
    hidden: int = 128
    n_blocks: int = 2
    epochs: int = 200
    batch_size: int = 32
    initial_lr: float = 0.05
    decay: float = 0.0001
    decay_mode: str = "inverse_time"
    plda_iters: int = 10

    def train_config(self, seed: int) -> TrainConfig:
        return TrainConfig(
            initial_lr=self.initial_lr,
            decay=self.decay,
            epochs=self.epochs,
            batch_size=self.batch_size,
            seed=seed,
            decay_mode=self.decay_mode,
        )


@dataclass
class BenchmarkResult:
    corpus: SynthCorpus
    plda_model: PldaModel
    denoisers: dict[str, DenoiserModel]
    reports: dict[str, EvalReport]

    def eer(self, condition: str) -> float:
        return self.reports[condition].overall_eer

    def improvement_over_noisy(self, condition: str) -> float:
        return relative_improvement(self.eer("noisy"), self.eer(condition))


def train_benchmark_denoisers(
    corpus: SynthCorpus, config: BenchmarkConfig
) -> dict[str, DenoiserModel]:
    """Train the plain and stacked denoisers on the corpus pairs."""
    dim = corpus.config.dim
    seed = corpus.config.seed
    dae = build_dae(dim=dim, hidden=config.hidden, seed=seed + 1)
    stacked = build_stacked(dim=dim, hidden=config.hidden, n_blocks=config.n_blocks, seed=seed + 2)
    return {
        "dae": train_denoiser(dae, corpus.train_pairs, corpus.dev_pairs, config.train_config(seed + 3)),
        "stacked": train_denoiser(
            stacked, corpus.train_pairs, corpus.dev_pairs, config.train_config(seed + 4)
        ),
    }


def run_benchmark(config: BenchmarkConfig | None = None) -> BenchmarkResult:
    """Generate, train, and evaluate all four conditions."""
    if config is None:
        config = BenchmarkConfig()
    corpus = gen_corpus(config.corpus)
    plda_model, _ = train_plda(corpus.plda_data, iters=config.plda_iters)
    denoisers = train_benchmark_denoisers(corpus, config)
    reports = {
        "clean": run_protocol(corpus.enroll, corpus.test_clean, plda_model, corpus.trials),
        "noisy": run_protocol(corpus.enroll, corpus.test_noisy, plda_model, corpus.trials),
        "dae": run_protocol(
            corpus.enroll, corpus.test_noisy, plda_model, corpus.trials, denoiser=denoisers["dae"]
        ),
        "stacked": run_protocol(
            corpus.enroll, corpus.test_noisy, plda_model, corpus.trials, denoiser=denoisers["stacked"]
        ),
    }
    return BenchmarkResult(
        corpus=corpus, plda_model=plda_model, denoisers=denoisers, reports=reports
    )


def snr_sweep(
    config: BenchmarkConfig | None = None, snrs: tuple[float, ...] = (0.0, 5.0, 10.0, 15.0)
) -> dict[float, dict[str, float]]:
    """Overall EER per condition on fixed-SNR variants of the test corruption.

    Denoisers and PLDA are trained once on the mixed-SNR corpus; each sweep
    point regenerates only the test corruption at a single SNR.
    """
    if config is None:
        config = BenchmarkConfig()
    corpus = gen_corpus(config.corpus)
    plda_model, _ = train_plda(corpus.plda_data, iters=config.plda_iters)
    denoisers = train_benchmark_denoisers(corpus, config)

    grid: dict[float, dict[str, float]] = {}
    for snr in snrs:
        fixed = replace(config.corpus, snr_range_db=(float(snr), float(snr)))
        test_corpus = gen_corpus(fixed)
        point = {
            "clean": run_protocol(
                test_corpus.enroll, test_corpus.test_clean, plda_model, test_corpus.trials
            ).overall_eer,
            "noisy": run_protocol(
                test_corpus.enroll, test_corpus.test_noisy, plda_model, test_corpus.trials
            ).overall_eer,
        }
        for name, model in denoisers.items():
            point[name] = run_protocol(
                test_corpus.enroll, test_corpus.test_noisy, plda_model, test_corpus.trials, denoiser=model
            ).overall_eer
        grid[float(snr)] = point
    return grid
