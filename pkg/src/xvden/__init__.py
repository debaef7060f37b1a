"""Embedding-space noise compensation toolkit.

Builds and evaluates denoising front-ends for speaker-embedding
verification: a plain denoising autoencoder and a stacked variant with
residual concatenation, trained from scratch with SGD, scored by a
two-covariance PLDA back-end, and measured by equal error rate over
duration buckets on a synthetic, fully seeded benchmark corpus.
"""

from .archive import read_archive, write_archive
from .denoiser import (
    DenoiserModel,
    StackedDaeModel,
    build_dae,
    build_stacked,
    denoise,
    stacked_forward,
    train_denoiser,
)
from .embeddings import EmbeddingPair, EmbeddingSet, PairBatch
from .errors import (
    ConfigError,
    DataError,
    EmptyInputError,
    FormatError,
    IdentifiabilityError,
    MissingKeyError,
    NotPositiveDefiniteError,
    ShapeError,
    XvdenError,
)
from .evaluation import (
    DURATION_BUCKETS,
    EvalReport,
    ScoreSet,
    Trial,
    bucket_trials,
    compute_eer,
    det_points,
    eer_from_scores,
    evaluate_scores,
    relative_improvement,
    run_protocol,
    score_trials,
)
from .linalg import cholesky_spd, gaussian_logpdf, matmul
from .modelio import load_model, save_model
from .nnet import (
    DenseLayer,
    Network,
    TrainConfig,
    TrainHistory,
    init_network,
    lr_at,
    mse,
    train,
)
from .plda import (
    Fingerprint,
    LabeledEmbeddingSet,
    PldaModel,
    PldaScorer,
    cosine_score,
    plda_score,
    plda_train_em,
    preprocess,
    train_plda,
)
from .synthcorpus import (
    CorpusConfig,
    NoisePrototype,
    SynthCorpus,
    add_embedding_noise,
    gen_corpus,
    make_trial_list,
)

__version__ = "0.1.0"
