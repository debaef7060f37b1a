"""Command-line front-end composing the pipeline stages.

Subcommands map one-to-one onto pipeline stages (corpus synthesis, denoiser
training, denoising, PLDA training, trial scoring, EER evaluation, report
comparison, SNR sweep).  Stages communicate only through files, so any step
can be rerun or swapped out.

Exit codes: 0 success, 2 usage error, 1 runtime error with a single
machine-parsable ``error: <category>: <detail>`` line on stderr.  The
``XVDEN_LOG`` environment variable (error|warn|info|debug) controls
diagnostic verbosity on stderr; stdout is reserved for data.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from pathlib import Path

from . import archive, modelio, textio
from .benchmark import BenchmarkConfig, snr_sweep
from .denoiser import DenoiserModel, build_dae, build_stacked, denoise, train_denoiser
from .embeddings import EmbeddingPair, EmbeddingSet
from .errors import ConfigError, EmptyInputError, FormatError, XvdenError
from .evaluation import evaluate_scores, score_trials
from .nnet import TrainConfig
from .plda import LabeledEmbeddingSet, PldaModel, train_plda
from .synthcorpus import CorpusConfig, gen_corpus

LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}

logger = logging.getLogger(__name__)


def _setup_logging() -> None:
    level_name = os.environ.get("XVDEN_LOG", "warn").lower()
    if level_name not in LOG_LEVELS:
        raise ConfigError(f"XVDEN_LOG must be one of {sorted(LOG_LEVELS)}, got '{level_name}'")
    logging.basicConfig(stream=sys.stderr, level=LOG_LEVELS[level_name], format="%(levelname)s %(name)s: %(message)s")


def _load_toml(path: str) -> dict:
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise FormatError(f"{path}: invalid TOML: {exc}") from exc


def _corpus_config(raw: dict, seed_override: int | None) -> CorpusConfig:
    fields = {f.name: f for f in dataclasses.fields(CorpusConfig)}
    kwargs = {}
    for key, value in raw.items():
        if key not in fields:
            raise ConfigError(f"unknown corpus config key '{key}'")
        if key in ("snr_range_db", "duration_range_s"):
            value = tuple(float(v) for v in value)
        kwargs[key] = value
    config = CorpusConfig(**kwargs)
    if seed_override is not None:
        config.seed = seed_override
    config.validate()
    return config


def cmd_synth(args) -> int:
    raw = _load_toml(args.config) if args.config else {}
    config = _corpus_config(raw, args.seed)
    corpus = gen_corpus(config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    archive.write_archive(corpus.train_clean, out / "train_clean.xvd")
    archive.write_archive(corpus.train_noisy, out / "train_noisy.xvd")
    archive.write_archive(corpus.enroll, out / "enroll.xvd")
    archive.write_archive(corpus.test_clean, out / "test_clean.xvd")
    archive.write_archive(corpus.test_noisy, out / "test_noisy.xvd")

    textio.write_pair_keys(
        ((p.key, corpus.clean_key_of[p.key], p.snr_db, p.noise_id) for p in corpus.train_pairs),
        out / "train_pairs.tsv",
    )
    textio.write_pair_keys(
        ((p.key, corpus.clean_key_of[p.key], p.snr_db, p.noise_id) for p in corpus.dev_pairs),
        out / "dev_pairs.tsv",
    )

    plda_set = corpus.plda_data
    plda_archive = EmbeddingSet(config.dim)
    plda_speaker_of = {}
    for spk, mat in plda_set.by_speaker.items():
        for i, row in enumerate(mat):
            key = f"plda/{spk}/u{i:03d}"
            plda_archive.add(key, row)
            plda_speaker_of[key] = spk
    archive.write_archive(plda_archive, out / "plda_train.xvd")
    textio.write_labels(plda_speaker_of, {}, out / "plda_labels.tsv")

    textio.write_labels(corpus.speaker_of, corpus.duration_of, out / "labels.tsv")
    textio.write_trials(corpus.trials, out / "trials.tsv")

    for name, protos in (("prototypes_train", corpus.prototypes_train), ("prototypes_unseen", corpus.prototypes_unseen)):
        proto_set = EmbeddingSet(config.dim)
        for proto in protos:
            proto_set.add(proto.id, proto.direction)
        archive.write_archive(proto_set, out / f"{name}.xvd")
    logger.info("corpus written to %s", out)
    return 0


def _read_pairs(pairs_path: str, noisy_path: str, clean_path: str) -> list[EmbeddingPair]:
    noisy = archive.read_archive(noisy_path)
    clean = archive.read_archive(clean_path)
    pairs = []
    for noisy_key, clean_key, snr, noise_id in textio.read_pair_keys(pairs_path):
        pairs.append(
            EmbeddingPair(
                key=noisy_key,
                noisy=noisy.get(noisy_key),
                clean=clean.get(clean_key),
                snr_db=snr,
                noise_id=noise_id,
            )
        )
    if not pairs:
        raise EmptyInputError(f"{pairs_path}: no training pairs")
    return pairs


def cmd_train(args) -> int:
    pairs = _read_pairs(args.pairs, args.noisy, args.clean)
    dev_pairs = _read_pairs(args.dev_pairs, args.noisy, args.clean) if args.dev_pairs else None
    dim = pairs[0].noisy.shape[0]
    config = TrainConfig(
        initial_lr=args.lr,
        decay=args.decay,
        epochs=args.epochs,
        batch_size=args.batch,
        seed=args.seed,
        decay_mode=args.decay_mode,
    )
    if args.arch == "dae":
        model = build_dae(dim=dim, hidden=args.hidden, seed=args.seed)
    else:
        model = build_stacked(dim=dim, hidden=args.hidden, n_blocks=args.blocks, seed=args.seed)
    trained = train_denoiser(model, pairs, dev_pairs, config)
    modelio.save_model(trained, args.out)
    textio.write_history_csv(trained.history, Path(args.out).with_suffix(".history.csv"))
    logger.info("model written to %s", args.out)
    return 0


def _load_denoiser(path: str) -> DenoiserModel:
    model = modelio.load_model(path)
    if not isinstance(model, DenoiserModel):
        raise FormatError(f"{path}: expected a denoiser model, found '{type(model).__name__}'")
    return model


def cmd_denoise(args) -> int:
    model = _load_denoiser(args.model)
    embeddings = archive.read_archive(args.infile)
    archive.write_archive(denoise(model, embeddings), args.out)
    return 0


def cmd_plda_train(args) -> int:
    embeddings = archive.read_archive(args.infile)
    speaker_of, _ = textio.read_labels(args.labels)
    data = LabeledEmbeddingSet.from_labels(embeddings, speaker_of)
    model, logliks = train_plda(
        data, iters=args.iters, center=not args.no_center, length_norm=not args.no_length_norm
    )
    modelio.save_model(model, args.out)
    logger.info("plda log-likelihood: %s", " ".join(f"{v:.3f}" for v in logliks))
    return 0


def cmd_score(args) -> int:
    plda_model = modelio.load_model(args.plda)
    if not isinstance(plda_model, PldaModel):
        raise FormatError(f"{args.plda}: expected a plda model")
    enroll = archive.read_archive(args.enroll)
    test = archive.read_archive(args.test)
    trials = textio.read_trials(args.trials)
    if not trials:
        raise EmptyInputError(f"{args.trials}: no trials")
    denoiser_model = _load_denoiser(args.denoiser) if args.denoiser else None
    scores = score_trials(
        plda_model, enroll, test, trials, denoiser=denoiser_model, denoise_sides=args.denoise_sides
    )
    textio.write_scores(scores, args.out)
    return 0


def cmd_eval(args) -> int:
    _, duration_of = textio.read_labels(args.labels)
    scores = textio.read_scores(args.scores, duration_of)
    report = evaluate_scores(scores)
    textio.write_report(report, args.out)
    textio.write_det_csv(report.det, Path(args.out).with_suffix(".det.csv"))
    return 0


def cmd_report(args) -> int:
    baseline = textio.read_report(args.baseline)
    system = textio.read_report(args.system)
    rows = textio.write_improvement_table(baseline, system, args.out)
    for label, pct in rows:
        print(f"{label}\t{pct:.2f}")
    return 0


def cmd_sweep(args) -> int:
    raw = _load_toml(args.config) if args.config else {}
    corpus_keys = {f.name for f in dataclasses.fields(CorpusConfig)}
    bench_keys = ("hidden", "n_blocks", "epochs", "batch_size", "initial_lr", "decay", "decay_mode", "plda_iters")
    unknown = set(raw) - corpus_keys - set(bench_keys) - {"snrs"}
    if unknown:
        raise ConfigError(f"unknown sweep config keys: {sorted(unknown)}")
    corpus_cfg = _corpus_config({k: v for k, v in raw.items() if k in corpus_keys}, args.seed)
    bench = BenchmarkConfig(corpus=corpus_cfg)
    for key in bench_keys:
        if key in raw:
            setattr(bench, key, raw[key])
    snrs = tuple(float(s) for s in raw.get("snrs", (0.0, 5.0, 10.0, 15.0)))
    grid = snr_sweep(bench, snrs=snrs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    conditions = ("clean", "noisy", "dae", "stacked")
    lines = ["snr_db," + ",".join(conditions)]
    for snr in sorted(grid):
        lines.append(f"{snr!r}," + ",".join(repr(grid[snr][c]) for c in conditions))
    archive.write_atomic(out / "eer_vs_snr.csv", ("\n".join(lines) + "\n").encode("utf-8"))
    print("\n".join(lines))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="xvden", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--config", help="TOML corpus configuration")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a denoiser")
    p.add_argument("--arch", choices=("dae", "stacked"), required=True)
    p.add_argument("--pairs", required=True, help="pair manifest TSV")
    p.add_argument("--noisy", required=True, help="noisy embedding archive")
    p.add_argument("--clean", required=True, help="clean embedding archive")
    p.add_argument("--dev-pairs", help="held-out pair manifest TSV")
    p.add_argument("--out", required=True, help="output model file")
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--lr", type=float, default=0.02)
    p.add_argument("--decay", type=float, default=0.0001)
    p.add_argument("--decay-mode", choices=("inverse_time", "subtractive_per_epoch"), default="inverse_time")
    p.add_argument("--batch", type=int, default=256)
    p.add_argument("--hidden", type=int, default=1024)
    p.add_argument("--blocks", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("denoise", help="apply a denoiser to an archive")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_denoise)

    p = sub.add_parser("plda-train", help="train the PLDA back-end")
    p.add_argument("--in", dest="infile", required=True, help="labeled clean archive")
    p.add_argument("--labels", required=True, help="label manifest TSV")
    p.add_argument("--out", required=True)
    p.add_argument("--iters", type=int, default=10)
    p.add_argument("--no-length-norm", action="store_true")
    p.add_argument("--no-center", action="store_true")
    p.set_defaults(func=cmd_plda_train)

    p = sub.add_parser("score", help="score a trial list")
    p.add_argument("--plda", required=True)
    p.add_argument("--enroll", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--trials", required=True)
    p.add_argument("--denoiser", help="optional denoiser model")
    p.add_argument("--denoise-sides", choices=("both", "test"), default="both")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("eval", help="compute EER report from scores")
    p.add_argument("--scores", required=True)
    p.add_argument("--labels", required=True, help="label manifest with durations")
    p.add_argument("--out", required=True, help="report JSON path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="relative-improvement table from two reports")
    p.add_argument("--baseline", required=True)
    p.add_argument("--system", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("sweep", help="EER-vs-SNR grid over denoiser variants")
    p.add_argument("--config", help="TOML benchmark configuration")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    try:
        _setup_logging()
        args = build_parser().parse_args(argv)
        return args.func(args)
    except XvdenError as exc:
        print(f"error: {exc.category}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
