"""Acceptance suite: the eight gate criteria, each timed against its budget.

Every test prints one ``ACCEPTANCE n PASS/FAIL`` line (run pytest with -s or
read the captured output) and enforces the criterion's runtime bound.
"""

import math
import time
from contextlib import contextmanager

import numpy as np
import pytest

from xvden.archive import read_archive, write_archive
from xvden.cli import main as cli_main
from xvden.denoiser import DenoiserModel, build_dae, build_stacked
from xvden.embeddings import EmbeddingSet
from xvden.evaluation import eer_from_scores, relative_improvement
from xvden.modelio import load_model, save_model
from xvden.nnet import init_network
from xvden.plda import PldaModel, PldaScorer, plda_score, plda_train_em

from test_archive import golden_bytes
from test_evaluation import (
    PROTOCOL1_NOISY,
    PROTOCOL1_STACKED,
    PROTOCOL2_NOISY,
    PROTOCOL2_STACKED,
)
from test_nnet import fd_gradients, flatten_grads, max_rel_err
from test_plda import synth_speakers


@contextmanager
def criterion(number, description, budget_s):
    start = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {number} FAIL: {description}")
        raise
    elapsed = time.perf_counter() - start
    assert elapsed < budget_s, f"criterion {number} took {elapsed:.1f}s (budget {budget_s}s)"
    print(f"ACCEPTANCE {number} PASS: {description} ({elapsed:.2f}s)")


def test_criterion_1_relative_improvement_arithmetic():
    with criterion(1, "reference relative-improvement arithmetic reproduced", budget_s=1.0):
        p1 = [relative_improvement(b, s) for b, s in zip(PROTOCOL1_NOISY, PROTOCOL1_STACKED)]
        p2 = [relative_improvement(b, s) for b, s in zip(PROTOCOL2_NOISY, PROTOCOL2_STACKED)]
        # integer percentages for the headline buckets (truncation)
        assert math.floor(p1[0]) == 18  # shortest bucket, first protocol
        assert math.floor(p1[-1]) == 51  # longest bucket, first protocol
        assert math.floor(p2[0]) == 21  # shortest bucket, second protocol
        assert math.floor(p2[4]) == 66  # 8-10 s bucket, second protocol


def test_criterion_2_gradient_correctness():
    with criterion(2, "analytic gradients match central finite differences", budget_s=10.0):
        rng = np.random.default_rng(0)
        y = rng.standard_normal((8, 3))
        x = rng.standard_normal((8, 3))

        plain = init_network([(3, 5, "tanh"), (5, 3, "linear")], seed=1)
        err_plain = max_rel_err(flatten_grads(plain.backprop(y, x)[0]), fd_gradients(plain, y, x))
        assert err_plain <= 1e-4

        stacked = build_stacked(dim=3, hidden=5, seed=2)
        err_stacked = max_rel_err(flatten_grads(stacked.backprop(y, x)[0]), fd_gradients(stacked, y, x))
        assert err_stacked <= 1e-4


def oracle_eer_vectorized(tgt, non):
    """Midpoint sweep with direct counting, chunked for large sets."""
    distinct = np.unique(np.concatenate([tgt, non]))
    mids = np.concatenate([[-np.inf], (distinct[:-1] + distinct[1:]) / 2.0, [np.inf]])
    far = np.empty(mids.size)
    frr = np.empty(mids.size)
    for start in range(0, mids.size, 512):
        chunk = mids[start : start + 512, None]
        far[start : start + 512] = np.count_nonzero(non[None, :] >= chunk, axis=1) / non.size
        frr[start : start + 512] = np.count_nonzero(tgt[None, :] < chunk, axis=1) / tgt.size
    diff = far - frr
    for k in range(1, mids.size):
        if diff[k] < 0.0:
            t = diff[k - 1] / (diff[k - 1] - diff[k])
            return far[k - 1] + t * (far[k] - far[k - 1])
    return far[-1]


def test_criterion_3_eer_oracle_equivalence():
    with criterion(3, "EER equals the brute-force midpoint-sweep oracle exactly", budget_s=30.0):
        assert eer_from_scores([0.9, 0.8], [0.2, 0.1])[0] == 0.0
        assert eer_from_scores([0.1, 0.2], [0.8, 0.9])[0] == 1.0
        assert eer_from_scores([0.8, 0.7, 0.2], [0.6, 0.1, 0.05])[0] == pytest.approx(1 / 3, abs=1e-15)

        rng = np.random.default_rng(1)
        checked = 0
        for i in range(1000):
            if i < 10:
                n = 10_000  # full-size sets
            else:
                n = int(10 ** rng.uniform(0.7, 3.0))
            n_tgt = max(1, int(n * rng.uniform(0.1, 0.9)))
            n_non = max(1, n - n_tgt)
            tgt = rng.normal(0.6, 1.0, n_tgt)
            non = rng.normal(0.0, 1.0, n_non)
            if i % 2 == 0:
                tgt, non = np.round(tgt, 2), np.round(non, 2)  # force ties
            assert eer_from_scores(tgt, non)[0] == oracle_eer_vectorized(tgt, non)
            checked += 1
        assert checked == 1000


def test_criterion_4_em_monotonicity_and_recovery():
    with criterion(4, "EM log-likelihood monotone; covariances recovered", budget_s=60.0):
        rng = np.random.default_rng(2)
        between = np.diag([4.0, 1.0])
        within = np.eye(2)
        data = synth_speakers(rng, 500, 10, between, within)
        model, logliks = plda_train_em(data, iters=15)
        assert all(b - a >= -1e-8 for a, b in zip(logliks, logliks[1:]))
        assert np.linalg.norm(model.between - between) / np.linalg.norm(between) <= 0.15
        assert np.linalg.norm(model.within - within) / np.linalg.norm(within) <= 0.15

        # monotonicity on the other fixtures
        flat = synth_speakers(rng, 150, 8, np.eye(3) * 1e-12, np.eye(3))
        _, lls = plda_train_em(flat, iters=10)
        assert all(b - a >= -1e-8 for a, b in zip(lls, lls[1:]))
        skew = synth_speakers(rng, 100, 5, np.array([[2.0, 0.8], [0.8, 1.0]]), np.eye(2) * 0.5)
        _, lls = plda_train_em(skew, iters=10)
        assert all(b - a >= -1e-8 for a, b in zip(lls, lls[1:]))


def test_criterion_5_end_to_end_denoising_benefit(benchmark_result):
    elapsed = getattr(benchmark_result, "elapsed_s", 0.0)
    desc = f"seeded benchmark ({elapsed:.0f}s): clean < stacked <= dae < noisy, >=20% gain"
    with criterion(5, desc, budget_s=600.0):
        eers = {name: report.overall_eer for name, report in benchmark_result.reports.items()}
        assert eers["clean"] < eers["stacked"], eers
        assert eers["stacked"] <= eers["dae"], eers
        assert eers["dae"] < eers["noisy"], eers
        gain = relative_improvement(eers["noisy"], eers["stacked"])
        assert gain >= 20.0, f"stacked gain {gain:.1f}% < 20%"
        assert elapsed < 600.0


SMALL_TOML = """
dim = 8
n_speakers = 14
utts_per_speaker = 5
n_test_speakers = 5
test_utts_per_speaker = 4
enroll_per_speaker = 2
n_noise_prototypes_train = 5
n_noise_prototypes_unseen = 3
noise_subspace_dim = 2
max_nontarget_per_enroll = 12
seed = 21
"""


def test_criterion_6_pipeline_determinism(tmp_path):
    with criterion(6, "seeded stages rerun byte-identical", budget_s=300.0):
        config = tmp_path / "corpus.toml"
        config.write_text(SMALL_TOML)

        outputs = {}
        for run_id in ("a", "b"):
            root = tmp_path / run_id
            corpus = root / "corpus"
            assert cli_main(["synth", "--config", str(config), "--out", str(corpus)]) == 0
            train_args = [
                "--pairs", str(corpus / "train_pairs.tsv"),
                "--noisy", str(corpus / "train_noisy.xvd"),
                "--clean", str(corpus / "train_clean.xvd"),
                "--hidden", "12", "--epochs", "10", "--batch", "16", "--seed", "5",
            ]
            assert cli_main(["train", "--arch", "stacked", *train_args, "--out", str(root / "stk.model")]) == 0
            assert cli_main([
                "plda-train", "--in", str(corpus / "plda_train.xvd"),
                "--labels", str(corpus / "plda_labels.tsv"), "--out", str(root / "plda.model"),
            ]) == 0
            assert cli_main([
                "score", "--plda", str(root / "plda.model"),
                "--enroll", str(corpus / "enroll.xvd"), "--test", str(corpus / "test_noisy.xvd"),
                "--trials", str(corpus / "trials.tsv"), "--denoiser", str(root / "stk.model"),
                "--out", str(root / "scores.tsv"),
            ]) == 0
            assert cli_main([
                "eval", "--scores", str(root / "scores.tsv"),
                "--labels", str(corpus / "labels.tsv"), "--out", str(root / "report.json"),
            ]) == 0
            artifacts = sorted(p for p in root.rglob("*") if p.is_file())
            outputs[run_id] = {p.relative_to(root): p.read_bytes() for p in artifacts}

        assert outputs["a"].keys() == outputs["b"].keys()
        for name in outputs["a"]:
            assert outputs["a"][name] == outputs["b"][name], f"{name} differs between runs"


def test_criterion_7_format_round_trips(tmp_path):
    with criterion(7, "archive and model serialization round-trip bit-exactly", budget_s=5.0):
        golden = tmp_path / "golden.xvd"
        write_archive(EmbeddingSet.from_items([("a", [1.0, 2.0])]), golden)
        assert golden.read_bytes() == golden_bytes()

        rng = np.random.default_rng(3)
        emb = EmbeddingSet(12)
        for i in range(40):
            emb.add(f"k{i}", rng.standard_normal(12).astype(np.float32))
        arc = tmp_path / "arc.xvd"
        write_archive(emb, arc)
        again = read_archive(arc)
        assert again.keys == emb.keys and np.array_equal(again.matrix, emb.matrix)
        write_archive(again, tmp_path / "arc2.xvd")
        assert (tmp_path / "arc2.xvd").read_bytes() == arc.read_bytes()

        for model in (
            DenoiserModel(model=build_dae(dim=6, hidden=8, seed=4), dim=6),
            DenoiserModel(model=build_stacked(dim=6, hidden=8, seed=5), dim=6),
        ):
            path = tmp_path / f"{model.kind}.model"
            save_model(model, path)
            loaded = load_model(path)
            xs = rng.standard_normal((100, 6))
            assert np.array_equal(model.model.forward(xs), loaded.model.forward(xs))


def test_criterion_8_plda_scoring_sanity():
    with criterion(8, "PLDA scoring: zero-between, symmetry, quadrature oracle", budget_s=10.0):
        rng = np.random.default_rng(6)
        d = 8
        flat = PldaModel(mu=np.zeros(d), between=np.zeros((d, d)), within=np.eye(d) * 0.8)
        scorer = PldaScorer(flat)
        scores = scorer.score_many(rng.standard_normal((1000, d)), rng.standard_normal((1000, d)))
        assert np.all(scores == 0.0)

        a = rng.standard_normal((d, d))
        model = PldaModel(mu=rng.standard_normal(d), between=a @ a.T / d, within=np.eye(d) * 0.5)
        sym = PldaScorer(model)
        e = rng.standard_normal((1000, d))
        t = rng.standard_normal((1000, d))
        assert np.allclose(sym.score_many(e, t), sym.score_many(t, e), rtol=1e-9, atol=1e-12)

        b, w = 1.7, 0.6
        one_d = PldaModel(mu=np.zeros(1), between=np.array([[b]]), within=np.array([[w]]))
        grid = np.linspace(-30.0, 30.0, 400001)

        def norm_pdf(x, mean, var):
            return np.exp(-((x - mean) ** 2) / (2 * var)) / np.sqrt(2 * np.pi * var)

        for pair in [(0.3, 0.4), (-1.0, 1.5), (2.0, 2.0)]:
            same = np.trapezoid(norm_pdf(pair[0], grid, w) * norm_pdf(pair[1], grid, w) * norm_pdf(grid, 0, b), grid)
            diff = norm_pdf(pair[0], 0, b + w) * norm_pdf(pair[1], 0, b + w)
            want = float(np.log(same) - np.log(diff))
            got = plda_score(one_d, np.array([pair[0]]), np.array([pair[1]]))
            assert got == pytest.approx(want, abs=1e-6)
