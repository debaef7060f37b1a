import json

import numpy as np
import pytest

from xvden.archive import read_archive
from xvden.cli import main
from xvden.textio import read_report

SMALL_TOML = """
dim = 8
n_speakers = 16
utts_per_speaker = 5
n_test_speakers = 6
test_utts_per_speaker = 4
enroll_per_speaker = 2
n_noise_prototypes_train = 6
n_noise_prototypes_unseen = 3
noise_subspace_dim = 2
max_nontarget_per_enroll = 15
seed = 11
"""


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    config = root / "corpus.toml"
    config.write_text(SMALL_TOML)
    out = root / "corpus"
    assert main(["synth", "--config", str(config), "--out", str(out)]) == 0
    return out


def run(args):
    return main([str(a) for a in args])


class TestSynth:
    def test_artifacts_exist(self, corpus_dir):
        for name in (
            "train_clean.xvd",
            "train_noisy.xvd",
            "train_pairs.tsv",
            "dev_pairs.tsv",
            "plda_train.xvd",
            "plda_labels.tsv",
            "enroll.xvd",
            "test_clean.xvd",
            "test_noisy.xvd",
            "labels.tsv",
            "trials.tsv",
            "prototypes_train.xvd",
            "prototypes_unseen.xvd",
        ):
            assert (corpus_dir / name).exists(), name

    def test_seeded_rerun_byte_identical(self, corpus_dir, tmp_path):
        config = tmp_path / "c.toml"
        config.write_text(SMALL_TOML)
        again = tmp_path / "again"
        assert run(["synth", "--config", config, "--out", again]) == 0
        for path in sorted(corpus_dir.iterdir()):
            assert (again / path.name).read_bytes() == path.read_bytes(), path.name

    def test_unknown_config_key_rejected(self, tmp_path):
        config = tmp_path / "bad.toml"
        config.write_text("bogus_knob = 3\n")
        assert run(["synth", "--config", config, "--out", tmp_path / "x"]) == 1


@pytest.fixture(scope="module")
def pipeline(corpus_dir, tmp_path_factory):
    """Train both denoisers and the back-end, then score and evaluate."""
    work = tmp_path_factory.mktemp("pipeline")
    common = [
        "--pairs", corpus_dir / "train_pairs.tsv",
        "--noisy", corpus_dir / "train_noisy.xvd",
        "--clean", corpus_dir / "train_clean.xvd",
        "--dev-pairs", corpus_dir / "dev_pairs.tsv",
        "--hidden", 16, "--epochs", 30, "--lr", 0.05, "--batch", 16,
    ]
    assert run(["train", "--arch", "dae", *common, "--seed", 1, "--out", work / "dae.model"]) == 0
    assert run(["train", "--arch", "stacked", *common, "--seed", 2, "--out", work / "stk.model"]) == 0
    assert run([
        "plda-train", "--in", corpus_dir / "plda_train.xvd",
        "--labels", corpus_dir / "plda_labels.tsv", "--out", work / "plda.model",
    ]) == 0
    for name, extra in (
        ("noisy", []),
        ("stacked", ["--denoiser", work / "stk.model"]),
    ):
        assert run([
            "score", "--plda", work / "plda.model",
            "--enroll", corpus_dir / "enroll.xvd",
            "--test", corpus_dir / "test_noisy.xvd",
            "--trials", corpus_dir / "trials.tsv",
            *extra, "--out", work / f"{name}.scores.tsv",
        ]) == 0
        assert run([
            "eval", "--scores", work / f"{name}.scores.tsv",
            "--labels", corpus_dir / "labels.tsv",
            "--out", work / f"{name}.report.json",
        ]) == 0
    return work


class TestPipeline:
    def test_model_history_written(self, pipeline):
        lines = (pipeline / "dae.history.csv").read_text().splitlines()
        assert lines[0] == "epoch,train_mse,dev_mse"
        assert lines[-1].startswith("final,")
        assert len(lines) == 30 + 2  # header + one row per epoch + final

    def test_reports_have_buckets_and_det(self, pipeline):
        report = read_report(pipeline / "noisy.report.json")
        assert report["schema_version"] == 1
        assert 0.0 <= report["overall"]["eer"] <= 1.0
        assert (pipeline / "noisy.report.det.csv").exists()

    def test_report_subcommand(self, pipeline, capsys):
        out = pipeline / "improvement.tsv"
        code = run([
            "report", "--baseline", pipeline / "noisy.report.json",
            "--system", pipeline / "stacked.report.json", "--out", out,
        ])
        assert code == 0
        printed = capsys.readouterr().out.splitlines()
        assert printed[-1].startswith("overall\t")
        assert out.exists()

    def test_report_reproduces_reference_bucket_improvements(self, tmp_path, capsys):
        # bucket EERs from the reference duration tables (noisy baseline and
        # stacked system) must yield the expected per-bucket percentages
        labels = ["s<2", "2<=s<4", "4<=s<6", "6<=s<8", "8<=s<10", "10<=s<12", "s>=12"]
        noisy_row = [15.94, 12.88, 10.5, 7.836, 8.889, 6.667, 5.131]
        stacked_row = [13.04, 10.46, 8.011, 5.224, 5.333, 3.59, 2.502]

        def report_json(row):
            return {
                "schema_version": 1,
                "n_trials": 0,
                "overall": {"eer": sum(row) / len(row) / 100, "threshold": 0.0},
                "buckets": {
                    label: {"eer": eer / 100, "threshold": 0.0, "n_target": 1, "n_nontarget": 1}
                    for label, eer in zip(labels, row)
                },
                "bucket_counts": {label: 1 for label in labels},
                "unbucketed": 0,
            }

        base = tmp_path / "noisy.json"
        system = tmp_path / "stacked.json"
        base.write_text(json.dumps(report_json(noisy_row)))
        system.write_text(json.dumps(report_json(stacked_row)))
        assert run(["report", "--baseline", base, "--system", system, "--out", tmp_path / "impr.tsv"]) == 0
        printed = dict(
            line.split("\t") for line in capsys.readouterr().out.splitlines()
        )
        want = ["18.19", "18.79", "23.70", "33.33", "40.00", "46.15", "51.24"]
        assert [printed[label] for label in labels] == want

    def test_denoise_subcommand_roundtrip(self, pipeline, corpus_dir, tmp_path):
        out = tmp_path / "denoised.xvd"
        assert run(["denoise", "--model", pipeline / "stk.model",
                    "--in", corpus_dir / "test_noisy.xvd", "--out", out]) == 0
        noisy = read_archive(corpus_dir / "test_noisy.xvd")
        denoised = read_archive(out)
        assert denoised.keys == noisy.keys
        assert not np.array_equal(denoised.matrix, noisy.matrix)

    def test_training_seeded_rerun_byte_identical(self, pipeline, corpus_dir, tmp_path):
        out = tmp_path / "dae2.model"
        assert run([
            "train", "--arch", "dae",
            "--pairs", corpus_dir / "train_pairs.tsv",
            "--noisy", corpus_dir / "train_noisy.xvd",
            "--clean", corpus_dir / "train_clean.xvd",
            "--dev-pairs", corpus_dir / "dev_pairs.tsv",
            "--hidden", 16, "--epochs", 30, "--lr", 0.05, "--batch", 16,
            "--seed", 1, "--out", out,
        ]) == 0
        assert out.read_bytes() == (pipeline / "dae.model").read_bytes()
        assert (tmp_path / "dae2.history.csv").read_bytes() == (pipeline / "dae.history.csv").read_bytes()


class TestPldaFlags:
    def test_preprocessing_ablation_flags(self, corpus_dir, tmp_path):
        from xvden.modelio import load_model

        out = tmp_path / "raw_plda.model"
        assert run([
            "plda-train", "--in", corpus_dir / "plda_train.xvd",
            "--labels", corpus_dir / "plda_labels.tsv",
            "--no-length-norm", "--no-center", "--out", out,
        ]) == 0
        model = load_model(out)
        assert not model.fingerprint.center
        assert not model.fingerprint.length_norm
        assert model.fingerprint.mean is None

    def test_log_level_env_accepted(self, corpus_dir, tmp_path, monkeypatch):
        monkeypatch.setenv("XVDEN_LOG", "debug")
        assert run([
            "plda-train", "--in", corpus_dir / "plda_train.xvd",
            "--labels", corpus_dir / "plda_labels.tsv",
            "--out", tmp_path / "m.model",
        ]) == 0


class TestSweep:
    def test_grid_csv_written(self, tmp_path, capsys):
        config = tmp_path / "sweep.toml"
        config.write_text(
            SMALL_TOML + "hidden = 12\nepochs = 15\nbatch_size = 16\nsnrs = [0.0, 15.0]\n"
        )
        assert run(["sweep", "--config", config, "--out", tmp_path / "grid"]) == 0
        lines = (tmp_path / "grid" / "eer_vs_snr.csv").read_text().splitlines()
        assert lines[0] == "snr_db,clean,noisy,dae,stacked"
        assert len(lines) == 3
        snrs = [float(line.split(",")[0]) for line in lines[1:]]
        assert snrs == [0.0, 15.0]
        # clean condition is unaffected by the test-corruption strength
        clean_col = [line.split(",")[1] for line in lines[1:]]
        assert clean_col[0] == clean_col[1]

    def test_unknown_key_rejected(self, tmp_path):
        config = tmp_path / "bad.toml"
        config.write_text("mystery = 1\n")
        assert run(["sweep", "--config", config, "--out", tmp_path / "x"]) == 1


class TestErrorHandling:
    def test_empty_scores_exit_code_and_category(self, corpus_dir, tmp_path, capsys):
        empty = tmp_path / "empty.tsv"
        empty.write_text("")
        code = run(["eval", "--scores", empty, "--labels", corpus_dir / "labels.tsv", "--out", tmp_path / "r.json"])
        assert code == 1
        err = capsys.readouterr().err
        assert err.startswith("error: empty-input:")
        assert "\n" not in err.strip()

    def test_unknown_flag_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["eval", "--bogus"])
        assert exc.value.code == 2

    def test_missing_subcommand_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2

    def test_wrong_model_kind_named(self, pipeline, corpus_dir, tmp_path, capsys):
        code = run(["denoise", "--model", pipeline / "plda.model",
                    "--in", corpus_dir / "test_noisy.xvd", "--out", tmp_path / "x.xvd"])
        assert code == 1
        assert capsys.readouterr().err.startswith("error: format:")

    def test_missing_file_io_error(self, tmp_path, capsys):
        code = run(["denoise", "--model", tmp_path / "nope.model",
                    "--in", tmp_path / "nope.xvd", "--out", tmp_path / "x.xvd"])
        assert code == 1
        assert capsys.readouterr().err.startswith("error: io:")

    def test_bad_log_level_rejected(self, monkeypatch, capsys):
        monkeypatch.setenv("XVDEN_LOG", "chatty")
        assert main(["synth", "--out", "/tmp/wont-happen"]) == 1
        assert capsys.readouterr().err.startswith("error: config:")
