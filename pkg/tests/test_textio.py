import json

import numpy as np
import pytest

from xvden.errors import DataError, EmptyInputError, FormatError
from xvden.evaluation import ScoreSet, Trial, evaluate_scores
from xvden.textio import (
    read_labels,
    read_pair_keys,
    read_report,
    read_scores,
    read_trials,
    report_from_dict,
    report_to_dict,
    write_det_csv,
    write_improvement_table,
    write_labels,
    write_pair_keys,
    write_report,
    write_scores,
    write_trials,
)


class TestManifests:
    def test_pair_keys_round_trip(self, tmp_path):
        entries = [("n/1", "c/1", 3.5, "noiseA"), ("n/2", "c/1", None, None)]
        path = tmp_path / "pairs.tsv"
        write_pair_keys(entries, path)
        assert read_pair_keys(path) == entries
        text = path.read_text()
        assert not text.splitlines()[0].startswith("noisy")  # no header row

    def test_labels_round_trip(self, tmp_path):
        speaker_of = {"k1": "spkA", "k2": "spkB"}
        duration_of = {"k1": 2.25}
        path = tmp_path / "labels.tsv"
        write_labels(speaker_of, duration_of, path)
        got_spk, got_dur = read_labels(path)
        assert got_spk == speaker_of
        assert got_dur == duration_of

    def test_trials_round_trip_with_durations(self, tmp_path):
        trials = [Trial("e1", "t1", True), Trial("e1", "t2", False)]
        path = tmp_path / "trials.tsv"
        write_trials(trials, path)
        got = read_trials(path, duration_of={"t1": 3.0})
        assert [(t.enroll_key, t.test_key, t.is_target) for t in got] == [
            ("e1", "t1", True),
            ("e1", "t2", False),
        ]
        assert got[0].test_duration_s == 3.0
        assert got[1].test_duration_s is None

    def test_scores_round_trip(self, tmp_path):
        scores = ScoreSet(
            trials=[Trial("e1", "t1", True), Trial("e2", "t2", False)],
            scores=np.array([1.25, -0.5]),
        )
        path = tmp_path / "scores.tsv"
        write_scores(scores, path)
        got = read_scores(path)
        assert np.array_equal(got.scores, scores.scores)

    def test_empty_scores_rejected(self, tmp_path):
        path = tmp_path / "empty.tsv"
        path.write_text("")
        with pytest.raises(EmptyInputError):
            read_scores(path)

    def test_tab_in_field_rejected(self, tmp_path):
        with pytest.raises(DataError):
            write_labels({"bad\tkey": "s"}, {}, tmp_path / "x.tsv")

    def test_bad_trial_label_rejected(self, tmp_path):
        path = tmp_path / "trials.tsv"
        path.write_text("e1\tt1\tmaybe\n")
        with pytest.raises(FormatError):
            read_trials(path)

    def test_wrong_column_count_rejected(self, tmp_path):
        path = tmp_path / "labels.tsv"
        path.write_text("just-one-column\n")
        with pytest.raises(FormatError, match="expected 3"):
            read_labels(path)


def small_report():
    # one score inversion per bucket so every EER is nonzero
    scores = ScoreSet(
        trials=[
            Trial("e1", "t1", True, 1.5),
            Trial("e1", "t2", True, 1.5),
            Trial("e1", "t3", False, 1.5),
            Trial("e1", "t4", False, 1.5),
            Trial("e2", "t5", True, 13.0),
            Trial("e2", "t6", True, 13.0),
            Trial("e2", "t7", False, 13.0),
            Trial("e2", "t8", False, 13.0),
        ],
        scores=np.array([2.0, 0.5, 1.0, -1.0, 1.5, 3.0, 2.0, -2.0]),
    )
    return evaluate_scores(scores)


class TestReports:
    def test_report_round_trip(self, tmp_path):
        report = small_report()
        path = tmp_path / "report.json"
        write_report(report, path)
        data = read_report(path)
        again = report_from_dict(data)
        assert again.overall_eer == report.overall_eer
        assert set(again.buckets) == set(report.buckets)
        for label in report.buckets:
            assert again.buckets[label].eer == report.buckets[label].eer

    def test_schema_version_checked(self, tmp_path):
        report = small_report()
        path = tmp_path / "report.json"
        write_report(report, path)
        data = json.loads(path.read_text())
        data["schema_version"] = 99
        path.write_text(json.dumps(data))
        with pytest.raises(FormatError, match="schema version"):
            read_report(path)

    def test_serialization_deterministic(self, tmp_path):
        report = small_report()
        write_report(report, tmp_path / "a.json")
        write_report(report, tmp_path / "b.json")
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_improvement_table(self, tmp_path):
        base = report_to_dict(small_report())
        sys_report = json.loads(json.dumps(base))
        sys_report["overall"]["eer"] = base["overall"]["eer"] / 2.0
        for label in sys_report["buckets"]:
            sys_report["buckets"][label]["eer"] = base["buckets"][label]["eer"] / 4.0
        path = tmp_path / "impr.tsv"
        rows = write_improvement_table(base, sys_report, path)
        assert rows[-1][0] == "overall"
        assert rows[-1][1] == pytest.approx(50.0)
        for label, pct in rows[:-1]:
            assert pct == pytest.approx(75.0)
        assert path.exists()

    def test_det_csv(self, tmp_path):
        report = small_report()
        path = tmp_path / "det.csv"
        write_det_csv(report.det, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "far,frr"
        assert len(lines) == len(report.det) + 1
