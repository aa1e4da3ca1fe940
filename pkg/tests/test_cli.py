import json
import os

import pytest

from duplex_kit.cli import run_command
from duplex_kit.constants import EXIT_DATA, EXIT_OK, EXIT_USAGE
from duplex_kit.io import read_sequence, read_timelines, write_timelines


def cli(*args):
    return run_command(["--profile", "testing", *args])


def read_bytes(path):
    with open(path, "rb") as fh:
        return fh.read()


@pytest.fixture
def corpus(tmp_path):
    """Six synthetic task dialogues with interruptions."""
    out = str(tmp_path / "corpus")
    code = cli("synth", "--template", "task:1", "--template", "task:5", "--interaction", "interrupt",
               "--n", "6", "--seed", "3", "--out", out)
    assert code == EXIT_OK
    return out


class TestUsage:
    """Test cases for exit codes on bad invocations."""

    def test_help(self):
        """Test --help exits cleanly."""
        assert run_command(["--help"]) == EXIT_OK

    def test_unknown_flag(self):
        """Test an unknown option is a usage error."""
        assert cli("synth", "--bogus") == EXIT_USAGE

    def test_bad_choice(self):
        """Test an invalid choice is a usage error."""
        assert cli("synth", "--spec", "vague") == EXIT_USAGE

    def test_missing_required(self):
        """Test a missing required option is a usage error."""
        assert cli("build-seq") == EXIT_USAGE

    def test_missing_input(self, tmp_path):
        """Test a missing input file is a data error."""
        assert cli("build-seq", "--input", str(tmp_path / "none.jsonl"), "--out", str(tmp_path)) == EXIT_DATA

    def test_malformed_line(self, tmp_path):
        """Test a malformed JSONL line is a data error."""
        path = tmp_path / "bad.jsonl"
        path.write_text("{not json}\n", encoding="utf-8")
        assert cli("build-seq", "--input", str(path), "--out", str(tmp_path)) == EXIT_DATA

    def test_unknown_policy(self, corpus):
        """Test an unknown policy name is a data error."""
        timelines = os.path.join(corpus, "timelines.jsonl")
        assert cli("run", "--input", timelines, "--policy", "nope", "--out", corpus) == EXIT_DATA

    def test_unknown_template(self, tmp_path):
        """Test an unknown template key is a data error."""
        assert cli("synth", "--template", "task:99", "--out", str(tmp_path)) == EXIT_DATA


class TestSynthCommand:
    """Test cases for the synth command."""

    def test_outputs(self, corpus):
        """Test timelines and manifest are written and agree."""
        timelines = read_timelines(os.path.join(corpus, "timelines.jsonl"))
        with open(os.path.join(corpus, "manifest.json"), encoding="utf-8") as fh:
            manifest = json.load(fh)
        assert manifest["requested"] == 6
        assert manifest["kept"] == len(timelines)
        assert manifest["interactions"] == ["interrupt"]

    def test_deterministic(self, corpus, tmp_path):
        """Test the same seed produces byte-identical files."""
        again = str(tmp_path / "again")
        assert cli("synth", "--template", "task:1", "--template", "task:5", "--interaction", "interrupt",
                   "--n", "6", "--seed", "3", "--out", again) == EXIT_OK
        for name in ("timelines.jsonl", "manifest.json"):
            assert read_bytes(os.path.join(corpus, name)) == read_bytes(os.path.join(again, name))


class TestBuildSeqCommand:
    """Test cases for the build-seq command."""

    def test_builds_every_timeline(self, corpus):
        """Test one sequence file per timeline, with lookahead recorded."""
        timelines = read_timelines(os.path.join(corpus, "timelines.jsonl"))
        assert cli("build-seq", "--input", os.path.join(corpus, "timelines.jsonl"), "--lookahead",
                   "--out", corpus) == EXIT_OK
        for timeline in timelines:
            seq, _ = read_sequence(os.path.join(corpus, "sequences", f"{timeline.session_id}.jsonl"))
            assert seq.lookahead_applied == 1

    def test_char_tokenizer_overflow(self, tmp_path, make_timeline, make_utterance):
        """Test a word too short for its characters is a data error."""
        path = str(tmp_path / "short.jsonl")
        write_timelines(path, [make_timeline(make_utterance("assistant", "speech", 1, ["hello"]))])
        assert cli("build-seq", "--input", path, "--out", str(tmp_path)) == EXIT_OK
        assert cli("build-seq", "--input", path, "--tokenizer", "char", "--out", str(tmp_path)) == EXIT_DATA

    def test_fitted_codec(self, corpus, tmp_path):
        """Test build-seq accepts a codec written by the codec command."""
        codec_dir = str(tmp_path / "codec")
        assert cli("codec", "--depths", "2", "--k", "4", "--dimension", "3", "--frames", "64",
                   "--iterations", "3", "--out", codec_dir) == EXIT_OK
        assert cli("build-seq", "--input", os.path.join(corpus, "timelines.jsonl"),
                   "--codec", os.path.join(codec_dir, "codec.json"), "--out", corpus) == EXIT_OK

    def test_deterministic(self, corpus, tmp_path):
        """Test two builds of one corpus write byte-identical sequence files."""
        timelines = os.path.join(corpus, "timelines.jsonl")
        first, second = str(tmp_path / "a"), str(tmp_path / "b")
        for out in (first, second):
            assert cli("build-seq", "--input", timelines, "--mode", "finetuning", "--lookahead",
                       "--out", out) == EXIT_OK
        names = sorted(os.listdir(os.path.join(first, "sequences")))
        assert names and names == sorted(os.listdir(os.path.join(second, "sequences")))
        for name in names:
            assert read_bytes(os.path.join(first, "sequences", name)) == read_bytes(os.path.join(second, "sequences", name))


class TestCodecCommand:
    """Test cases for the codec demo."""

    def test_report(self, tmp_path):
        """Test the report lists one reconstruction error per depth."""
        out = str(tmp_path)
        assert cli("codec", "--depths", "3", "--k", "4", "--dimension", "2", "--frames", "50",
                   "--iterations", "4", "--seed", "1", "--out", out) == EXIT_OK
        with open(os.path.join(out, "codec_report.json"), encoding="utf-8") as fh:
            report = json.load(fh)
        assert report["depths"] == 3
        assert len(report["reconstruction_mse"]) == 3
        assert report["reconstruction_mse"][-1] == pytest.approx(report["round_trip_mse"], abs=1e-6)

    def test_too_few_frames(self, tmp_path):
        """Test fitting with fewer frames than codewords is a data error."""
        assert cli("codec", "--k", "8", "--frames", "4", "--out", str(tmp_path)) == EXIT_DATA

    def test_deterministic(self, tmp_path):
        """Test the same seed writes byte-identical codec and report files."""
        first, second = str(tmp_path / "a"), str(tmp_path / "b")
        for out in (first, second):
            assert cli("codec", "--depths", "3", "--k", "4", "--dimension", "2", "--frames", "50",
                       "--iterations", "4", "--seed", "2", "--out", out) == EXIT_OK
        for name in ("codec.json", "codec_report.json"):
            assert read_bytes(os.path.join(first, name)) == read_bytes(os.path.join(second, name))


class TestRunAndEval:
    """Test cases for run followed by eval."""

    def test_silent_sessions_never_take_over(self, corpus):
        """Test a silent assistant scores TOR 0 on pause handling."""
        timelines = os.path.join(corpus, "timelines.jsonl")
        assert cli("run", "--input", timelines, "--policy", "silent", "--out", corpus) == EXIT_OK
        assert cli("eval", "--sessions", os.path.join(corpus, "sessions"), "--timelines", timelines,
                   "--scenario", "pause_handling", "--out", corpus) == EXIT_OK
        with open(os.path.join(corpus, "report_pause_handling.json"), encoding="utf-8") as fh:
            report = json.load(fh)
        assert report["tor"] == 0.0
        assert report["N"] == len(read_timelines(timelines))
        assert report["behavior"]["unknown"] == 1.0
        assert report["stop_latency"] == {"mean": None, "n": 0}

    @pytest.mark.parametrize("policy", ["scripted", "vad:4", "random"])
    def test_policies_run(self, corpus, policy):
        """Test every policy produces one session per timeline."""
        timelines = os.path.join(corpus, "timelines.jsonl")
        assert cli("run", "--input", timelines, "--policy", policy, "--lookahead", "--out", corpus) == EXIT_OK
        assert len(os.listdir(os.path.join(corpus, "sessions"))) == len(read_timelines(timelines))

    def test_run_is_deterministic(self, corpus, tmp_path):
        """Test session files are byte-identical across runs."""
        timelines = os.path.join(corpus, "timelines.jsonl")
        first, second = str(tmp_path / "a"), str(tmp_path / "b")
        for out in (first, second):
            assert cli("run", "--input", timelines, "--policy", "random", "--seed", "4", "--out", out) == EXIT_OK
        names = sorted(os.listdir(os.path.join(first, "sessions")))
        assert names == sorted(os.listdir(os.path.join(second, "sessions")))
        for name in names:
            assert read_bytes(os.path.join(first, "sessions", name)) == read_bytes(os.path.join(second, "sessions", name))

    def test_eval_is_deterministic(self, corpus, tmp_path):
        """Test two evaluations of the same sessions write byte-identical reports."""
        timelines = os.path.join(corpus, "timelines.jsonl")
        assert cli("run", "--input", timelines, "--policy", "vad:4", "--out", corpus) == EXIT_OK
        first, second = str(tmp_path / "a"), str(tmp_path / "b")
        for out in (first, second):
            assert cli("eval", "--sessions", os.path.join(corpus, "sessions"), "--timelines", timelines,
                       "--scenario", "user_interruption", "--out", out) == EXIT_OK
        name = "report_user_interruption.json"
        assert read_bytes(os.path.join(first, name)) == read_bytes(os.path.join(second, name))

    def test_eval_config_file(self, corpus, tmp_path):
        """Test eval reads its thresholds from a config file and rejects bad ones."""
        timelines = os.path.join(corpus, "timelines.jsonl")
        assert cli("run", "--input", timelines, "--policy", "scripted", "--out", corpus) == EXIT_OK
        good, bad = tmp_path / "good.json", tmp_path / "bad.json"
        good.write_text(json.dumps({"takeover_rule": "and"}), encoding="utf-8")
        bad.write_text(json.dumps({"takeover_rule": "xor"}), encoding="utf-8")
        args = ["eval", "--sessions", os.path.join(corpus, "sessions"), "--timelines", timelines, "--out", corpus]
        assert cli(*args, "--config", str(good)) == EXIT_OK
        assert cli(*args, "--config", str(bad)) == EXIT_DATA

    def test_eval_without_sessions(self, corpus, tmp_path):
        """Test an empty session directory is a data error."""
        empty = tmp_path / "empty"
        empty.mkdir()
        assert cli("eval", "--sessions", str(empty), "--timelines", os.path.join(corpus, "timelines.jsonl"),
                   "--out", str(tmp_path)) == EXIT_DATA
