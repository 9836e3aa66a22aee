import json
import shlex

import pandas as pd
import pytest
from click.testing import CliRunner

from app import cli, parse_m_values
from services.errors import ConfigError
from tests.helpers import FIXTURES, VETO_INPUT, VETO_SENTENCE

SMOKE = str(FIXTURES / "smoke_corpus.txt")


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def veto_files(tmp_path):
    source = tmp_path / "input.txt"
    source.write_text(VETO_INPUT + "\n", encoding="utf-8")
    reference = tmp_path / "reference.txt"
    reference.write_text(VETO_SENTENCE + "\n", encoding="utf-8")
    return source, reference


def invoke(runner, *args):
    return runner.invoke(cli, [str(a) for a in args])


class TestRestore:
    def test_veto_oracle(self, runner, veto_files, tmp_path):
        source, reference = veto_files
        out = tmp_path / "out.txt"
        result = invoke(runner, "restore", "--input", source, "--reference", reference,
                        "--chunk-size", 10, "--output", out, "--report", tmp_path / "report.json")
        assert result.exit_code == 0, result.output
        assert out.read_text(encoding="utf-8") == VETO_SENTENCE + "\n"
        report = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
        assert report["classes"]["Comma"]["f1"] == 1.0

    def test_min_words_cut_above_overlap(self, runner, veto_files, tmp_path):
        source, reference = veto_files
        result = invoke(runner, "restore", "--input", source, "--reference", reference,
                        "--chunk-size", 10, "--min-words-cut", 9, "--output", tmp_path / "out.txt")
        assert result.exit_code == 2
        assert "min_words_cut=9" in result.stderr
        assert "overlap=5" in result.stderr

    def test_overlap_not_below_chunk_size(self, runner, veto_files, tmp_path):
        source, reference = veto_files
        result = invoke(runner, "restore", "--input", source, "--reference", reference,
                        "--chunk-size", 10, "--overlap", 10, "--output", tmp_path / "out.txt")
        assert result.exit_code == 2

    def test_missing_input(self, runner, tmp_path):
        result = invoke(runner, "restore", "--input", tmp_path / "nope.txt", "--reference", tmp_path / "nope.txt",
                        "--output", tmp_path / "out.txt")
        assert result.exit_code == 3

    def test_external_model_failure(self, runner, veto_files, fake_model, tmp_path):
        source, _ = veto_files
        result = invoke(runner, "restore", "--input", source, "--model", "external",
                        "--model-cmd", shlex.join([*fake_model, "--fail"]), "--output", tmp_path / "out.txt")
        assert result.exit_code == 4
        assert "external model failed" in result.stderr

    def test_external_model(self, runner, veto_files, fake_model, tmp_path):
        source, _ = veto_files
        out = tmp_path / "out.txt"
        result = invoke(runner, "restore", "--input", source, "--model", "external",
                        "--model-cmd", shlex.join(fake_model), "--chunk-size", 10, "--min-words-cut", 0,
                        "--output", out)
        assert result.exit_code == 0, result.output
        words = out.read_text(encoding="utf-8").split()
        assert [w.lower().rstrip(".") for w in words] == VETO_INPUT.split()
        assert words[0] == "The"
        assert words[-1] == "veto."

    def test_json_logs(self, runner, veto_files, tmp_path):
        source, reference = veto_files
        result = invoke(runner, "--log-format", "json", "restore", "--input", source, "--reference", reference,
                        "--output", tmp_path / "out.txt", "--report", tmp_path / "r.json")
        assert result.exit_code == 0, result.output
        records = [json.loads(line) for line in result.stderr.splitlines() if line.startswith("{")]
        assert any(r.get("chunks") == 1 for r in records)


class TestStages:
    @pytest.mark.parametrize("variant", [[], ["--case-context"]])
    def test_prepare_train_restore(self, runner, tmp_path, variant):
        pairs, table, out = tmp_path / "pairs.tsv", tmp_path / "table.tsv", tmp_path / "out.txt"
        assert invoke(runner, "prepare", "--input", SMOKE, "--output", pairs, "--chunk-size", 6).exit_code == 0
        assert invoke(runner, "train-baseline", "--pairs", pairs, "--output", table).exit_code == 0

        result = invoke(runner, "restore", "--input", SMOKE, "--reference", SMOKE, "--model", "baseline",
                        "--table", table, "--chunk-size", 6, "--output", out, *variant)
        assert result.exit_code == 0, result.output
        assert len(out.read_text(encoding="utf-8").splitlines()) == 3

    @pytest.mark.parametrize("fmt", ["plain", "encoded"])
    def test_chained_stages_match_restore(self, runner, tmp_path, fmt):
        chunks, index = tmp_path / "chunks.txt", tmp_path / "index.tsv"
        restored, merged, direct = tmp_path / "restored.txt", tmp_path / "merged.txt", tmp_path / "direct.txt"
        model = ["--model", "noise", "--noise-width", 1, "--reference", SMOKE]

        assert invoke(runner, "split", "--input", SMOKE, "--output", chunks, "--index", index,
                      "--chunk-size", 6).exit_code == 0
        result = invoke(runner, "restore-chunks", "--chunks", chunks, "--index", index, "--output", restored,
                        "--chunk-size", 6, "--format", fmt, *model)
        assert result.exit_code == 0, result.output
        result = invoke(runner, "merge", "--chunks", restored, "--index", index, "--output", merged,
                        "--chunk-size", 6, "--format", fmt)
        assert result.exit_code == 0, result.output

        result = invoke(runner, "restore", "--input", SMOKE, "--output", direct, "--chunk-size", 6,
                        "--format", fmt, *model)
        assert result.exit_code == 0, result.output
        assert merged.read_bytes() == direct.read_bytes()

    def test_split_merge_oracle_round_trip(self, runner, veto_files, tmp_path):
        source, reference = veto_files
        chunks, index, restored, merged = (tmp_path / n for n in ("c.txt", "i.tsv", "r.txt", "m.txt"))
        invoke(runner, "split", "--input", source, "--output", chunks, "--index", index, "--chunk-size", 10)
        invoke(runner, "restore-chunks", "--chunks", chunks, "--index", index, "--output", restored,
               "--reference", reference, "--chunk-size", 10, "--format", "encoded")
        result = invoke(runner, "merge", "--chunks", restored, "--index", index, "--words", chunks,
                        "--output", merged, "--chunk-size", 10, "--min-words-cut", 3, "--format", "encoded")
        assert result.exit_code == 0, result.output
        assert restored.read_text(encoding="utf-8").splitlines() == [
            "U$ L$ L$ L$ L$ L, L$ L$ L$ U$",
            "L, L$ L$ L$ U$ L$ L$ L$ L$ L.",
        ]
        assert merged.read_text(encoding="utf-8") == "U$ L$ L$ L$ L$ L, L$ L$ L$ U$ L$ L$ L$ L$ L.\n"

    def test_merge_detects_missing_line(self, runner, veto_files, tmp_path):
        source, _ = veto_files
        chunks, index, restored = tmp_path / "c.txt", tmp_path / "i.tsv", tmp_path / "r.txt"
        invoke(runner, "split", "--input", source, "--output", chunks, "--index", index, "--chunk-size", 10)
        restored.write_text("The bill does not become law, unless houses of Congress\n", encoding="utf-8")
        result = invoke(runner, "merge", "--chunks", restored, "--index", index, "--chunk-size", 10)
        assert result.exit_code == 3


class TestEvaluate:
    def test_identical_files(self, runner, veto_files):
        _, reference = veto_files
        result = invoke(runner, "evaluate", "--ref", reference, "--hyp", reference)
        assert result.exit_code == 0, result.output
        report = json.loads(result.stdout)
        for name in ("U", "L", "FullStop", "Comma", "None"):
            assert report["classes"][name]["f1"] == 1.0
        assert report["classes"]["Question"]["support"] == 0
        assert len(report["confusion"]) == 6

    def test_tsv_report(self, runner, veto_files, tmp_path):
        _, reference = veto_files
        out = tmp_path / "report.tsv"
        result = invoke(runner, "evaluate", "--ref", reference, "--hyp", reference, "--report", "tsv",
                        "--output", out)
        assert result.exit_code == 0, result.output
        frame = pd.read_csv(out, sep="\t", keep_default_na=False)
        assert list(frame.columns) == ["class", "name", "precision", "recall", "f1", "support"]

    def test_length_mismatch(self, runner, tmp_path):
        ref, hyp = tmp_path / "ref.txt", tmp_path / "hyp.txt"
        ref.write_text("A b c.\n", encoding="utf-8")
        hyp.write_text("A b.\n", encoding="utf-8")
        result = invoke(runner, "evaluate", "--ref", ref, "--hyp", hyp)
        assert result.exit_code == 5

    def test_malformed_hypothesis(self, runner, tmp_path):
        ref, hyp = tmp_path / "ref.txt", tmp_path / "hyp.txt"
        ref.write_text("A b c.\n", encoding="utf-8")
        hyp.write_text("A b , c.\n", encoding="utf-8")
        assert invoke(runner, "evaluate", "--ref", ref, "--hyp", hyp).exit_code == 3


class TestSweepAndCompare:
    def test_sweep_tsv(self, runner, veto_files, tmp_path):
        _, reference = veto_files
        out = tmp_path / "sweep.tsv"
        result = invoke(runner, "sweep", "--reference", reference, "--chunk-size", 10, "--output", out)
        assert result.exit_code == 0, result.output
        frame = pd.read_csv(out, sep="\t", keep_default_na=False)
        assert list(frame.columns) == ["m", "class", "precision", "recall", "f1"]
        assert sorted(frame["m"].unique()) == [0, 1, 2, 3, 4, 5]

    def test_sweep_value_outside_overlap(self, runner, veto_files, tmp_path):
        _, reference = veto_files
        result = invoke(runner, "sweep", "--reference", reference, "--chunk-size", 10,
                        "--min-words-cut", "0..8", "--output", tmp_path / "s.tsv")
        assert result.exit_code == 2

    def test_compare_published(self, runner):
        result = invoke(runner, "compare", "--a", "published:et_chunk_merging", "--b", "published:et_no_merging")
        assert result.exit_code == 0, result.output
        assert "+0.06" in result.stdout
        assert "+0.15" in result.stdout

    def test_compare_unknown_published(self, runner):
        result = invoke(runner, "compare", "--a", "published:nothing", "--b", "published:et_no_merging")
        assert result.exit_code == 2

    def test_stats(self, runner, veto_files):
        _, reference = veto_files
        result = invoke(runner, "stats", "--input", reference)
        assert result.exit_code == 0, result.output
        lines = result.stdout.splitlines()
        assert any(line.split() == ["U", "2"] for line in lines)
        assert any(line.split() == ["$", "13"] for line in lines)


class TestParseMValues:
    def test_forms(self):
        assert parse_m_values("0..V", 3) == [0, 1, 2, 3]
        assert parse_m_values("0,4,7", 15) == [0, 4, 7]
        assert parse_m_values("5", 15) == [5]

    def test_garbage(self):
        with pytest.raises(ConfigError):
            parse_m_values("a..b", 3)


def test_help_lists_stages(runner):
    result = runner.invoke(cli, ["--help"])
    for command in ("prepare", "split", "restore", "restore-chunks", "merge", "evaluate", "sweep",
                    "train-baseline", "compare", "stats"):
        assert command in result.output
