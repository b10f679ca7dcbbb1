"""End-to-end checks for the command-line driver.

Everything runs through main() with an argv list instead of a subprocess,
so monkeypatching and tmp_path behave normally and failures show real
tracebacks.
"""

from __future__ import annotations

import csv
import hashlib
import json
import xml.etree.ElementTree as ET
from pathlib import Path

import pytest

from sleeplog import cli
from sleeplog.records import PipelineLedger


def tree_hashes(root: Path) -> dict[str, str]:
    """sha256 of every file under root, keyed by relative posix path."""
    out: dict[str, str] = {}
    for path in sorted(root.rglob("*")):
        if path.is_file():
            out[path.relative_to(root).as_posix()] = hashlib.sha256(
                path.read_bytes()
            ).hexdigest()
    return out


def read_stamped_csv(path: Path) -> tuple[str, list[dict]]:
    """Return (comment line, rows) of a CSV written by the tool."""
    with open(path, "r", encoding="utf-8", newline="") as handle:
        stamp = handle.readline().rstrip("\n")
        rows = list(csv.DictReader(handle))
    return stamp, rows


def run_all_into(out: Path, corpus_dir: Path, cache: Path, extra: list[str] | None = None) -> int:
    argv = [
        "run-all",
        str(corpus_dir / "corpus.jsonl"),
        "--out",
        str(out),
        "--timelines",
        str(corpus_dir / "timelines.jsonl"),
        "--geo-offline",
        "--geo-cache",
        str(cache),
    ]
    return cli.main(argv + (extra or []))


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory) -> Path:
    d = tmp_path_factory.mktemp("synth")
    assert cli.main(["synth", "--out", str(d), "--synth-users", "14", "--seed", "77"]) == 0
    return d


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory, corpus_dir) -> Path:
    out = tmp_path_factory.mktemp("run")
    cache = tmp_path_factory.mktemp("cache") / "geo_cache.json"
    assert run_all_into(out, corpus_dir, cache) == 0
    return out


# --- synth subcommand ---------------------------------------------------------

def test_synth_writes_the_four_corpus_files(corpus_dir):
    for name in ("corpus.jsonl", "timelines.jsonl", "truth.jsonl", "synth_manifest.json"):
        assert (corpus_dir / name).exists(), name
    first = json.loads((corpus_dir / "truth.jsonl").read_text().splitlines()[0])
    assert first["record"] == "meta"


def test_synth_stdout_reports_counts(tmp_path, capsys):
    assert cli.main(["synth", "--out", str(tmp_path), "--synth-users", "6", "--seed", "5"]) == 0
    out = capsys.readouterr().out
    assert "synth: run" in out
    assert "tweets" in out


def test_synth_seed_changes_output(tmp_path, corpus_dir):
    assert cli.main(["synth", "--out", str(tmp_path), "--synth-users", "14", "--seed", "78"]) == 0
    a = hashlib.sha256((corpus_dir / "corpus.jsonl").read_bytes()).hexdigest()
    b = hashlib.sha256((tmp_path / "corpus.jsonl").read_bytes()).hexdigest()
    assert a != b
    run_a = json.loads((corpus_dir / "synth_manifest.json").read_text())["run_id"]
    run_b = json.loads((tmp_path / "synth_manifest.json").read_text())["run_id"]
    assert run_a != run_b


# --- run-all happy path -------------------------------------------------------

EXPECTED_FILES = [
    "tweets.jsonl",
    "logs.jsonl",
    "filtered.jsonl",
    "countries.csv",
    "ingest_rejects.csv",
    "parse_rejects.csv",
    "filter_rejects.csv",
    "ledger.json",
    "funnel.csv",
    "analysis/summary.json",
    "analysis/users.csv",
    "analysis/frequency.csv",
    "analysis/start_bins.json",
    "analysis/wake_heatmap.json",
    "analysis/country_duration.json",
    "analysis/activity.json",
    "analysis/friends.json",
    "analysis/presleep.json",
    "analysis/robustness/summary.json",
    "report/clock.svg",
    "report/frequency.svg",
    "report/start_bins.svg",
    "manifest_ingest.json",
    "manifest_parse.json",
    "manifest_filter.json",
    "manifest_geo.json",
    "manifest_analyze.json",
    "manifest_report.json",
    "manifest_funnel.json",
]


def test_run_all_writes_every_expected_file(run_dir):
    missing = [name for name in EXPECTED_FILES if not (run_dir / name).exists()]
    assert missing == []


def test_run_all_heatmap_chart_tracks_analysis(run_dir):
    doc = json.loads((run_dir / "analysis" / "wake_heatmap.json").read_text())
    assert ("heatmap" in doc) == (run_dir / "report" / "wake_heatmap.svg").exists()


def test_funnel_stages_chain_without_loss(run_dir):
    _, rows = read_stamped_csv(run_dir / "funnel.csv")
    assert [r["stage"] for r in rows] == ["ingest", "dedupe", "parse", "filter"]
    for prev, cur in zip(rows, rows[1:]):
        assert int(cur["tweets_in"]) == int(prev["tweets_kept"])
    for r in rows:
        assert int(r["tweets_kept"]) <= int(r["tweets_in"])
        assert int(r["users_kept"]) <= int(r["tweets_kept"])


def test_ledger_file_balances_each_stage(run_dir):
    ledger = PipelineLedger.from_json((run_dir / "ledger.json").read_text())
    assert [s.name for s in ledger.stages] == ["ingest", "dedupe", "parse", "filter"]
    for stage in ledger.stages:
        assert stage.input - stage.kept == sum(stage.rejected_by_reason.values())


def test_manifest_hashes_match_files_on_disk(run_dir):
    def sha(path: Path) -> str:
        return hashlib.sha256(path.read_bytes()).hexdigest()

    funnel = json.loads((run_dir / "manifest_funnel.json").read_text())
    assert funnel["outputs"]["funnel.csv"] == sha(run_dir / "funnel.csv")
    assert funnel["inputs"]["ledger.json"] == sha(run_dir / "ledger.json")

    report = json.loads((run_dir / "manifest_report.json").read_text())
    for name, digest in report["outputs"].items():
        assert digest == sha(run_dir / "report" / name), name
    for name, digest in report["inputs"].items():
        assert digest == sha(run_dir / "analysis" / name), name

    ingest = json.loads((run_dir / "manifest_ingest.json").read_text())
    assert ingest["outputs"]["tweets.jsonl"] == sha(run_dir / "tweets.jsonl")


def test_manifests_share_structure_and_settings(run_dir):
    stamps = set()
    for path in run_dir.glob("manifest_*.json"):
        doc = json.loads(path.read_text())
        assert set(doc) == {"command", "tool_version", "settings", "inputs", "outputs"}
        stamps.add(doc["settings"])
    assert len(stamps) == 1


def test_csv_files_carry_the_settings_stamp(run_dir):
    for rel in ("funnel.csv", "analysis/users.csv", "countries.csv"):
        stamp, _ = read_stamped_csv(run_dir / rel)
        assert stamp.startswith("# sleeplog-config: "), rel
        assert "min_duration_minutes=120" in stamp
        assert "workers=" not in stamp


def test_report_charts_are_valid_xml(run_dir):
    charts = list((run_dir / "report").glob("*.svg"))
    assert len(charts) >= 3
    for path in charts:
        root = ET.fromstring(path.read_text())
        assert root.tag.endswith("svg")


def test_users_csv_has_expected_columns(run_dir):
    _, rows = read_stamped_csv(run_dir / "analysis" / "users.csv")
    assert rows
    assert list(rows[0]) == [
        "user_id", "n_logs", "avg_duration_minutes", "avg_deep_sleep_pct",
        "country", "country_method", "tweets_per_day", "friends_count",
        "presleep_tweet_prob",
    ]
    assert any(r["presleep_tweet_prob"] != "" for r in rows)


def test_countries_csv_uses_known_methods(run_dir):
    _, rows = read_stamped_csv(run_dir / "countries.csv")
    methods = {r["method"] for r in rows}
    assert methods <= {"TIMEZONE", "GEOCODED_LOCATION", "LANGUAGE_PROXY", "UNRESOLVED"}
    assert rows == sorted(rows, key=lambda r: r["user_id"])


def test_analyze_without_timelines_skips_presleep(tmp_path, run_dir):
    rc = cli.main(
        [
            "analyze",
            "--out", str(tmp_path),
            "--logs", str(run_dir / "filtered.jsonl"),
            "--tweets", str(run_dir / "tweets.jsonl"),
            "--countries", str(run_dir / "countries.csv"),
        ]
    )
    assert rc == 0
    assert not (tmp_path / "analysis" / "presleep.json").exists()
    _, rows = read_stamped_csv(tmp_path / "analysis" / "users.csv")
    assert all(r["presleep_tweet_prob"] == "" for r in rows)


# --- determinism --------------------------------------------------------------

def test_repeat_runs_are_byte_identical(tmp_path, corpus_dir, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run_all_into(a, corpus_dir, tmp_path / "cache_a.json") == 0
    assert run_all_into(b, corpus_dir, tmp_path / "cache_b.json") == 0
    assert tree_hashes(a) == tree_hashes(b)
    out = capsys.readouterr().out
    assert "ingest: kept" in out
    assert "parse: kept" in out


def test_worker_count_never_changes_bytes(tmp_path, corpus_dir, run_dir):
    c = tmp_path / "c"
    assert run_all_into(c, corpus_dir, tmp_path / "cache_c.json", ["--workers", "3"]) == 0
    assert tree_hashes(c) == tree_hashes(run_dir)


def test_geo_rerun_is_byte_identical(tmp_path, run_dir):
    first, second = tmp_path / "g1", tmp_path / "g2"
    for out in (first, second):
        rc = cli.main(
            [
                "geo",
                str(run_dir / "tweets.jsonl"),
                "--out", str(out),
                "--geo-offline",
                "--geo-cache", str(tmp_path / "cache.json"),
            ]
        )
        assert rc == 0
    assert tree_hashes(first) == tree_hashes(second)


# --- settings precedence through the CLI --------------------------------------

def test_env_override_reaches_the_filter(tmp_path, run_dir, monkeypatch):
    monkeypatch.setenv("SLEEPLOG_MIN_DURATION_MINUTES", "600")
    rc = cli.main(["filter", str(run_dir / "logs.jsonl"), "--out", str(tmp_path)])
    assert rc == 0
    stamp, _ = read_stamped_csv(tmp_path / "filter_rejects.csv")
    assert "min_duration_minutes=600" in stamp
    for line in (tmp_path / "filtered.jsonl").read_text().splitlines():
        assert 600 <= json.loads(line)["duration_minutes"] <= 720


def test_flag_beats_environment(tmp_path, run_dir, monkeypatch):
    monkeypatch.setenv("SLEEPLOG_MIN_DURATION_MINUTES", "600")
    rc = cli.main(
        [
            "filter", str(run_dir / "logs.jsonl"),
            "--out", str(tmp_path),
            "--min-duration-minutes", "200",
        ]
    )
    assert rc == 0
    stamp, _ = read_stamped_csv(tmp_path / "filter_rejects.csv")
    assert "min_duration_minutes=200" in stamp


def test_config_file_is_read(tmp_path, run_dir):
    cfg = tmp_path / "settings.cfg"
    cfg.write_text("min_duration_minutes = 300  # strict night\n")
    rc = cli.main(
        ["filter", str(run_dir / "logs.jsonl"), "--out", str(tmp_path), "--config", str(cfg)]
    )
    assert rc == 0
    stamp, _ = read_stamped_csv(tmp_path / "filter_rejects.csv")
    assert "min_duration_minutes=300" in stamp


# --- failure modes ------------------------------------------------------------

def test_missing_input_file_exits_1(tmp_path, capsys):
    rc = cli.main(["ingest", str(tmp_path / "nope.jsonl"), "--out", str(tmp_path)])
    assert rc == 1
    assert capsys.readouterr().err.startswith("error:")


def test_analyze_on_empty_directory_exits_1(tmp_path, capsys):
    assert cli.main(["analyze", "--out", str(tmp_path)]) == 1
    assert "error:" in capsys.readouterr().err


def test_funnel_without_ledger_exits_1(tmp_path, capsys):
    assert cli.main(["funnel", "--out", str(tmp_path)]) == 1
    assert "no ledger stages" in capsys.readouterr().err


def test_bad_config_file_value_exits_2(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("workers = zero\n")
    assert cli.main(["funnel", "--out", str(tmp_path), "--config", str(cfg)]) == 2
    assert capsys.readouterr().err.startswith("config error:")


def test_missing_config_file_exits_2(tmp_path, capsys):
    rc = cli.main(["funnel", "--out", str(tmp_path), "--config", str(tmp_path / "gone.cfg")])
    assert rc == 2
    assert capsys.readouterr().err.startswith("config error:")


def test_inconsistent_duration_window_exits_2(tmp_path, capsys):
    rc = cli.main(["funnel", "--out", str(tmp_path), "--min-duration-minutes", "800"])
    assert rc == 2
    assert "min_duration_minutes" in capsys.readouterr().err


def test_bad_env_value_exits_2(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("SLEEPLOG_WORKERS", "zero")
    assert cli.main(["funnel", "--out", str(tmp_path)]) == 2
    assert capsys.readouterr().err.startswith("config error:")


def test_non_numeric_flag_exits_2_via_argparse(tmp_path):
    with pytest.raises(SystemExit) as excinfo:
        cli.main(["synth", "--out", str(tmp_path), "--synth-users", "lots"])
    assert excinfo.value.code == 2


def test_unknown_flag_exits_2(tmp_path):
    with pytest.raises(SystemExit) as excinfo:
        cli.main(["synth", "--out", str(tmp_path), "--frobnicate"])
    assert excinfo.value.code == 2


def test_version_flag_exits_0(capsys):
    with pytest.raises(SystemExit) as excinfo:
        cli.main(["--version"])
    assert excinfo.value.code == 0
    assert "sleeplog" in capsys.readouterr().out
