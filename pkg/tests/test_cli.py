import json
import subprocess
import sys

import pytest

from shardswap.cli import main
from shardswap.scenario import bundled, check, load
from shardswap.sim import run


def test_quote_worked_values(capsys):
    assert main(["quote", "100", "10", "20"]) == 0
    full, short = capsys.readouterr().out.split()
    assert full == "1.666666666666" and short == "1.67"

    assert main(["quote", "200", "20", "1.67"]) == 0
    full, _ = capsys.readouterr().out.split()
    assert abs(float(full) - 0.165) < 0.005


def test_quote_zero_delta(capsys):
    assert main(["quote", "3.5", "7", "0", "--gamma", "0.99"]) == 0
    assert capsys.readouterr().out.split() == ["0.000000000000", "0.00"]


def test_quote_with_gamma(capsys):
    assert main(["quote", "100", "10", "20", "--gamma", "0.997"]) == 0
    assert capsys.readouterr().out.split()[0] == "1.662497915624"


@pytest.mark.parametrize("args", [["0", "10", "1"], ["10", "-1", "1"], ["abc", "1", "1"]])
def test_quote_bad_input(args, capsys):
    assert main(["quote", *args]) == 1


def test_run_multiswap(tmp_path, capsys):
    out = tmp_path / "t.jsonl"
    assert main(["run", "s32_multiswap", "--trace", str(out)]) == 0
    text = capsys.readouterr().out
    assert "r1: executed output 0.165" in text
    assert out.read_text().count("\n") == len(out.read_text().splitlines()) > 0


def test_run_naive(tmp_path, capsys):
    assert main(["run", "s31_naive", "--trace", str(tmp_path / "t")]) == 0
    text = capsys.readouterr().out
    assert "r1: realized output 0.10" in text
    assert "r_unwind: realized output 14.28" in text


def test_run_empty_scenario(tmp_path):
    sc = tmp_path / "empty.json"
    sc.write_text(json.dumps({"shards": [{"id": "1", "pools": [{"pair": ["A", "B"], "reserves": ["1", "1"]}]}]}))
    out = tmp_path / "t.jsonl"
    assert main(["run", str(sc), "--trace", str(out)]) == 0
    assert out.read_text() == ""


def test_run_uses_trace_dir_env(tmp_path, monkeypatch):
    monkeypatch.setenv("SHARDSWAP_TRACE_DIR", str(tmp_path))
    assert main(["run", "s32_cancel"]) == 0
    assert (tmp_path / "s32_cancel.trace.jsonl").exists()


@pytest.mark.parametrize(
    "doc",
    [
        {"shards": [], "bogus": 1},
        {"shards": [{"id": "1", "pools": [{"pair": ["A", "B"], "reserves": [1, "1"]}]}]},
        {"shards": [{"id": "1", "pools": [{"pair": ["A", "B"], "reserves": ["0", "1"]}]}]},
        {"shards": [{"id": "1", "pools": [{"pair": ["A", "B"], "reserves": ["1", "1"]}]}],
         "requests": [{"id": "r", "user": "u", "input_asset": "A", "output_asset": "C", "input_amount": "1",
                       "route": [{"shard": "1", "pair": ["A", "B"]}]}]},
        {"shards": [{"id": "1", "pools": [{"pair": ["A", "B"], "reserves": ["1", "1"]}]}],
         "requests": [{"id": "r", "user": "u", "input_asset": "A", "output_asset": "B", "input_amount": "1",
                       "route": [{"shard": "2", "pair": ["A", "B"]}]}]},
    ],
)
def test_run_malformed_scenario(tmp_path, doc):
    sc = tmp_path / "bad.json"
    sc.write_text(json.dumps(doc))
    assert main(["run", str(sc), "--trace", str(tmp_path / "t")]) == 1


def test_run_missing_or_unparsable(tmp_path):
    assert main(["run", str(tmp_path / "nope.json")]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["run", str(bad)]) == 1


def test_run_failed_assertion_exits_2(tmp_path, capsys):
    doc = json.loads(bundled()["s32_multiswap"].read_text())
    doc["expect"]["results"]["r1"]["output"] = "0.2"
    sc = tmp_path / "wrong.json"
    sc.write_text(json.dumps(doc))
    assert main(["run", str(sc), "--trace", str(tmp_path / "t")]) == 2
    assert "ASSERTION FAILED: request r1 output" in capsys.readouterr().out


@pytest.mark.parametrize("name", sorted(bundled()))
def test_bundled_scenarios_pass_their_assertions(name):
    sc = load(name)
    assert check(sc, run(sc.config, sc.requests)) == []


def test_replay_same_seed(tmp_path):
    out = tmp_path / "t.jsonl"
    assert main(["run", "s_contention", "--seed", "5", "--trace", str(out)]) == 0
    assert main(["replay", str(out), "s_contention", "--seed", "5"]) == 0
    out2 = tmp_path / "t2.jsonl"
    assert main(["run", "s_contention", "--trace", str(out2)]) == 0
    assert main(["replay", str(out2), "s_contention"]) == 0


def test_replay_detects_tampering(tmp_path, capsys):
    out = tmp_path / "t.jsonl"
    main(["run", "s33_same_direction", "--trace", str(out)])
    lines = out.read_text().splitlines()
    idx = next(i for i, line in enumerate(lines) if '"kind":"swap"' in line)
    rec = json.loads(lines[idx])
    rec["pool_after"]["actual"][0] = "110.000000000001"
    lines[idx] = json.dumps(rec, sort_keys=True, separators=(",", ":"))
    out.write_text("\n".join(lines) + "\n")
    capsys.readouterr()
    assert main(["replay", str(out), "s33_same_direction"]) == 3
    assert f"divergence at record {idx}" in capsys.readouterr().out


def test_replay_detects_truncation(tmp_path):
    out = tmp_path / "t.jsonl"
    main(["run", "s32_multiswap", "--trace", str(out)])
    lines = out.read_text().splitlines()
    out.write_text("\n".join(lines[:-1]) + "\n")
    assert main(["replay", str(out), "s32_multiswap"]) == 3


def test_replay_other_seed_diverges(tmp_path):
    out = tmp_path / "t.jsonl"
    assert main(["run", "s_contention", "--seed", "1", "--trace", str(out)]) == 0
    assert main(["replay", str(out), "s_contention", "--seed", "2"]) == 3
    assert main(["replay", str(out), "s_contention"]) == 3  # scenario seed is 7


def test_replay_missing_trace(tmp_path):
    assert main(["replay", str(tmp_path / "none"), "s32_multiswap"]) == 1


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "shardswap", "list"], capture_output=True, text=True)
    assert proc.returncode == 0 and "s32_multiswap" in proc.stdout
