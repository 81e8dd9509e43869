import json
from pathlib import Path

import pytest

from veriblock.cli import cmd_run_experiment, cmd_run_scenario, cmd_verify_chain, main
from veriblock.ledger import DUMP_MAGIC

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    import os

    for name in list(os.environ):
        if name.startswith("VERIBLOCK_"):
            monkeypatch.delenv(name)


def test_run_scenario_all_supporting(tmp_path):
    out = tmp_path / "out"
    assert cmd_run_scenario(None, "AllSupporting", 11, 1, str(out)) == 0
    scores = json.loads((out / "scores.json").read_text())
    assert scores["alg1"] == 1.0
    assert scores["results"][0]["total"] == 10
    assert (out / "evidence.csv").read_text().startswith(
        "incident_id,review_id,reviewer,verdict,x,y,heading,observed_at\n")
    assert (out / "balances.csv").read_text().startswith("account_id,balance\n")
    lines = (out / "chain.jsonl").read_text().splitlines()
    assert set(json.loads(lines[0])) == {"height", "prev_hash", "body_hash", "tx_ids"}
    assert cmd_verify_chain(str(out / "chain.bin")) == 0


def test_run_scenario_bad_config_key(tmp_path, capsys):
    config = tmp_path / "bad.ini"
    config.write_text("[trust]\nthreshhold = 0.5\n")
    assert cmd_run_scenario(str(config), "AllSupporting", 11, 1, str(tmp_path / "o")) == 2
    assert "trust.threshhold" in capsys.readouterr().err


def test_run_scenario_unwritable_out(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert cmd_run_scenario(None, "AllSupporting", 11, 1, str(blocker / "out")) == 3
    assert cmd_run_scenario(None, "AllSupporting", 11, 1, str(blocker)) == 3


def test_run_scenario_bad_kind(tmp_path):
    assert cmd_run_scenario(None, "Sometimes", 11, 1, str(tmp_path)) == 2
    assert cmd_run_scenario(None, "AllSupporting", 1, 1, str(tmp_path)) == 2


def test_missing_config_file(tmp_path):
    assert cmd_run_scenario(str(tmp_path / "nope.ini"), "AllSupporting", 11, 1, str(tmp_path)) == 3


def test_run_experiment_matches_golden(tmp_path):
    assert cmd_run_experiment(str(GOLDEN / "small.ini"), str(tmp_path)) == 0
    produced = sorted(p.name for p in tmp_path.iterdir())
    assert produced == ["series_p50_s1.csv", "series_p80_s1.csv", "summary.csv"]
    for name in produced:
        assert (tmp_path / name).read_bytes() == (GOLDEN / name).read_bytes(), name


def test_run_experiment_default_config_files(tmp_path):
    assert cmd_run_experiment(None, str(tmp_path)) == 0
    names = sorted(p.name for p in tmp_path.glob("series_*.csv"))
    assert names == [f"series_p{p}_s2023.csv" for p in (50, 60, 70, 80)]
    summary = (tmp_path / "summary.csv").read_text().splitlines()
    assert summary[0] == "p_good,seed,n,alg1,alg2,alg3"
    assert len(summary) == 5


def test_run_experiment_empty_p_good(tmp_path):
    config = tmp_path / "c.ini"
    config.write_text("[experiment]\np_good =\n")
    assert cmd_run_experiment(str(config), str(tmp_path / "o")) == 2


def test_run_experiment_seed_flag(tmp_path):
    assert main(["run-experiment", "--config", str(GOLDEN / "small.ini"), "--seed", "9",
                 "--out", str(tmp_path)]) == 0
    assert (tmp_path / "series_p50_s9.csv").exists()


def _dump(tmp_path):
    out = tmp_path / "sc"
    assert cmd_run_scenario(None, "RandomSplit", 30, 3, str(out)) == 0
    return out / "chain.bin"


def test_verify_chain_flipped_byte(tmp_path, capsys):
    path = _dump(tmp_path)
    data = bytearray(path.read_bytes())
    # flip a byte inside the last transaction payload (the JSON body)
    index = data.rindex(b'"fields"') + 3
    data[index] ^= 0x01
    path.write_bytes(bytes(data))
    assert cmd_verify_chain(str(path)) == 1
    assert "height" in capsys.readouterr().out


def test_verify_chain_truncated(tmp_path):
    path = _dump(tmp_path)
    path.write_bytes(path.read_bytes()[:-10])
    assert cmd_verify_chain(str(path)) == 3
    assert cmd_verify_chain(str(tmp_path / "missing.bin")) == 3
    (tmp_path / "junk.bin").write_bytes(DUMP_MAGIC[:4])
    assert cmd_verify_chain(str(tmp_path / "junk.bin")) == 3


def test_main_usage_error():
    assert main(["run-scenario"]) == 2
    assert main(["bogus"]) == 2
