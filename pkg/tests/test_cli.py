import csv
import json
import subprocess
import sys

import pytest

from cdflp import brute_force_oracle
from cdflp.cli import EXIT_CAP, EXIT_INPUT, EXIT_MISMATCH, main, parse_seeds
from cdflp.io import FormatError, instance_from_json, instance_to_json, load_instance, save_instance

from conftest import ex1


@pytest.fixture
def ex1_file(tmp_path):
    path = tmp_path / "ex1.json"
    save_instance(path, ex1())
    return path


def test_instance_roundtrip(ex1_file):
    assert load_instance(ex1_file) == ex1()
    obj = instance_to_json(ex1())
    assert obj["version"] == "cdflp-1" and obj["rho"] == {"num": 1, "den": 2}
    assert instance_from_json(json.loads(json.dumps(obj))) == ex1()


@pytest.mark.parametrize("mutate", [
    lambda o: o.update(version="cdflp-0"),
    lambda o: o.pop("rankings"),
    lambda o: o.update(periods=5),
    lambda o: o.update(rho={"num": 5, "den": 4}),
    lambda o: o.update(rho={"num": 1, "den": 0}),
    lambda o: o["rankings"].__setitem__(0, [0, 0]),
])
def test_malformed_instances(mutate):
    obj = instance_to_json(ex1())
    mutate(obj)
    with pytest.raises(FormatError):
        instance_from_json(obj)


def test_parse_seeds():
    assert parse_seeds("1..5") == [1, 2, 3, 4, 5]
    assert parse_seeds("1,3..4") == [1, 3, 4]


def test_verify_ex1(ex1_file, capsys):
    assert main(["verify", "--instance", str(ex1_file)]) == 0
    assert "MISMATCH" not in capsys.readouterr().out


def test_verify_mismatch_exit(ex1_file, monkeypatch):
    import cdflp.cli as cli
    real = cli.solve

    def broken(*a, **kw):
        sol = real(*a, **kw)
        sol.leader_profit += 1
        return sol

    monkeypatch.setattr(cli, "solve", broken)
    assert main(["verify", "--instance", str(ex1_file)]) == EXIT_MISMATCH


def test_solve_then_oracle(ex1_file, tmp_path):
    a, b, trace = tmp_path / "a.json", tmp_path / "b.json", tmp_path / "cuts.json"
    assert main(["solve", "--instance", str(ex1_file), "--out", str(a), "--trace", str(trace)]) == 0
    assert main(["oracle", "--instance", str(ex1_file), "--out", str(b)]) == 0
    sa, sb = json.loads(a.read_text()), json.loads(b.read_text())
    assert sa["leaderProfit"] == sb["leaderProfit"] == {"num": 5, "den": 1}
    assert sa["yStar"] == sb["yStar"]
    assert json.loads(trace.read_text())[0]["kind"] == "tightened"


def test_gen_and_manifest(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"customer_count": 8, "period_count": 3}))
    out = tmp_path / "inst"
    assert main(["gen", "--config", str(cfg), "--seeds", "1..5", "--out", str(out)]) == 0
    files = sorted(p for p in out.glob("*.json"))
    assert len(files) == 5
    rows = list(csv.DictReader(open(out / "manifest.csv")))
    assert [int(r["seed"]) for r in rows] == [1, 2, 3, 4, 5]
    for f in files:
        inst = load_instance(f)
        assert inst.n_customers == 8 and inst.n_periods == 3


def test_metrics_pipeline(ex1_file, tmp_path):
    sols = tmp_path / "sols"
    inst = str(ex1_file)
    assert main(["solve", "--instance", inst, "--out", str(sols / "opt.json")]) == 0
    assert main(["solve", "--instance", inst, "--variant", "pessimistic", "--out", str(sols / "pes.json")]) == 0
    assert main(["coop", "--instance", inst, "--out", str(sols / "coop.json")]) == 0
    assert main(["monopoly", "--instance", inst, "--truth", "optimistic", "--out", str(sols / "mono.json")]) == 0
    report = tmp_path / "r.csv"
    assert main(["metrics", "--solutions", str(sols), "--out", str(report)]) == 0
    rows = {r["metric"]: r for r in csv.DictReader(open(report))}
    assert "opportunityGap[optimistic]" in rows and "priceOfCompetition[optimistic]" in rows
    assert 0 <= float(rows["opportunityGap[optimistic]"]["decimal"]) <= 100
    assert float(rows["priceOfCompetition[optimistic]"]["decimal"]) >= 1


def test_reduce_sat(tmp_path):
    f = tmp_path / "f.cnf2"
    f.write_text("1 2 1\n1 -1 2\n")
    out = tmp_path / "i.json"
    assert main(["reduce-sat", "--formula", str(f), "--out", str(out)]) == 0
    obj = json.loads(out.read_text())
    assert obj["threshold"] == {"num": 21, "den": 1}
    inst = load_instance(out)
    assert inst.n_locations == 8 and brute_force_oracle(inst).leader_profit == 20


def test_exit_codes(ex1_file, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert main(["solve", "--instance", str(bad)]) == EXIT_INPUT
    assert main(["solve", "--instance", str(tmp_path / "missing.json")]) == EXIT_INPUT
    assert main(["solve", "--instance", str(ex1_file), "--cap", "3"]) == EXIT_CAP
    f = tmp_path / "f.cnf2"
    f.write_text("1 2 2\n1 2 1\n")
    assert main(["reduce-sat", "--formula", str(f)]) == EXIT_INPUT


def test_module_entry_point(ex1_file):
    out = subprocess.run([sys.executable, "-m", "cdflp", "oracle", "--instance", str(ex1_file)],
                         capture_output=True, text=True)
    assert out.returncode == 0 and json.loads(out.stdout)["leaderProfit"] == {"num": 5, "den": 1}


def test_cap_env(ex1_file):
    import os
    env = dict(os.environ, CDFLP_CAP="4")
    out = subprocess.run([sys.executable, "-m", "cdflp", "oracle", "--instance", str(ex1_file)],
                         capture_output=True, text=True, env=env)
    assert out.returncode == EXIT_CAP
