import json

import pytest

from dcsp.cli import main
from dcsp.corpus import HORN, NEQ_LANGUAGE, horn_example, neq_cycle
from dcsp.core import Instance
from dcsp.formats import write_instance


@pytest.fixture
def files(tmp_path):
    write_instance(tmp_path / "horn1.csp", horn_example(), HORN)
    write_instance(tmp_path / "odd3.csp", neq_cycle(3))
    write_instance(tmp_path / "neq.csp", Instance(0, 2, ()), NEQ_LANGUAGE)
    write_instance(tmp_path / "horn.csp", Instance(0, 2, ()), HORN)
    return tmp_path


def test_solve_exit_codes(files):
    assert main(["solve", "--instance", str(files / "horn1.csp")]) == 0
    assert main(["solve", "--instance", str(files / "odd3.csp")]) == 1
    assert main(["solve", "--bad-flag"]) == 2
    assert main(["frobnicate"]) == 2
    assert main(["solve", "--instance", str(files / "missing.csp")]) == 2


def test_solve_search_json(files, capsys):
    assert main(["solve", "--instance", str(files / "horn1.csp"), "--search", "--json"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["details"]["assignment"] == "1 1"
    assert all(report["checks"].values())
    assert set(report) >= {"verdict", "rounds", "max_message_bytes", "wall_time", "checks", "version", "input_digest"}


def test_solve_is_deterministic(files, capsys):
    args = ["solve", "--instance", str(files / "horn1.csp"), "--json"]
    main(args)
    a = json.loads(capsys.readouterr().out)
    main(args)
    b = json.loads(capsys.readouterr().out)
    a.pop("wall_time"), b.pop("wall_time")
    assert a == b


def test_trace_written(files):
    out = files / "trace.json"
    assert main(["solve", "--instance", str(files / "horn1.csp"), "--trace", str(out)]) == 0
    assert json.loads(out.read_text())["status"] == "terminated"


def test_verify(files):
    inst = str(files / "horn1.csp")
    (files / "good.txt").write_text("1 1\n")
    (files / "bad.txt").write_text("1 0\n")
    (files / "short.txt").write_text("1\n")
    assert main(["verify", "--instance", inst, "--assignment", str(files / "good.txt")]) == 0
    assert main(["verify", "--instance", inst, "--assignment", str(files / "bad.txt")]) == 1
    assert main(["verify", "--instance", inst, "--assignment", str(files / "short.txt")]) == 2


def test_refine_and_blp(files):
    assert main(["refine", "--instance", str(files / "odd3.csp")]) == 0
    assert main(["blp", "--instance", str(files / "horn1.csp"), "--round"]) == 0
    assert main(["blp", "--instance", str(files / "odd3.csp"), "--epsilon", "1/10"]) == 0


def test_algebra(files):
    assert main(["algebra", "check-sym", "--gamma", str(files / "horn.csp"), "--max-r", "3"]) == 0
    assert main(["algebra", "check-sym", "--gamma", str(files / "neq.csp"), "--max-r", "2"]) == 1
    out = files / "ind.csp"
    assert main(["algebra", "indicator", "--gamma", str(files / "neq.csp"), "--r", "2", "--out", str(out)]) == 0
    assert out.exists()


def test_hardgen(files):
    prefix = files / "pair"
    assert main(["hardgen", "--gamma", str(files / "neq.csp"), "--r", "2", "--out-prefix", str(prefix)]) == 0
    report = json.loads((files / "pair_report.json").read_text())
    assert report["details"]["variables"] == 24
    assert (files / "pair_i1.csp").exists() and (files / "pair_i2.csp").exists()
    assert main(["hardgen", "--gamma", str(files / "horn.csp"), "--r", "2", "--out-prefix", str(prefix)]) == 2


def test_bench():
    assert main(["bench", "--count", "10", "--seed", "3"]) == 0
