import json
import subprocess
import sys
from fractions import Fraction

import pytest

from conftest import NINE_GOODS
from fairdiv import Instance, bar_kri, is_eefx_bruteforce, max_correlation
from fairdiv.cli import generate, main
from fairdiv.core import to_value
from fairdiv.documents import dumps, loads, parse_instance


@pytest.fixture
def files(tmp_path):
    def write(name, doc):
        p = tmp_path / name
        p.write_text(doc if isinstance(doc, str) else json.dumps(doc))
        return str(p)
    return write


@pytest.fixture
def nine_file(files):
    return files("nine.json", {"agents": 3, "items": 9, "kind": "goods", "valuations": {"additive": NINE_GOODS}})


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip() else None), err


def test_check_nine_goods(capsys, files, nine_file):
    x = files("x.json", [[1, 2, 3, 4], [5, 6, 7, 8], [9]])
    y = files("y.json", {"allocation": [[1, 2, 5, 6], [3, 4, 7, 8], [9]]})
    code, doc, _ = run(capsys, "check", nine_file, x, "--notions", "efx,ef1")
    assert code == 0 and doc["holds"]
    code, doc, _ = run(capsys, "check", nine_file, y, "--notions", "ef1")
    assert code == 1
    assert doc["notions"]["ef1"]["violations"] == [{"agent": 3, "rival": 1, "lhs": 25, "rhs": 30}]
    code, doc, _ = run(capsys, "oracle", nine_file, y, "--question", "eefx")
    assert code == 0 and doc["agents"][2]["satisfied"]


def test_check_with_certificates(capsys, files, nine_file):
    y = files("y.json", [[1, 2, 5, 6], [3, 4, 7, 8], [9]])
    certs = files("c.json", {"certificates": [{"agent": 3, "witness": [[1, 2, 3, 4], [5, 6, 7, 8], [9]]}]})
    code, doc, _ = run(capsys, "check", nine_file, y, "--notions", "eefx", "--certificates", certs)
    assert doc["notions"]["eefx"]["method"][2] == "certificate"
    assert code == 0


def test_solve_roundtrip(capsys, files, nine_file):
    code, doc, _ = run(capsys, "solve", nine_file, "--certificates", "--report")
    assert code == 0
    assert doc["allocation"] == [[1], [7, 8], [2, 3, 4, 5, 6, 9]]
    assert len(doc["certificates"]) == 3
    assert doc["report"]["agents"][0]["mms_value"] == 25
    sol = files("sol.json", doc)
    code, cert, _ = run(capsys, "certify", nine_file, sol)
    assert code == 0 and len(cert["certificates"]) == 3
    code, cert, _ = run(capsys, "certify", nine_file, sol, "--agent", "2", "--method", "mms")
    assert code == 0 and cert["certificates"][0]["witness"][1] == [7, 8]


def test_solve_many_in_parallel(capsys, files, nine_file):
    other = files("g.json", generate(3, 6, seed=4))
    code, doc, _ = run(capsys, "solve", nine_file, other, "--jobs", "2")
    assert code == 0 and [d["source"] for d in doc] == [nine_file, other]


def test_certify_pipeline_needs_stage1(capsys, files, nine_file):
    x = files("x.json", [[1, 2, 3, 4], [5, 6, 7, 8], [9]])
    code, _, err = run(capsys, "certify", nine_file, x)
    assert code == 4 and "stage1" in err


def test_certify_mms_precondition(capsys, files):
    inst = files("i.json", {"agents": 2, "items": 2, "valuations": {"additive": [[0, 1], [0, 1]]}})
    x = files("x.json", [[], [1, 2]])
    code, _, err = run(capsys, "certify", inst, x, "--agent", "1", "--method", "mms")
    assert code == 4 and "agent 1's valuation is not strongly monotone" in err
    inst = files("j.json", {"agents": 2, "items": 2, "valuations": {"additive": [[1, 1], [2, 2]]}})
    code, _, err = run(capsys, "certify", inst, x, "--agent", "1", "--method", "mms")
    assert code == 4 and "agent 1 gets 0, below the maximin share 1" in err


def test_non_cancelable_table_reported_in_document_numbering(capsys, files):
    table = [0, 1, 2, 3, 1, 5, 4, 6]
    inst = files("t.json", {"agents": 2, "items": 3, "valuations": {"tables": [[0, 1, 1, 2, 1, 2, 2, 3], table]}})
    code, _, err = run(capsys, "solve", inst)
    assert code == 2
    assert "agent 2 is not cancelable" in err and "S=[1], T=[2]" in err and "S+3" in err


def test_input_errors(capsys, files, nine_file):
    bad_json = files("bad.json", '{"agents": 2,\n "items": }')
    code, _, err = run(capsys, "solve", bad_json)
    assert code == 2 and ":2:" in err
    neg = files("neg.json", {"agents": 1, "items": 2, "kind": "goods", "valuations": {"additive": [[1, -1]]}})
    code, _, err = run(capsys, "solve", neg)
    assert code == 2 and "agent 1, item 2" in err
    x = files("x.json", [[1, 2, 3], [4]])
    code, _, _ = run(capsys, "check", nine_file, x)
    assert code == 2
    assert main(["bogus"]) == 2
    capsys.readouterr()


def test_budget_exit(capsys, files, monkeypatch):
    inst = files("big.json", generate(3, 10, seed=1))
    monkeypatch.setenv("FAIRDIV_BUDGET", "max_items=8")
    code, _, err = run(capsys, "oracle", inst, "--question", "efx-exists")
    assert code == 3 and "budget" in err


def test_oracle_efx_exists(capsys, files):
    inst = files("s.json", generate(2, 4, seed=3))
    code, doc, _ = run(capsys, "oracle", inst, "--question", "efx-exists")
    assert code == 0 and doc["verdict"]


def test_gen_is_reproducible_and_valid(capsys):
    a = generate(3, 5, seed=7)
    assert a == generate(3, 5, seed=7)
    inst = parse_instance(loads(json.dumps(a)))
    assert inst.n == 3 and inst.m == 5
    code, doc, _ = run(capsys, "gen", "--agents", "2", "--items", "4", "--kind", "chores", "--ordered")
    inst = parse_instance(doc)
    assert inst.kind == "chores"
    assert all(list(v.values) == sorted(v.values, reverse=True) for v in inst.valuations)


def test_gen_alpha_embeds_achieved_value():
    doc = generate(3, 5, seed=2, alpha=Fraction(1, 2))
    inst = parse_instance(doc)
    alpha = to_value(doc["alpha"])
    assert alpha >= Fraction(1, 2)
    assert alpha == max_correlation(inst.valuations)
    chores = generate(2, 4, "chores", seed=2, alpha=Fraction(1, 2))
    inst = parse_instance(chores)
    assert to_value(chores["alpha"]) == max_correlation(inst.disutilities)


def test_rationals_roundtrip():
    doc = {"agents": 1, "items": 2, "valuations": {"additive": [["1/3", 0.25]]}}
    inst = parse_instance(loads(json.dumps(doc)))
    assert [str(x) for x in inst.valuations[0].values] == ["1/3", "1/4"]
    assert "[1, 2]" in dumps({"a": [1, 2]})


def test_console_script_entry_point(nine_file):
    proc = subprocess.run([sys.executable, "-m", "fairdiv.cli", "solve", nine_file],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    res = bar_kri(Instance.additive(NINE_GOODS))
    assert json.loads(proc.stdout)["allocation"] == [[g + 1 for g in sorted(b)] for b in res.x]
    assert is_eefx_bruteforce(Instance.additive(NINE_GOODS), res.x)


def test_certify_mms_worked_instance(capsys, files):
    inst = files("w.json", {"agents": 3, "items": 4, "valuations": {"additive": [[4, 3, 3, 3]] * 3}})
    x = files("x.json", [[1], [2, 3, 4], []])
    code, doc, _ = run(capsys, "certify", inst, x, "--agent", "1", "--method", "mms")
    assert code == 0
    assert doc["certificates"] == [{"agent": 1, "witness": [[1], [3, 4], [2]]}]


def test_oracle_two_good_counterexample(capsys, files):
    inst = files("c.json", {"agents": 2, "items": 2, "valuations": {"additive": [[0, 1], [0, 1]]}})
    x = files("x.json", [[], [1, 2]])
    code, doc, _ = run(capsys, "oracle", inst, x, "--question", "eefx")
    assert code == 1 and not doc["verdict"] and doc["agents"][0]["witness"] is None
