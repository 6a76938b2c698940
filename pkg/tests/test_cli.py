import csv
import io
import json
import subprocess
import sys

import pytest

from compana.cli import FIELDS, main


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


def records(text):
    return [json.loads(line) for line in text.splitlines()]


@pytest.fixture
def k13(tmp_path):
    path = tmp_path / "k13.json"
    path.write_text(json.dumps({"stages": [[2, [1]], [5, [3]]]}))
    return str(path)


def test_reduce_max_zero_example():
    code, text = run("reduce", "--witness", "max-zero", "--precision", "20", "--stages", "1000")
    recs = records(text)
    assert code == 0 and len(recs) == 10
    assert all(r["result"] == "accepted" and r["certified"] for r in recs)


def test_specker_example(k13):
    code, text = run("specker", "--inject", k13, "--stages", "10")
    column = [r["result"] for r in records(text)]
    assert code == 0 and len(column) == 11
    assert column[-1] == "5*2^-3" and column[0] == "0*2^0"


def test_ivt_example():
    code, text = run("ivt", "--precision", "40")
    (rec,) = records(text)
    assert code == 0 and rec["certified"] and rec["precision_level"] == 40
    lo, hi = (s.strip() for s in rec["result"].strip("[]").split(","))
    from compana.exact import Dyadic

    assert Dyadic.parse(lo) <= Dyadic(1, -1) <= Dyadic.parse(hi)


def test_schema_is_complete_and_ordered():
    for argv in (["max"], ["kleene", "--stages", "4"], ["bim"], ["bwt", "--stages", "64"], ["family", "--count", "3"]):
        code, text = run(*argv)
        assert code == 0, argv
        for line in text.splitlines():
            assert list(json.loads(line)) == list(FIELDS)


def test_csv_output():
    code, text = run("max", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(text)))
    assert code == 0 and tuple(rows[0]) == FIELDS
    assert rows[0]["certified"] == "true" and rows[0]["mind_changes"] == ""


def test_byte_identical_output(k13):
    for argv in (["reduce", "--witness", "cn-lim", "--stages", "200", "--seed", "7"], ["specker", "--inject", k13]):
        assert run(*argv) == run(*argv)


def test_exit_1_on_uncertified(tmp_path):
    same_sign = tmp_path / "f.json"
    same_sign.write_text(json.dumps([["0", "1"], ["1", "2"]]))
    code, text = run("ivt", "--inject", str(same_sign))
    assert code == 1 and records(text)[0]["certified"] is False
    # a stage budget too small for the reduction to settle
    code, _ = run("reduce", "--witness", "cn-lim", "--stages", "1")
    assert code == 1


def test_exit_2_on_malformed_input(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run("specker", "--inject", str(bad))[0] == 2
    assert run("specker", "--inject", str(tmp_path / "missing.json"))[0] == 2
    wrong = tmp_path / "wrong.json"
    wrong.write_text(json.dumps({"stages": "x"}))
    assert run("kleene", "--inject", str(wrong))[0] == 2
    unsorted = tmp_path / "unsorted.json"
    unsorted.write_text(json.dumps([["0", "0"], ["1/2", "1"], ["1/4", "0"], ["1", "0"]]))
    assert run("max", "--inject", str(unsorted))[0] == 2
    assert run("bim", "--inject", str(wrong))[0] == 2
    assert run("specker", "--precision", "-3")[0] == 2
    assert "error" in capsys.readouterr().err


def test_family_and_bim_reports(tmp_path):
    pair = tmp_path / "pair.json"
    pair.write_text(json.dumps({"a": {"stages": [[1, [0]], [3, [1]]]}, "b": {"stages": [[1, [2]]]}}))
    code, text = run("family", "--inject", str(pair), "--count", "4")
    sides = [r["result"].split()[1] for r in records(text)]
    assert code == 0 and sides[:3] == ["<=1/2", "<=1/2", ">1/2"]
    code, text = run("bim")
    (rec,) = records(text)
    assert code == 0 and rec["mind_changes"] == 2 and rec["result"].startswith("k=2")


def test_module_entry_point(k13):
    proc = subprocess.run(
        [sys.executable, "-m", "compana", "specker", "--inject", k13, "--format", "csv"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[-1].split(",")[4] == "5*2^-3"
