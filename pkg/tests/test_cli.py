import json
import subprocess
import sys

import pytest

from pebbletep.cli import main


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def files(tmp_path, capsys):
    s = tmp_path / "s.json"
    b = tmp_path / "b.json"
    assert main(["pebble", "--h", "3", "--variant", "wbw", "--read-once", "-o", str(s)]) == 0
    assert main(["compile", "--strategy", str(s), "--k", "2", "-o", str(b)]) == 0
    capsys.readouterr()
    return tmp_path, s, b


def test_pebble_reports_peak(capsys):
    code, out, err = run(["pebble", "--h", "4", "--variant", "wbw", "--read-once"], capsys)
    assert code == 0 and "peak 3" in err
    assert json.loads(out)["variant"] == "wbw"


def test_pebble_validate_and_optimal(tmp_path, capsys):
    path = tmp_path / "o.json"
    assert main(["pebble", "--h", "3", "--variant", "fractional", "--denominator", "2", "--optimal",
                 "-o", str(path)]) == 0
    code, out, _ = run(["pebble", "--validate", str(path)], capsys)
    assert code == 0 and json.loads(out)["peak"] == "5/2"


def test_pebble_timeline(capsys):
    code, out, _ = run(["pebble", "--h", "2", "--variant", "black", "--timeline"], capsys)
    assert code == 0 and out.splitlines()[0].startswith("step\tmove\ttotal")


def test_verify_passes(files, capsys):
    _, _, b = files
    code, out, _ = run(["verify", "--bp", str(b), "--property", "read-once", "--property", "thrifty",
                        "--property", "state-determined"], capsys)
    rep = json.loads(out)
    assert code == 0 and all(v["ok"] for v in rep["verdicts"])


def test_verify_failure_writes_witness(files, capsys):
    tmp, _, b = files
    wdir = tmp / "w"
    code, out, _ = run(["verify", "--bp", str(b), "--property", "bitwise", "--witness-dir", str(wdir)], capsys)
    assert code == 1
    rep = json.loads(out)
    assert rep["verdicts"][0]["violations"]


def test_thrifty_failure_witness_file(tmp_path, capsys):
    from pebbletep.bp import ACCEPT_LABEL, BranchingProgram, dumps_bp, func_query, leaf_query
    states = {0: leaf_query(2), 1: leaf_query(3), 2: func_query(1, 0, 0), 3: ACCEPT_LABEL}
    edges = [(0, 1, 0), (0, 1, 1), (1, 2, 0), (1, 2, 1), (2, 3, 1)]
    path = tmp_path / "bad.json"
    path.write_text(dumps_bp(BranchingProgram(2, 2, states, edges, 0)))
    code, _, _ = run(["verify", "--bp", str(path), "--property", "thrifty", "--witness-dir",
                      str(tmp_path / "w")], capsys)
    assert code == 1
    witness = json.loads(next((tmp_path / "w").iterdir()).read_text())
    assert witness["h"] == 2 and "tables" in witness


def test_run_and_gen(files, capsys):
    tmp, _, b = files
    inst = tmp / "i.json"
    assert main(["gen", "--h", "3", "--k", "2", "--count", "20", "--seed", "4", "-o", str(inst)]) == 0
    code, out, _ = run(["run", "--bp", str(b), "--instances", str(inst), "--jobs", "2"], capsys)
    rows = [line.split("\t") for line in out.splitlines()[1:]]
    assert code == 0 and len(rows) == 20
    assert all(r[1] == r[2] for r in rows)


def test_identical_invocations_identical_output(files, capsys):
    _, _, b = files
    a = run(["census", "--bp", str(b), "--threshold", "ceil(h/2)"], capsys)
    c = run(["census", "--bp", str(b), "--threshold", "ceil(h/2)"], capsys)
    assert a == c and a[0] == 0
    assert json.loads(a[1])["implied_bound"] == "4"


def test_fractional_census_end_to_end(tmp_path, capsys):
    s, b = tmp_path / "f.json", tmp_path / "b.json"
    assert main(["pebble", "--h", "4", "--variant", "fractional", "-o", str(s)]) == 0
    assert main(["compile", "--strategy", str(s), "--k", "4", "-o", str(b)]) == 0
    capsys.readouterr()
    code, out, _ = run(["census", "--bp", str(b), "--threshold", "h/2", "--samples", "2000"], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["implied_bound"] == "16" and rep["size"] >= 16


def test_compile_variants(files, capsys):
    _, s, _ = files
    code, out, _ = run(["compile", "--strategy", str(s), "--k", "2", "--keep-guess-states"], capsys)
    assert code == 0 and any(st["label"]["kind"] == "guess" for st in json.loads(out)["states"])
    code, out, _ = run(["compile", "--sft", "--h", "3", "--k", "3", "--dot"], capsys)
    assert code == 0 and out.startswith("digraph")


def test_exit_codes(files, capsys, monkeypatch):
    _, s, b = files
    assert run(["compile", "--strategy", str(s), "--k", "2", "--target", "dtbp"], capsys)[0] == 2
    assert run(["census", "--bp", str(b), "--threshold", "h/"], capsys)[0] == 2
    assert run(["run", "--bp", "/nonexistent", "--instances", "x"], capsys)[0] == 2
    assert run(["census", "--bp", str(b), "--threshold", "7"], capsys)[0] == 1
    assert run(["--budget", "10", "pebble", "--h", "4", "--variant", "wbw", "--optimal"], capsys)[0] == 3
    monkeypatch.setenv("PEBBLETEP_BUDGET", "10")
    assert run(["pebble", "--h", "4", "--variant", "wbw", "--optimal"], capsys)[0] == 3
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_bad_strategy_exit(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"h": 2, "variant": "black", "moves": [{"kind": "place_black", "node": 1,
                                                                      "amount": "1/1"}]}))
    assert run(["pebble", "--validate", str(bad)], capsys)[0] == 1


def test_pipe_compile_into_verify(files):
    _, s, _ = files
    comp = subprocess.run([sys.executable, "-m", "pebbletep.cli", "compile", "--strategy", str(s), "--k", "2"],
                          capture_output=True, text=True, check=True)
    ver = subprocess.run([sys.executable, "-m", "pebbletep.cli", "verify", "--property", "read-once"],
                         input=comp.stdout, capture_output=True, text=True)
    assert ver.returncode == 0 and json.loads(ver.stdout)["verdicts"][0]["ok"]


def test_bench_subset(capsys):
    code, out, _ = run(["bench", "--criteria", "2", "10", "--format", "json"], capsys)
    rep = json.loads(out)
    assert code == 0 and [r["criterion"] for r in rep] == [2, 10] and all(r["ok"] for r in rep)
