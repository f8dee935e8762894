import json
import subprocess
import sys
from importlib import resources

import pytest

from co2.cli import main

DATA = resources.files("co2").joinpath("data")
STORE = str(DATA / "store.co2")
STORE_SCRIPT = "A@A:0.0,B@B:0,A@A:1.0,B@Y:0,A@X:0,B@Y:0.0,A@X:1,A@X:1.0,A@X:1.0.0,B@Y:0.0.0"
HONESTY_SCRIPT = "A@A:0.0,B@B:0,A@A:1.0,B@Y:0,A@X:0,B@Y:0.0,A@X:1,A@X:1.1,A@X:1.1.0"


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_compliance_true(capsys):
    code, out, _ = run(capsys, "compliance", "rec Z . addToCart.Z + creditCard.(~ok (+) ~no) + e",
                       "~addToCart; ~creditCard; (ok + no)")
    assert code == 0 and out.strip() == "compliant"


def test_compliance_witness_json(capsys):
    code, out, _ = run(capsys, "compliance", "--json", "a;E", "b.E")
    assert code == 1
    data = json.loads(out)
    assert data["witness"]["labels"] == ["A says a"]
    assert data["witness"]["states"][-1] == "A says E | B says 0"


def test_compliance_reads_files(capsys, tmp_path):
    (tmp_path / "c").write_text("a;E\n")
    (tmp_path / "d").write_text("~a.E\n")
    assert run(capsys, "compliance", str(tmp_path / "c"), str(tmp_path / "d"))[0] == 0


def test_dual(capsys):
    code, out, _ = run(capsys, "dual", "a;E (+) b;E")
    assert code == 0 and out.strip() == "~a.(rec X . e.X) + ~b.(rec X . e.X)"


def test_parse_json(capsys):
    code, out, _ = run(capsys, "parse", "--json", STORE)
    data = json.loads(out)
    assert code == 0 and data["definitions"] == ["X", "Y"] and set(data["contracts"]) == {"cA", "cB"}


def test_parse_error_exit_code(capsys, tmp_path):
    bad = tmp_path / "bad.co2"
    bad.write_text("A[tell]\n")
    code, _, err = run(capsys, "parse", str(bad))
    assert code == 65 and "1:" in err


def test_missing_file_is_usage_error(capsys, tmp_path):
    assert run(capsys, "parse", str(tmp_path / "nope.co2"))[0] == 64


def test_missing_argument_is_usage_error(capsys):
    with pytest.raises(SystemExit) as err:
        main(["culpable", STORE])
    assert err.value.code == 64


def test_simulate_store_script(capsys):
    code, out, _ = run(capsys, "simulate", STORE, "--policy", "fixed-script", "--script", STORE_SCRIPT)
    lines = out.strip().splitlines()
    assert code == 0
    assert lines[-2] == "(s0) (s0[A says E | B says E] | A[0] | B[0])"
    assert lines[-1] == "culpable: none"


def test_simulate_honesty_variant(capsys):
    code, out, _ = run(capsys, "simulate", STORE, "--policy", "fixed-script", "--script", HONESTY_SCRIPT)
    assert out.strip().splitlines()[-1] == "culpable: B in s0"


def test_simulate_json_is_deterministic(capsys):
    _, first, _ = run(capsys, "simulate", "--json", STORE, "--seed", "4", "--steps", "15")
    _, second, _ = run(capsys, "--jobs", "4", "simulate", "--json", STORE, "--seed", "4", "--steps", "15")
    assert first == second
    assert json.loads(first)["states"]


def test_bad_script_step(capsys):
    assert run(capsys, "simulate", STORE, "--policy", "fixed-script", "--script", "A@X:0")[0] == 64


def test_script_from_file(capsys, tmp_path):
    f = tmp_path / "script.txt"
    f.write_text(HONESTY_SCRIPT.replace(",", "\n") + "\n")
    code, out, _ = run(capsys, "culpable", STORE, "--session", "s0", "--script", str(f))
    assert code == 0 and out.strip() == "B"


def test_culpable_json(capsys):
    code, out, _ = run(capsys, "culpable", "--json", STORE, "--session", "s0", "--script",
                       ",".join(STORE_SCRIPT.split(",")[:7]))
    assert json.loads(out)["culpable"] == ["A"]


def test_unknown_session(capsys):
    assert run(capsys, "culpable", STORE, "--session", "s9", "--script", "A@A:0.0,B@B:0,A@A:1.0")[0] == 64


def test_exculpate(capsys):
    code, out, _ = run(capsys, "exculpate", "--json", STORE, "--session", "s0", "--participant", "A",
                       "--script", ",".join(STORE_SCRIPT.split(",")[:7]))
    trace = json.loads(out)["trace"]
    assert code == 0 and len(trace) == 1 and trace[0].startswith("A says")


def test_ltl_on_bilateral_file(capsys, tmp_path):
    f = tmp_path / "g.txt"
    f.write_text("A says ~abort (+) ~commit; (creditCard + bankTransfer) | B says abort.E + commit.(~creditCard)\n")
    assert run(capsys, "ltl", str(f), "--phi", "[] (commit -> !<> bankTransfer)")[0] == 0
    f.write_text("A says ~abort (+) ~commit; (creditCard + bankTransfer) | "
                 "B says abort.E + commit.(~creditCard (+) ~bankTransfer)\n")
    assert run(capsys, "ltl", str(f), "--phi", "[] (commit -> !<> bankTransfer)")[0] == 1


def test_ltl_system_needs_session(capsys):
    assert run(capsys, "ltl", STORE, "--phi", "true")[0] == 64


@pytest.mark.parametrize("name,participant,code", [
    ("store", "A", 0), ("store", "B", 1), ("askstore", "A", 1), ("store_xunsafe", "A", 1), ("travel", "A", 0),
])
def test_check_honesty_exit_codes(capsys, name, participant, code):
    assert run(capsys, "check-honesty", str(DATA / f"{name}.co2"), "--participant", participant)[0] == code


def test_check_honesty_json(capsys):
    _, out, _ = run(capsys, "check-honesty", "--json", STORE, "--participant", "B")
    data = json.loads(out)
    assert data["status"] == "NotSharpHonest"
    assert data["reasons"][0]["counterexample"]["ready_do"] == ["ok"]


def test_state_cap_env(capsys, monkeypatch):
    monkeypatch.setenv("CO2_STATE_CAP", "2")
    code, out, _ = run(capsys, "check-honesty", STORE, "--participant", "A")
    assert code == 2 and out.startswith("Unsupported")
    code, _, err = run(capsys, "compliance", "rec X . a.X + b.E", "rec Y . ~a;Y (+) ~b;E")
    assert code == 70 and "CO2_STATE_CAP" in err


def test_bad_jobs(capsys):
    with pytest.raises(SystemExit) as err:
        main(["--jobs", "0", "dual", "a"])
    assert err.value.code == 64


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "co2.cli", "dual", "a.E"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip() == "~a; (rec X . e.X)"
