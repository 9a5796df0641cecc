import json
import subprocess
import sys
from pathlib import Path

import pytest

from curvtensor import __version__
from curvtensor.cli import main

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, json.loads(out.out) if out.out.strip() else None, out.err


def write(tmp_path, name, data):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return p


def test_depend_dependent_triple(capsys):
    code, rep, err = run(capsys, "--mode", "exact", "depend", "--terms", FIXTURES / "dependent_triple.json")
    assert code == 0
    assert rep["coefficients"] == ["1/1", "-1/1", "1/1"] and rep["proper"]
    assert rep["manifest"]["subcommand"] == "depend"
    assert rep["manifest"]["version"] == __version__
    assert len(rep["manifest"]["inputs"]["terms"]) == 64
    assert "dependent" in err


def test_global_flags_after_subcommand(capsys):
    code, rep, err = run(capsys, "depend", "--terms", FIXTURES / "dependent_triple.json", "--mode", "exact", "--quiet")
    assert code == 0 and rep["manifest"]["mode"] == "exact" and err == ""


def test_build_then_check(capsys, tmp_path):
    out = tmp_path / "t.json"
    code, rep, _ = run(capsys, "build", "--op", FIXTURES / "diag4.json", "--out", out)
    assert code == 0 and rep is None
    code, rep, _ = run(capsys, "check", "--tensor", out)
    assert code == 0 and rep["is_act"] is True
    assert rep["witnesses"] == {"antisymmetry": None, "bianchi": None, "pair_symmetry": None}


def test_check_general_operator(capsys, tmp_path):
    op = write(tmp_path, "a.json", {"kind": "general", "matrix": [[1, 1, 0], [0, 1, 0], [0, 0, 1]]})
    code, rep, _ = run(capsys, "--mode", "exact", "check", "--op", op, "--build", "S")
    assert code == 0 and rep["is_act"] is False
    assert rep["witnesses"]["pair_symmetry"] == [0, 2, 1, 2]


def test_identity(capsys):
    code, rep, _ = run(capsys, "--mode", "exact", "identity", "--op", FIXTURES / "skew4.json", "--quadruple", "0,1,1,0")
    assert code == 0
    assert rep["main_deviation"] == "0/1" and rep["lambda_split_deviation"] == "0/1"
    values = rep["pullback"]["values"]
    assert values[0] == values[1] == values[2]


def test_identity_main_on_self_adjoint_is_hypothesis_error(capsys):
    code, rep, _ = run(capsys, "identity", "--op", FIXTURES / "diag4.json", "--which", "main")
    assert code == 2 and rep["error"] == "hypothesis_unmet"


def test_structgroup(capsys):
    code, rep, _ = run(capsys, "--mode", "exact", "structgroup", "--tau", FIXTURES / "skew4.json", "--trials", 5)
    assert code == 0 and rep["equivalence_holds"]


def test_depend_theorem(capsys):
    code, rep, _ = run(capsys, "--mode", "exact", "depend", "--theorem", "ssl", "--ops", FIXTURES / "ssl_pair.json")
    assert code == 0 and rep["conclusions"]["tensors_independent"] == "pass"


def test_chain_three(capsys):
    code, rep, _ = run(capsys, "--mode", "exact", "chain", "--ops", FIXTURES / "three_chain.json", "--signs", "+,-")
    assert code == 0 and rep["theorem"] == "three_chain" and not rep["falsified"]


def test_chain_not_a_chain_exit_2(capsys):
    code, rep, _ = run(capsys, "chain", "--ops", FIXTURES / "not_chain.json", "--signs", "+,+")
    assert code == 2
    assert rep["error"] == "not_a_chain" and rep["failing_pair"] == [1, 2]


def test_chain_premise_failure_exit_2(capsys):
    code, rep, _ = run(capsys, "chain", "--ops", FIXTURES / "three_chain.json", "--signs", "+,+")
    assert code == 2 and rep["error"] == "premise_failed"


def test_chain_star(capsys, tmp_path):
    ops = write(tmp_path, "s.json", {"ops": [
        {"kind": "skew-adjoint", "matrix": [[0, 0], [0, 0]]},
        {"kind": "self-adjoint", "matrix": [[1, 0], [0, 1]]},
        {"kind": "self-adjoint", "matrix": [[1, 0], [0, 1]]},
    ]})
    code, rep, _ = run(capsys, "chain", "--ops", ops, "--signs", "+,-", "--theorem", "star")
    assert code == 0 and rep["conclusions"]["A_zero"] == "pass"


def test_reduce(capsys):
    code, rep, _ = run(capsys, "--mode", "exact", "reduce", "--decomp", FIXTURES / "decomp_reduce.json", "--pivot", 1)
    assert code == 0 and len(rep["terms"]) == 2 and rep["residual"] == "0/1"


def test_reduce_invertible_pivot_exit_1(capsys, tmp_path):
    data = json.loads((FIXTURES / "decomp_reduce.json").read_text())
    data["terms"][0]["operator"]["matrix"] = [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
    data["terms"][1]["operator"]["matrix"] = [[0, 0, 0], [0, 0, 0], [0, 0, 0]]
    p = write(tmp_path, "d.json", data)
    code, rep, _ = run(capsys, "reduce", "--decomp", p, "--pivot", 0)
    assert code == 1 and rep["error"] == "trivial_kernel"


def test_decompose(capsys, tmp_path):
    out = tmp_path / "t.json"
    run(capsys, "--mode", "exact", "build", "--op", FIXTURES / "diag4.json", "--out", out)
    code, rep, _ = run(capsys, "--mode", "exact", "decompose", "--tensor", out, "--kmax", 1, "--budget", 2)
    assert code == 0 and rep["k"] == 1 and rep["bound_kind"] == "Exact"
    code, rep, _ = run(capsys, "--mode", "exact", "decompose", "--tensor", out, "--constructive")
    assert code == 0 and rep["k"] <= 20 and rep["residual"] == "0/1"


def test_fuzz(capsys):
    code, rep, _ = run(capsys, "fuzz", "--campaign", "star", "--count", 3)
    assert code == 0 and rep["failures"] == [] and rep["manifest"]["mode"] == "exact"
    code, rep, _ = run(capsys, "fuzz", "--campaign", "conjecture", "--n", 2, "--count", 1, "--kmax", 1)
    assert code == 0 and rep["gap_distribution"] == {"0": 1}


def test_context_file_overrides_embedded(capsys, tmp_path):
    ctx = write(tmp_path, "ctx.json", {"dim": 3, "phi": [[2, 0, 0], [0, 1, 0], [0, 0, 1]], "mode": "exact"})
    op = write(tmp_path, "op.json", {"kind": "general", "matrix": [[1, 0, 0], [0, 1, 0], [0, 0, 1]]})
    code, rep, _ = run(capsys, "build", "--op", op, "--context", ctx)
    assert code == 0 and rep["tensor"]["entries"][0][1][1][0] == "2/1"
    assert set(rep["manifest"]["inputs"]) == {"op", "context"}


def test_malformed_json_exit_1(capsys, tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    code, rep, _ = run(capsys, "check", "--tensor", p)
    assert code == 1 and rep["error"] == "malformed_input"


def test_missing_file_exit_1(capsys, tmp_path):
    code, rep, _ = run(capsys, "check", "--tensor", tmp_path / "missing.json")
    assert code == 1


def test_unknown_flag_exit_64(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["check", "--bogus"])
    assert exc.value.code == 64


def test_check_needs_input_exit_64(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["check"])
    assert exc.value.code == 64


def test_byte_identical_reruns(capsys):
    argv = ["--mode", "exact", "--quiet", "fuzz", "--campaign", "three_chain", "--count", "4", "--seed", "3"]
    main(argv)
    first = capsys.readouterr().out
    main(argv)
    assert capsys.readouterr().out == first


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "curvtensor", "--version"], capture_output=True, text=True, check=True
    )
    assert __version__ in proc.stdout
