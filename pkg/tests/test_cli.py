import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from filtra.cli import run_command
from filtra.dsl import parse

HERE = Path(__file__).parent
GOLDEN = HERE / "golden"
FIXTURES = HERE / "fixtures"


def run(*argv, stdin=None):
    out, err = io.StringIO(), io.StringIO()
    if stdin is not None:
        old = sys.stdin
        sys.stdin = io.StringIO(stdin)
    try:
        code = run_command([str(a) for a in argv], out, err)
    finally:
        if stdin is not None:
            sys.stdin = old
    return code, out.getvalue(), err.getvalue()


def test_check_pass():
    code, out, _ = run("check", GOLDEN / "degree2.fil")
    assert code == 0
    assert out.startswith("PASS F")


def test_check_fail():
    code, out, _ = run("check", FIXTURES / "degree_violation.fil")
    assert code == 1
    assert "DegreeViolation" in out


def test_parse_error():
    code, out, err = run("check", FIXTURES / "syntax_error.fil")
    assert code == 2 and out == ""
    assert ":9:15:" in err


def test_usage_errors():
    assert run("check", GOLDEN / "degree2.fil", "--object", "nope")[0] == 2
    assert run("frobnicate", GOLDEN / "degree2.fil")[0] == 2
    assert run("check", HERE / "does-not-exist.fil")[0] == 2
    assert run("jet", GOLDEN / "jets.fil", "--order", "0")[0] == 2
    assert run("dualvert", GOLDEN / "affine_model.fil")[0] == 2


def test_functor_on_invalid_input_fails():
    code, out, _ = run("gr", FIXTURES / "degree_violation.fil")
    assert code == 1 and "FAIL" in out


def test_lin_gives_model_bundle():
    code, out, _ = run("lin", GOLDEN / "affine.fil")
    assert code == 0
    got = parse(out).declarations[0]
    want = parse((GOLDEN / "affine_model.fil").read_text()).declarations[0]
    assert got.frame == want.frame and got.atlas == want.atlas


def test_jet_order_two():
    code, out, _ = run("jet", GOLDEN / "jets.fil", "--order", "2")
    assert code == 0
    assert parse(out) == parse((GOLDEN / "jets_j2.fil").read_text())


def test_morphism_functor_emits_bundles_and_morphism(tmp_path):
    code, out, _ = run("gr", GOLDEN / "gr_phi.fil", "--object", "phi")
    assert code == 0
    doc = parse(out)
    assert doc.names() == ["Gr_R12", "Gr_phi"]
    assert doc.get("Gr_phi").fiber_rules == parse((GOLDEN / "gr_phi.fil").read_text()).get("id").fiber_rules


def test_all_functor_commands_run():
    for cmd in ("gr", "tangent", "vertical", "dualvert", "lin", "totw", "jet"):
        code, out, _ = run(cmd, GOLDEN / "degree2.fil")
        assert code == 0, cmd
        assert run("check", "-", stdin=out)[0] == 0, cmd


def test_rank_and_gens():
    code, out, _ = run("rank", FIXTURES / "filtration.fil")
    assert (code, out) == (0, "rank P (1, 1)\n")
    code, out, _ = run("gens", FIXTURES / "filtration.fil", "--format", "machine")
    assert code == 0
    [item] = json.loads(out)["items"]
    assert [g["weight"] for g in item["generators"]] == [1, 2]


def test_tower_check():
    code, out, _ = run("tower-check", FIXTURES / "tower_y.fil")
    assert code == 1 and "FiberDependentLinearPart" in out
    code, out, _ = run("tower-check", GOLDEN / "degree2.fil")
    assert code == 0 and "bundle F" in out


def test_machine_format_and_output_file(tmp_path):
    target = tmp_path / "report.json"
    code, out, _ = run("check", GOLDEN / "degree2.fil", "--format", "machine", "-o", target)
    assert code == 0 and out == ""
    payload = json.loads(target.read_text())
    assert payload["format"] == "filtra-machine"
    assert payload["items"][0]["kind"] == "validation_report"


def test_deterministic_output():
    first = [run(c, GOLDEN / "degree2.fil")[1] for c in ("check", "dualvert", "tangent")]
    second = [run(c, GOLDEN / "degree2.fil")[1] for c in ("check", "dualvert", "tangent")]
    assert first == second


@pytest.mark.parametrize("fixture,code", [
    (GOLDEN / "degree2.fil", 0),
    (FIXTURES / "degree_violation.fil", 1),
    (FIXTURES / "syntax_error.fil", 2),
])
def test_console_entry_point(fixture, code):
    proc = subprocess.run(
        [sys.executable, "-m", "filtra.cli", "check", str(fixture)], capture_output=True, text=True
    )
    assert proc.returncode == code
