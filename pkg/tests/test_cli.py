import json
import subprocess
import sys

import pytest
from conftest import FIXTURES

from errml.cli import main
from errml.export import read_explicit

FIG1 = str(FIXTURES / "fig1_simple.errml")
PIPE = str(FIXTURES / "fig5_pipeline.errml")
TWO = str(FIXTURES / "two_state.errml")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_validate_fig1_is_silent(capsys):
    assert run(capsys, "validate", FIG1) == (0, "", "")


def test_compose_stats_iteration2(capsys):
    code, out, err = run(capsys, "compose", PIPE, "--iteration", "2", "--stats", "--params", "lambda=1e-3,mu=1e-1,p=0.5")
    assert code == 0 and err == ""
    stats = dict(line.split(" ", 1) for line in out.splitlines())
    assert stats["tangible_states"] == "8"
    assert stats["transitions"] == "29"
    assert stats["vanishing_folded"] == "0"


def test_compose_stats_json(capsys):
    code, out, _ = run(capsys, "compose", PIPE, "--stats", "--json")
    assert code == 0
    assert json.loads(out)["tangible_states"] == 11


def test_compose_prints_transitions(capsys):
    code, out, _ = run(capsys, "compose", TWO)
    assert code == 0
    assert out.splitlines()[0] == "STATES 2 TRANSITIONS 2"


def test_analyze_product_form(capsys):
    code, out, err = run(
        capsys, "analyze", PIPE, "--iteration", "1", "--measure", "steady_state_availability",
        "--failed", "Failed", "--params", "lambda=1e-3,mu=1e-1",
    )
    assert code == 0 and err == ""
    doc = json.loads(out)
    assert doc["measure"] == "steady_state_availability" and doc["class"] == "Failed"
    assert abs(doc["value"] - (0.1 / 0.101) ** 3) <= 1e-8
    assert doc["residual"] <= 1e-10 and doc["iterations"] >= 1


def test_analyze_transient_reports_truncation(capsys):
    code, out, _ = run(capsys, "analyze", TWO, "--measure", "point_availability", "--time", "10")
    doc = json.loads(out)
    assert code == 0 and doc["time"] == 10.0
    assert set(doc["truncation"]) == {"left", "right", "discarded"}


def test_params_override_file_bindings(capsys):
    _, a, _ = run(capsys, "analyze", TWO, "--measure", "reliability", "--time", "100")
    _, b, _ = run(capsys, "analyze", TWO, "--measure", "reliability", "--time", "100", "--params", "lambda=2e-3")
    assert json.loads(a)["value"] > json.loads(b)["value"]


def test_time_is_required(capsys):
    code, out, err = run(capsys, "analyze", TWO, "--measure", "reliability")
    assert code == 2 and out == "" and "--time" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["validate"],
        ["frobnicate", TWO],
        ["validate", TWO, "--bogus"],
        ["analyze", TWO, "--measure", "uptime"],
        ["export", TWO, "--format", "png"],
        ["export", TWO, "--format", "explicit"],
        ["compose", TWO, "--params", "lambda"],
        ["compose", TWO, "--iteration", "0"],
        ["simulate", TWO, "--measure", "mttf"],
        ["simulate", TWO, "--measure", "reliability", "--time", "1", "--reps", "0"],
    ],
)
def test_usage_errors_exit_2(capsys, argv):
    with pytest.raises(SystemExit) as exc:
        raise SystemExit(main(argv))
    assert exc.value.code == 2
    assert capsys.readouterr().out == ""


def test_model_errors_exit_1(capsys, tmp_path):
    bad = tmp_path / "bad.errml"
    bad.write_text("error model m features A: initial error state end m;\n")
    code, out, err = run(capsys, "validate", str(bad))
    assert code == 1 and out == "" and "bad.errml:1:" in err

    code, out, err = run(capsys, "validate", str(bad), "--json")
    diags = json.loads(err)["diagnostics"]
    assert code == 1 and diags and diags[0]["severity"] == "error"
    assert set(diags[0]) == {"severity", "code", "message", "file", "line", "column", "length"}
    assert diags[0]["line"] == 1 and diags[0]["file"].endswith("bad.errml")


def test_missing_file_exit_1(capsys, tmp_path):
    code, out, err = run(capsys, "validate", str(tmp_path / "absent.errml"))
    assert code == 1 and "absent.errml" in err


def test_missing_label_exit_1(capsys):
    code, _, err = run(capsys, "analyze", TWO, "--measure", "reliability", "--time", "1", "--failed", "Broken")
    assert code == 1 and "Broken" in err


def test_state_limit_exit_1(capsys):
    code, _, err = run(capsys, "compose", PIPE, "--max-states", "3")
    assert code == 1 and err


def test_infinite_mttf_warns(capsys):
    code, out, err = run(capsys, "analyze", TWO, "--measure", "mttf", "--params", "lambda=0", "--json")
    assert code == 0
    doc = json.loads(out)
    assert doc["value"] is None and doc["infinite"] is True
    assert json.loads(err)["diagnostics"][0]["severity"] == "warning"


def test_export_explicit_and_reanalyze(capsys, tmp_path):
    prefix = tmp_path / "it2"
    assert run(capsys, "export", PIPE, "--iteration", "2", "--format", "explicit", "--out", str(prefix)) == (0, "", "")
    tra = tmp_path / "it2.tra"
    assert read_explicit(tra).n_states == 8
    _, direct, _ = run(capsys, "analyze", PIPE, "--iteration", "2", "--measure", "safety", "--time", "100")
    _, again, _ = run(capsys, "analyze", str(tra), "--measure", "safety", "--time", "100")
    assert json.loads(direct)["value"] == json.loads(again)["value"]


def test_export_dot_stdout(capsys):
    code, out, _ = run(capsys, "export", TWO, "--format", "dot")
    assert code == 0 and out.startswith("digraph")


def test_simulate_json(capsys):
    argv = ["simulate", TWO, "--measure", "point_availability", "--time", "10", "--reps", "2000", "--seed", "4"]
    code, out, _ = run(capsys, *argv)
    doc = json.loads(out)
    assert code == 0 and doc["seed"] == 4 and doc["replications"] == 2000
    assert 0 <= doc["value"] <= 1 and doc["half_width_95"] >= 0
    assert run(capsys, *argv)[1] == out


def test_iteration_changes_the_chain(capsys):
    outs = {}
    for it in ("1", "2", "3"):
        code, out, _ = run(capsys, "compose", PIPE, "--iteration", it, "--stats", "--json")
        assert code == 0
        outs[it] = json.loads(out)
    assert [outs[i]["tangible_states"] for i in "123"] == [8, 8, 11]
    assert [outs[i]["transitions"] for i in "123"] == [24, 29, 35]


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "errml", "validate", FIG1], capture_output=True, text=True)
    assert (r.returncode, r.stdout, r.stderr) == (0, "", "")


POISSON_OUT = """
error model m
features
  A: initial error state;
  B: error state;
  P: out error propagation {Occurrence => Poisson 1.0};
end m;
error model implementation m.g
transitions
  A-[out P]->B;
end m.g;
thread T
annex error_model {** model => m.g; **};
end T;
"""


def test_timed_out_propagation_warns_only_when_verbose(capsys, tmp_path):
    model = tmp_path / "po.errml"
    model.write_text(POISSON_OUT)
    assert run(capsys, "validate", str(model)) == (0, "", "")
    code, out, err = run(capsys, "validate", str(model), "-v")
    assert code == 0 and out == "" and "UntestedTimedPropagation" in err
