import csv
import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from evohom.cli import dumps, main
from evohom.config import ConfigError, from_mapping, load_config, parse_ladder
from evohom.mlaw import MaterialLaw, save_law


def _result(out):
    return json.loads((out / "result.json").read_text())


def _table(out, name):
    with open(out / "tables" / f"{name}.csv") as fh:
        return list(csv.reader(fh))


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_dumps_roundtrips_floats(x):
    assert json.loads(dumps({"x": x}))["x"] == x


def test_dumps_types():
    text = dumps({"a": 1, "b": 1.0, "c": 1 + 2j, "d": np.arange(2), "e": None, "f": True})
    assert json.loads(text) == {"a": 1, "b": 1.0, "c": [1.0, 2.0], "d": [0, 1], "e": None,
                                "f": True}
    assert "0.10000000000000001" in dumps(0.1)


def test_parse_ladder():
    assert parse_ladder("4..64") == [4, 8, 16, 32, 64]
    assert parse_ladder("4,8") == [4, 8]
    assert parse_ladder(16) == [16]
    assert parse_ladder([2, 4]) == [2, 4]
    with pytest.raises(ValueError):
        parse_ladder("8..4")


def test_config_validation():
    with pytest.raises(ConfigError) as info:
        from_mapping({"experiment": "heat_sweep", "ladder": "4..64", "grid": 100})
    assert info.value.field == "ladder"
    with pytest.raises(ConfigError):
        from_mapping({"experiment": "nope"})
    with pytest.raises(ConfigError):
        from_mapping({"experiment": "certify", "law": "/no/such/file.json"})
    with pytest.raises(ConfigError):
        from_mapping({"experiment": "certify", "nu": -1})
    with pytest.raises(ConfigError):
        from_mapping({"experiment": "certify", "colour": "red"})


def test_config_file_line_numbers(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("experiment: heat_sweep\nkappa: two_phase_1_2\nladder: 4..64\ngrid: 100\n")
    with pytest.raises(ConfigError) as info:
        load_config(path)
    assert info.value.line == 3
    path.write_text("experiment: [unclosed\n")
    with pytest.raises(ConfigError) as info:
        load_config(path)
    assert info.value.line is not None


def test_certify_law_file(tmp_path):
    m = MaterialLaw.from_list([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])], 2.0, sup_bound=1.0)
    save_law(m, tmp_path / "law.json")
    out = tmp_path / "out"
    code = main(["run", "certify", "--law", str(tmp_path / "law.json"), "--c", "1", "--d", "1",
                 "--out", str(out)])
    assert code == 0
    cert = _result(out)["certificate"]
    assert cert["nu1"] == pytest.approx(14 / 3, rel=1e-15)
    assert cert["delta_hat"] == pytest.approx(1 / 6, rel=1e-15)
    assert cert["r"] == pytest.approx(1 / 12, rel=1e-15)
    assert _result(out)["sampling"]["ok"]


def test_config_file_run(tmp_path):
    m = MaterialLaw.constant(np.eye(2), eps=1.0)
    save_law(m, tmp_path / "law.json")
    (tmp_path / "c.yaml").write_text(f"experiment: certify\nlaw: law.json\n"
                                     f"output: {tmp_path / 'o'}\n")
    assert main(["--config", str(tmp_path / "c.yaml")]) == 0
    assert (tmp_path / "o" / "result.json").exists()


def test_counterexample_count(tmp_path):
    out = tmp_path / "ce"
    assert main(["run", "counterexample", "--preset", "count_ai", "--grid", "512", "--n", "64",
                 "--out", str(out)]) == 0
    res = _result(out)
    b = complex(*res["effective_coefficient"])
    assert abs(b - (18 + 14j) / 13) < 1e-12
    assert res["naive_rejected"] and res["exact_accepted"]
    rows = _table(out, "counterexample")
    assert rows[0] == ["n", "re", "im", "error"]
    assert rows[-1][:3] == ["64", "1.38462", "1.07692"]


def test_counterexample_other_presets(tmp_path):
    assert main(["run", "counterexample", "--preset", "positivity", "--out",
                 str(tmp_path / "p")]) == 0
    assert _result(tmp_path / "p")["max_relative_deviation"] < 1e-12
    assert main(["run", "counterexample", "--preset", "range", "--n", "4", "--out",
                 str(tmp_path / "r")]) == 0
    assert _result(tmp_path / "r")["probe_identity_residual"] < 1e-10


def test_heat_sweep_small(tmp_path):
    out = tmp_path / "hs"
    assert main(["run", "heat_sweep", "--kappa", "two_phase_1_2", "--ladder", "4..16",
                 "--grid", "256", "--out", str(out)]) == 0
    res = _result(out)
    assert res["kappa_eff"] == pytest.approx(4 / 3, abs=1e-3)
    assert res["monotone"]
    rows = _table(out, "heat_sweep")
    assert rows[0] == ["n", "kappa_eff", "correction_norm", "temperature_error"]
    assert len(rows) == 4


def test_homogenize_experiments(tmp_path):
    assert main(["run", "homogenize_ode", "--ladder", "4,8", "--grid", "32", "--out",
                 str(tmp_path / "o")]) == 0
    assert _result(tmp_path / "o")["max_error"] < 1e-12
    assert main(["run", "homogenize_pde", "--grid", "256", "--out", str(tmp_path / "p")]) == 0
    assert _result(tmp_path / "p")["kappa_eff"] == pytest.approx(4 / 3, abs=1e-3)


def test_causality_deterministic(tmp_path):
    for d in ("a", "b"):
        assert main(["run", "causality", "--seed", "7", "--out", str(tmp_path / d)]) == 0
    a = (tmp_path / "a" / "result.json").read_bytes()
    assert a == (tmp_path / "b" / "result.json").read_bytes()
    res = _result(tmp_path / "a")
    assert res["causal_residual"] < 1e-7
    assert res["anticausal_residual"] > 0.1


def test_exit_codes(tmp_path, capsys):
    # hypothesis violation names the condition
    code = main(["run", "certify", "--preset", "tpz", "--param", "condition=ii", "--out",
                 str(tmp_path)])
    assert code == 2
    assert "[q0]" in capsys.readouterr().err
    assert main(["run", "certify", "--out", str(tmp_path)]) == 1
    assert main(["run", "heat_sweep", "--ladder", "4..64", "--grid", "100"]) == 1
    assert main(["run", "bogus"]) == 1
    assert main([]) == 1


def test_flags_override_config(tmp_path):
    (tmp_path / "c.yaml").write_text("experiment: certify\npreset: positivity\nn: 2\n"
                                     f"output: {tmp_path / 'file'}\n")
    assert main(["--config", str(tmp_path / "c.yaml"), "run", "--n", "4", "--out",
                 str(tmp_path / "flag")]) == 0
    assert not (tmp_path / "file").exists()
    assert _result(tmp_path / "flag")["certificate"]["c_out"] == pytest.approx(1 / 12)
