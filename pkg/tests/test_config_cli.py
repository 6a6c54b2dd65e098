import json
import subprocess
import sys

import pytest

from carflow.cli import main
from carflow.config import ConfigError, bundled_names, bundled_text, load_config, parse_config
from carflow.lattice import HalfspaceModule
from carflow.rng import SplitMix64
from carflow.suite import Record, Report, emit_report, run_suite


def doc(**overrides):
    base = json.loads(bundled_text("halfline"))
    base.update(overrides)
    return base


def test_bundled_fixtures_parse():
    assert bundled_names() == ["halfline", "halfplane", "quadrant", "staircase"]
    cfg = load_config("halfplane")
    assert cfg.dimension == 2
    m = cfg.module()
    assert isinstance(m, HalfspaceModule) and m.normals == ((1, 1),) and m.offsets == (0,)


def test_inverted_window_rejected():
    with pytest.raises(ConfigError, match="window corners inverted"):
        parse_config(json.dumps(doc(window={"lower": [3], "upper": [0]})))


def test_cap_rejected():
    with pytest.raises(ConfigError, match=r"cap exceeds 2\^14"):
        parse_config(json.dumps(doc(fock_cap=1 << 20)))


def test_syntax_error_has_position():
    with pytest.raises(ConfigError) as err:
        parse_config('{\n  "name": "x",\n  oops\n}')
    assert err.value.line == 3 and err.value.column == 3


def test_normal_outside_dual_cone_named():
    bad = doc(module={"form": "halfspace", "normals": [[-1]], "offsets": [0]})
    with pytest.raises(ConfigError, match="dual cone") as err:
        parse_config(json.dumps(bad))
    assert err.value.path == "module.normals[0]"


@pytest.mark.parametrize("change, fragment", [
    ({"surprise": 1}, "unknown keys"),
    ({"suite": ["nope"]}, "unknown check"),
    ({"tolerance": -1}, "tolerance"),
    ({"fock_cap": 1000}, "power of two"),
    ({"seed": -3}, "seed"),
    ({"shifts": [[-1]]}, "not in the cone"),
])
def test_semantic_errors(change, fragment):
    with pytest.raises(ConfigError, match=fragment):
        parse_config(json.dumps(doc(**change)))


def test_config_round_trip():
    for name in bundled_names():
        cfg = load_config(name)
        assert parse_config(json.dumps(cfg.to_dict())) == cfg


def test_splitmix_reference_vector():
    rng = SplitMix64(1234567)
    assert rng.next_u64() == 0x599ED017FB08FC85
    assert SplitMix64(5).spawn("a").next_u64() == SplitMix64(5).spawn("a").next_u64()
    assert SplitMix64(5).spawn("a").next_u64() != SplitMix64(5).spawn("b").next_u64()


def test_empty_suite_is_vacuous_pass():
    report = run_suite(parse_config(json.dumps(doc(suite=[]))))
    assert report.records == [] and report.verdict == "vacuous pass" and report.exit_code == 0


def test_report_emission_deterministic_and_round_trips():
    cfg = parse_config(json.dumps(doc(suite=["car_relations", "kernel_decomposition"], samples=5)))
    a = emit_report(run_suite(cfg))
    b = emit_report(run_suite(cfg))
    assert a == b
    again = emit_report(Report.from_dict(json.loads(a)))
    assert again == a


def test_exit_codes():
    good = Report(config={}, records=[Record("x", "pass")])
    bad = Report(config={}, records=[Record("x", "pass"), Record("y", "fail")])
    cap = Report(config={}, records=[Record("z", "error", details={"error_type": "CapExceeded"})])
    assert (good.exit_code, bad.exit_code, cap.exit_code) == (0, 1, 3)


def test_text_sign_table_has_four_parity_pairs():
    cfg = parse_config(json.dumps(doc(suite=["multiplicativity_sign_table"], samples=3)))
    text = emit_report(run_suite(cfg), "text").decode()
    row = next(line for line in text.splitlines() if line.strip().startswith("twisted"))
    assert row.split()[1:] == ["even,even:", "+1", "even,odd:", "+1",
                               "odd,even:", "+1", "odd,odd:", "-1"]


def test_cli_commands(tmp_path, capsys):
    assert main(["validate", "--config", "halfplane"]) == 0
    capsys.readouterr()
    assert main(["kernel", "--config", "halfline", "--x", "3", "--format", "json"]) == 0
    assert json.loads(capsys.readouterr().out)["points"] == [[0], [1], [2]]
    assert main(["symmetry", "--config", "halfline", "--format", "json"]) == 0
    assert json.loads(capsys.readouterr().out)["witness"] == [-1]


def test_cli_suite_and_report(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(doc(suite=["car_relations"], samples=4)))
    out = tmp_path / "r.json"
    assert main(["suite", "--config", str(cfg), "--format", "json", "--out", str(out),
                 "--seed", "7"]) == 0
    rep = json.loads(out.read_text())
    assert rep["verdict"] == "pass" and rep["config"]["seed"] == 7
    assert main(["report", str(out)]) == 0
    assert "car_relations" in capsys.readouterr().out


def test_cli_failure_exit_code(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(doc(suite=["car_relations"], samples=4)))
    out = tmp_path / "r.json"
    # an impossibly tight tolerance turns rounding noise into a failure
    code = main(["suite", "--config", str(cfg), "--tolerance", "1e-300", "--out", str(out),
                 "--format", "json"])
    assert code == 1 and json.loads(out.read_text())["verdict"] == "fail"


def test_cli_config_error_exit_code(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(doc(fock_cap=1 << 20)))
    assert main(["suite", "--config", str(cfg)]) == 2
    assert "cap exceeds 2^14" in capsys.readouterr().err
    assert main(["validate", "--config", str(tmp_path / "missing.json")]) == 2


def test_cli_resource_cap_exit_code(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(doc(window={"lower": [0], "upper": [40]}, suite=["defining_relation"])))
    assert main(["suite", "--config", str(cfg), "--out", str(tmp_path / "r.txt")]) == 3


def test_console_script_entry_point():
    res = subprocess.run([sys.executable, "-m", "carflow.cli", "validate", "--config", "quadrant"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "valid: True" in res.stdout
