from __future__ import annotations

import json
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from ybgates import cavity, dipolar
from ybgates import constants as const
from ybgates.cli import EXIT_CONFIG, EXIT_FAILED, EXIT_OK, main
from ybgates.errors import ConfigError
from ybgates.sweep import (
    CONFIG_DIR_ENV,
    ERROR_COLUMN,
    OUT_OF_RANGE,
    Axis,
    ComparisonConfig,
    SweepSpec,
    emit_plotscript,
    evaluate,
    load_constants,
    read_csv,
    run_comparison,
    run_sweep,
    write_csv,
)

MD_SPEC = """
scheme = "md"
[[axes]]
name = "r_nm"
start = 5
stop = 30
points = 6
[[axes]]
name = "omega"
start = 1e6
stop = 20e6
points = 4
scale = "log"
[outputs]
stem = "md_surface"
"""


def spec(scheme: str, axes: list[dict], fixed: dict | None = None, stem: str = "s") -> SweepSpec:
    return SweepSpec.from_dict({"scheme": scheme, "axes": axes, "fixed": fixed or {}, "outputs": {"stem": stem}})


def floats(rows, name):
    return np.array([float(r[name]) for r in rows])


# -- configuration -------------------------------------------------------------


def test_constants_loader_converts_hz():
    c = load_constants()
    assert c["gamma1"] == pytest.approx(const.hz(596.0))
    assert c["g_par"] == pytest.approx(2.51)
    assert c["T2o_bulk"] == pytest.approx(91e-6)
    assert load_constants({"gamma1": 1000.0})["gamma1"] == pytest.approx(const.hz(1000.0))
    with pytest.raises(ConfigError):
        load_constants({"nonsense": 1.0})
    with pytest.raises(ConfigError):
        load_constants({"gamma1": -1.0})


@pytest.mark.parametrize(
    "data",
    [
        {"scheme": "xx", "axes": [{"name": "C", "start": 1, "stop": 2, "points": 2}]},
        {"scheme": "pi", "axes": [{"name": "C", "start": 1, "stop": 2, "points": 1}]},
        {"scheme": "pi", "axes": [{"name": "C", "start": -1, "stop": 2, "points": 3}]},
        {"scheme": "pi", "axes": [{"name": "x", "start": 0, "stop": 2, "points": 3, "scale": "log"}]},
        {"scheme": "pi", "axes": []},
        {"axes": []},
        {"scheme": "md", "axes": [{"name": "r_nm", "start": 5, "stop": 6, "points": 2}], "fixed": {"omega": 0}},
    ],
)
def test_invalid_specs_raise(data):
    with pytest.raises(ConfigError):
        SweepSpec.from_dict(data)


def test_axis_grids():
    assert np.allclose(Axis("C", 10, 1000, 3, "log").values(), [10, 100, 1000])
    assert np.allclose(Axis("x", 0, 1, 3).values(), [0, 0.5, 1])


# -- sweeps --------------------------------------------------------------------


def test_single_point_equals_direct_call(tmp_path):
    s = spec("md", [{"name": "r_nm", "start": 10, "stop": 10, "points": 2}], {"omega": 10e6})
    res = run_sweep(s, tmp_path)
    _, rows = read_csv(res.path)
    direct = dipolar.md_closed_form_fidelity(dipolar.DipolarParams(r=10e-9, omega=const.hz(10e6)))
    assert float(rows[0]["fidelity"]) == direct.fidelity
    assert float(rows[0]["gate_time"]) == direct.gate_time


def test_evaluate_pi_matches_module():
    rep = evaluate("pi", {})
    assert rep.fidelity == cavity.pi_fidelity(cavity.InterferenceParams()).fidelity
    with pytest.raises(ConfigError):
        evaluate("nope", {})


def test_csv_metadata_and_precision(tmp_path):
    s = spec("pi", [{"name": "C", "start": 10, "stop": 1000, "points": 3, "scale": "log"}], {"alpha": 0.001})
    res = run_sweep(s, tmp_path)
    text = res.path.read_text()
    meta, rows = read_csv(res.path)
    assert {"code_version", "spec_digest", "constants_rad_per_s", "scheme"} <= set(meta)
    assert json.loads(meta["constants_rad_per_s"])["gamma1"] == pytest.approx(const.hz(596.0))
    header = [line for line in text.splitlines() if not line.startswith("#")][0].split(",")
    assert header[:2] == ["C", "fidelity"]
    assert header[-1] == ERROR_COLUMN
    assert "e+" in rows[0]["C"] or "e-" in rows[0]["C"]
    assert len(rows[0]["fidelity"].split("e")[0]) >= 19  # 17 digits after the point


def test_sweep_is_deterministic(tmp_path):
    s = spec("ps-analytic", [{"name": "C", "start": 10, "stop": 1e4, "points": 7, "scale": "log"}], {"alpha": 0.001})
    a = run_sweep(s, tmp_path / "a").path.read_bytes()
    b = run_sweep(s, tmp_path / "b").path.read_bytes()
    assert a == b


def test_parallel_pool_matches_serial(tmp_path):
    s = spec("pi", [{"name": "C", "start": 10, "stop": 1e4, "points": 4, "scale": "log"}], {"alpha": 0.01})
    a = run_sweep(s, tmp_path / "a", workers=1).path.read_bytes()
    b = run_sweep(s, tmp_path / "b", workers=2).path.read_bytes()
    assert a == b


def test_completed_sweep_is_not_rerun(tmp_path, monkeypatch):
    s = spec("pi", [{"name": "C", "start": 10, "stop": 100, "points": 3}], {"alpha": 0.01})
    first = run_sweep(s, tmp_path)
    stamp = first.path.stat().st_mtime_ns
    import ybgates.sweep as sweep_mod

    def boom(*_):
        raise AssertionError("point evaluated again")

    monkeypatch.setattr(sweep_mod, "_evaluate_point", boom)
    again = run_sweep(s, tmp_path)
    assert again.skipped and again.path.stat().st_mtime_ns == stamp
    with pytest.raises(AssertionError):
        run_sweep(s, tmp_path, force=True)


def test_changed_spec_recomputes(tmp_path):
    s1 = spec("pi", [{"name": "C", "start": 10, "stop": 100, "points": 3}], {"alpha": 0.01})
    s2 = spec("pi", [{"name": "C", "start": 10, "stop": 100, "points": 4}], {"alpha": 0.01})
    run_sweep(s1, tmp_path)
    res = run_sweep(s2, tmp_path)
    assert not res.skipped and res.rows == 4


def test_interrupted_sweep_resumes_from_journal(tmp_path, monkeypatch):
    import ybgates.sweep as sweep_mod

    s = spec("pi", [{"name": "C", "start": 10, "stop": 1e3, "points": 5, "scale": "log"}], {"alpha": 0.01})
    reference = run_sweep(s, tmp_path / "ref").path.read_bytes()
    real = sweep_mod._evaluate_point
    calls = []

    def flaky(task):
        calls.append(task[0])
        if task[0] == 3:
            raise KeyboardInterrupt
        return real(task)

    monkeypatch.setattr(sweep_mod, "_evaluate_point", flaky)
    with pytest.raises(KeyboardInterrupt):
        run_sweep(s, tmp_path / "run")
    journal = tmp_path / "run" / "s.csv.partial"
    assert journal.is_file() and not (tmp_path / "run" / "s.csv").exists()
    with open(journal, "a") as fh:
        fh.write('{"index": 4, "row"')  # torn line
    calls.clear()
    monkeypatch.setattr(sweep_mod, "_evaluate_point", lambda t: (calls.append(t[0]), real(t))[1])
    res = run_sweep(s, tmp_path / "run")
    assert calls == [3, 4]
    assert res.path.read_bytes() == reference
    assert not journal.exists()


def test_failed_points_land_in_error_column(tmp_path):
    s = spec("vx", [{"name": "Delta_over_g", "start": 20, "stop": 40, "points": 2}], {"method": "bogus"})
    res = run_sweep(s, tmp_path)
    _, rows = read_csv(res.path)
    assert res.failures == 2
    assert all("ConfigError" in r[ERROR_COLUMN] for r in rows)


def test_every_row_in_unit_interval_or_annotated(tmp_path):
    s = spec("vx", [{"name": "C", "start": 10, "stop": 1e4, "points": 4, "scale": "log"}], {"alpha": 0.001})
    res = run_sweep(s, tmp_path)
    _, rows = read_csv(res.path)
    for r in rows:
        f = float(r["fidelity"])
        assert 0.0 <= f <= 1.0 or r[ERROR_COLUMN] == OUT_OF_RANGE
    assert res.out_of_range >= 1


def test_md_surface_has_high_fidelity_region_for_fast_drive(tmp_path):
    path = tmp_path / "md.toml"
    path.write_text(MD_SPEC)
    res = run_sweep(SweepSpec.from_file(path), tmp_path)
    _, rows = read_csv(res.path)
    assert res.rows == 24 and res.failures == 0
    r, om, f = floats(rows, "r_nm"), floats(rows, "omega"), floats(rows, "fidelity")
    assert f[(om == om.max()) & (r == 5)].item() > 0.9
    assert f[(om == om.min()) & (r == 5)].item() < f[(om == om.max()) & (r == 5)].item()
    assert f[(om == om.max()) & (r == 30)].item() < 0.9


def test_pi_surface_has_bulk_plateau(tmp_path):
    s = spec(
        "pi",
        [
            {"name": "g", "start": 1e2, "stop": 1e9, "points": 8, "scale": "log"},
            {"name": "kappa", "start": 1e9, "stop": 1e11, "points": 3, "scale": "log"},
        ],
    )
    _, rows = read_csv(run_sweep(s, tmp_path).path)
    g, f, fp = floats(rows, "g"), floats(rows, "fidelity"), floats(rows, "purcell_factor")
    gamma1 = const.hz(const.YB_GAMMA1_HZ)
    plateau = cavity.pi_fidelity(
        cavity.InterferenceParams(gamma_star=const.pure_dephasing_from_t2(const.YB_T2O_CAVITY, gamma1))
    ).fidelity
    assert np.allclose(f[g == g.min()], plateau, atol=1e-6)
    assert f[g == g.max()].min() > 0.95
    assert np.all(np.diff(fp[floats(rows, "kappa") == 1e10]) > 0)


# -- comparison ----------------------------------------------------------------


def test_comparison_rows():
    res = run_comparison(ComparisonConfig(slice_points=5))
    table = {(r["scheme"], r["value"]): r for r in res["table"]}
    md5, md10 = table[("md", 5.0)], table[("md", 10.0)]
    assert md5["fidelity"] == pytest.approx(0.95, abs=0.01)
    assert md5["gate_time"] == pytest.approx(1.0e-6, rel=0.05)
    assert md10["fidelity"] == pytest.approx(0.90, abs=0.01)
    assert md10["gate_time"] == pytest.approx(3.68e-6, rel=0.05)
    assert table[("ps", 100.0)]["error_rate"] == pytest.approx(0.046, abs=0.01)
    assert table[("pi", 100.0)]["error_rate"] == pytest.approx(0.01, abs=0.01)
    assert table[("ps", 1000.0)]["error_rate"] < table[("ps", 100.0)]["error_rate"]
    assert "note" in table[("vx", 100.0)]
    assert len(res["slice"]) == 5


# -- plot scripts --------------------------------------------------------------


def _run_script(script_path: Path) -> subprocess.CompletedProcess:
    env = {**os.environ, "MPLBACKEND": "Agg"}
    return subprocess.run([sys.executable, str(script_path)], capture_output=True, text=True, env=env, timeout=120)


def test_line_plot_script_runs(tmp_path):
    pytest.importorskip("matplotlib")
    s = spec("ps-analytic", [{"name": "C", "start": 10, "stop": 1e4, "points": 5, "scale": "log"}], {"alpha": 0.001})
    csv_path = run_sweep(s, tmp_path).path
    text = emit_plotscript(csv_path, "line")
    assert "ybgates" not in text and 'with_name("s.csv")' in text
    script = tmp_path / "plot_line.py"
    script.write_text(text)
    done = _run_script(script)
    assert done.returncode == 0, done.stderr
    assert csv_path.with_suffix(".png").is_file()


def test_heatmap_script_has_power_of_ten_contours(tmp_path):
    pytest.importorskip("matplotlib")
    s = spec(
        "pi",
        [
            {"name": "g", "start": 1e6, "stop": 1e9, "points": 4, "scale": "log"},
            {"name": "kappa", "start": 1e9, "stop": 1e11, "points": 3, "scale": "log"},
        ],
    )
    csv_path = run_sweep(s, tmp_path).path
    text = emit_plotscript(csv_path, "heatmap")
    assert "'purcell_factor'" in text and "10.0**k" in text and "dashed" in text
    script = tmp_path / "plot_heat.py"
    script.write_text(text)
    done = _run_script(script)
    assert done.returncode == 0, done.stderr


@pytest.mark.parametrize("kind", ["line", "heatmap"])
def test_empty_dataset_script_exits_cleanly(tmp_path, kind):
    pytest.importorskip("matplotlib")
    csv_path = write_csv(tmp_path / "empty.csv", [], {"scheme": "pi"}, ["C"])
    script = tmp_path / f"empty_{kind}.py"
    script.write_text(emit_plotscript(csv_path, kind))
    done = _run_script(script)
    assert done.returncode == 0, done.stderr


def test_plotscript_errors(tmp_path):
    with pytest.raises(ConfigError):
        emit_plotscript(tmp_path / "missing.csv", "line")
    csv_path = write_csv(tmp_path / "x.csv", [], {}, ["C"])
    with pytest.raises(ConfigError):
        emit_plotscript(csv_path, "pie")


# -- command line --------------------------------------------------------------


def test_cli_sweep_then_up_to_date(tmp_path, capsys):
    (tmp_path / "md.toml").write_text(MD_SPEC)
    args = ["sweep", str(tmp_path / "md.toml"), "--out", str(tmp_path)]
    assert main(args) == EXIT_OK
    assert "written" in capsys.readouterr().out
    assert main(args) == EXIT_OK
    assert "up to date" in capsys.readouterr().out
    assert main(args + ["--force"]) == EXIT_OK
    assert "written" in capsys.readouterr().out


def test_cli_config_dir_environment(tmp_path, monkeypatch):
    cfg = tmp_path / "configs"
    cfg.mkdir()
    (cfg / "md.toml").write_text(MD_SPEC)
    monkeypatch.setenv(CONFIG_DIR_ENV, str(cfg))
    monkeypatch.chdir(tmp_path)
    assert main(["sweep", "md.toml", "--out", str(tmp_path / "o")]) == EXIT_OK
    monkeypatch.delenv(CONFIG_DIR_ENV)
    assert main(["sweep", "md.toml", "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_cli_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("scheme = [")
    assert main(["sweep", str(bad)]) == EXIT_CONFIG
    assert main(["sweep", str(tmp_path / "absent.toml")]) == EXIT_CONFIG
    assert main(["frobnicate"]) == EXIT_CONFIG
    assert main(["sweep", str(bad), "--workers", "0"]) == EXIT_CONFIG
    failing = tmp_path / "fail.toml"
    failing.write_text(
        'scheme = "vx"\n[[axes]]\nname = "Delta_over_g"\nstart = 20\nstop = 30\npoints = 2\n[fixed]\nmethod = "bogus"\n'
    )
    assert main(["sweep", str(failing), "--out", str(tmp_path)]) == EXIT_FAILED
    capsys.readouterr()


def test_cli_validate_writes_report(tmp_path, capsys):
    out = tmp_path / "pi.json"
    assert main(["validate", "pi", "--out", str(out)]) == EXIT_OK
    report = json.loads(out.read_text())
    assert report["passed"] and report["suite"] == "pi"
    assert json.loads(capsys.readouterr().out) == report


def test_cli_validate_failure_exit_code(monkeypatch, capsys):
    import ybgates.cli as cli_mod
    from ybgates.validation import Check

    monkeypatch.setattr(cli_mod, "run_validation", lambda suite: [Check(suite, "x", False, 1.0, "0")])
    assert main(["validate", "md"]) == EXIT_FAILED
    capsys.readouterr()


def test_cli_compare_and_plot(tmp_path, capsys):
    cfg = tmp_path / "cmp.toml"
    cfg.write_text("[comparison]\nslice_points = 4\n")
    assert main(["compare", str(cfg), "--out", str(tmp_path)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "md" in out and "ps" in out
    slice_csv = tmp_path / "cooperativity_slice.csv"
    _, rows = read_csv(slice_csv)
    assert len(rows) == 4 and {"ps_fidelity", "pi_gate_time"} <= set(rows[0])
    assert main(["plot", str(slice_csv), "--kind", "line"]) == EXIT_OK
    script = slice_csv.with_suffix(".line.py").read_text()
    assert "ps_fidelity" in script and "pi_gate_time" in script
    assert main(["plot", str(tmp_path / "none.csv"), "--kind", "line"]) == EXIT_CONFIG
    capsys.readouterr()


def test_console_entry_point_help():
    done = subprocess.run([sys.executable, "-m", "ybgates.cli", "--help"], capture_output=True, text=True, timeout=60)
    assert done.returncode == 0
    assert "sweep" in done.stdout and "validate" in done.stdout
