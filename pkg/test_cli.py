"""
CLI tests: drive ruled_verify.py as a subprocess and check exit codes,
report files and CSV output.
"""

import argparse
import json
import subprocess
import sys
from pathlib import Path

import pytest

from ruled_verify import EXIT_FAIL, EXIT_OK, EXIT_USAGE, build_config
from ruledmin.errors import ConfigError

BASE_DIR = Path(__file__).parent
SCRIPT = BASE_DIR / "ruled_verify.py"


def run_cli(*args, cwd=None):
    cmd = [sys.executable, str(SCRIPT), *args]
    return subprocess.run(cmd, capture_output=True, text=True, cwd=cwd or BASE_DIR)


def namespace(**overrides):
    values = dict(config=None, surface=None, seed=None, samples=None, oracle_samples=None, theta=None,
                  grid=None, report=None, csv=None, equivariance=False, verbose=False)
    values.update(overrides)
    return argparse.Namespace(**values)


def test_flags_override_config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("samples = 40\nseed = 3\n")
    config = build_config(namespace(config=str(path), samples=5, theta="0,1.5"))
    assert config.samples == 5
    assert config.seed == 3
    assert config.thetas == [0.0, 1.5]


def test_missing_config_file():
    with pytest.raises(ConfigError):
        build_config(namespace(config="/nonexistent/run.cfg"))


def test_bad_grid_flag():
    with pytest.raises(ConfigError):
        build_config(namespace(grid="wide"))


def test_no_command_is_usage_error():
    assert run_cli().returncode == EXIT_USAGE


def test_unknown_surface_is_usage_error(tmp_path):
    result = run_cli("surface-verify", "--surface", "nope", cwd=tmp_path)
    assert result.returncode == EXIT_USAGE


def test_invalid_config_file_is_usage_error(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("colour = red\n")
    result = run_cli("surface-verify", "--config", str(path), cwd=tmp_path)
    assert result.returncode == EXIT_USAGE


def test_surface_verify_torus(tmp_path):
    report_path = tmp_path / "surface.json"
    result = run_cli("surface-verify", "--samples", "4", "--report", str(report_path), cwd=tmp_path)
    assert result.returncode == EXIT_OK, result.stdout
    report = json.loads(report_path.read_text())
    assert report['schema'] == '1'
    assert report['pass'] is True
    ids = [check['check'] for check in report['checks']]
    assert ids == sorted(ids)
    assert 'surface.gauss_equation' in ids
    third = report['sections']['third_ellipse']
    assert third['kappa1_min'] == pytest.approx(1 / 2 ** 0.5, abs=1e-6)
    assert third['kappa1_max'] == pytest.approx(1 / 2 ** 0.5, abs=1e-6)


def test_surface_verify_control(tmp_path):
    report_path = tmp_path / "control.json"
    result = run_cli("surface-verify", "--surface", "clifford-control", "--samples", "4",
                     "--report", str(report_path), cwd=tmp_path)
    assert result.returncode == EXIT_OK, result.stdout
    report = json.loads(report_path.read_text())
    ids = [check['check'] for check in report['checks']]
    assert 'surface.ellipse_degenerate' in ids
    assert 'surface.conn' not in ids


def test_export_is_deterministic(tmp_path):
    csv_path = tmp_path / "torus.csv"
    report_path = tmp_path / "torus.json"
    args = ("export", "--grid", "4x4", "--csv", str(csv_path), "--report", str(report_path))

    first = run_cli(*args, cwd=tmp_path)
    assert first.returncode == EXIT_OK, first.stdout
    first_report, first_csv = report_path.read_text(), csv_path.read_text()

    second = run_cli(*args, cwd=tmp_path)
    assert second.returncode == EXIT_OK
    assert report_path.read_text() == first_report
    assert csv_path.read_text() == first_csv

    lines = first_csv.strip().splitlines()
    assert lines[0] == "s,u,v,t1,Omega,normSq,rank,singular"
    assert len(lines) == 17
    assert json.loads(first_report)['sections']['csv']['rows'] == 16


def test_family_sweep_runs(tmp_path):
    report_path = tmp_path / "family.json"
    result = run_cli("family-sweep", "--samples", "4", "--theta", "0,0.5", "--grid", "16x16",
                     "--report", str(report_path), cwd=tmp_path)
    assert result.returncode in (EXIT_OK, EXIT_FAIL), result.stdout
    report = json.loads(report_path.read_text())
    checks = {check['check']: check for check in report['checks']}
    assert checks['family.identity']['pass'] is True
    assert checks['family.gauss_control']['pass'] is True
    assert checks['family.forms[0.500000]']['pass'] is True
    assert [record['theta'] for record in report['sections']['sweep']] == [0.0, 0.5]


def test_watch_handler_reruns_only_for_its_file(tmp_path):
    from watchdog.events import FileModifiedEvent

    from ruled_watch import ConfigChangeHandler

    config = tmp_path / "run.cfg"
    config.write_text("samples = 2\n")
    calls = []
    handler = ConfigChangeHandler(str(config), lambda: calls.append(1) or EXIT_OK)
    handler.on_modified(FileModifiedEvent(str(tmp_path / "other.cfg")))
    assert calls == []
    handler.on_modified(FileModifiedEvent(str(config)))
    assert calls == [1]
    assert handler.last_code == EXIT_OK


def test_watch_missing_config_is_usage_error(tmp_path):
    from ruled_watch import watch_config

    assert watch_config(str(tmp_path / "missing.cfg"), "surface-verify") == EXIT_USAGE


def test_ruled_verify_torus(tmp_path):
    report_path = tmp_path / "ruled.json"
    result = run_cli("ruled-verify", "--samples", "6", "--oracle-samples", "2", "--report", str(report_path),
                     cwd=tmp_path)
    assert result.returncode in (EXIT_OK, EXIT_FAIL), result.stdout
    report = json.loads(report_path.read_text())
    checks = {check['check']: check for check in report['checks']}
    for check_id in ('ruled.trace', 'ruled.nullity', 'ruled.vertex', 'ruled.flat_h', 'ruled.singular_scan'):
        assert checks[check_id]['pass'] is True
    assert checks['ruled.singular_scan']['detail']['samples'] > 0
    assert 'length_audit' in report['sections']
