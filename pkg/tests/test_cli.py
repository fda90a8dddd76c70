import json
from pathlib import Path

import pytest

from qpmoduli.cli import EXIT_CONFIG, EXIT_FAILED, EXIT_OK, main, resolve_config_path
from qpmoduli.config import BUNDLED_CONFIGS


def test_bundled_names_resolve() -> None:
    assert resolve_config_path("disk") == BUNDLED_CONFIGS / "disk.json"
    assert resolve_config_path("disk.json") == BUNDLED_CONFIGS / "disk.json"
    assert resolve_config_path("nowhere") == Path("nowhere")


def test_validate(capsys: pytest.CaptureFixture[str]) -> None:
    assert main(["validate", "annulus_sl2"]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["valid"]
    assert out["config"] == "annulus_sl2"
    assert "quasi_poisson" in out["checks"]


def test_run_writes_report(tmp_path: Path) -> None:
    out = tmp_path / "report.json"
    code = main(["run", "disk", "--check", "quasi_poisson", "--points", "1", "--out", str(out), "--timing"])
    assert code == EXIT_OK
    report = json.loads(out.read_text(encoding="utf-8"))
    assert report["ok"]
    assert report["elapsed_ms"] is not None
    assert [c["name"] for c in report["checks"]] == ["quasi_poisson"]


def test_expected_failure_still_exits_cleanly(capsys: pytest.CaptureFixture[str]) -> None:
    assert main(["run", "wrong_sign"]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert not report["checks"][0]["ok"]


def test_failed_check_exit_code(tmp_path: Path) -> None:
    document = json.loads((BUNDLED_CONFIGS / "wrong_sign.json").read_text(encoding="utf-8"))
    document["expect_failure"] = []
    path = tmp_path / "unexpected.json"
    path.write_text(json.dumps(document), encoding="utf-8")
    assert main(["run", str(path), "--points", "1"]) == EXIT_FAILED


def test_config_errors_exit_with_two(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    path = tmp_path / "bad.json"
    path.write_text('{"name": "bad", "algebra": "so3", "surface": "disk"}', encoding="utf-8")
    assert main(["validate", str(path)]) == EXIT_CONFIG
    assert "so3" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "absent.json")]) == EXIT_CONFIG


def test_describe(capsys: pytest.CaptureFixture[str]) -> None:
    assert main(["describe", "genus1"]) == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["config"] == "genus1"
    assert set(summary["central_maps"]) == {"mu_L", "mu_R", "uncut"}


def test_unknown_check_choice_is_rejected() -> None:
    with pytest.raises(SystemExit):
        main(["run", "disk", "--check", "telemetry"])
