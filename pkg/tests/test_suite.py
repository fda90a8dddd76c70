import json
from collections.abc import Iterator
from pathlib import Path

import pytest

from qpmoduli.config import BUNDLED_CONFIGS, get_settings
from qpmoduli.services.suite import ConfigError, describe, dump_report, load_config, parse_config, prepare, run_suite


@pytest.fixture(autouse=True)
def fresh_settings() -> Iterator[None]:
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


def _bundled(name: str):
    return load_config(BUNDLED_CONFIGS / f"{name}.json")


@pytest.mark.parametrize("path", sorted(BUNDLED_CONFIGS.glob("*.json")), ids=lambda p: p.stem)
def test_bundled_configs_parse(path: Path) -> None:
    config = load_config(path)
    assert config.name == path.stem


def test_disk_suite_passes() -> None:
    report = run_suite(prepare(_bundled("disk"), points=2))
    assert report.ok
    assert [r.name for r in report.checks] == sorted(_bundled("disk").checks)
    assert all(r.ok and r.witness is None for r in report.checks)


def test_wrong_sign_fails_where_expected() -> None:
    report = run_suite(prepare(_bundled("wrong_sign")))
    assert report.ok
    (result,) = report.checks
    assert result.name == "quasi_poisson"
    assert not result.ok
    assert result.witness is not None
    assert result.witness["seed"] == 37


def test_unexpected_failure_marks_the_report() -> None:
    config = _bundled("wrong_sign").model_copy(update={"expect_failure": []})
    assert not run_suite(prepare(config)).ok


def test_reports_are_deterministic() -> None:
    config = _bundled("annulus_sl2")
    first = dump_report(run_suite(prepare(config, checks=["quasi_poisson", "centrality"])))
    second = dump_report(run_suite(prepare(config, checks=["quasi_poisson", "centrality"])))
    assert first == second
    assert json.loads(first)["seed"] == 11


def test_disabled_checks_are_skipped(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("QP_ENABLED_CHECKS", "centrality")
    get_settings.cache_clear()
    report = run_suite(prepare(_bundled("three_marked_disk"), points=1))
    assert [r.name for r in report.checks] == ["centrality"]


def test_seed_falls_back_to_settings(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("QP_DEFAULT_SEED", "123")
    get_settings.cache_clear()
    suite = prepare(parse_config({"name": "x", "algebra": "sl2", "surface": "disk"}))
    assert suite.seed == 123
    assert prepare(parse_config({"name": "x", "algebra": "sl2", "surface": "disk"}), seed=5).seed == 5


def test_bad_json_reports_position(tmp_path: Path) -> None:
    path = tmp_path / "broken.json"
    path.write_text('{\n  "name": "broken",\n  "algebra": sl2\n}\n', encoding="utf-8")
    with pytest.raises(ConfigError, match=r"broken\.json:3:\d+"):
        load_config(path)


def test_missing_file(tmp_path: Path) -> None:
    with pytest.raises(ConfigError, match="missing.json"):
        load_config(tmp_path / "missing.json")


@pytest.mark.parametrize(
    ("document", "message"),
    [
        ({"name": "x", "algebra": "sl2", "surface": "disk", "colour": "red"}, "colour"),
        ({"name": "x", "algebra": "sl2", "surface": "disk", "checks": ["telemetry"]}, "checks"),
        ({"name": "x", "algebra": "sl2"}, "surface"),
        ({"name": "x", "algebra": "sl2", "surface": "disk", "points": 0}, "points"),
    ],
)
def test_invalid_documents(document: dict, message: str) -> None:
    with pytest.raises(ConfigError, match=message):
        parse_config(document)


@pytest.mark.parametrize(
    "document",
    [
        {"name": "x", "algebra": "so3", "surface": "disk"},
        {"name": "x", "algebra": "sl2", "surface": "mobius"},
        {"name": "x", "algebra": "abelian3", "surface": "disk"},
        {"name": "x", "algebra": "sl2", "surface": {"disks": 1, "steps": [{"op": "glue", "x": "+1", "y": "+1"}]}},
    ],
)
def test_unresolvable_references(document: dict) -> None:
    with pytest.raises(ConfigError):
        prepare(parse_config(document))


def test_unknown_check_override() -> None:
    with pytest.raises(ConfigError, match="Unknown checks"):
        prepare(_bundled("disk"), checks=["telemetry"])


def test_describe_lists_the_central_maps() -> None:
    summary = describe(prepare(_bundled("annulus_sl2")))
    assert summary["config"] == "annulus_sl2"
    assert summary["acting_rank"] == 6
    assert len(summary["central_maps"]["mu_L"]) == 1
