import json

import pytest

from src.errors import MalformedInput, SearchSpaceTooLarge
from src.settings_manager import (DEFAULT_MAX_ENUM, ENV_MAX_ENUM, AppSettings, SettingsManager, bounded, enum_bound,
                                  guard)


@pytest.fixture(autouse=True)
def no_env_bound(monkeypatch):
    monkeypatch.delenv(ENV_MAX_ENUM, raising=False)


def test_default_bound():
    assert enum_bound() == DEFAULT_MAX_ENUM


def test_environment_bound(monkeypatch):
    monkeypatch.setenv(ENV_MAX_ENUM, "7")
    assert enum_bound() == 7
    with bounded(3):
        assert enum_bound() == 3
    assert enum_bound() == 7


@pytest.mark.parametrize("raw", ["0", "-4", "many"])
def test_bad_environment_bounds_are_rejected(monkeypatch, raw):
    monkeypatch.setenv(ENV_MAX_ENUM, raw)
    with pytest.raises(MalformedInput):
        enum_bound()


def test_non_positive_bounds_are_rejected_everywhere():
    with pytest.raises(MalformedInput):
        AppSettings(max_enum=0)
    with pytest.raises(MalformedInput):
        with bounded(0):
            pass


def test_guard():
    with bounded(4):
        guard(4, "subsets")
        with pytest.raises(SearchSpaceTooLarge) as info:
            guard(5, "subsets")
    assert info.value.exit_code == 3


def test_settings_round_trip(tmp_path):
    manager = SettingsManager(settings_dir=str(tmp_path))
    assert manager.settings.report_format == "json"
    manager.update_settings(max_enum=50, last_workspace="w.json")
    reloaded = SettingsManager(settings_dir=str(tmp_path))
    assert reloaded.settings.max_enum == 50
    assert reloaded.settings.last_workspace == "w.json"


def test_broken_settings_file_falls_back_to_defaults(tmp_path):
    (tmp_path / "settings.json").write_text(json.dumps({"max_enum": -1}), encoding="utf-8")
    assert SettingsManager(settings_dir=str(tmp_path)).settings.max_enum == DEFAULT_MAX_ENUM
