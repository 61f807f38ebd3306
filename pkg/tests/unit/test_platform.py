import os

import pytest

from utils.platform import (
    available_cpus,
    cap_workers,
    ensure_parent_exists,
    get_logs_dir,
    get_platform,
    resolve_log_file,
)


@pytest.mark.parametrize("system,expected", [
    ("Windows", "windows"),
    ("Darwin", "macos"),
    ("Linux", "linux"),
    ("SunOS", "unknown"),
])
def test_get_platform(monkeypatch, system, expected):
    monkeypatch.setattr("platform.system", lambda: system)
    assert get_platform() == expected


@pytest.mark.parametrize("platform_type,environ,expected", [
    ("windows", {"LOCALAPPDATA": "/appdata"}, os.path.join("/appdata", "dynlab", "logs")),
    ("linux", {"XDG_STATE_HOME": "/state"}, os.path.join("/state", "dynlab", "logs")),
    ("linux", {}, os.path.join(os.path.expanduser("~"), ".local", "state", "dynlab", "logs")),
    ("macos", {}, os.path.join(os.path.expanduser("~"), "Library", "Logs", "dynlab")),
    ("unknown", {}, os.path.join(os.path.expanduser("~"), ".dynlab", "logs")),
])
def test_get_logs_dir(monkeypatch, platform_type, environ, expected):
    monkeypatch.setattr("utils.platform.get_platform", lambda: platform_type)
    assert get_logs_dir(environ) == expected


def test_resolve_log_file(monkeypatch):
    monkeypatch.setattr("utils.platform.get_logs_dir", lambda: "/logs")
    assert resolve_log_file("run.log") == os.path.join("/logs", "run.log")
    assert resolve_log_file(os.path.join("here", "run.log")) == os.path.join("here", "run.log")


def test_ensure_parent_exists(tmp_path):
    prefix = tmp_path / "a" / "b" / "run"
    ensure_parent_exists(str(prefix))
    assert prefix.parent.is_dir()
    ensure_parent_exists("run")


def test_cap_workers(monkeypatch):
    monkeypatch.setattr("utils.platform.available_cpus", lambda: 4)
    assert cap_workers(2) == 2
    assert cap_workers(16) == 4
    assert cap_workers(0) == 1
    assert available_cpus() >= 1
