from __future__ import annotations

import socket
import sys
from pathlib import Path

import pytest

from alharness.core import write_index
from alharness.eval import backend
from alharness.sim import PoolSpec, generate_pool

sys.path.insert(0, str(Path(__file__).parent))

PLUGIN_DIR = Path(__file__).parent / "plugins"


@pytest.fixture(autouse=True, scope="session")
def no_network():
    """Fail loudly if anything under test tries to reach the network."""
    real_connect = socket.socket.connect

    def guarded(self, address):
        if self.family in (socket.AF_INET, socket.AF_INET6):
            raise RuntimeError(f"network access attempted: {address!r}")
        return real_connect(self, address)

    socket.socket.connect = guarded
    yield
    socket.socket.connect = real_connect


def available_backends() -> list[str]:
    names = ["python"]
    try:
        backend.get("cython")
    except ImportError:
        pass
    else:
        names.append("cython")
    return names


@pytest.fixture(params=available_backends())
def kernels(request):
    return backend.get(request.param)


@pytest.fixture(scope="session")
def small_pool(tmp_path_factory):
    """200-sample pool with a 100-sample test split, written once per session."""
    catalog, samples = generate_pool(PoolSpec(n=200, n_classes=3, seed=3, test_size=100))
    path = tmp_path_factory.mktemp("pool") / "small.jsonl"
    write_index(path, catalog, samples)
    return path


@pytest.fixture(scope="session")
def desk_pool(tmp_path_factory):
    """The 1/10-scale protocol pool: 2000 mining samples, 5 classes."""
    catalog, samples = generate_pool(PoolSpec(n=2000, n_classes=5, seed=7, test_size=500))
    path = tmp_path_factory.mktemp("pool") / "desk.jsonl"
    write_index(path, catalog, samples)
    return path


def script_manifest(tmp_path: Path, script: str, kind: str = "strategy", name: str | None = None,
                    **extra) -> Path:
    """Write a plugin.json running one of the test plugin scripts with this interpreter."""
    import json

    manifest = {
        "name": name or Path(script).stem,
        "kind": kind,
        "entry_command": [sys.executable, str(PLUGIN_DIR / script)],
        "protocol_version": "1.0.0",
        **extra,
    }
    path = tmp_path / f"{Path(script).stem}.plugin.json"
    path.write_text(json.dumps(manifest), encoding="utf-8")
    return path


# ---------------------------------------------------------------- acceptance summary

_ACCEPTANCE: list[tuple[str, str, str]] = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(name): top-level acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or report.when != "call":
        return
    detail = dict(item.user_properties).get("detail", "")
    status = "PASS" if report.passed else "FAIL"
    line = f"{status}  {marker.args[0]}" + (f"  ({detail})" if detail else "")
    _ACCEPTANCE.append((status, marker.args[0], detail))
    # shown inline even when output is captured
    item.config.pluginmanager.get_plugin("terminalreporter").write_line("\n" + line)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for status, name, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{status}  {name}" + (f"  ({detail})" if detail else ""))
