import contextlib

import numpy as np
import pytest

from lipcert import _backend, certify, linalg

BACKENDS = [_backend.python] + ([_backend.compiled] if _backend.compiled is not None else [])


@pytest.fixture(params=BACKENDS, ids=lambda k: k.NAME)
def backend(request, monkeypatch):
    """Run the test once per available kernel backend."""
    for mod in (linalg, certify):
        monkeypatch.setattr(mod, "kernels", request.param)
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_psd(rng, d):
    G = rng.uniform(-1.0, 1.0, (d, d))
    return G, G.T @ G


# -- acceptance reporting ----------------------------------------------------

_ACCEPTANCE = []


@pytest.fixture
def criterion():
    @contextlib.contextmanager
    def record(number, title):
        info = {}
        try:
            yield info
        except BaseException:
            _ACCEPTANCE.append((number, title, False, info.get("detail", "")))
            raise
        _ACCEPTANCE.append((number, title, True, info.get("detail", "")))

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, ok, detail in sorted(_ACCEPTANCE, key=lambda r: r[0]):
        line = f"[{'PASS' if ok else 'FAIL'}] {number}. {title}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)
