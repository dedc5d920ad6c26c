from __future__ import annotations

import functools

import pytest

from torsionlab.domains import fit_mesh, rasterize_domain
from torsionlab.fem import solve_torsion_fem
from torsionlab.manifold import make_manifold

_CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by the test")


@functools.lru_cache(maxsize=64)
def fem_case(kind: str, params: tuple, spec, N: int):
    """Cached ``(manifold, mask, field)`` for a domain on a catalog manifold."""
    m = make_manifold(kind, **dict(params))
    mask = rasterize_domain(fit_mesh(m, spec, N), spec)
    return m, mask, solve_torsion_fem(mask)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when not in ("setup", "call"):
        return
    number, title = marker.args
    if report.failed or report.when == "call":
        _CRITERIA[number] = ("PASS" if report.passed else "FAIL", title)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        status, title = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d}: {status}  {title}")
