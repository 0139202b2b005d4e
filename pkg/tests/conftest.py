import functools

import pytest

from roomgap.geometry import ScalingPreset, asymptotic_preset, build_cell
from roomgap.mesh import MeshSpec, triangulate

# filled by test_acceptance.py, reported at the end of the session
ACCEPTANCE = {}

UNIT_PRESET = ScalingPreset(1, 1, 1)
DEFAULT_MESH = MeshSpec(1 / 32)


@functools.lru_cache(maxsize=None)
def preset_mesh(eps: str, target_h: float = 1 / 32):
    params = asymptotic_preset(UNIT_PRESET, eps)
    return params, triangulate(build_cell(params), target_h)


@pytest.fixture(scope="session")
def unit_preset():
    return UNIT_PRESET


@pytest.fixture(scope="session")
def default_mesh():
    return DEFAULT_MESH


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, line = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {line}")
