import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from chenmap.chart_geometry import CurvatureTensor
from chenmap.sweep import soundness_sweep

settings.register_profile("chenmap", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("chenmap")


def constant_curvature(r: int, c: float) -> CurvatureTensor:
    g = np.eye(r)
    return CurvatureTensor(r, c * (np.einsum("jk,il->ijkl", g, g) - np.einsum("ik,jl->ijkl", g, g)), g)


def random_curvature(rng: np.random.Generator, r: int) -> np.ndarray:
    """Algebraic curvature tensor built from a random symmetric bivector form."""
    from itertools import combinations

    pairs = list(combinations(range(r), 2))
    A = rng.normal(size=(len(pairs), len(pairs)))
    M = 0.5 * (A + A.T)
    R = np.zeros((r,) * 4)
    for p, (a, b) in enumerate(pairs):
        for q, (c, d) in enumerate(pairs):
            v = -M[p, q]
            R[a, b, c, d] = v
            R[b, a, c, d] = -v
            R[a, b, d, c] = -v
            R[b, a, d, c] = v
    # remove the Bianchi-violating part (totally antisymmetric component)
    S = (R + R.transpose(1, 2, 0, 3) + R.transpose(2, 0, 1, 3)) / 3.0
    return R - S


@pytest.fixture(scope="session")
def sweep_200():
    return soundness_sweep(200, seed=0)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
