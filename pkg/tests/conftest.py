import functools

import numpy as np
import pytest

from magrod.flow import Section
from magrod.manifolds import STABLE, UNSTABLE, compute_sheet, refine_equilibrium, slice_sheet
from magrod.model import Params

REFERENCE = Params.scaled(0.5, 0.1, 0.01, 0.01)


@functools.lru_cache(maxsize=None)
def manifold_pair(eps, nu, mu=0.1, alpha=0.5, steps=400):
    """W^u and W^s sheets on the psi = 0 section plus their slices (cached per session)."""
    p = Params.scaled(alpha, mu, nu, eps)
    eq = refine_equilibrium(p)
    sec = Section.psi()
    sheets = {side: compute_sheet(p, side, sec, steps=steps, equilibrium=eq) for side in (UNSTABLE, STABLE)}
    slices = {side: slice_sheet(sheets[side]) for side in sheets}
    return p, eq, sheets, slices


@pytest.fixture(scope="session")
def perturbed_manifolds():
    return manifold_pair(0.01, 0.01)


@pytest.fixture(scope="session")
def integrable_manifolds():
    return manifold_pair(0.0, 0.01)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
