from pathlib import Path

import numpy as np
import pytest

from phaseamp.assembly import assemble
from phaseamp.potentials import PotentialKind, RadialContext

FIXTURES = Path(__file__).resolve().parent / "fixtures"
BENCH_GRID = np.linspace(0.001, 300.0, 1025)


def coulomb(l=0, k=1.0, Z=1.0):
    return RadialContext(l, k, PotentialKind("coulomb", Z))


def free(l=0, k=1.0):
    return RadialContext(l, k, PotentialKind("free"))


def screened(kind, alpha, l=0, k=1.0, Z=1.0):
    return RadialContext(l, k, PotentialKind(kind, Z, alpha))


_STATES = {}


def state(ctx, r_min=1e-3, method="linear17"):
    """Assembled states are immutable, so tests share them."""
    key = (ctx, r_min, method)
    if key not in _STATES:
        _STATES[key] = assemble(ctx, r_min, method)
    return _STATES[key]


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240611)
