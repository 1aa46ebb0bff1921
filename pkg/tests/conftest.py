"""
Pytest configuration and shared fixtures.

IMPORTANT: This file normalizes environment variables at module import time,
BEFORE any app imports, so a developer's .env or shell cannot change the
global Settings() the tests run against.
"""
import os

# ============================================================================
# CRITICAL: Normalize environment variables BEFORE any app imports
# ============================================================================
# app.core.config instantiates Settings() at import. Worker overrides and
# timing flags from the shell would make CLI outputs differ between runs.

for _name in ("SPILLOVER_FORGE_WORKERS", "SPILLOVER_FORGE_RECORD_TIMINGS", "SPILLOVER_FORGE_OUTPUT_DIR"):
    os.environ.pop(_name, None)
os.environ["SPILLOVER_FORGE_LOG_LEVEL"] = "WARNING"


# ============================================================================
# Now it's safe to import pytest and define fixtures
# ============================================================================
import numpy as np
import pytest

from app.models.game import GraphSpillover, Instance, LinearCost, PowerCost, ScalingLaw
from app.models.tree import TreeInstance
from app.services.instance_service import counterexample_tullock, counterexample_wta


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: statistical or exhaustive suites (still run by default)")


def make_graph_instance(q, g, c, r=None, scale=1.0, label="test") -> Instance:
    """Graph instance with linear costs; r defaults to the support of g."""
    g = np.asarray(g, dtype=float)
    if r is None:
        r = (g != 0).astype(float)
    return Instance(
        n=len(q),
        quality=GraphSpillover(q=q, g=g, r=r, scale=scale),
        cost=LinearCost(c=c),
        label=label,
    )


@pytest.fixture
def single_player():
    """n = 1, q = 0.5, c = 0.4."""
    return make_graph_instance([0.5], [[0.0]], [0.4])


@pytest.fixture
def two_player_graph():
    """Two players with mutual spillovers 0.2."""
    return make_graph_instance([0.3, 0.4], [[0.0, 0.2], [0.2, 0.0]], [0.1, 0.2])


@pytest.fixture
def wta_fixture():
    return counterexample_wta()


@pytest.fixture
def tullock_fixture():
    return counterexample_tullock()


@pytest.fixture
def scaling_instance():
    """Three-player scaling-law instance with convex power costs."""
    return Instance(
        n=3,
        quality=ScalingLaw(a=0.2, b=0.6, alpha=0.095, dc=1.0, d=2.0),
        cost=PowerCost(c=[0.1, 0.2, 0.3], exponent=2.0),
        label="scaling",
    )


@pytest.fixture
def path_tree():
    """Path 0 -> 1 -> 2."""
    return TreeInstance(
        n=3,
        parent=[None, 0, 1],
        q=[0.4, 0.2, 0.3],
        gpar=[0.0, 0.3, 0.2],
        c=[0.1, 0.15, 0.2],
        label="path",
    )
