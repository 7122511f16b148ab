import numpy as np
import pytest

from metricsphere import (
    ApproximationLadder,
    build_approximation,
    round_sphere,
    snowball,
    snowball_space,
)


@pytest.fixture(scope="session")
def round3_mesh():
    return round_sphere(3)


@pytest.fixture(scope="session")
def round3_space(round3_mesh):
    return round3_mesh.space()


@pytest.fixture(scope="session")
def round_ladder(round3_mesh, round3_space):
    """Levels 1..3 over the shared level-3 sample."""
    return ApproximationLadder(
        [build_approximation(round3_mesh, L, space=round3_space)
         for L in (1, 2, 3)])


@pytest.fixture(scope="session")
def round2_approx(round_ladder):
    return round_ladder.levels[1]


@pytest.fixture(scope="session")
def snow1_complex():
    return snowball(1)


@pytest.fixture(scope="session")
def snow1_sample(snow1_complex):
    return snowball_space(snow1_complex)
