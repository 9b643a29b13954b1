import math

import pytest

from rwreld import envmodel as em


@pytest.fixture(scope="session")
def uniform_dist():
    return em.EnvDistribution.uniform(0.05)


@pytest.fixture(scope="session")
def staircase(uniform_dist):
    """Hand-built good environment at a feasibly small scale."""
    params = em.good_env_params(uniform_dist, 0.08, math.exp(13))
    env = em.build_staircase_environment(params, uniform_dist)
    return env, params
