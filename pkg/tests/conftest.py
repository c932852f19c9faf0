import numpy as np
import pytest
from scipy.special import logit

import seqtest as st

# two atoms at the natural logits of 0.3 and 0.7, equal weights, threshold 0:
# the standing benchmark instance used across the suite
BENCH_ATOMS = (float(logit(0.3)), float(logit(0.7)))


@pytest.fixture(scope="session")
def bernoulli_family():
    return st.make_named_family("bernoulli")


@pytest.fixture(scope="session")
def gaussian_mean_family():
    return st.make_named_family("gaussian-mean")


@pytest.fixture(scope="session")
def benchmark_prior():
    return st.make_prior(BENCH_ATOMS, [1.0, 1.0], 0.0)


@pytest.fixture(scope="session")
def benchmark_surface(benchmark_prior, bernoulli_family):
    horizon = st.choose_horizon(0.05, 0.1)
    return st.solve(benchmark_prior, bernoulli_family, 0.05, horizon, grid_size=2001)


@pytest.fixture(scope="session")
def three_atom_prior():
    return st.make_prior([-1.0, -0.1, 1.0], [1.0, 1.0, 1.0], 0.0)


@pytest.fixture()
def rng():
    return np.random.default_rng(20260808)
