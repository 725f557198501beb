"""Shared helpers for the test suite."""

import numpy as np

from nonholo.liealg import InertiaOperator, wedge_dim


def rng_for(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def random_spd_operator(n: int, rng: np.random.Generator) -> InertiaOperator:
    """A generic symmetric positive-definite operator on wedge coordinates."""
    N = wedge_dim(n)
    B = rng.standard_normal((N, N))
    return InertiaOperator.general(n, B @ B.T + N * np.eye(N))


def random_products_operator(n: int, rng: np.random.Generator) -> InertiaOperator:
    return InertiaOperator.wedge_products(rng.uniform(0.5, 2.5, size=n))


def chaplygin_params(n: int, rng: np.random.Generator):
    """(a, D) with 0 < a_i a_j < D for every pair."""
    a = rng.uniform(0.5, 1.5, size=n)
    D = float(np.max(np.outer(a, a))) * float(rng.uniform(1.5, 3.0))
    return a, D
