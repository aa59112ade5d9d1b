import numpy as np
import pytest

from srmcmc import (CardinalityConditionedMeasure, LEnsemble, ProductMeasure,
                    TableMeasure)

Q_PATTERN = [0.3, 0.8, 0.5, 0.6, 0.4, 0.7, 0.55, 0.35]
DIAG_PATTERN = [2.0, 3.0, 1.5, 0.7, 2.5, 0.9, 1.2, 3.5]


def product_fixture(n):
    return ProductMeasure([Q_PATTERN[i % len(Q_PATTERN)] for i in range(n)])


def diag_dpp_fixture(n):
    return LEnsemble(np.diag([DIAG_PATTERN[i % len(DIAG_PATTERN)]
                              for i in range(n)]))


def random_psd_fixture(n, seed=1234):
    rng = np.random.default_rng(seed + n)
    A = rng.standard_normal((n, n))
    return LEnsemble(A @ A.T / n)


def conditioned_fixture(n):
    return CardinalityConditionedMeasure(product_fixture(n), max(1, n // 2))


def fixture_suite(n):
    """The four standard small-instance fixtures at ground set size n."""
    return [
        ("product", product_fixture(n)),
        ("diag-dpp", diag_dpp_fixture(n)),
        ("random-psd-dpp", random_psd_fixture(n)),
        ("k-conditioned", conditioned_fixture(n)),
    ]


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


def uniform_table(n):
    return TableMeasure(np.ones(1 << n))
