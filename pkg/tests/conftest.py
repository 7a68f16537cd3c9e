import numpy as np
import pytest

from divgeom import DivergenceSpec, GENERATORS, make_distribution, standard_specs
from divgeom.verify import sample_interior


@pytest.fixture(scope="session")
def registry():
    return standard_specs()


def interior_dist(rng, n):
    return make_distribution(sample_interior(rng, n))


def spec_id(spec: DivergenceSpec) -> str:
    return spec.label


ALL_SPECS = standard_specs()

# One representative per family, for tests that scale with solver calls.
FAMILY_SPECS = [
    DivergenceSpec("euclidean"),
    DivergenceSpec("kl"),
    DivergenceSpec("reverse_kl"),
    DivergenceSpec("bregman", generator=GENERATORS["xlogx"]),
    DivergenceSpec("f_divergence", generator=GENERATORS["square"]),
    DivergenceSpec("renyi", alpha=0.5),
]
