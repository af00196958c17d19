import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from mantensor.manifold import ManifoldDescriptor

settings.register_profile("repo", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")

# lines printed by the acceptance suite, repeated in the terminal summary
ACCEPTANCE_KEY = pytest.StashKey[list]()

DESCRIPTORS = {
    "euclidean": ManifoldDescriptor.euclidean(4),
    "sphere": ManifoldDescriptor.sphere(4),
    "spd": ManifoldDescriptor.spd(3),
}


def random_point(desc, rng, spread=1.0):
    m = desc.manifold
    if desc.kind == "euclidean":
        return rng.standard_normal(desc.embedding_dim)
    if desc.kind == "sphere":
        x = rng.standard_normal(desc.embedding_dim)
        return x / np.linalg.norm(x)
    return m.exp(m.origin(), m.from_coords(m.origin(), spread * rng.standard_normal(desc.intrinsic_dim) / 2))


def random_tangent_at(desc, p, rng, scale=1.0):
    m = desc.manifold
    return m.from_coords(p, scale * rng.standard_normal(desc.intrinsic_dim))


@pytest.fixture(params=list(DESCRIPTORS))
def desc(request):
    return DESCRIPTORS[request.param]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
