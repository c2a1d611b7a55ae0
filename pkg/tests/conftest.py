import numpy as np
import pytest
from hypothesis import strategies as st

from mixbound.chains import generate_chain
from mixbound.kernel import ChainModel, validate_kernel


def doeblin_suite(count=50, seed0=0, max_size=20, f_kind="random"):
    """Random Doeblin chains with ``size <= max_size`` and ``epsilon >= 0.3``."""
    out = []
    for seed in range(seed0, seed0 + count):
        rng = np.random.default_rng(10_000 + seed)
        size = int(rng.integers(2, max_size + 1))
        eps = float(rng.uniform(0.3, 1.0))
        m = generate_chain("random_doeblin", {"size": size, "epsilon": eps}, seed)
        if f_kind == "random":
            m = ChainModel(m.kernel, rng.uniform(-1.0, 1.0, size), m.initial, m.name)
        out.append(m)
    return out


@pytest.fixture(scope="session")
def suite():
    return doeblin_suite()


@pytest.fixture
def two_state():
    return generate_chain("two_state", {"p": 0.3, "q": 0.3})


@pytest.fixture
def iid3():
    return generate_chain("iid", {"size": 3})


@st.composite
def doeblin_chains(draw, max_size=8):
    size = draw(st.integers(2, max_size))
    eps = draw(st.floats(0.2, 1.0))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    nu = rng.dirichlet(np.ones(size))
    M = rng.dirichlet(np.ones(size), size=size)
    Q = validate_kernel(eps * nu + (1 - eps) * M)
    f = rng.uniform(-1, 1, size)
    return ChainModel(Q, f)


@st.composite
def stochastic_matrices(draw, max_size=8):
    size = draw(st.integers(1, max_size))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    # sparse-ish rows so that slow or periodic-looking chains appear too
    A = rng.random((size, size)) * (rng.random((size, size)) < 0.6)
    A[np.arange(size), rng.integers(0, size, size)] += 0.05
    return validate_kernel(A / A.sum(axis=1, keepdims=True))


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[num])
