import numpy as np
import pytest

from blockgibbs.model import example_model, make_model

ANTI = [[0.0, 1.0], [1.0, 0.0]]


def tiny_model(beta=4.0, W=ANTI):
    """r = 1, one central and one peripheral node, K = 2."""
    return make_model(W, beta, finite_sizes=((1, 1),))


def random_model(rng, max_N=60, max_K=4, max_r=3):
    """Random symmetric kernel, complete graph, sizes totalling at most ``max_N``."""
    K = int(rng.integers(2, max_K + 1))
    r = int(rng.integers(1, max_r + 1))
    A = rng.normal(size=(K, K))
    W = (A + A.T) / 2
    V = rng.normal(size=K)
    while True:
        sizes = rng.integers(1, 11, size=(r, 2))
        if sizes.sum() <= max_N:
            break
    return make_model(W, float(rng.uniform(0.1, 5.0)), V=V, finite_sizes=sizes)


@pytest.fixture
def example():
    return example_model()


@pytest.fixture
def tiny():
    return tiny_model()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
