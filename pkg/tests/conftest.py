import time

import pytest

from hypsmear.smear import accumulate_chain, build_net, load_model
from hypsmear.smear.surface import bundled_model_path


@pytest.fixture(scope="session")
def genus2():
    return load_model(bundled_model_path("genus2"))


@pytest.fixture(scope="session")
def torus():
    return load_model(bundled_model_path("holed_torus"))


@pytest.fixture(scope="session")
def genus2_net(genus2):
    t0 = time.perf_counter()
    net = build_net(genus2, 0.4)
    return net, time.perf_counter() - t0


@pytest.fixture(scope="session")
def torus_net(torus):
    t0 = time.perf_counter()
    net = build_net(torus, 0.4)
    return net, time.perf_counter() - t0


@pytest.fixture(scope="session")
def bolza_run(genus2, genus2_net):
    """The big genus-2 chain shared by the cycle and efficiency checks."""
    net, _ = genus2_net
    t0 = time.perf_counter()
    chain = accumulate_chain(genus2, net, 6.0, 1_000_000, seed=1789)
    return chain, time.perf_counter() - t0
