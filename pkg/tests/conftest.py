import numpy as np
import pytest
from hypothesis import settings

from ruinopt.kernels import available_backends
from ruinopt.model import AssetModel, ClaimDistribution, ModelParams, ScenarioSample

settings.register_profile("ruinopt", deadline=None, max_examples=100)
settings.load_profile("ruinopt")

BACKENDS = available_backends()


@pytest.fixture(params=sorted(BACKENDS))
def kernel_module(request):
    return BACKENDS[request.param]


def hand_model(assets=(AssetModel.cash(),), r=0.05):
    """u=100, T=1, c1=10, c2=12 (claim mean 8, theta=0.25, zeta=0.5)."""
    return ModelParams(lam=1.0, r=r, u=100.0, horizon_T=1.0, theta=0.25, zeta=0.5,
                       claim=ClaimDistribution(2.0, 4.0), assets=assets)


def reinsurance_model(shape=5.0, scale=3.0, lam=40.0, r=0.03, u=200.0, T=1.0, theta=0.08, zeta=0.15):
    return ModelParams(lam=lam, r=r, u=u, horizon_T=T, theta=theta, zeta=zeta,
                       claim=ClaimDistribution(shape, scale))


def scenario(times, sizes, prices=(1.0,)):
    times = np.asarray(times, dtype=float)
    return ScenarioSample(len(times), times, np.asarray(sizes, dtype=float), np.asarray(prices, dtype=float))


@pytest.fixture
def hand():
    return hand_model()


AC_LINES = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line per acceptance criterion."""

    def emit(name, passed, detail):
        line = f"{name} {'PASS' if passed else 'FAIL'}: {detail}"
        AC_LINES.append(line)
        print(line)
        return passed

    return emit


def pytest_terminal_summary(terminalreporter):
    if AC_LINES:
        terminalreporter.section("acceptance criteria")
        for line in AC_LINES:
            terminalreporter.write_line(line)
