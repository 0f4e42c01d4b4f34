import math

import numpy as np
import pytest

from riemext.antimach import antimach_connection, antimach_extended_metric, antimach_metric
from riemext.dual import sin
from riemext.geometry import MetricField


def sphere_components(c):
    s = sin(c[0])
    return [[1.0, 0.0], [0.0, s * s]]


def fd_christoffel(g_fn, p, h=1e-5):
    """Central-difference Levi-Civita symbols from a float metric function."""
    p = np.asarray(p, float)
    n = len(p)
    dg = np.empty((n, n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        dg[k] = (g_fn(p + e) - g_fn(p - e)) / (2 * h)
    ginv = np.linalg.inv(g_fn(p))
    S = dg + dg.transpose(1, 0, 2) - dg.transpose(1, 2, 0)
    return 0.5 * np.einsum("kl,ijl->kij", ginv, S)


def fd_riemann(g_fn, p, h=1e-4):
    p = np.asarray(p, float)
    n = len(p)
    G = fd_christoffel(g_fn, p)
    dG = np.empty((n, n, n, n))
    for c in range(n):
        e = np.zeros(n)
        e[c] = h
        dG[c] = (fd_christoffel(g_fn, p + e) - fd_christoffel(g_fn, p - e)) / (2 * h)
    R = (
        np.einsum("cadb->abcd", dG)
        - np.einsum("dacb->abcd", dG)
        + np.einsum("ace,edb->abcd", G, G)
        - np.einsum("ade,ecb->abcd", G, G)
    )
    return R


@pytest.fixture(scope="session")
def am4():
    return antimach_metric()


@pytest.fixture(scope="session")
def am_conn():
    return antimach_connection()


@pytest.fixture(scope="session")
def am8():
    return antimach_extended_metric()


@pytest.fixture(scope="session")
def sphere():
    return MetricField(2, sphere_components, derivative_order=4, name="sphere2")


@pytest.fixture
def quarter_pi():
    return (math.pi / 4, 0.3)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is not None and mod.LINES:
        terminalreporter.section("acceptance criteria")
        for line in mod.LINES:
            terminalreporter.write_line(line)
