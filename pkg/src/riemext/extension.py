"""Riemann extension: a symmetric connection on n dimensions becomes a
2n-dimensional metric

    ds^2 = -2 Gamma^k_ij(x) Psi_k dx^i dx^j + 2 dPsi_k dx^k

on the chart ``(x^1..x^n, Psi_1..Psi_n)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import dual
from .errors import DimensionMismatch, SingularMetric
from .geometry import ConnectionField, MetricField, as_point, coords_of


@dataclass(frozen=True)
class ExtendedChart:
    base_dim: int
    base_names: tuple[str, ...]
    fiber_names: tuple[str, ...]

    def __post_init__(self):
        if len(self.base_names) != self.base_dim or len(self.fiber_names) != self.base_dim:
            raise DimensionMismatch("need one base and one fiber label per base dimension")

    @property
    def total_dim(self) -> int:
        return 2 * self.base_dim

    @property
    def names(self) -> tuple[str, ...]:
        return self.base_names + self.fiber_names

    @classmethod
    def default(cls, n: int) -> "ExtendedChart":
        return cls(n, tuple(f"x{i + 1}" for i in range(n)), tuple(f"psi{i + 1}" for i in range(n)))


class ExtendedMetric(MetricField):
    """Metric of the Riemann extension of ``connection``.

    Float-point jets exploit the block structure: the metric is linear in the
    fiber coordinates, so only derivatives of the base connection are needed,
    and the inverse is ``[[0, I], [I, -A]]``.
    """

    def __init__(self, connection: ConnectionField, chart: ExtendedChart | None = None):
        n = connection.dim
        self.connection = connection
        self.chart = chart or ExtendedChart.default(n)
        if self.chart.base_dim != n:
            raise DimensionMismatch("chart and connection dimensions differ")
        self._skeleton = np.zeros((2 * n, 2 * n))
        self._skeleton[:n, n:] = self._skeleton[n:, :n] = np.eye(n)
        super().__init__(
            dim=2 * n,
            evaluator=self._generic,
            derivative_order=connection.derivative_order,
            name=f"extension({connection.name})",
        )

    @property
    def base_dim(self) -> int:
        return self.connection.dim

    def _generic(self, coords):
        n = self.base_dim
        if len(coords) != 2 * n:
            raise DimensionMismatch(f"extended point needs {2 * n} coordinates, got {len(coords)}")
        x, psi = list(coords[:n]), list(coords[n:])
        G = self.connection._eval(x)
        m = [[0.0] * (2 * n) for _ in range(2 * n)]
        for i in range(n):
            for j in range(i, n):
                acc = 0.0
                for k in range(n):
                    c = G[k][i][j]
                    if isinstance(c, dual.Dual) or c != 0.0:
                        acc = acc + c * psi[k]
                m[i][j] = -2.0 * acc
            m[i][n + i] = 1.0
        return m

    def _blocks(self, psi, G, dG=None, ddG=None):
        n = self.base_dim
        N = 2 * n
        g = self._skeleton.copy()
        g[:n, :n] = -2.0 * np.tensordot(psi, G, axes=1)
        if dG is None:
            return g
        dg = np.zeros((N, N, N))
        dg[:n, :n, :n] = -2.0 * np.tensordot(dG, psi, axes=([1], [0]))
        dg[n:, :n, :n] = -2.0 * G
        if ddG is None:
            return g, dg
        ddg = np.zeros((N, N, N, N))
        ddg[:n, :n, :n, :n] = -2.0 * np.einsum("lmkij,k->lmij", ddG, psi)
        ddg[:n, n:, :n, :n] = -2.0 * dG
        ddg[n:, :n, :n, :n] = -2.0 * dG.transpose(1, 0, 2, 3)
        return g, dg, ddg

    def __call__(self, p) -> np.ndarray:
        n = self.base_dim
        x = np.array(coords_of(p, self.dim))
        return self._blocks(x[n:], self.connection(x[:n]))

    def jet(self, p, order: int = 1):
        n = self.base_dim
        x = np.array(coords_of(p, self.dim))
        if order == 0:
            return self(x)
        return self._blocks(x[n:], *self.connection.jet(x[:n], order))

    def inverse(self, g: np.ndarray, p=None) -> np.ndarray:
        """Closed-form inverse; ``g`` must carry the extension block structure."""
        n = self.base_dim
        # det [[A, I], [I, 0]] = (-1)^n for every A, so this never fails
        inv = self._skeleton.copy()
        inv[n:, n:] = -g[:n, :n]
        return inv


def extend(connection: ConnectionField, chart: ExtendedChart | None = None) -> ExtendedMetric:
    return ExtendedMetric(connection, chart)


def extended_signature(metric: MetricField, p, threshold: float = 1e-12) -> tuple[int, int]:
    """``(positive, negative)`` eigenvalue counts of the metric at ``p``."""
    g = metric(p)
    if abs(np.linalg.det(g)) < threshold:
        raise SingularMetric("metric is singular at the query point")
    w = np.linalg.eigvalsh(g)
    return int(np.sum(w > 0)), int(np.sum(w < 0))


def nonzero_components(metric: ExtendedMetric, p, atol: float = 0.0) -> list[dict]:
    """Upper-triangle components of the extended metric at ``p`` that are nonzero.

    Off-diagonal entries carry ``coefficient`` = 2 g_ij, the factor they take in
    the line element.
    """
    p = as_point(p, metric.dim)
    g = metric(p)
    names = metric.chart.names
    out = []
    for i in range(metric.dim):
        for j in range(i, metric.dim):
            v = float(g[i, j])
            if abs(v) > atol:
                out.append(
                    {
                        "i": i,
                        "j": j,
                        "pair": f"d{names[i]} d{names[j]}",
                        "value": v,
                        "coefficient": v if i == j else 2.0 * v,
                    }
                )
    return out
