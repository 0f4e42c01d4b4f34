"""Exact-derivative tensor calculus on a coordinate chart.

Index storage is dense: ``Gamma[k, i, j]`` for the connection and
``R[a, b, c, d]`` for the Riemann tensor. Derivatives are never taken by
differencing; every evaluator is fed dual numbers (see :mod:`riemext.dual`).

Riemann sign convention::

    R^a_bcd = d_c Gamma^a_db - d_d Gamma^a_cb + Gamma^a_ce Gamma^e_db - Gamma^a_de Gamma^e_cb

so that ``Ricci_bd = R^a_bad`` is positive on the round sphere.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import dual
from .errors import DerivativeUnsupported, DimensionMismatch, SingularMetric

DET_THRESHOLD = 1e-12


@dataclass(frozen=True)
class ChartPoint:
    coords: tuple[float, ...]
    dim: int = 0

    def __post_init__(self):
        coords = tuple(float(c) for c in self.coords)
        object.__setattr__(self, "coords", coords)
        if self.dim == 0:
            object.__setattr__(self, "dim", len(coords))
        if len(coords) != self.dim:
            raise DimensionMismatch(f"expected {self.dim} coordinates, got {len(coords)}")
        if not all(math.isfinite(c) for c in coords):
            raise ValueError(f"non-finite coordinate in {coords}")

    def __len__(self) -> int:
        return self.dim

    def __iter__(self):
        return iter(self.coords)

    def array(self) -> np.ndarray:
        return np.array(self.coords)


def as_point(p, dim: int | None = None) -> ChartPoint:
    if isinstance(p, ChartPoint):
        if dim is not None and p.dim != dim:
            raise DimensionMismatch(f"point has dim {p.dim}, field has dim {dim}")
        return p
    coords = tuple(np.ravel(np.asarray(p, dtype=float)))
    if dim is not None and len(coords) != dim:
        raise DimensionMismatch(f"point has dim {len(coords)}, field has dim {dim}")
    return ChartPoint(coords)


def coords_of(p, dim: int | None = None) -> list[float]:
    """Plain coordinate list from a ChartPoint or any 1-D sequence (hot-path helper)."""
    if isinstance(p, ChartPoint):
        c = list(p.coords)
    else:
        arr = np.asarray(p, dtype=float).ravel()
        if not np.all(np.isfinite(arr)):
            raise ValueError("non-finite coordinate")
        c = arr.tolist()
    if dim is not None and len(c) != dim:
        raise DimensionMismatch(f"point has dim {len(c)}, field has dim {dim}")
    return c


@functools.lru_cache(maxsize=None)
def _lower_indices(n: int):
    return np.tril_indices(n, -1)


def _mirror_upper(a: np.ndarray) -> np.ndarray:
    """Copy the upper triangle of the last two axes onto the lower one."""
    lo = _lower_indices(a.shape[-1])
    a[..., lo[0], lo[1]] = a[..., lo[1], lo[0]]
    return a


def _upper_only(m, n: int) -> list[list]:
    return [[m[min(i, j)][max(i, j)] for j in range(n)] for i in range(n)]


@dataclass
class MetricField:
    """Symmetric metric ``g_ij`` given by a scalar-generic evaluator.

    ``evaluator(coords)`` receives a sequence of scalars (floats or duals) and
    returns an ``dim x dim`` nested sequence; only the upper triangle is read.
    """

    dim: int
    evaluator: Callable[[Sequence], Sequence[Sequence]]
    derivative_order: int = 2
    name: str = "metric"
    det_threshold: float = DET_THRESHOLD

    def _eval(self, coords) -> list[list]:
        return _upper_only(self.evaluator(coords), self.dim)

    def __call__(self, p) -> np.ndarray:
        n = self.dim
        g = np.array(dual.flatten(self.evaluator(coords_of(p, n)), 2), dtype=float).reshape(n, n)
        return _mirror_upper(g)

    def jet(self, p, order: int = 1):
        """Metric and its exact coordinate derivatives at ``p``.

        Returns ``g`` for ``order=0``, ``(g, dg)`` for ``order=1`` and
        ``(g, dg, ddg)`` for ``order=2`` with ``dg[k, i, j] = d_k g_ij`` and
        ``ddg[k, l, i, j] = d_k d_l g_ij``.
        """
        if order > self.derivative_order:
            raise DerivativeUnsupported(
                f"{self.name} supplies derivatives up to order {self.derivative_order}"
            )
        n = self.dim
        x = coords_of(p, n)
        if order == 0:
            return self(x)
        try:
            if order == 1:
                g, dg = dual.value_and_gradient(self.evaluator, x, (n, n))
                return _mirror_upper(g), _mirror_upper(dg)
            g = np.empty((n, n))
            dg = np.empty((n, n, n))
            ddg = np.empty((n, n, n, n))
            for k in range(n):
                for l in range(k, n):
                    m = np.asarray(self._eval(dual.seed_second(x, k, l)), dtype=object)
                    for i in range(n):
                        for j in range(n):
                            f, fa, fb, fab = dual.split_second(m[i, j])
                            g[i, j] = f
                            dg[k, i, j] = fa
                            dg[l, i, j] = fb
                            ddg[k, l, i, j] = fab
                            ddg[l, k, i, j] = fab
            return g, dg, ddg
        except TypeError as exc:
            raise DerivativeUnsupported(f"{self.name} evaluator rejected dual input: {exc}") from exc

    def inverse(self, g: np.ndarray, p=None) -> np.ndarray:
        det = np.linalg.det(g)
        if not abs(det) >= self.det_threshold:
            raise SingularMetric(f"|det g| = {abs(det):.3e} below {self.det_threshold:g}")
        return np.linalg.inv(g)

    def check(self, g: np.ndarray) -> None:
        det = np.linalg.det(g)
        if not abs(det) >= self.det_threshold:
            raise SingularMetric(f"|det g| = {abs(det):.3e} below {self.det_threshold:g}")


@dataclass
class ConnectionField:
    """Symmetric affine connection ``Gamma^k_ij`` from a scalar-generic evaluator.

    Only components with ``i <= j`` are read from the evaluator output; the
    rest are mirrored, so symmetry in the lower pair holds bitwise.
    """

    dim: int
    evaluator: Callable[[Sequence], Sequence]
    derivative_order: int = 2
    name: str = "connection"

    def _eval(self, coords):
        n = self.dim
        G = self.evaluator(coords)
        return [[[G[k][min(i, j)][max(i, j)] for j in range(n)] for i in range(n)] for k in range(n)]

    def __call__(self, p) -> np.ndarray:
        n = self.dim
        G = np.array(dual.flatten(self.evaluator(coords_of(p, n)), 3), dtype=float).reshape(n, n, n)
        return _mirror_upper(G)

    def jet(self, p, order: int = 1):
        """``(Gamma, dGamma)`` or ``(Gamma, dGamma, ddGamma)``; derivative axes lead."""
        if order > self.derivative_order:
            raise DerivativeUnsupported(
                f"{self.name} supplies derivatives up to order {self.derivative_order}"
            )
        n = self.dim
        x = coords_of(p, n)
        try:
            if order == 0:
                return self(x)
            if order == 1:
                G, dG = dual.value_and_gradient(self.evaluator, x, (n, n, n))
                return _mirror_upper(G), _mirror_upper(dG)
            G = np.empty((n, n, n))
            dG = np.empty((n, n, n, n))
            ddG = np.empty((n, n, n, n, n))
            for a in range(n):
                for b in range(a, n):
                    arr = np.asarray(self._eval(dual.seed_second(x, a, b)), dtype=object)
                    for idx, v in np.ndenumerate(arr):
                        f, fa, fb, fab = dual.split_second(v)
                        G[idx] = f
                        dG[(a,) + idx] = fa
                        dG[(b,) + idx] = fb
                        ddG[(a, b) + idx] = fab
                        ddG[(b, a) + idx] = fab
            return G, dG, ddG
        except TypeError as exc:
            raise DerivativeUnsupported(f"{self.name} evaluator rejected dual input: {exc}") from exc


def _christoffel_from_jet(ginv: np.ndarray, dg: np.ndarray) -> np.ndarray:
    # S[i, j, l] = d_i g_jl + d_j g_il - d_l g_ij
    S = dg + dg.transpose(1, 0, 2) - dg.transpose(1, 2, 0)
    G = 0.5 * np.einsum("kl,ijl->kij", ginv, S)
    return _mirror_upper(G)


def christoffel(metric: MetricField, p) -> np.ndarray:
    """Levi-Civita symbols ``Gamma[k, i, j]`` of ``metric`` at ``p``."""
    g, dg = metric.jet(p, 1)
    ginv = metric.inverse(g, p)
    return _christoffel_from_jet(ginv, dg)


class LeviCivitaConnection(ConnectionField):
    """Connection of a metric; float queries go through the metric jet."""

    def __init__(self, metric: MetricField):
        super().__init__(
            dim=metric.dim,
            evaluator=self._generic,
            derivative_order=max(metric.derivative_order - 1, 0),
            name=f"levi-civita({metric.name})",
        )
        self.metric = metric

    def _generic(self, coords):
        # dual-valued query: build g and dg with one extra nesting level
        n = self.dim
        g = None
        dg = []
        for k in range(n):
            m = self.metric._eval([dual.Dual(c, 1.0 if i == k else 0.0) for i, c in enumerate(coords)])
            dg.append([[dual.eps_part(v) for v in row] for row in m])
            if g is None:
                g = [[dual.real_part(v) for v in row] for row in m]
        ginv = dual.inverse(g)
        G = [[[0.0] * n for _ in range(n)] for _ in range(n)]
        for k in range(n):
            for i in range(n):
                for j in range(i, n):
                    acc = 0.0
                    for l in range(n):
                        if isinstance(ginv[k][l], dual.Dual) or ginv[k][l] != 0.0:
                            acc = acc + ginv[k][l] * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j])
                    G[k][i][j] = 0.5 * acc
        return G

    def __call__(self, p) -> np.ndarray:
        return christoffel(self.metric, p)

    def jet(self, p, order: int = 1):
        if order == 0:
            return self(p)
        if order >= 2:
            return super().jet(p, order)
        g, dg, ddg = self.metric.jet(p, 2)
        ginv = self.metric.inverse(g, p)
        G = _christoffel_from_jet(ginv, dg)
        S = dg + dg.transpose(1, 0, 2) - dg.transpose(1, 2, 0)
        dS = ddg + ddg.transpose(0, 2, 1, 3) - ddg.transpose(0, 2, 3, 1)
        dginv = -np.einsum("ka,mab,bl->mkl", ginv, dg, ginv)
        dG = 0.5 * (np.einsum("mkl,ijl->mkij", dginv, S) + np.einsum("kl,mijl->mkij", ginv, dS))
        return G, _mirror_upper(dG)


def levi_civita(metric: MetricField) -> LeviCivitaConnection:
    return LeviCivitaConnection(metric)


def _as_connection(field) -> ConnectionField:
    return levi_civita(field) if isinstance(field, MetricField) else field


def riemann_from_jet(G: np.ndarray, dG: np.ndarray) -> np.ndarray:
    R = (
        np.einsum("cadb->abcd", dG)
        - np.einsum("dacb->abcd", dG)
        + np.einsum("ace,edb->abcd", G, G)
        - np.einsum("ade,ecb->abcd", G, G)
    )
    # exact antisymmetry in the last pair
    return 0.5 * (R - R.swapaxes(2, 3))


def riemann_tensor(conn, p) -> np.ndarray:
    """``R[a, b, c, d] = R^a_bcd``; accepts a connection or a metric."""
    conn = _as_connection(conn)
    G, dG = conn.jet(p, 1)
    return riemann_from_jet(G, dG)


def ricci_tensor(conn, p) -> np.ndarray:
    """``Ric[b, d] = R^a_bad``."""
    return np.einsum("abad->bd", riemann_tensor(conn, p))


def kretschmann(metric: MetricField, p) -> float:
    """``R_abcd R^abcd`` with indices moved by ``metric`` at ``p``."""
    g = metric(p)
    ginv = metric.inverse(g, p)
    R = riemann_tensor(metric, p)
    lower = np.einsum("ae,ebcd->abcd", g, R)
    upper = np.einsum("bf,cg,dh,afgh->abcd", ginv, ginv, ginv, R)
    return float(np.einsum("abcd,abcd->", lower, upper))


def covariant_derivative_of_metric(metric: MetricField, p, G: np.ndarray | None = None) -> np.ndarray:
    """``nabla_k g_ij`` with a given connection (defaults to Levi-Civita)."""
    g, dg = metric.jet(p, 1)
    if G is None:
        G = christoffel(metric, p)
    return dg - np.einsum("lki,lj->kij", G, g) - np.einsum("lkj,il->kij", G, g)


@dataclass
class CurvatureReport:
    point: ChartPoint
    riemann: np.ndarray
    ricci: np.ndarray
    kretschmann: float
    extra: dict = field(default_factory=dict)

    @property
    def max_abs_ricci(self) -> float:
        return float(np.max(np.abs(self.ricci)))


def curvature_report(metric: MetricField, p) -> CurvatureReport:
    p = as_point(p, metric.dim)
    R = riemann_tensor(metric, p)
    return CurvatureReport(
        point=p,
        riemann=R,
        ricci=np.einsum("abad->bd", R),
        kretschmann=kretschmann(metric, p),
    )
