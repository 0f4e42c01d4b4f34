"""Geodesic right-hand side, adaptive Dormand-Prince integration and norm monitoring."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatch, NonFiniteState, StepSizeUnderflow
from .geometry import ChartPoint, ConnectionField, LeviCivitaConnection, MetricField, as_point

NULL_THRESHOLD = 1e-10
MIN_STEP = 1e-14


@dataclass(frozen=True)
class GeodesicState:
    s: float
    position: ChartPoint
    velocity: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "position", as_point(self.position))
        object.__setattr__(self, "velocity", tuple(float(v) for v in self.velocity))
        if len(self.velocity) != self.position.dim:
            raise DimensionMismatch("velocity and position dimensions differ")

    @property
    def dim(self) -> int:
        return self.position.dim

    def vector(self) -> np.ndarray:
        return np.concatenate([self.position.array(), np.array(self.velocity)])

    @classmethod
    def from_vector(cls, s: float, y: np.ndarray) -> "GeodesicState":
        n = len(y) // 2
        return cls(float(s), ChartPoint(tuple(y[:n])), tuple(y[n:]))


@dataclass(frozen=True)
class InitialData:
    """Start point ``(x0, psi0)`` and directions ``(xi, h)`` of an extended geodesic."""

    x0: tuple[float, ...]
    psi0: tuple[float, ...]
    xi: tuple[float, ...]
    h: tuple[float, ...]

    def __post_init__(self):
        for name in ("x0", "psi0", "xi", "h"):
            vals = tuple(float(v) for v in getattr(self, name))
            if not all(math.isfinite(v) for v in vals):
                raise ValueError(f"non-finite entry in {name}")
            object.__setattr__(self, name, vals)
        if not len(self.x0) == len(self.psi0) == len(self.xi) == len(self.h):
            raise DimensionMismatch("all initial-data blocks must share one dimension")

    @classmethod
    def at_vertex(cls, xi: Sequence[float], h: Sequence[float]) -> "InitialData":
        n = len(xi)
        return cls((0.0,) * n, (0.0,) * n, tuple(xi), tuple(h))

    @property
    def base_dim(self) -> int:
        return len(self.x0)

    def state(self, dim: int) -> GeodesicState:
        """Initial state on the base chart (``dim == n``) or the extended one (``2n``)."""
        n = self.base_dim
        if dim == n:
            return GeodesicState(0.0, ChartPoint(self.x0), self.xi)
        if dim == 2 * n:
            return GeodesicState(0.0, ChartPoint(self.x0 + self.psi0), self.xi + self.h)
        raise DimensionMismatch(f"initial data of base dim {n} cannot seed a {dim}-dim geodesic")

    def to_dict(self) -> dict:
        return {"x0": list(self.x0), "psi0": list(self.psi0), "xi": list(self.xi), "h": list(self.h)}


@dataclass(frozen=True)
class GeodesicClass:
    epsilon: int

    def __post_init__(self):
        if self.epsilon not in (0, 1, -1):
            raise ValueError("epsilon must be 0, 1 or -1")

    @classmethod
    def from_norm(cls, norm: float, threshold: float = NULL_THRESHOLD) -> "GeodesicClass":
        if abs(norm) < threshold:
            return cls(0)
        return cls(1 if norm > 0 else -1)

    @property
    def label(self) -> str:
        return {0: "null", 1: "positive", -1: "negative"}[self.epsilon]


@dataclass
class Trajectory:
    samples: list[GeodesicState]
    norms: list[float] = field(default_factory=list)
    steps_accepted: int = 0
    steps_rejected: int = 0

    @property
    def norm_drift(self) -> float:
        if not self.norms:
            return float("nan")
        return max(abs(v - self.norms[0]) for v in self.norms)

    @property
    def geodesic_class(self) -> GeodesicClass | None:
        return GeodesicClass.from_norm(self.norms[0]) if self.norms else None

    @property
    def s(self) -> np.ndarray:
        return np.array([st.s for st in self.samples])

    def positions(self) -> np.ndarray:
        return np.array([st.position.coords for st in self.samples])

    def velocities(self) -> np.ndarray:
        return np.array([st.velocity for st in self.samples])

    def to_csv(self, names: Sequence[str] | None = None) -> str:
        dim = self.samples[0].dim
        names = list(names or [f"y{i + 1}" for i in range(dim)])
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        header = ["s", *names, *[f"{nm}dot" for nm in names]]
        if self.norms:
            header.append("norm")
        w.writerow(header)
        for i, st in enumerate(self.samples):
            row = [st.s, *st.position.coords, *st.velocity]
            if self.norms:
                row.append(self.norms[i])
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()

    def to_jsonl(self, names: Sequence[str] | None = None) -> str:
        dim = self.samples[0].dim
        names = list(names or [f"y{i + 1}" for i in range(dim)])
        lines = []
        for i, st in enumerate(self.samples):
            rec = {"s": st.s}
            rec.update(zip(names, st.position.coords))
            rec.update(zip([f"{nm}dot" for nm in names], st.velocity))
            if self.norms:
                rec["norm"] = self.norms[i]
            lines.append(json.dumps(rec))
        return "\n".join(lines) + "\n"


def geodesic_rhs(conn: ConnectionField, state: GeodesicState) -> np.ndarray:
    """Acceleration ``-Gamma^k_ij v^i v^j``."""
    if state.dim != conn.dim:
        raise DimensionMismatch(f"state dim {state.dim} != connection dim {conn.dim}")
    v = np.array(state.velocity)
    G = conn(state.position)
    return -np.einsum("kij,i,j->k", G, v, v)


def conserved_norm(metric: MetricField, state: GeodesicState) -> float:
    """``g_ij(position) v^i v^j``."""
    if state.dim != metric.dim:
        raise DimensionMismatch(f"state dim {state.dim} != metric dim {metric.dim}")
    v = np.array(state.velocity)
    return float(v @ metric(state.position) @ v)


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array(row)
    for row in (
        [],
        [1 / 5],
        [3 / 40, 9 / 40],
        [44 / 45, -56 / 15, 32 / 9],
        [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
        [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
        [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
    )
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B - _B4


def _first_step(f, y0, f0, tol, order=5):
    scale = tol + tol * np.abs(y0)
    d0 = np.max(np.abs(y0) / scale)
    d1 = np.max(np.abs(f0) / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    f1 = f(y0 + h0 * f0)
    d2 = np.max(np.abs(f1 - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / (order + 1))
    return min(100 * h0, h1)


def solve(
    f,
    y0: np.ndarray,
    s_eval: Sequence[float],
    tol: float,
    max_steps: int = 1_000_000,
    min_step: float = MIN_STEP,
):
    """Integrate ``y' = f(y)`` from ``s = 0`` with Dormand-Prince 5(4).

    Steps are shortened to land exactly on every entry of ``s_eval``, so the
    returned states carry no interpolation error. PI step control; the scaled
    max-norm of the embedded error estimate is kept at or below ``tol``.
    Returns ``(states, accepted, rejected)``.
    """
    s_eval = np.asarray(s_eval, dtype=float)
    if tol <= 0:
        raise ValueError("tol must be positive")
    if np.any(np.diff(s_eval) <= 0) or s_eval[0] < 0:
        raise ValueError("sample points must be non-negative and strictly increasing")
    y = np.array(y0, dtype=float)
    s = 0.0
    k0 = f(y)
    out = []
    targets = list(s_eval)
    while targets and targets[0] == 0.0:
        out.append(y.copy())
        targets.pop(0)
    if not targets:
        return out, 0, 0
    h = _first_step(f, y, k0, tol)
    err_prev = 1.0
    accepted = rejected = 0
    safety, alpha, beta = 0.9, 0.7 / 5, 0.4 / 5
    K = np.empty((7, len(y)))
    while targets:
        if accepted + rejected > max_steps:
            raise StepSizeUnderflow(f"exceeded {max_steps} steps before s={targets[0]}")
        target = targets[0]
        hit = s + h >= target * (1 - 1e-15) or target - (s + h) < min_step
        h_try = target - s if hit else h
        if h_try < min_step:
            raise StepSizeUnderflow(f"step {h_try:.3e} below {min_step:g} at s={s}")
        K[0] = k0
        for i in range(1, 7):
            K[i] = f(y + h_try * (_A[i] @ K[:i]))
        y_new = y + h_try * (_B @ K)
        if not np.all(np.isfinite(y_new)):
            raise NonFiniteState(f"non-finite state after step from s={s}")
        scale = tol + tol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.max(np.abs(h_try * (_E @ K)) / scale))
        if err <= 1.0:
            s = target if hit else s + h_try
            y = y_new
            k0 = f(y) if hit else K[6]
            accepted += 1
            if hit:
                out.append(y.copy())
                targets.pop(0)
            fac = safety * max(err, 1e-10) ** -alpha * err_prev**beta
            err_prev = max(err, 1e-4)
            h_next = h_try * min(5.0, max(0.2, fac))
            h = max(h, h_next) if hit else h_next
        else:
            rejected += 1
            h = h_try * max(0.2, safety * err**-alpha)
    return out, accepted, rejected


def _metric_of(conn: ConnectionField) -> MetricField | None:
    return conn.metric if isinstance(conn, LeviCivitaConnection) else None


def integrate(
    conn: ConnectionField,
    init: InitialData | GeodesicState,
    s_max: float,
    tol: float = 1e-12,
    s_eval: Iterable[float] | None = None,
    metric: MetricField | None = None,
    n_samples: int = 101,
) -> Trajectory:
    """Integrate the geodesic of ``conn`` starting from ``init`` up to ``s_max``.

    Initial data of base dimension n seeds either an n-dim or a 2n-dim
    connection. The norm is tracked when a metric is known (passed in or the
    connection is Levi-Civita).
    """
    if not s_max > 0:
        raise ValueError("s_max must be positive")
    state0 = init.state(conn.dim) if isinstance(init, InitialData) else init
    if state0.dim != conn.dim:
        raise DimensionMismatch("initial state and connection dimensions differ")
    n = conn.dim
    s_eval = np.linspace(0.0, s_max, n_samples) if s_eval is None else np.asarray(list(s_eval), float)

    def f(y):
        if not np.all(np.isfinite(y)):
            raise NonFiniteState("non-finite state")
        v = y[n:]
        G = conn(y[:n])
        return np.concatenate([v, -np.einsum("kij,i,j->k", G, v, v)])

    ys, acc, rej = solve(f, state0.vector(), s_eval, tol)
    samples = [GeodesicState.from_vector(s, y) for s, y in zip(s_eval, ys)]
    metric = metric or _metric_of(conn)
    norms = [conserved_norm(metric, st) for st in samples] if metric is not None else []
    return Trajectory(samples, norms, acc, rej)
