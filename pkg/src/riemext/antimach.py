"""The anti-Mach spacetime

    ds^2 = dx^2 - 4 t dx dz + 2 dy dz + 2 t^2 dz^2 + dt^2

its Riemann extension on ``(x, y, z, t, P, Q, U, V)``, and candidate
closed-form geodesics of the extended space.

Closed forms are evaluated exactly as stated, with the trigonometric argument
read as ``(sqrt(2) xi3) s``. They are candidates under test: the numeric
integrator is the reference, and :func:`verify_closed_forms` reports every
formula that disagrees with it together with a residual trace.
"""

from __future__ import annotations

import json
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from . import dual
from .dual import Dual, cos, sin
from .errors import IllConditioned
from .extension import ExtendedChart, ExtendedMetric, extend
from .geodesic import InitialData, integrate
from .geometry import ConnectionField, LeviCivitaConnection, MetricField, levi_civita

SQRT2 = math.sqrt(2.0)
XI3_GUARD = 1e-6
BASE_NAMES = ("x", "y", "z", "t")
FIBER_NAMES = ("P", "Q", "U", "V")
ALL_NAMES = BASE_NAMES + FIBER_NAMES


def metric_components(coords):
    x, y, z, t = coords
    return [
        [1.0, 0.0, -2.0 * t, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [-2.0 * t, 1.0, 2.0 * t * t, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ]


def connection_components(coords):
    """Nonzero symbols: G^t_xz = 1, G^y_xt = -1, G^t_zz = -2t, G^x_zt = -1."""
    t = coords[3]
    G = [[[0.0] * 4 for _ in range(4)] for _ in range(4)]
    G[3][0][2] = G[3][2][0] = 1.0
    G[1][0][3] = G[1][3][0] = -1.0
    G[3][2][2] = -2.0 * t
    G[0][2][3] = G[0][3][2] = -1.0
    return G


def antimach_metric() -> MetricField:
    return MetricField(dim=4, evaluator=metric_components, derivative_order=8, name="antimach4")


def antimach_connection() -> ConnectionField:
    return ConnectionField(dim=4, evaluator=connection_components, derivative_order=8, name="antimach-connection")


def antimach_extended_metric(connection: ConnectionField | None = None) -> ExtendedMetric:
    chart = ExtendedChart(4, BASE_NAMES, FIBER_NAMES)
    return extend(connection or antimach_connection(), chart)


def antimach_extended_connection() -> LeviCivitaConnection:
    return levi_civita(antimach_extended_metric())


def basic_rhs(pos, vel):
    """Hand-coded acceleration of the 4D geodesics."""
    t = pos[3]
    xd, yd, zd, td = vel
    return [2 * zd * td, 2 * xd * td, 0.0 * zd, 2 * t * zd * zd - 2 * xd * zd]


def extended_rhs(pos, vel):
    """Hand-coded acceleration of the extended geodesics, ordered (x..t, P..V)."""
    t, P, Q, V = pos[3], pos[4], pos[5], pos[7]
    xd, yd, zd, td, Pd, Qd, Ud, Vd = vel
    return basic_rhs(pos, vel[:4]) + [
        4 * Q * zd * (xd - t * zd) - 2 * td * Qd + 2 * zd * Vd,
        0.0 * Qd,
        4 * P * zd * (xd - t * zd) - 2 * td * Pd + 2 * (xd - 2 * t * zd) * Vd,
        2 * V * zd * zd - 4 * Q * zd * td - 2 * zd * Pd - 2 * xd * Qd,
    ]


# ---------------------------------------------------------------------------
# closed forms


def branch_of(xi: Sequence[float], guard: float = XI3_GUARD) -> str:
    xi3 = xi[2]
    if xi3 == 0.0:
        return "xi3_zero"
    if abs(xi3) < guard:
        raise IllConditioned(f"|xi3| = {abs(xi3):.3e} below {guard:g}; integrate numerically instead")
    return "xi3_nonzero"


@dataclass(frozen=True)
class ClosedFormConstants:
    L1: float
    L2: float
    L3: float
    L4: float
    L5: float
    C1: float
    M: float
    M1: float
    M2: float
    A1: float
    A2: float
    K1: float
    K2: float
    K3: float
    K4: float
    H1: float
    H2: float
    H3: float
    C2: float
    C2_stated: float | None
    R1: float
    R2: float
    R3: float
    R4: float
    R5: float
    R6: float
    R7: float
    R7_alt: float
    N1: float
    N2: float
    N3: float
    N4: float
    N5: float
    N6: float
    N7: float

    def to_dict(self) -> dict:
        return asdict(self)


def closed_form_constants(init: InitialData) -> ClosedFormConstants:
    """All integration constants of the nonzero branch, from one set of shared terms."""
    if branch_of(init.xi) != "xi3_nonzero":
        raise ValueError("constants are defined only for xi3 != 0")
    a1, a2, a3, a4 = init.xi
    h1, h2, h3, h4 = init.h
    t0 = init.x0[3]
    P0, Q0, U0, V0 = init.psi0
    r2 = SQRT2
    d = a1 - a3 * t0
    # recurring group  a1 h2 - a3 (h1 + 2 a4 Q0 + 2 h2 t0) + 2 a3^2 V0
    grp = a1 * h2 - a3 * (h1 + 2 * a4 * Q0 + 2 * h2 * t0) + 2 * a3**2 * V0

    L1 = 2 * r2 * Q0 * d
    L2 = -2 * Q0 * a4
    L3 = 2 * r2 * h2 * d
    L4 = -2 * a4 * h2
    L5 = 2 * h2 * a1 / a3 - 4 * h2 * t0
    C1 = h1 - L2 - 2 * a3 * V0 - L5

    M = 2 * a1 * h2 - 2 * a3 * (h1 + 2 * a4 * Q0 + 2 * h2 * t0) + 4 * a3**2 * V0
    M1 = -2 * r2 * a4 * h2
    M2 = -4 * h2 * d
    A1 = h4 / (r2 * a3) + M1 / (4 * a3**2)
    A2 = V0 - M / (2 * a3**2)
    K1, K2 = A1, A2
    K3 = M2 / (2 * r2 * a3)
    K4 = -M1 / (2 * r2 * a3)

    H1 = (-a4 * h2 + 4 * a3 * (h4 + 2 * Q0 * d)) / (2 * r2 * a3)
    H2 = 2 * (h1 - a1 * h2 / a3 + a4 * Q0 + 2 * h2 * t0 - a3 * V0)
    H3 = -h1 - 2 * a4 * Q0 + 2 * a1 * h2 / a3 - 4 * h2 * t0 + 2 * a3 * V0
    C2 = P0 + H1 / (r2 * a3)
    C2_stated = P0 + H1 / (r2 * a2) if a2 != 0.0 else None

    R1 = (
        8 * a1**2 * h2
        - a4**2 * h2
        + 4 * a3 * a4 * (h4 + a3 * (P0 + 4 * Q0 * t0))
        + 4 * a3**2 * t0 * (3 * h1 + 6 * h2 * t0 - 4 * a3 * V0)
        + 4 * a1 * a3 * (-2 * h1 - 2 * a4 * Q0 - 7 * h2 * t0 + 3 * a3 * V0)
    ) / (r2 * a3)
    R2 = (
        -7 * a1 * a4 * h2
        - 8 * a3**3 * t0 * (P0 - 2 * Q0 * t0)
        + 4 * a3 * (2 * a4**2 * Q0 + a1 * (3 * h4 + 4 * a1 * Q0) + a4 * (h1 + 3 * h2 * t0))
        + 8 * a3**2 * (-2 * h4 * t0 + a1 * (P0 - 4 * Q0 * t0) - a4 * V0)
    ) / (2 * a3)
    R3 = 2 * r2 * a4 * grp
    R4 = 4 * d * grp
    r56 = (
        -5 * a1 * a4 * h2
        + 8 * a3**3 * Q0 * t0**2
        + a3 * (4 * a4**2 * Q0 + 4 * a1 * (h4 + 2 * a1 * Q0) + a4 * (4 * h1 + 9 * h2 * t0))
        - 4 * a3**2 * (h4 * t0 + 4 * a1 * Q0 * t0 + a4 * V0)
    )
    R5 = r56 / a3
    R6 = -r56 / a3
    r7_rest = (
        a4**2 * h2
        - 4 * a3 * a4 * h4
        + 8 * a1 * a3 * (h1 + 3 * h2 * t0 - a3 * V0)
        + 8 * a3**2 * t0 * (-h1 - 2 * h2 * t0 + a3 * V0)
    )
    # stated factor "(-8 xi1)^2 h2"; the alternative reading is "-8 (xi1)^2 h2"
    R7 = r2 / a3 * ((-8 * a1) ** 2 * h2 + r7_rest)
    R7_alt = r2 / a3 * (-8 * a1**2 * h2 + r7_rest)

    N1 = (
        a4**2 * h2
        - 4 * a3 * a4 * (h4 + a3 * P0 + 2 * a1 * Q0)
        + 4 * a3 * (a1 * h2 * t0 + a3 * (-h1 * t0 - 2 * h2 * t0**2 + a1 * V0))
    ) / (2 * r2 * a3**3)
    N2 = (
        -a1 * a4 * h2
        + 8 * a3**3 * t0 * (P0 - 2 * Q0 * t0)
        + 4 * a3 * (2 * a4**2 * Q0 - a1 * (3 * h4 + 4 * a1 * Q0) + a4 * (h1 + h2 * t0))
        - 8 * a3**2 * (-2 * h4 * t0 + a1 * (P0 - 4 * Q0 * t0) + a4 * V0)
    ) / (4 * a3**3)
    N3 = -r2 * a4 * grp / a3**2
    N4 = -2 * d * grp / a3**2
    N5 = (
        8 * a1**2 * h2
        - a4**2 * h2
        + 4 * a3 * a4 * h4
        + 8 * a3**2 * t0 * (h1 + 2 * h2 * t0 - a3 * V0)
        + 8 * a1 * a3 * (-h1 - 3 * h2 * t0 + a3 * V0)
    ) / (8 * r2 * a3**3)
    N6 = r56 / (8 * a3**3)
    N7 = (
        -(a4**2) * h2 / (4 * a3**2)
        + h3
        + 2 * a4 * P0
        + 2 * h1 * t0
        + 4 * a4 * Q0 * t0
        + 4 * h2 * t0**2
        + (a4 * h4 - 2 * a1 * h2 * t0) / a3
        - 2 * a3 * t0 * V0
    )
    return ClosedFormConstants(
        L1, L2, L3, L4, L5, C1, M, M1, M2, A1, A2, K1, K2, K3, K4, H1, H2, H3, C2, C2_stated,
        R1, R2, R3, R4, R5, R6, R7, R7_alt, N1, N2, N3, N4, N5, N6, N7,
    )


def _trig(a3, s):
    w = SQRT2 * a3
    return sin(w * s), cos(w * s), sin(2 * w * s), cos(2 * w * s)


def basic_closed_form(init: InitialData, s):
    """``(x, y, z, t)`` along the geodesic; ``s`` may be a float or a dual."""
    x0, y0, z0, t0 = init.x0
    a1, a2, a3, a4 = init.xi
    if branch_of(init.xi) == "xi3_zero":
        return (x0 + a1 * s, y0 + a2 * s + a1 * a4 * s * s, z0 + 0.0 * s, t0 + a4 * s)
    r2 = SQRT2
    S, C, S2, C2 = _trig(a3, s)
    x = x0 + (2 * t0 * a3 - a1) * s + a4 / a3 * (1 - C) + r2 * (a1 - t0 * a3) / a3 * S
    y = (
        y0
        + (a2 + (a4**2 + 2 * a1**2) / (2 * a3) + t0 * (3 * t0 * a3 - 4 * a1)) * s
        + a4 / (2 * a3**2) * (2 * (a1 - 2 * t0 * a3) * C - (a1 - t0 * a3) * C2 - (a1 - 3 * t0 * a3))
        - r2 / a3**2 * (a1**2 - t0 * a3 * (3 * a1 - 2 * t0 * a3)) * S
        + 1 / (2 * r2 * a3**2) * (a1**2 - a4**2 / 2 - t0 * a3 * (2 * a1 - t0 * a3)) * S2
    )
    z = z0 + a3 * s
    t = t0 * (2 - C) - a1 / a3 * (1 - C) + a4 / (r2 * a3) * S
    return (x, y, z, t)


def fiber_formulas(init: InitialData, s, k: ClosedFormConstants | None = None) -> dict:
    """Every candidate fiber expression of the nonzero branch, keyed by name.

    ``P``, ``Q``, ``U``, ``V`` are the final expressions. ``V_forced`` keeps the
    particular-solution constant that the final V expression omits, and
    ``P_h3`` is the intermediate P expression read literally with ``sqrt(2) h3``
    as frequency (integration constant fixed by ``P(0) = P0``).
    """
    a1, a2, a3, a4 = init.xi
    h1, h2, h3, h4 = init.h
    P0, Q0, U0, V0 = init.psi0
    k = k or closed_form_constants(init)
    r2 = SQRT2
    S, C, S2, C2 = _trig(a3, s)
    out = {
        "Q": Q0 + h2 * s,
        "V": k.K1 * S + k.K2 * C + k.K3 * s * S + k.K4 * s * C,
        "V_forced": k.A1 * S + k.A2 * C + k.M / (2 * a3**2) + k.K4 * s * C + k.K3 * s * S,
        "P": P0 + k.H1 / (r2 * a3) * (1 - C) + k.H2 / (r2 * a3) * S + k.H3 * s,
        "U": (
            U0 + k.N1 * S + k.N2 * (C - 1) + k.N3 * s * S + k.N4 * s * C
            + k.N5 * S2 + k.N6 * (C2 - 1) + k.N7 * s
        ),
    }
    if h3 != 0.0:
        w3 = r2 * h3
        out["P_h3"] = (
            -k.H1 / w3 * cos(w3 * s) + k.H2 / w3 * sin(w3 * s) + k.H3 * s + P0 + k.H1 / w3
        )
    return out


def derivative_formulas(init: InitialData, s: float, V: float, k: ClosedFormConstants | None = None) -> dict:
    """Candidate expressions for Pdot, Vddot and Uddot.

    ``Pdot_L`` and ``Vddot_M`` contain V itself; the caller supplies it (the
    reference value), which isolates the constants from errors elsewhere.
    """
    a1, a2, a3, a4 = init.xi
    h1 = init.h[0]
    V0 = init.psi0[3]
    k = k or closed_form_constants(init)
    S, C, _, _ = _trig(a3, s)
    uddot_common = k.R1 * S + k.R2 * C + k.R3 * s * S + k.R4 * s * C + k.R5 * S * S + k.R6 * C * C
    return {
        "Pdot_L": k.L1 * S + k.L2 * (C - 1) + k.L3 * s * S + k.L4 * s * C + 2 * a3 * (V - V0) + h1,
        "Pdot_H": k.H1 * S + k.H2 * C + k.H3,
        "Vddot_M": k.M + k.M1 * S + k.M2 * C - 2 * a3**2 * V,
        "Uddot_R": uddot_common + k.R7 * S * C,
        "Uddot_R_alt": uddot_common + k.R7_alt * S * C,
    }


def _zero_branch_fiber(init: InitialData, s):
    a1, a2, a3, a4 = init.xi
    h1, h2, h3, h4 = init.h
    P0, Q0, U0, V0 = init.psi0
    return {
        "P": P0 + h1 * s - a4 * h2 * s * s,
        "Q": Q0 + h2 * s,
        "U": U0 - (a4 * h1 - a1 * h4) * s * s + 2.0 / 3.0 * h2 * (a4**2 - a1**2) * s * s * s + h3 * s,
        "V": V0 + h4 * s - a1 * h2 * s * s,
    }


def vertex_closed_form(xi: Sequence[float], h: Sequence[float], s):
    """Vertex-reduced ``(P, Q, U, V)`` expressions of the nonzero branch."""
    a1, a2, a3, a4 = (float(v) for v in xi)
    h1, h2, h3, h4 = (float(v) for v in h)
    branch_of((a1, a2, a3, a4))
    if a3 == 0.0:
        raise ValueError("vertex expressions are defined only for xi3 != 0")
    r2 = SQRT2
    S, C, S2, C2 = _trig(a3, s)
    P = (
        -4 * s * a3**2 * h1
        + (-4 * r2 * a1 * S + a4 * (-1 + C)) * h2
        + 4 * a3 * (r2 * h1 * S + 2 * s * a1 * h2 + h4 - h4 * C)
    ) / (4 * a3**2)
    Q = h2 * s
    U = (
        r2 * (-8 * a1 * a3 * h1 + 8 * a1**2 * h2 - a4**2 * h2 + 4 * a3 * a4 * h4) * S2
        - 4 * r2 * (-4 * s * a3**2 * a4 * h1 - a4**2 * h2 + 4 * a3 * a4 * (s * a1 * h2 + h4)) * S
        + 2 * (
            7 * a1 * a4 * h2
            + 8 * s * a3**3 * h3
            + 8 * s * a3**2 * a4 * h4
            - a3 * (a4 * (12 * h1 + 2 * s * a4 * h2) - 20 * a1 * h4)
        )
        + 2 * (-5 * a1 * a4 * h2 + a3 * (4 * a4 * h1 + 4 * a1 * h4)) * C2
        - 4 * (-4 * a3 * a4 * h1 + 8 * s * a1**2 * a3 * h2 + a1 * (a4 * h2 + 4 * a3 * (-2 * s * a3 * h1 + 3 * h4))) * C
    ) / (16 * a3**3)
    V = (
        -8 * a3 * h1
        + 8 * a1 * h2
        + 8 * (-a1 * h2 + a3 * (h1 + s * a4 * h2)) * C
        + r2 * (-8 * s * a1 * a3 * h2 - a4 * h2 + 4 * a3 * h4) * S
    ) / (8 * a3**2)
    return (P, Q, U, V)


@dataclass(frozen=True)
class FiberSolution:
    values: tuple[float, float, float, float]
    residuals: tuple[float, float, float, float]


def _second_in_s(fn, s: float):
    """Evaluate ``fn`` at a dual-seeded ``s``; returns value, first and second derivative per output."""
    out = fn(Dual(Dual(float(s), 1.0), Dual(1.0, 0.0)))
    return [dual.split_second(v) for v in out]


def fiber_residuals(init: InitialData, s: float, fiber_fn) -> tuple[float, float, float, float]:
    """Geodesic-equation residuals of a closed-form fiber curve at ``s``.

    ``fiber_fn(s) -> (P, Q, U, V)`` is differentiated exactly; the base curve
    comes from :func:`basic_closed_form`.
    """
    jets = _second_in_s(lambda u: tuple(basic_closed_form(init, u)) + tuple(fiber_fn(u)), s)
    pos = [j[0] for j in jets]
    vel = [j[1] for j in jets]
    acc = [j[3] for j in jets]
    rhs = extended_rhs(pos, vel)
    return tuple(float(acc[4 + i] - rhs[4 + i]) for i in range(4))


def extended_closed_form(init: InitialData, s: float) -> FiberSolution:
    """Candidate ``(P, Q, U, V)`` at ``s`` together with their equation residuals."""
    if branch_of(init.xi) == "xi3_zero":
        def fn(u):
            f = _zero_branch_fiber(init, u)
            return f["P"], f["Q"], f["U"], f["V"]
    else:
        k = closed_form_constants(init)

        def fn(u):
            f = fiber_formulas(init, u, k)
            return f["P"], f["Q"], f["U"], f["V"]

    values = tuple(float(v) for v in fn(float(s)))
    return FiberSolution(values, fiber_residuals(init, s, fn))


@dataclass(frozen=True)
class SupplementaryNorm:
    """Tangent norm at the vertex: direct metric evaluation next to the stated condition."""

    branch: str
    direct: float
    stated: float

    @property
    def discrepancy(self) -> float:
        return self.stated - self.direct


def supplementary_norm(xi: Sequence[float], h: Sequence[float]) -> SupplementaryNorm:
    a1, a2, a3, a4 = (float(v) for v in xi)
    h1, h2, h3, h4 = (float(v) for v in h)
    direct = 2 * (a1 * h1 + a2 * h2 + a3 * h3 + a4 * h4)
    if a3 == 0.0:
        return SupplementaryNorm("xi3_zero", direct, a1 * h1 + a2 * h2 + a4 * h4)
    stated = 2 * a1 * h1 + 2 * a2 * h2 + 3 * a4**2 * h2 / (2 * a3) + 2 * a3 * h3 + 2 * a4 * h4
    return SupplementaryNorm("xi3_nonzero", direct, stated)


# ---------------------------------------------------------------------------
# verification harness

TRACE_POINTS = 5


@dataclass
class FormulaCheck:
    name: str
    max_deviation: float
    passed: bool
    trace: list[dict] = field(default_factory=list)


@dataclass
class TrialResult:
    index: int
    branch: str
    init: dict
    s_max: float
    checks: list[FormulaCheck]
    norm_drift: float
    constants: dict | None = None
    vertex: bool = False

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


@dataclass
class VerificationReport:
    trials: list[TrialResult]
    tol: float
    oracle_tol: float
    seed: int
    branch: str
    generator: str = "numpy PCG64, default_rng([seed, trial, vertex])"

    @property
    def passed(self) -> bool:
        return all(t.passed for t in self.trials)

    def summary(self) -> dict:
        """Per-formula worst deviation and pass count over all trials."""
        table: dict[str, dict] = {}
        for t in self.trials:
            for c in t.checks:
                key = f"{t.branch}{'/vertex' if t.vertex else ''}:{c.name}"
                row = table.setdefault(key, {"max_deviation": 0.0, "passed": 0, "failed": 0})
                row["max_deviation"] = max(row["max_deviation"], c.max_deviation)
                row["passed" if c.passed else "failed"] += 1
        return dict(sorted(table.items()))

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "kind": "closed_form_verification",
            "generator": self.generator,
            "seed": self.seed,
            "branch": self.branch,
            "tol": self.tol,
            "oracle_tol": self.oracle_tol,
            "passed": self.passed,
            "summary": self.summary(),
            "trials": [_trial_dict(t) for t in self.trials],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=False, allow_nan=False)


def _trial_dict(t: TrialResult) -> dict:
    return {
        "index": t.index,
        "branch": t.branch,
        "vertex": t.vertex,
        "init": t.init,
        "s_max": t.s_max,
        "norm_drift": t.norm_drift,
        "passed": t.passed,
        "constants": t.constants,
        "checks": [asdict(c) for c in t.checks],
    }


def random_initial_data(rng: np.random.Generator, branch: str, vertex: bool = False) -> InitialData:
    x0 = rng.uniform(-1, 1, 4)
    psi0 = rng.uniform(-1, 1, 4)
    xi = rng.uniform(-1, 1, 4)
    h = rng.uniform(-1, 1, 4)
    if branch == "xi3_zero":
        xi[2] = 0.0
    else:
        xi[2] = rng.choice([-1.0, 1.0]) * rng.uniform(0.2, 2.0)
    if vertex:
        x0[:] = 0.0
        psi0[:] = 0.0
    return InitialData(tuple(x0), tuple(psi0), tuple(xi), tuple(h))


def period(xi3: float) -> float:
    return 2 * math.pi / (SQRT2 * abs(xi3))


def _check(name, s_grid, approx, ref, tol, residual_fn=None) -> FormulaCheck:
    approx = np.asarray(approx, dtype=float)
    ref = np.asarray(ref, dtype=float)
    dev = np.abs(approx - ref)
    worst = float(np.max(dev)) if np.all(np.isfinite(dev)) else float("inf")
    passed = worst <= tol
    trace = []
    if not passed:
        idx = np.unique(np.linspace(0, len(s_grid) - 1, TRACE_POINTS).round().astype(int))
        idx = sorted(set(idx.tolist()) | {int(np.nanargmax(np.where(np.isfinite(dev), dev, np.inf)))})
        for i in idx:
            row = {
                "s": float(s_grid[i]),
                "closed_form": _finite(approx[i]),
                "oracle": float(ref[i]),
                "deviation": _finite(dev[i]),
            }
            if residual_fn is not None:
                row["equation_residual"] = _finite(residual_fn(float(s_grid[i])))
            trace.append(row)
    return FormulaCheck(name, worst if math.isfinite(worst) else 1e308, passed, trace)


def _finite(v) -> float | None:
    v = float(v)
    return v if math.isfinite(v) else None


_EXT_CONN = None


def _extended_connection() -> LeviCivitaConnection:
    global _EXT_CONN
    if _EXT_CONN is None:
        _EXT_CONN = antimach_extended_connection()
    return _EXT_CONN


def run_trial(
    index: int,
    seed: int,
    branch: str,
    tol: float,
    oracle_tol: float = 1e-12,
    n_samples: int = 41,
    vertex: bool = False,
) -> TrialResult:
    """One randomized closed-form check against the numeric reference."""
    rng = np.random.default_rng([seed, index, int(vertex)])
    init = random_initial_data(rng, branch, vertex=vertex)
    s_max = 2.0 if branch == "xi3_zero" else period(init.xi[2])
    s_grid = np.linspace(0.0, s_max, n_samples)
    conn = _extended_connection()
    traj = integrate(conn, init, s_max, tol=oracle_tol, s_eval=s_grid)
    Y = traj.positions()
    Yd = traj.velocities()
    Ydd = np.array([extended_rhs(y, v) for y, v in zip(Y, Yd)])
    col = {nm: Y[:, i] for i, nm in enumerate(ALL_NAMES)}

    checks: list[FormulaCheck] = []
    basic = np.array([basic_closed_form(init, s) for s in s_grid])
    for i, nm in enumerate(BASE_NAMES):
        checks.append(_check(nm, s_grid, basic[:, i], col[nm], tol))

    if branch == "xi3_zero":
        fib = [_zero_branch_fiber(init, s) for s in s_grid]

        def fn(u):
            f = _zero_branch_fiber(init, u)
            return f["P"], f["Q"], f["U"], f["V"]

        for j, nm in enumerate(FIBER_NAMES):
            checks.append(
                _check(nm, s_grid, [f[nm] for f in fib], col[nm], tol,
                       lambda s, j=j: fiber_residuals(init, s, fn)[j])
            )
        return TrialResult(index, branch, init.to_dict(), s_max, checks, traj.norm_drift, None, vertex)

    k = closed_form_constants(init)
    fib = [fiber_formulas(init, s, k) for s in s_grid]
    slots = {"P": 0, "Q": 1, "U": 2, "V": 3}

    def member(name, base):
        def fn(u):
            f = fiber_formulas(init, u, k)
            picked = {"P": f["P"], "Q": f["Q"], "U": f["U"], "V": f["V"]}
            picked[base] = f[name]
            return picked["P"], picked["Q"], picked["U"], picked["V"]

        return lambda s: fiber_residuals(init, s, fn)[slots[base]]

    for name in fib[0]:
        base = name.split("_")[0]
        checks.append(_check(name, s_grid, [f[name] for f in fib], col[base], tol, member(name, base)))

    ref_deriv = {
        "Pdot_L": Yd[:, 4],
        "Pdot_H": Yd[:, 4],
        "Vddot_M": Ydd[:, 7],
        "Uddot_R": Ydd[:, 6],
        "Uddot_R_alt": Ydd[:, 6],
    }
    der = [derivative_formulas(init, s, v, k) for s, v in zip(s_grid, col["V"])]
    for name, ref in ref_deriv.items():
        checks.append(_check(name, s_grid, [d[name] for d in der], ref, tol))

    if vertex:
        vert = np.array([vertex_closed_form(init.xi, init.h, s) for s in s_grid])
        for j, nm in enumerate(FIBER_NAMES):

            def vfn(u):
                return vertex_closed_form(init.xi, init.h, u)

            checks.append(
                _check(f"{nm}_vertex", s_grid, vert[:, j], col[nm], tol,
                       lambda s, j=j: fiber_residuals(init, s, vfn)[j])
            )
        for nm in ("P", "U", "V"):
            # vertex expression against the general expression at the vertex (no oracle involved)
            checks.append(
                _check(f"{nm}_vertex_vs_general", s_grid, vert[:, slots[nm]], [f[nm] for f in fib], tol)
            )
    return TrialResult(index, branch, init.to_dict(), s_max, checks, traj.norm_drift, k.to_dict(), vertex)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("RE_THREADS", "1")))
    except ValueError:
        return 1


def verify_closed_forms(
    trials: int,
    seed: int = 42,
    tol: float = 1e-6,
    branch: str = "both",
    oracle_tol: float = 1e-12,
    n_samples: int = 41,
    vertex: bool = True,
) -> VerificationReport:
    """Randomized comparison of the closed forms with numeric integration.

    ``branch`` is ``xi3_zero``, ``xi3_nonzero`` or ``both``. For the nonzero
    branch each trial also runs a vertex-started geodesic to test the
    vertex-reduced expressions when ``vertex`` is set.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    branch = branch.replace("-", "_")
    branches = ["xi3_zero", "xi3_nonzero"] if branch == "both" else [branch]
    if any(b not in ("xi3_zero", "xi3_nonzero") for b in branches):
        raise ValueError(f"unknown branch {branch!r}")
    jobs = []
    for b in branches:
        for i in range(trials):
            jobs.append((i, seed, b, tol, oracle_tol, n_samples, False))
            if b == "xi3_nonzero" and vertex:
                jobs.append((i, seed, b, tol, oracle_tol, n_samples, True))
    workers = min(_threads(), len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(run_trial, *zip(*jobs)))
    else:
        results = [run_trial(*job) for job in jobs]
    return VerificationReport(results, tol, oracle_tol, seed, branch)


def base_point(init: InitialData, s: float, tol: float = 1e-12) -> tuple[float, float, float, float]:
    """``(x, y, z, t)`` at ``s``; tiny nonzero ``xi3`` falls back to integration with a warning."""
    try:
        return tuple(float(v) for v in basic_closed_form(init, s))
    except IllConditioned:
        warnings.warn(
            f"|xi3| = {abs(init.xi[2]):.3e} is below {XI3_GUARD:g}; using the integrator",
            stacklevel=2,
        )
    traj = integrate(antimach_connection(), init, s, tol=tol, s_eval=[0.0, s])
    return tuple(float(v) for v in traj.positions()[-1])
