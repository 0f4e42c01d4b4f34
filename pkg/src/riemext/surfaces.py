"""Translation surfaces ``x^i(u, v)`` solving

    d_u d_v x^i + Gamma^i_jk d_u x^j d_v x^k = 0

and the separated family of the anti-Mach metric built from two generator
curves ``f(u)``, ``g(v)``:

    z = f + g,  t = f - g,  x = (f^2 + C3 f + C4) + (-g^2 - C3 g + C5),
    y = -2 C3 f g - f^2 g - g^2 f + G1(u) + G2(v).

Only the choice ``t = f - g`` is implemented; ``t = g - f`` would give the mirror family.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import dual
from .dual import Dual
from .errors import DomainError
from .geometry import ConnectionField

SEPARABLE_TOL = 1e-10


@dataclass(frozen=True)
class Polynomial:
    """``sum c[k] u**k``, evaluated by Horner's rule (works on duals)."""

    coeffs: tuple[float, ...]

    def __init__(self, coeffs: Sequence[float]):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in coeffs) or (0.0,))

    def __call__(self, u):
        acc = 0.0
        for c in reversed(self.coeffs):
            acc = acc * u + c
        return acc

    def deriv(self) -> "Polynomial":
        return Polynomial([k * c for k, c in enumerate(self.coeffs)][1:] or [0.0])

    def to_dict(self) -> dict:
        return {"type": "poly", "coeffs": list(self.coeffs)}


@dataclass(frozen=True)
class TrigSum:
    """``a0 + sum_k (a_k cos(k w u) + b_k sin(k w u))``."""

    a0: float = 0.0
    cos_coeffs: tuple[float, ...] = ()
    sin_coeffs: tuple[float, ...] = ()
    freq: float = 1.0

    def __call__(self, u):
        acc = self.a0
        for k, a in enumerate(self.cos_coeffs, start=1):
            acc = acc + a * dual.cos(k * self.freq * u)
        for k, b in enumerate(self.sin_coeffs, start=1):
            acc = acc + b * dual.sin(k * self.freq * u)
        return acc

    def deriv(self) -> "TrigSum":
        w = self.freq
        return TrigSum(
            0.0,
            tuple(k * w * b for k, b in enumerate(self.sin_coeffs, start=1)),
            tuple(-k * w * a for k, a in enumerate(self.cos_coeffs, start=1)),
            w,
        )

    def to_dict(self) -> dict:
        return {
            "type": "trig",
            "a0": self.a0,
            "cos": list(self.cos_coeffs),
            "sin": list(self.sin_coeffs),
            "freq": self.freq,
        }


def function_from_dict(d) -> Polynomial | TrigSum:
    if isinstance(d, (list, tuple)):
        return Polynomial(d)
    kind = d.get("type", "poly")
    if kind == "poly":
        return Polynomial(d["coeffs"])
    if kind == "trig":
        return TrigSum(float(d.get("a0", 0.0)), tuple(d.get("cos", ())), tuple(d.get("sin", ())), float(d.get("freq", 1.0)))
    raise ValueError(f"unknown function type {kind!r}")


@dataclass(frozen=True)
class SurfaceGenerators:
    f: Callable
    g: Callable
    G1: Callable = Polynomial([0.0])
    G2: Callable = Polynomial([0.0])
    C3: float = 0.0
    C4: float = 0.0
    C5: float = 0.0

    @classmethod
    def from_dict(cls, d: dict) -> "SurfaceGenerators":
        return cls(
            f=function_from_dict(d["f"]),
            g=function_from_dict(d["g"]),
            G1=function_from_dict(d.get("G1", [0.0])),
            G2=function_from_dict(d.get("G2", [0.0])),
            C3=float(d.get("C3", 0.0)),
            C4=float(d.get("C4", 0.0)),
            C5=float(d.get("C5", 0.0)),
        )

    @classmethod
    def from_json(cls, text: str) -> "SurfaceGenerators":
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict:
        return {
            "f": self.f.to_dict(),
            "g": self.g.to_dict(),
            "G1": self.G1.to_dict(),
            "G2": self.G2.to_dict(),
            "C3": self.C3,
            "C4": self.C4,
            "C5": self.C5,
        }


@dataclass
class SurfaceMap:
    evaluator: Callable
    domain: tuple[float, float, float, float] = (-1.0, 1.0, -1.0, 1.0)
    generators: SurfaceGenerators | None = None

    def __call__(self, u, v):
        return self.evaluator(u, v)

    def contains(self, u: float, v: float) -> bool:
        u0, u1, v0, v1 = self.domain
        return u0 <= u <= u1 and v0 <= v <= v1

    def partials(self, u: float, v: float):
        """``(X, X_u, X_v, X_uv)`` per coordinate, exact via nested duals."""
        if not self.contains(u, v):
            raise DomainError(f"({u}, {v}) outside {self.domain}")
        U = Dual(Dual(float(u), 1.0), Dual(0.0, 0.0))
        V = Dual(Dual(float(v), 0.0), Dual(1.0, 0.0))
        parts = np.array([dual.split_second(c) for c in self.evaluator(U, V)])
        return parts[:, 0], parts[:, 1], parts[:, 2], parts[:, 3]

    def grid_partials(self, us: Sequence[float], vs: Sequence[float]):
        """Vectorized :meth:`partials` over the grid ``us x vs``; arrays shaped ``(4, nu, nv)``."""
        uu, vv = np.meshgrid(np.asarray(us, float), np.asarray(vs, float), indexing="ij")
        u0, u1, v0, v1 = self.domain
        if uu.min() < u0 or uu.max() > u1 or vv.min() < v0 or vv.max() > v1:
            raise DomainError(f"grid leaves {self.domain}")
        zero = np.zeros_like(uu)
        one = np.ones_like(uu)
        U = Dual(Dual(uu, one), Dual(zero, zero))
        V = Dual(Dual(vv, zero), Dual(one, zero))
        comps = [dual.split_second(c) for c in self.evaluator(U, V)]
        out = np.empty((4, 4) + uu.shape)
        for i, parts in enumerate(comps):
            for j, arr in enumerate(parts):
                out[j, i] = arr
        return out[0], out[1], out[2], out[3]

    def grid(self, nu: int = 50, nv: int = 50):
        u0, u1, v0, v1 = self.domain
        return np.linspace(u0, u1, nu), np.linspace(v0, v1, nv)


def build_family_surface(gen: SurfaceGenerators, domain=(-1.0, 1.0, -1.0, 1.0)) -> SurfaceMap:
    f, g, C3, C4, C5 = gen.f, gen.g, gen.C3, gen.C4, gen.C5

    def evaluator(u, v):
        fu, gv = f(u), g(v)
        x = (fu * fu + C3 * fu + C4) + (-gv * gv - C3 * gv + C5)
        y = -2 * C3 * fu * gv - fu * fu * gv - gv * gv * fu + gen.G1(u) + gen.G2(v)
        return (x, y, fu + gv, fu - gv)

    return SurfaceMap(evaluator, tuple(domain), gen)


def surface_pde_residual(conn: ConnectionField, m: SurfaceMap, u: float, v: float) -> np.ndarray:
    """``X_uv + Gamma(X) X_u X_v`` per coordinate."""
    X, Xu, Xv, Xuv = m.partials(u, v)
    G = conn(X)
    return Xuv + np.einsum("ijk,j,k->i", G, Xu, Xv)


def antimach_surface_residual(m: SurfaceMap, u: float, v: float) -> np.ndarray:
    """Hand-expanded anti-Mach form of the translation-surface system."""
    X, Xu, Xv, Xuv = m.partials(u, v)
    x_u, y_u, z_u, t_u = Xu
    x_v, y_v, z_v, t_v = Xv
    t = X[3]
    return np.array(
        [
            Xuv[0] - z_u * t_v - t_u * z_v,
            Xuv[1] - x_u * t_v - t_u * x_v,
            Xuv[2],
            Xuv[3] + x_u * z_v + z_u * x_v - 2 * t * z_u * z_v,
        ]
    )


def family_y_mixed(gen: SurfaceGenerators, u: float, v: float) -> float:
    """Predicted ``y_uv = -2 (C3 + f + g) f' g'`` for a family surface."""
    df, dg = gen.f.deriv(), gen.g.deriv()
    return -2.0 * (gen.C3 + gen.f(u) + gen.g(v)) * df(u) * dg(v)


@dataclass
class SeparabilityReport:
    max_mixed: dict[str, float]
    tol: float = SEPARABLE_TOL
    predicted_y_mixed: float | None = None
    max_residual: list[float] = field(default_factory=list)

    @property
    def verdicts(self) -> dict[str, str]:
        return {k: ("separable" if v <= self.tol else "not separable") for k, v in self.max_mixed.items()}

    @property
    def projection_is_translation_surface(self) -> bool:
        return all(self.max_mixed[c] <= self.tol for c in ("x", "z", "t"))

    def to_dict(self) -> dict:
        return {
            "max_mixed": self.max_mixed,
            "verdicts": self.verdicts,
            "tol": self.tol,
            "predicted_y_mixed": self.predicted_y_mixed,
            "max_residual": self.max_residual,
            "projection_xzt_separable": self.projection_is_translation_surface,
        }


def separability_report(
    m: SurfaceMap,
    grid: tuple[Sequence[float], Sequence[float]] | int = 50,
    conn: ConnectionField | None = None,
    tol: float = SEPARABLE_TOL,
) -> SeparabilityReport:
    """Largest ``|d_u d_v X^i|`` over the grid per coordinate.

    A coordinate whose mixed partial stays within ``tol`` splits as a sum of a
    function of ``u`` and a function of ``v``.
    """
    us, vs = m.grid(grid, grid) if isinstance(grid, int) else grid
    if len(us) == 0 or len(vs) == 0:
        raise DomainError("empty grid")
    X, Xu, Xv, Xuv = m.grid_partials(us, vs)
    mixed = np.abs(Xuv).reshape(4, -1).max(axis=1)
    resid = []
    if conn is not None:
        resid = np.abs(_grid_residuals(conn, X, Xu, Xv, Xuv)).reshape(4, -1).max(axis=1).tolist()
    pred = None
    if m.generators is not None:
        uu, vv = np.meshgrid(np.asarray(us, float), np.asarray(vs, float), indexing="ij")
        pred = float(np.max(np.abs(family_y_mixed(m.generators, uu, vv))))
    return SeparabilityReport(dict(zip(("x", "y", "z", "t"), mixed.tolist())), tol, pred, resid)


def _grid_residuals(conn: ConnectionField, X, Xu, Xv, Xuv) -> np.ndarray:
    res = np.empty_like(Xuv)
    for idx in np.ndindex(X.shape[1:]):
        sl = (slice(None),) + idx
        res[sl] = Xuv[sl] + np.einsum("ijk,j,k->i", conn(X[sl]), Xu[sl], Xv[sl])
    return res


def sample_csv(m: SurfaceMap, conn: ConnectionField, nu: int = 50, nv: int = 50) -> str:
    """CSV rows ``u,v,x,y,z,t,res1..res4`` over a regular grid."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["u", "v", "x", "y", "z", "t", "res1", "res2", "res3", "res4"])
    us, vs = m.grid(nu, nv)
    X, Xu, Xv, Xuv = m.grid_partials(us, vs)
    res = _grid_residuals(conn, X, Xu, Xv, Xuv)
    for a, u in enumerate(us):
        for b, v in enumerate(vs):
            w.writerow([repr(float(c)) for c in (u, v, *X[:, a, b], *res[:, a, b])])
    return buf.getvalue()


def random_polynomial_generators(rng: np.random.Generator, degree: int = 3) -> SurfaceGenerators:
    def poly():
        return Polynomial(rng.uniform(-1, 1, rng.integers(1, degree + 2)))

    return SurfaceGenerators(poly(), poly(), poly(), poly(), *rng.uniform(-1, 1, 3))
