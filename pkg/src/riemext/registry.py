"""Named metrics for the command line, plus user metrics read from JSON.

A user metric file lists the upper-triangle components as polynomials::

    {"dim": 2, "names": ["r", "theta"],
     "components": {"0,0": [[1.0, [0, 0]]], "1,1": [[1.0, [2, 0]]]}}

Each term is ``[coefficient, exponents]``; missing components are zero.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from .antimach import ALL_NAMES, BASE_NAMES, antimach_connection, antimach_extended_metric, antimach_metric
from .dual import sin
from .errors import ConfigError
from .geometry import ConnectionField, MetricField, levi_civita


@dataclass
class RegistryEntry:
    metric: MetricField
    connection: ConnectionField
    names: tuple[str, ...]
    # connection whose extension is ``metric``, when there is one
    base_connection: ConnectionField | None = None


def _flat(coords):
    return [[1.0 if i == j else 0.0 for j in range(4)] for i in range(4)]


def _sphere(coords):
    s = sin(coords[0])
    return [[1.0, 0.0], [0.0, s * s]]


def _antimach4() -> RegistryEntry:
    return RegistryEntry(antimach_metric(), antimach_connection(), BASE_NAMES)


def _antimach8() -> RegistryEntry:
    m = antimach_extended_metric()
    return RegistryEntry(m, levi_civita(m), ALL_NAMES, m.connection)


def _flat4() -> RegistryEntry:
    m = MetricField(4, _flat, derivative_order=8, name="flat")
    return RegistryEntry(m, levi_civita(m), ("x1", "x2", "x3", "x4"))


def _sphere2() -> RegistryEntry:
    m = MetricField(2, _sphere, derivative_order=8, name="sphere2")
    return RegistryEntry(m, levi_civita(m), ("theta", "phi"))


BUILTIN: dict[str, Callable[[], RegistryEntry]] = {
    "antimach4": _antimach4,
    "antimach8": _antimach8,
    "flat": _flat4,
    "sphere2": _sphere2,
}


def polynomial_metric(spec: dict, name: str = "user") -> MetricField:
    """Metric whose components are the polynomials listed in ``spec``."""
    try:
        dim = int(spec["dim"])
        raw = spec["components"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"metric spec needs 'dim' and 'components': {exc}") from None
    if dim < 1:
        raise ConfigError("metric dim must be positive")
    terms: dict[tuple[int, int], list[tuple[float, tuple[int, ...]]]] = {}
    for key, poly in raw.items():
        try:
            i, j = sorted(int(k) for k in key.split(","))
        except ValueError:
            raise ConfigError(f"bad component key {key!r}; expected 'i,j'") from None
        if not (0 <= i < dim and 0 <= j < dim):
            raise ConfigError(f"component {key!r} out of range for dim {dim}")
        parsed = []
        for term in poly:
            coef, exps = term
            exps = tuple(int(e) for e in exps)
            if len(exps) != dim or any(e < 0 for e in exps) or not math.isfinite(float(coef)):
                raise ConfigError(f"bad term {term!r} in component {key!r}")
            parsed.append((float(coef), exps))
        terms[(i, j)] = parsed

    def evaluator(coords):
        m = [[0.0] * dim for _ in range(dim)]
        for (i, j), poly in terms.items():
            acc = 0.0
            for coef, exps in poly:
                mono = coef
                for c, e in zip(coords, exps):
                    if e:
                        mono = mono * c**e
                acc = acc + mono
            m[i][j] = acc
        return m

    return MetricField(dim, evaluator, derivative_order=8, name=name)


def load_user_metric(path: str | Path) -> RegistryEntry:
    try:
        spec = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read metric file {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"metric file {path} is not valid JSON: {exc}") from None
    m = polynomial_metric(spec, name=str(spec.get("name", Path(path).stem)))
    names = tuple(spec.get("names") or (f"x{i + 1}" for i in range(m.dim)))
    if len(names) != m.dim:
        raise ConfigError("metric 'names' must have one entry per dimension")
    return RegistryEntry(m, levi_civita(m), names)


def lookup(metric_id: str) -> RegistryEntry:
    """Builtin name, or a path to a user metric JSON file."""
    if metric_id in BUILTIN:
        return BUILTIN[metric_id]()
    if metric_id.endswith(".json") or Path(metric_id).is_file():
        return load_user_metric(metric_id)
    raise ConfigError(f"unknown metric {metric_id!r}; choose one of {sorted(BUILTIN)} or a JSON file")
