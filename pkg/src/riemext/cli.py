"""Command-line front end.

    riemext ricci --metric antimach8 --points random:100 --seed 42 --tol 1e-10
    riemext geodesic --metric antimach8 --xi 0,0,0,0 --h 0,0,0,0 --s-max 1
    riemext verify --branch xi3-zero --trials 25 --tol 1e-8

JSON output carries ``schema: 1`` and the sampling generator; floats are
written as shortest round-trip decimals, so equal configs give equal bytes.
Exit status: 0 on success, 1 when a verification flag fails, 2 on bad flags
or I/O errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import antimach, surfaces
from .errors import ConfigError, GeometryError
from .extension import ExtendedChart, extend, extended_signature, nonzero_components
from .geodesic import InitialData, integrate
from .geometry import kretschmann, ricci_tensor
from .registry import RegistryEntry, lookup

COMMANDS = ("christoffel", "ricci", "kretschmann", "extend", "geodesic", "verify", "surface")
GENERATOR = "numpy PCG64 (default_rng(seed))"
SCHEMA = 1


@dataclass
class RunConfig:
    command: str
    metric_id: str = "antimach4"
    points: str = "random:10"
    box: float = 2.0
    seed: int = 42
    tol: float | None = None
    s_max: float = 10.0
    n_samples: int = 101
    trials: int = 5
    branch: str = "both"
    grid: int = 50
    xi: tuple[float, ...] | None = None
    h: tuple[float, ...] | None = None
    x0: tuple[float, ...] | None = None
    psi0: tuple[float, ...] | None = None
    generators: str | None = None
    format: str | None = None
    out: str | None = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.tol is not None and not self.tol > 0:
            raise ConfigError("--tol must be positive")
        if self.trials < 1:
            raise ConfigError("--trials must be at least 1")
        if self.grid < 1:
            raise ConfigError("--grid must be at least 1")
        if self.n_samples < 2:
            raise ConfigError("--samples must be at least 2")
        if not (self.s_max > 0 and math.isfinite(self.s_max)):
            raise ConfigError("--s-max must be positive and finite")
        if self.branch.replace("-", "_") not in ("xi3_zero", "xi3_nonzero", "both"):
            raise ConfigError("--branch must be xi3-zero, xi3-nonzero or both")
        if self.format not in (None, "json", "csv"):
            raise ConfigError("--format must be json or csv")
        if self.command == "geodesic" and self.xi is None:
            raise ConfigError("geodesic needs --xi")
        if self.command != "geodesic" and any(v is not None for v in (self.xi, self.h, self.x0, self.psi0)):
            raise ConfigError("--xi/--h/--x0/--psi0 only apply to geodesic")
        if self.command != "surface" and self.generators is not None:
            raise ConfigError("--generators only applies to surface")

    @property
    def output_format(self) -> str:
        if self.format:
            return self.format
        return "csv" if self.command in ("geodesic", "surface") else "json"


# ---------------------------------------------------------------------------
# parsing helpers


def _floats(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None
    if not all(math.isfinite(v) for v in vals):
        raise ConfigError(f"non-finite value in {text!r}")
    return vals


def sample_points(spec: str, dim: int, seed: int, box: float = 2.0) -> np.ndarray:
    """``random:N`` draws N points uniformly from ``[-box, box]^dim``;
    otherwise ``spec`` lists points as ``a,b,..;c,d,..``."""
    if spec.startswith("random:"):
        try:
            n = int(spec.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"bad point count in {spec!r}") from None
        if n < 1:
            raise ConfigError("need at least one random point")
        return np.random.default_rng(seed).uniform(-box, box, (n, dim))
    pts = [_floats(chunk) for chunk in spec.split(";") if chunk.strip()]
    if not pts or any(len(p) != dim for p in pts):
        raise ConfigError(f"points must have {dim} coordinates each")
    return np.array(pts)


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=1, allow_nan=False) + "\n"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _header(cfg: RunConfig, **extra) -> dict:
    out = {"schema": SCHEMA, "command": cfg.command, "generator": GENERATOR, "seed": cfg.seed}
    out.update(extra)
    return out


# ---------------------------------------------------------------------------
# commands; each returns (text, flags_ok)


def _christoffel(cfg: RunConfig, entry: RegistryEntry):
    pts = sample_points(cfg.points, entry.metric.dim, cfg.seed, cfg.box)
    rows, records = [], []
    for n, p in enumerate(pts):
        G = entry.connection(p)
        nz = []
        for k, i, j in zip(*np.nonzero(G)):
            if i <= j:
                nz.append({"k": int(k), "i": int(i), "j": int(j), "value": float(G[k, i, j])})
                rows.append((n, int(k), int(i), int(j), float(G[k, i, j])))
        records.append({"coords": p.tolist(), "nonzero": nz})
    if cfg.output_format == "csv":
        return _csv(["point", "k", "i", "j", "value"], rows), True
    return _dump_json(_header(cfg, metric=cfg.metric_id, names=list(entry.names), points=records)), True


def _scalar_scan(cfg: RunConfig, entry: RegistryEntry, key: str, fn):
    pts = sample_points(cfg.points, entry.metric.dim, cfg.seed, cfg.box)
    vals = [float(fn(p)) for p in pts]
    worst = max(abs(v) for v in vals)
    ok = cfg.tol is None or worst <= cfg.tol
    if cfg.output_format == "csv":
        rows = [(n, *p.tolist(), v) for n, (p, v) in enumerate(zip(pts, vals))]
        return _csv(["point", *entry.names, key], rows), ok
    body = _header(
        cfg,
        metric=cfg.metric_id,
        tol=cfg.tol,
        max=worst,
        passed=ok,
        points=[{"coords": p.tolist(), key: v} for p, v in zip(pts, vals)],
    )
    return _dump_json(body), ok


def _ricci(cfg, entry):
    return _scalar_scan(cfg, entry, "max_abs_ricci", lambda p: np.max(np.abs(ricci_tensor(entry.connection, p))))


def _kretschmann(cfg, entry):
    return _scalar_scan(cfg, entry, "kretschmann", lambda p: kretschmann(entry.metric, p))


def _extend(cfg, entry):
    n = entry.connection.dim
    if entry.names == antimach.BASE_NAMES:
        chart = ExtendedChart(n, antimach.BASE_NAMES, antimach.FIBER_NAMES)
    else:
        chart = ExtendedChart(n, tuple(entry.names), tuple(f"Psi_{nm}" for nm in entry.names))
    m = extend(entry.connection, chart)
    pts = sample_points(cfg.points, m.dim, cfg.seed, cfg.box)
    records, rows = [], []
    for k, p in enumerate(pts):
        comps = nonzero_components(m, p)
        pos, neg = extended_signature(m, p)
        det = float(np.linalg.det(m(p)))
        records.append({"coords": p.tolist(), "det": det, "signature": [pos, neg], "components": comps})
        rows.extend((k, c["i"], c["j"], c["pair"], c["value"]) for c in comps)
    if cfg.output_format == "csv":
        return _csv(["point", "i", "j", "pair", "value"], rows), True
    return _dump_json(_header(cfg, metric=cfg.metric_id, names=list(chart.names), points=records)), True


def _geodesic(cfg, entry):
    conn = entry.connection
    dim = conn.dim
    xi = cfg.xi
    if cfg.h is not None:
        n = len(xi)
        if 2 * n != dim:
            raise ConfigError(f"--h needs an extended metric of dimension {2 * n}; {cfg.metric_id} has {dim}")
        if len(cfg.h) != n:
            raise ConfigError("--h and --xi must have the same length")
        init = InitialData(cfg.x0 or (0.0,) * n, cfg.psi0 or (0.0,) * n, xi, cfg.h)
    else:
        if len(xi) != dim:
            raise ConfigError(f"--xi needs {dim} entries for {cfg.metric_id}")
        if cfg.psi0 is not None:
            raise ConfigError("--psi0 needs --h")
        init = InitialData(cfg.x0 or (0.0,) * dim, (0.0,) * dim, xi, (0.0,) * dim)
        init = init.state(dim)
    tol = cfg.tol or 1e-12
    traj = integrate(conn, init, cfg.s_max, tol=tol, metric=entry.metric, n_samples=cfg.n_samples)
    if cfg.output_format == "csv":
        return traj.to_csv(entry.names), True
    body = _header(
        cfg,
        metric=cfg.metric_id,
        tol=tol,
        init={"x0": list(cfg.x0 or ()), "psi0": list(cfg.psi0 or ()), "xi": list(xi), "h": list(cfg.h or ())},
        steps_accepted=traj.steps_accepted,
        steps_rejected=traj.steps_rejected,
        norm_drift=traj.norm_drift,
        geodesic_class=traj.geodesic_class.label,
        samples=[json.loads(line) for line in traj.to_jsonl(entry.names).splitlines()],
    )
    return _dump_json(body), True


def _verify(cfg, entry):
    tol = cfg.tol or 1e-6
    report = antimach.verify_closed_forms(cfg.trials, seed=cfg.seed, tol=tol, branch=cfg.branch)
    if cfg.output_format == "csv":
        rows = [
            (t.branch, int(t.vertex), t.index, c.name, c.max_deviation, int(c.passed))
            for t in report.trials
            for c in t.checks
        ]
        return _csv(["branch", "vertex", "trial", "formula", "max_deviation", "passed"], rows), report.passed
    return report.to_json() + "\n", report.passed


def _load_generators(text: str) -> surfaces.SurfaceGenerators:
    path = Path(text)
    try:
        raw = path.read_text() if not text.lstrip().startswith("{") and path.is_file() else text
        return surfaces.SurfaceGenerators.from_json(raw)
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad generator spec: {exc}") from None


def _surface(cfg, entry):
    if entry.metric.dim != 4 or cfg.metric_id != "antimach4":
        raise ConfigError("surface supports --metric antimach4 only")
    if cfg.generators is not None:
        gen = _load_generators(cfg.generators)
    else:
        gen = surfaces.random_polynomial_generators(np.random.default_rng(cfg.seed))
    m = surfaces.build_family_surface(gen)
    tol = cfg.tol or 1e-9
    rep = surfaces.separability_report(m, cfg.grid, entry.connection)
    ok = max(rep.max_residual) <= tol and abs(rep.max_mixed["y"] - rep.predicted_y_mixed) <= tol
    if cfg.output_format == "csv":
        return surfaces.sample_csv(m, entry.connection, cfg.grid, cfg.grid), ok
    body = _header(cfg, metric=cfg.metric_id, tol=tol, grid=cfg.grid, generators=gen.to_dict(), passed=ok)
    body["report"] = rep.to_dict()
    return _dump_json(body), ok


HANDLERS = {
    "christoffel": _christoffel,
    "ricci": _ricci,
    "kretschmann": _kretschmann,
    "extend": _extend,
    "geodesic": _geodesic,
    "verify": _verify,
    "surface": _surface,
}


def execute(cfg: RunConfig) -> tuple[str, bool]:
    """Run one command and return ``(output text, all flags passed)``."""
    entry = lookup("antimach4" if cfg.command == "verify" else cfg.metric_id)
    return HANDLERS[cfg.command](cfg, entry)


def run(cfg: RunConfig) -> int:
    text, ok = execute(cfg)
    if cfg.out:
        try:
            Path(cfg.out).write_text(text)
        except OSError as exc:
            raise OSError(f"cannot write {cfg.out}: {exc}") from exc
    else:
        sys.stdout.write(text)
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--metric", dest="metric_id", default="antimach4",
                        help="antimach4, antimach8, flat, sphere2 or a JSON metric file")
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--tol", type=float, default=None)
    common.add_argument("--format", choices=("json", "csv"), default=None)
    common.add_argument("--out", default=None, help="output path (default stdout)")

    pts = argparse.ArgumentParser(add_help=False)
    pts.add_argument("--points", default="random:10", help="random:N or 'a,b,..;c,d,..'")
    pts.add_argument("--box", type=float, default=2.0, help="half-width of the random sampling cube")

    parser = argparse.ArgumentParser(prog="riemext", description="Riemann extension toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("christoffel", "ricci", "kretschmann", "extend"):
        sub.add_parser(name, parents=[common, pts])
    g = sub.add_parser("geodesic", parents=[common])
    g.add_argument("--xi", type=_floats, required=True)
    g.add_argument("--h", type=_floats, default=None)
    g.add_argument("--x0", type=_floats, default=None)
    g.add_argument("--psi0", type=_floats, default=None)
    g.add_argument("--s-max", type=float, default=10.0)
    g.add_argument("--samples", dest="n_samples", type=int, default=101)
    v = sub.add_parser("verify", parents=[common])
    v.add_argument("--trials", type=int, default=5)
    v.add_argument("--branch", default="both", help="xi3-zero, xi3-nonzero or both")
    s = sub.add_parser("surface", parents=[common])
    s.add_argument("--grid", type=int, default=50)
    s.add_argument("--generators", default=None, help="JSON text or file; random generators if omitted")
    return parser


def config_from_args(argv=None) -> RunConfig:
    ns = vars(build_parser().parse_args(argv))
    known = {f for f in RunConfig.__dataclass_fields__}
    return RunConfig(**{k: v for k, v in ns.items() if k in known})


def main(argv=None) -> int:
    try:
        cfg = config_from_args(argv)
        return run(cfg)
    except ConfigError as exc:
        print(f"riemext: error: {exc}", file=sys.stderr)
        return 2
    except (GeometryError, OSError) as exc:
        print(f"riemext: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
