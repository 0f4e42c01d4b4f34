"""Norm drift of extended anti-Mach geodesics against the integrator tolerance."""

import argparse
from dataclasses import dataclass

import numpy as np

from riemext.antimach import antimach_extended_connection
from riemext.geodesic import InitialData, integrate


@dataclass
class Config:
    inits: int = 10
    s_max: float = 10.0
    seed: int = 42


def main(cfg: Config) -> None:
    conn = antimach_extended_connection()
    rng = np.random.default_rng(cfg.seed)
    inits = [rng.uniform(-1, 1, 16) for _ in range(cfg.inits)]
    print(f"{'tol':>8s} {'max drift':>10s} {'steps':>7s}")
    for tol in (1e-6, 1e-8, 1e-10, 1e-12):
        drift, steps = 0.0, 0
        for v in inits:
            traj = integrate(conn, InitialData(v[:4], v[4:8], v[8:12], v[12:]), cfg.s_max, tol=tol)
            drift = max(drift, traj.norm_drift)
            steps += traj.steps_accepted
        print(f"{tol:8.0e} {drift:10.2e} {steps // cfg.inits:7d}")


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--inits", type=int, default=Config.inits)
    p.add_argument("--s-max", dest="s_max", type=float, default=Config.s_max)
    p.add_argument("--seed", type=int, default=Config.seed)
    main(Config(**vars(p.parse_args())))
