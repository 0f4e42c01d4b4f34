"""Closed-form verification campaign: writes the full JSON report and prints
a per-formula table (worst deviation, pass and fail counts)."""

import argparse
import json
from dataclasses import dataclass
from pathlib import Path

from riemext.antimach import verify_closed_forms


@dataclass
class Config:
    trials: int = 20
    seed: int = 42
    tol: float = 1e-6
    branch: str = "both"
    out: Path = Path("results/verification.json")


def main(cfg: Config) -> int:
    rep = verify_closed_forms(cfg.trials, seed=cfg.seed, tol=cfg.tol, branch=cfg.branch)
    cfg.out.parent.mkdir(parents=True, exist_ok=True)
    cfg.out.write_text(rep.to_json() + "\n")
    print(f"{'formula':40s} {'worst':>12s} {'pass':>5s} {'fail':>5s}")
    for name, row in rep.summary().items():
        print(f"{name:40s} {row['max_deviation']:12.3e} {row['passed']:5d} {row['failed']:5d}")
    print(f"report written to {cfg.out}")
    return 0 if rep.passed else 1


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--trials", type=int, default=Config.trials)
    p.add_argument("--seed", type=int, default=Config.seed)
    p.add_argument("--tol", type=float, default=Config.tol)
    p.add_argument("--branch", default=Config.branch)
    p.add_argument("--out", type=Path, default=Config.out)
    raise SystemExit(main(Config(**vars(p.parse_args()))))
