"""Shared bits for the experiment scripts: kernels by name, CSV writing."""
import argparse
import csv
import sys

from hetnet_pcp import Matern, SimulationConfig, Thomas, simulate_coverage, total_coverage

BASE_SCALE = {"matern": 40.0, "thomas": 20.0}


def kernel(kind: str, scale: float):
    return Matern(scale) if kind == "matern" else Thomas(scale)


def parser(doc: str) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description=doc)
    p.add_argument("--kernel", choices=("matern", "thomas"), default="matern")
    p.add_argument("--mc", type=int, default=0, metavar="TRIALS",
                   help="add Monte Carlo columns with this many trials (0: analytic only)")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", default=None, help="CSV path (default stdout)")
    return p


def evaluate(model, trials: int, seed: int) -> dict:
    row = {"analytic": total_coverage(model).total}
    if trials:
        est = simulate_coverage(model, SimulationConfig(trials, rng_seed=seed))
        row.update(mc=est.total, mc_half_width=est.half_width)
    return row


def write(rows, path=None):
    fields = list(rows[0])
    for r in rows:
        fields += [k for k in r if k not in fields]
    fh = open(path, "w", newline="") if path else sys.stdout
    w = csv.DictWriter(fh, fields, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    if path:
        fh.close()
