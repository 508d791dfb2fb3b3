"""Optimal intensity and sqrt(eta) coefficient of the loss-only rate as eta -> 0."""

import argparse
import math

import numpy as np

from pmmdi.keyrate import rate_curve, total_rate
from pmmdi.povm import ChannelModel
from pmmdi.sweep import optimize_mu


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--tol", type=float, default=1e-7)
    args = ap.parse_args()
    print(f"{'eta':>8} {'mu_opt':>10} {'R/sqrt(eta)':>12}")
    for eta in np.logspace(0, -10, 11):
        base = ChannelModel.loss_only(float(eta), 0.1)
        opt = optimize_mu(
            lambda m: total_rate(base.with_(mu=m)).R_infinity,
            (1e-3, 1.0),
            args.tol,
            grid_fn=lambda ms: rate_curve(base, ms),
        )
        print(f"{eta:8.0e} {opt.mu:10.6f} {opt.rate / math.sqrt(eta):12.6f}")


if __name__ == "__main__":
    main()
