"""Seed-ensemble calibration of the Monte-Carlo estimates.

For each seed, runs the simulator at one distance and records how many
per-estimate 3 sigma checks fail, whether the familywise check passes, and
whether the 95% interval for e_plus covers the analytic value.

    python scripts/mc_calibration.py --seeds 100 --rounds 10000000 --L 300
"""

import argparse
import json

from pmmdi.keyrate import rate_curve, total_rate
from pmmdi.sim import SimConfig, simulate
from pmmdi.sweep import ModelTemplate, eta_from_distance, optimize_mu


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=100)
    ap.add_argument("--rounds", type=int, default=10**7)
    ap.add_argument("--L", type=float, default=300.0)
    ap.add_argument("--mu", type=float, help="intensity (optimized when omitted)")
    ap.add_argument("--loss-only", action="store_true")
    ap.add_argument("--out", help="write per-seed results as JSON")
    args = ap.parse_args()

    template = ModelTemplate.loss_only() if args.loss_only else ModelTemplate()
    eta_t, _ = eta_from_distance(args.L, 0.2, template.eta_d)
    base = template.model(eta_t, 0.1)
    mu = args.mu
    if mu is None:
        mu = optimize_mu(
            lambda m: total_rate(base.with_(mu=m)).R_infinity, (1e-3, 1.0), 1e-5, grid_fn=lambda ms: rate_curve(base, ms)
        ).mu
    model = base.with_(mu=mu)

    results = []
    for seed in range(args.seeds):
        rep = simulate(SimConfig(model=model, rounds=args.rounds, seed=seed))
        results.append(
            dict(
                seed=seed,
                estimates=len(rep.checks()),
                failures=rep.failures(),
                passes_check=rep.passes_check,
                e_plus_covered=rep.e_plus.covered,
                min_p_value=min(e.p_value for _, e in rep.checks()),
            )
        )
    n = len(results)
    m = results[0]["estimates"]
    any_fail = sum(bool(r["failures"]) for r in results)
    print(f"mu={mu:.6f}, {m} estimates per run, {n} seeds of {args.rounds} rounds")
    print(f"runs with any per-estimate 3 sigma failure: {any_fail}/{n}")
    print(f"runs passing the familywise check: {sum(r['passes_check'] for r in results)}/{n}")
    print(f"e_plus 95% interval coverage: {sum(r['e_plus_covered'] for r in results)}/{n}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(dict(mu=mu, rounds=args.rounds, runs=results), fh, indent=2)


if __name__ == "__main__":
    main()
