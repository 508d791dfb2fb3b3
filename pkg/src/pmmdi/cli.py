"""Command-line front end: ``rate``, ``sweep``, ``simulate`` and ``bound``.

Exit codes: 0 ok, 2 bad configuration or arguments, 3 I/O failure,
4 Monte-Carlo consistency failure (``simulate --check``).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Optional, Sequence

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_CONSISTENCY = 0, 2, 3, 4

_EXPECT_KEYS = ("eta_t", "mu", "eta_d", "V", "delta", "p_d", "f_EC")


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON scenario file (defaults: realistic detector model)")
    common.add_argument(
        "--loss-only",
        action="store_true",
        help="ideal devices: p_d = delta = 0, V = f_EC = eta_d = 1",
    )
    point = argparse.ArgumentParser(add_help=False)
    point.add_argument("--L", type=float, help="fibre length in km")
    point.add_argument("--mu", type=float, help="signal intensity (optimized when omitted)")

    ap = argparse.ArgumentParser(prog="pmmdi", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rate", parents=[common, point], help="key rate at one distance")
    p.add_argument("--out", metavar="PATH", help="also write the breakdown as JSON")

    p = sub.add_parser("sweep", parents=[common], help="optimized key rate over a distance range")
    p.add_argument("--out", metavar="PATH", help="CSV destination (stdout when omitted)")
    p.add_argument("--svg", metavar="PATH", help="write a log-linear chart of rate and bound")
    p.add_argument("--workers", type=int, help="parallel worker processes")

    p = sub.add_parser("simulate", parents=[common, point], help="Monte-Carlo protocol run")
    p.add_argument("--seed", type=int)
    p.add_argument("--rounds", type=int)
    p.add_argument("--out", metavar="PATH", help="JSON report destination (stdout when omitted)")
    p.add_argument("--check", action="store_true", help="exit 4 if any estimate fails the familywise 3 sigma test")
    p.add_argument(
        "--expect",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="compare against an analytic model with this parameter changed (repeatable)",
    )

    p = sub.add_parser("bound", parents=[common], help="repeaterless bound at one distance")
    p.add_argument("--L", type=float, required=True, help="fibre length in km")
    return ap


def _config(args):
    from .config import ConfigError, load_config

    try:
        cfg = load_config(args.config)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read config: {exc}") from None
    except ConfigError as exc:
        raise CliError(EXIT_CONFIG, f"invalid config: {exc}") from None
    if args.loss_only:
        cfg = cfg.loss_only()
    return cfg


def _write(path: Optional[str], text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {path}: {exc}") from None


def _point(args, cfg):
    """(L, eta_t, model, optimized?) for a single-distance command."""
    from .sweep import eta_from_distance, optimize_mu
    from .keyrate import rate_curve, total_rate

    L = cfg.L if args.L is None else args.L
    mu = cfg.mu if args.mu is None else args.mu
    try:
        eta_t, _ = eta_from_distance(L, cfg.attenuation, cfg.template.eta_d)
        base = cfg.template.model(eta_t, 0.1 if mu is None else mu)
        optimized = mu is None
        if optimized:
            sw = cfg.sweep_config()
            opt = optimize_mu(
                lambda m: total_rate(base.with_(mu=m)).R_infinity,
                (sw.mu_lo, sw.mu_hi),
                sw.tol,
                grid_fn=lambda ms: rate_curve(base, ms),
            )
            base = base.with_(mu=opt.mu)
    except ValueError as exc:
        raise CliError(EXIT_CONFIG, f"invalid model: {exc}") from None
    return L, eta_t, base, optimized


def cmd_rate(args) -> int:
    from .keyrate import plob_bound, total_rate

    cfg = _config(args)
    L, eta_t, model, optimized = _point(args, cfg)
    b = total_rate(model)
    plob = plob_bound(eta_t) if eta_t < 1 else math.inf
    fields = [
        ("L_km", L),
        ("eta_t", eta_t),
        ("eta", model.eta),
        ("mu", model.mu),
        ("mu_optimized", optimized),
    ]
    for label, part in (("plus", b.plus), ("minus", b.minus)):
        fields += [
            (f"p_{label}", part.p),
            (f"e_{label}", part.e),
            (f"delta_EC_{label}", part.delta_EC),
            (f"chi_{label}", part.chi),
            (f"r_{label}", part.r),
        ]
    fields += [
        ("p_noclick", b.p_noclick),
        ("p_double", b.p_double),
        ("R_inf", b.R_infinity),
        ("plob", plob),
        ("beats_bound", b.R_infinity > plob),
    ]
    for k, v in fields:
        shown = str(v).lower() if isinstance(v, bool) else "%.10g" % v
        print(f"{k:<16}{shown}")
    if args.out:
        doc = {k: (v if not (isinstance(v, float) and math.isinf(v)) else None) for k, v in fields}
        doc["model"] = model.to_dict()
        _write(args.out, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_sweep(args) -> int:
    from dataclasses import replace

    from .svg import line_chart
    from .sweep import rows_to_csv, run_sweep, sweep_errors

    cfg = _config(args)
    sw = cfg.sweep_config()
    if args.workers is not None:
        if args.workers < 1:
            raise CliError(EXIT_CONFIG, "--workers must be >= 1")
        sw = replace(sw, workers=args.workers)
    rows = run_sweep(sw)
    for L, err in sweep_errors(rows):
        print(f"warning: L={L:g} km failed: {err}", file=sys.stderr)
    _write(args.out, rows_to_csv(rows))
    if args.svg:
        xs = [r.L for r in rows]
        chart = line_chart(
            xs,
            {"PM-MDI": [r.R_infinity for r in rows], "repeaterless bound": [r.plob for r in rows]},
        )
        _write(args.svg, chart)
    return EXIT_OK


def _parse_expect(items: Sequence[str]) -> dict:
    out = {}
    for item in items:
        key, sep, val = item.partition("=")
        key = key.strip()
        if not sep or key not in _EXPECT_KEYS:
            raise CliError(EXIT_CONFIG, f"--expect needs KEY=VALUE with KEY in {', '.join(_EXPECT_KEYS)}: {item!r}")
        try:
            out[key] = float(val)
        except ValueError:
            raise CliError(EXIT_CONFIG, f"--expect value is not a number: {item!r}") from None
    return out


def cmd_simulate(args) -> int:
    from .sim import SimConfig, simulate

    cfg = _config(args)
    expect = _parse_expect(args.expect)
    _, _, model, _ = _point(args, cfg)
    sim = dict(cfg.sim)
    if args.seed is not None:
        sim["seed"] = args.seed
    if args.rounds is not None:
        sim["rounds"] = args.rounds
    try:
        sc = SimConfig(model=model, **sim)
        reference = model.with_(**expect) if expect else None
    except (TypeError, ValueError) as exc:
        raise CliError(EXIT_CONFIG, f"invalid simulation settings: {exc}") from None
    report = simulate(sc, analytic_model=reference)
    _write(args.out, report.to_json() + "\n")
    if args.check:
        if report.insufficient_statistics:
            print("check failed: insufficient statistics (no sifted rounds)", file=sys.stderr)
            return EXIT_CONSISTENCY
        bad = report.check_failures()
        if bad:
            print(
                f"check failed: {len(bad)} estimate(s) beyond the familywise 3 sigma level: {', '.join(bad[:5])}",
                file=sys.stderr,
            )
            return EXIT_CONSISTENCY
    return EXIT_OK


def cmd_bound(args) -> int:
    from .keyrate import plob_bound
    from .sweep import eta_from_distance

    cfg = _config(args)
    try:
        eta_t, _ = eta_from_distance(args.L, cfg.attenuation)
    except ValueError as exc:
        raise CliError(EXIT_CONFIG, str(exc)) from None
    plob = plob_bound(eta_t) if eta_t < 1 else math.inf
    print(f"{'L_km':<16}{'%.10g' % args.L}")
    print(f"{'eta_t':<16}{'%.10g' % eta_t}")
    print(f"{'plob':<16}{'%.10g' % plob}")
    return EXIT_OK


_COMMANDS = {"rate": cmd_rate, "sweep": cmd_sweep, "simulate": cmd_simulate, "bound": cmd_bound}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
