"""Distance sweeps with per-distance intensity optimization."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from .keyrate import RateBreakdown, plob_bound, rate_curve, total_rate
from .povm import ChannelModel

GRID_POINTS = 64
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0

CSV_COLUMNS = (
    "L_km",
    "eta_t",
    "eta",
    "mu_opt",
    "R_inf",
    "plob",
    "beats_bound",
    "e_plus",
    "chi_plus",
    "p_plus",
    "p_minus",
)


class AllZero(Exception):
    """Raised by ``optimize_mu(strict=True)`` when the rate vanishes on the whole grid."""


class OptimizeResult(NamedTuple):
    mu: float
    rate: float
    all_zero: bool


@dataclass(frozen=True)
class ModelTemplate:
    """Everything in a ChannelModel except the channel loss and the intensity.

    Defaults are the realistic detector/interferometer values used throughout.
    """

    eta_d: float = 0.145
    V: float = 0.95
    delta: float = math.pi / 60
    p_d: float = 8e-8
    f_EC: float = 1.15

    @classmethod
    def loss_only(cls) -> "ModelTemplate":
        return cls(eta_d=1.0, V=1.0, delta=0.0, p_d=0.0, f_EC=1.0)

    def model(self, eta_t: float, mu: float) -> ChannelModel:
        return ChannelModel(
            eta_t=eta_t, mu=mu, eta_d=self.eta_d, V=self.V, delta=self.delta, p_d=self.p_d, f_EC=self.f_EC
        )


@dataclass(frozen=True)
class SweepConfig:
    L_start: float = 0.0
    L_end: float = 500.0
    L_step: float = 1.0
    attenuation: float = 0.2
    template: ModelTemplate = field(default_factory=ModelTemplate)
    mu_lo: float = 1e-3
    mu_hi: float = 1.0
    tol: float = 1e-5
    workers: int = 1

    def __post_init__(self):
        if not self.L_step > 0:
            raise ValueError("L_step must be positive")
        if self.L_start < 0:
            raise ValueError("L_start must be non-negative")
        if not 0 < self.mu_lo < self.mu_hi:
            raise ValueError("mu bracket must satisfy 0 < mu_lo < mu_hi")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.attenuation < 0:
            raise ValueError("attenuation must be non-negative")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def distances(self) -> np.ndarray:
        """Distances from L_start to L_end inclusive; empty when L_end < L_start."""
        if self.L_end < self.L_start:
            return np.empty(0)
        n = int(math.floor((self.L_end - self.L_start) / self.L_step + 1e-9)) + 1
        return self.L_start + self.L_step * np.arange(n)


@dataclass
class SweepRow:
    L: float
    eta_t: float
    eta: float
    mu_opt: float = math.nan
    R_infinity: float = math.nan
    plob: float = math.nan
    beats_bound: bool = False
    all_zero: bool = False
    breakdown: Optional[RateBreakdown] = None
    error: Optional[str] = None

    def csv_fields(self) -> list[str]:
        b = self.breakdown
        vals = [
            self.L,
            self.eta_t,
            self.eta,
            self.mu_opt,
            self.R_infinity,
            self.plob,
        ]
        tail = [b.plus.e, b.plus.chi, b.plus.p, b.minus.p] if b is not None else [math.nan] * 4
        out = [_fmt(v) for v in vals]
        out.append("true" if self.beats_bound else "false")
        out.extend(_fmt(v) for v in tail)
        return out


def _fmt(x: float) -> str:
    return "%.10g" % x


def eta_from_distance(L: float, attenuation: float = 0.2, eta_d: float = 1.0) -> tuple[float, float]:
    """Channel and total transmissivity after ``L`` km of fibre."""
    if L < 0:
        raise ValueError("distance must be non-negative")
    eta_t = 10.0 ** (-attenuation * L / 10.0)
    return eta_t, eta_t * eta_d**2


def _golden(f: Callable[[float], float], a: float, b: float, tol: float) -> tuple[float, float]:
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def optimize_mu(
    rate_fn: Callable[[float], float],
    bracket: tuple[float, float] = (1e-3, 1.0),
    tol: float = 1e-5,
    grid_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    strict: bool = False,
) -> OptimizeResult:
    """Maximize ``rate_fn`` over the bracket.

    A 64-point log-spaced scan locates the best grid point; golden-section
    search then refines between its two neighbours. ``grid_fn`` may evaluate
    the whole scan at once and must agree with ``rate_fn`` pointwise.
    """
    lo, hi = bracket
    if not 0 < lo < hi:
        raise ValueError("bracket must satisfy 0 < lo < hi")
    grid = np.geomspace(lo, hi, GRID_POINTS)
    if grid_fn is not None:
        vals = np.asarray(grid_fn(grid), dtype=float)
    else:
        vals = np.array([rate_fn(float(m)) for m in grid])
    if not np.all(vals == 0):
        i = int(np.argmax(vals))
        a, b = grid[max(i - 1, 0)], grid[min(i + 1, GRID_POINTS - 1)]
        mu, r = _golden(rate_fn, float(a), float(b), tol)
        if r >= vals[i]:
            return OptimizeResult(float(mu), float(r), False)
        return OptimizeResult(float(grid[i]), float(vals[i]), False)
    if strict:
        raise AllZero(f"rate vanishes on the whole grid over [{lo}, {hi}]")
    return OptimizeResult(math.sqrt(lo * hi), 0.0, True)


def _row(L: float, cfg: SweepConfig) -> SweepRow:
    eta_t, eta = eta_from_distance(L, cfg.attenuation, cfg.template.eta_d)
    row = SweepRow(L=float(L), eta_t=eta_t, eta=eta)
    try:
        base = cfg.template.model(eta_t, 0.5 * (cfg.mu_lo + cfg.mu_hi))
        opt = optimize_mu(
            lambda m: total_rate(base.with_(mu=m)).R_infinity,
            (cfg.mu_lo, cfg.mu_hi),
            cfg.tol,
            grid_fn=lambda mus: rate_curve(base, mus),
        )
        row.breakdown = total_rate(base.with_(mu=opt.mu))
        row.mu_opt, row.all_zero = opt.mu, opt.all_zero
        row.R_infinity = row.breakdown.R_infinity
        row.plob = plob_bound(eta_t) if eta_t < 1 else math.inf
        row.beats_bound = row.R_infinity > row.plob
    except Exception as exc:  # one bad distance must not sink the sweep
        row.error = f"{type(exc).__name__}: {exc}"
    return row


def _rows_chunk(args: tuple[Sequence[float], SweepConfig]) -> list[SweepRow]:
    Ls, cfg = args
    return [_row(L, cfg) for L in Ls]


def run_sweep(config: SweepConfig) -> list[SweepRow]:
    """One row per distance, in distance order regardless of ``workers``."""
    Ls = [float(L) for L in config.distances()]
    if config.workers == 1 or len(Ls) < 2:
        return [_row(L, config) for L in Ls]
    chunks = [(Ls[i :: config.workers], config) for i in range(config.workers)]
    with ProcessPoolExecutor(max_workers=config.workers) as pool:
        parts = list(pool.map(_rows_chunk, chunks))
    rows: list[SweepRow] = [None] * len(Ls)  # type: ignore[list-item]
    for i, part in enumerate(parts):
        rows[i :: config.workers] = part
    return rows


def first_crossing(rows: Sequence[SweepRow]) -> Optional[float]:
    """Smallest distance at which the rate beats the repeaterless bound."""
    for r in rows:
        if r.beats_bound:
            return r.L
    return None


def beating_windows(rows: Sequence[SweepRow]) -> list[tuple[float, float]]:
    """Maximal runs of consecutive rows with beats_bound set, as (first L, last L)."""
    out: list[tuple[float, float]] = []
    start = prev = None
    for r in rows:
        if r.beats_bound:
            if start is None:
                start = r.L
            prev = r.L
        elif start is not None:
            out.append((start, prev))
            start = None
    if start is not None:
        out.append((start, prev))
    return out


def rows_to_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow(r.csv_fields())
    return buf.getvalue()


def sweep_errors(rows: Sequence[SweepRow]) -> list[tuple[float, str]]:
    return [(r.L, r.error) for r in rows if r.error is not None]


def config_dict(config: SweepConfig) -> dict:
    return asdict(config)


__all__ = [
    "AllZero",
    "CSV_COLUMNS",
    "GRID_POINTS",
    "ModelTemplate",
    "OptimizeResult",
    "SweepConfig",
    "SweepRow",
    "beating_windows",
    "eta_from_distance",
    "first_crossing",
    "optimize_mu",
    "rows_to_csv",
    "run_sweep",
    "sweep_errors",
]
