"""Round-by-round Monte-Carlo play of the protocol against the announcement model.

Each round both parties pick key or test mode, prepare an amplitude, and the
middle node announces one of ``+ - ? d`` drawn from the closed-form
distribution. Counts are accumulated per (alpha_A, alpha_B, announcement)
cell; everything else in the report is derived from those counts.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np
from scipy.stats import binomtest

from .coherent import TwoModeAmplitude
from .keyrate import error_rate_array
from .povm import OUTCOMES, ChannelModel, announcement_array

# two-sided tail mass beyond 3 standard deviations of a normal
THREE_SIGMA_P = 0.0026997960632601866
Z95 = 1.959963984540054

DEFAULT_TEST_GRID: tuple[tuple[float, int], ...] = ((0.0, 1), (0.1, 4), (1.0, 4))


@dataclass(frozen=True)
class SimConfig:
    model: ChannelModel
    rounds: int = 10**6
    p_A: float = 0.9
    p_B: float = 0.9
    test_grid: tuple[tuple[float, int], ...] = DEFAULT_TEST_GRID
    seed: int = 0
    chunk_size: int = 1 << 20
    workers: int = 1

    def __post_init__(self):
        if int(self.rounds) != self.rounds or self.rounds <= 0:
            raise ValueError("rounds must be a positive integer")
        for name in ("p_A", "p_B"):
            p = getattr(self, name)
            if not 0 < p < 1:
                raise ValueError(f"{name} must lie in (0, 1)")
        if not self.test_grid:
            raise ValueError("test grid must not be empty")
        for nu, n in self.test_grid:
            if nu < 0 or int(n) != n or n < 1:
                raise ValueError(f"bad test grid entry ({nu}, {n})")
        if self.chunk_size <= 0 or self.workers < 1:
            raise ValueError("chunk_size and workers must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "test_grid", tuple((float(a), int(b)) for a, b in self.test_grid))

    def to_dict(self) -> dict:
        return {
            "rounds": self.rounds,
            "p_A": self.p_A,
            "p_B": self.p_B,
            "test_grid": [list(t) for t in self.test_grid],
            "seed": self.seed,
            "chunk_size": self.chunk_size,
            "model": self.model.to_dict(),
        }


def grid_amplitudes(grid: Sequence[tuple[float, int]]) -> list[complex]:
    """sqrt(nu) * exp(2 pi i j / n) for every (nu, n) in the grid, in order."""
    out = []
    for nu, n in grid:
        for j in range(n):
            out.append(complex(math.sqrt(nu) * np.exp(2j * math.pi * j / n)))
    return out


@dataclass(frozen=True)
class Alphabet:
    """Per-party states: index 0 and 1 are the key signals +sqrt(mu), -sqrt(mu)."""

    amplitudes: tuple[complex, ...]
    probs_A: np.ndarray
    probs_B: np.ndarray

    @property
    def size(self) -> int:
        return len(self.amplitudes)

    @staticmethod
    def is_key(i: int) -> bool:
        return i < 2


def alphabet(config: SimConfig) -> Alphabet:
    s = math.sqrt(config.model.mu)
    tests = grid_amplitudes(config.test_grid)
    T = len(tests)

    def party(p):
        return np.array([p / 2, p / 2] + [(1 - p) / T] * T)

    return Alphabet((complex(s), complex(-s), *tests), party(config.p_A), party(config.p_B))


def cell_probabilities(model: ChannelModel, alph: Alphabet) -> np.ndarray:
    """p(gamma | alpha_i, alpha_j) with shape (N, N, 4)."""
    amps = np.array(alph.amplitudes)
    a, b = np.meshgrid(amps, amps, indexing="ij")
    return np.moveaxis(announcement_array(a, b, model), 0, -1)


def _joint_cdf(config: SimConfig) -> tuple[np.ndarray, tuple[int, int, int]]:
    alph = alphabet(config)
    cond = cell_probabilities(config.model, alph)
    joint = alph.probs_A[:, None, None] * alph.probs_B[None, :, None] * cond
    cdf = np.cumsum(joint.ravel())
    cdf /= cdf[-1]
    return cdf, joint.shape


def _chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, chunk])))


def _chunk_indices(cdf: np.ndarray, seed: int, chunk: int, n: int) -> np.ndarray:
    u = _chunk_rng(seed, chunk).random(n)
    return np.minimum(np.searchsorted(cdf, u, side="right"), cdf.size - 1)


def _chunk_plan(config: SimConfig) -> list[tuple[int, int]]:
    full, rest = divmod(config.rounds, config.chunk_size)
    plan = [(i, config.chunk_size) for i in range(full)]
    if rest:
        plan.append((full, rest))
    return plan


def _count_chunks(args) -> np.ndarray:
    cdf, seed, plan = args
    total = np.zeros(cdf.size, dtype=np.int64)
    for chunk, n in plan:
        total += np.bincount(_chunk_indices(cdf, seed, chunk, n), minlength=cdf.size)
    return total


def simulate_counts(config: SimConfig) -> np.ndarray:
    """Cell counts of shape (N, N, 4); independent of ``workers``."""
    cdf, shape = _joint_cdf(config)
    plan = _chunk_plan(config)
    if config.workers == 1 or len(plan) < 2:
        flat = _count_chunks((cdf, config.seed, plan))
    else:
        parts = [(cdf, config.seed, plan[i :: config.workers]) for i in range(config.workers)]
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            flat = sum(pool.map(_count_chunks, parts))
    return flat.reshape(shape)


@dataclass(frozen=True)
class RoundRecord:
    mode_A: str
    mode_B: str
    alpha_A: complex
    alpha_B: complex
    k_A: Optional[int]
    k_B: Optional[int]
    announcement: str


def sample_rounds(config: SimConfig, n: Optional[int] = None) -> Iterator[RoundRecord]:
    """Individual rounds drawn from the first chunk's stream.

    These are exactly the rounds that the first chunk of ``simulate_counts``
    tallies, so they can be inspected one at a time.
    """
    n = min(config.rounds, config.chunk_size) if n is None else n
    cdf, (N, _, G) = _joint_cdf(config)
    amps = alphabet(config).amplitudes
    for idx in _chunk_indices(cdf, config.seed, 0, n):
        i, rem = divmod(int(idx), N * G)
        j, g = divmod(rem, G)
        yield RoundRecord(
            mode_A="key" if i < 2 else "test",
            mode_B="key" if j < 2 else "test",
            alpha_A=amps[i],
            alpha_B=amps[j],
            k_A=i if i < 2 else None,
            k_B=j if j < 2 else None,
            announcement=OUTCOMES[g],
        )


@dataclass(frozen=True)
class Estimate:
    """Binomial frequency estimate compared with an analytic probability."""

    count: int
    trials: int
    freq: float
    se: float  # Wald
    ci: tuple[float, float]  # Wilson 95%
    analytic: float
    z: float
    p_value: float

    @property
    def consistent(self) -> bool:
        """Within 3 sigma, judged by the exact two-sided binomial test."""
        return self.p_value >= THREE_SIGMA_P

    @property
    def covered(self) -> bool:
        return self.ci[0] <= self.analytic <= self.ci[1]

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "trials": self.trials,
            "freq": self.freq,
            "se": self.se,
            "ci95": list(self.ci),
            "analytic": self.analytic,
            "z": self.z,
            "p_value": self.p_value,
            "consistent": self.consistent,
        }


def wilson_interval(k: int, n: int, z: float = Z95) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    p = k / n
    den = 1 + z * z / n
    mid = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    # the endpoints are exactly 0 or 1 at k = 0 or k = n; pin them against rounding
    lo = 0.0 if k == 0 else max(0.0, mid - half)
    hi = 1.0 if k == n else min(1.0, mid + half)
    return lo, hi


def estimate(k: int, n: int, analytic: float, exact: bool = True) -> Estimate:
    """Frequency k/n against ``analytic``.

    ``z`` uses the analytic variance so it stays finite when k is 0 or n.
    ``exact=False`` skips the binomial test and derives p from z instead.
    """
    k, n = int(k), int(n)
    f = k / n if n else math.nan
    se = math.sqrt(f * (1 - f) / n) if n else math.nan
    sd = math.sqrt(analytic * (1 - analytic) / n) if n else math.nan
    if n and sd > 0:
        z = (f - analytic) / sd
    else:
        z = 0.0 if (n and f == analytic) else (math.inf if n else math.nan)
    if not n:
        pv = math.nan
    elif exact:
        pv = float(binomtest(k, n, min(max(analytic, 0.0), 1.0)).pvalue)
    else:
        pv = math.erfc(abs(z) / math.sqrt(2)) if math.isfinite(z) else 0.0
    return Estimate(k, n, f, se, wilson_interval(k, n), float(analytic), float(z), pv)


@dataclass
class CellReport:
    alpha_A: complex
    alpha_B: complex
    mode_A: str
    mode_B: str
    trials: int
    estimates: dict[str, Estimate]

    @property
    def frequencies(self) -> dict[str, float]:
        return {g: e.freq for g, e in self.estimates.items()}

    def to_dict(self) -> dict:
        return {
            "alpha_A": [self.alpha_A.real, self.alpha_A.imag],
            "alpha_B": [self.alpha_B.real, self.alpha_B.imag],
            "mode_A": self.mode_A,
            "mode_B": self.mode_B,
            "trials": self.trials,
            "counts": {g: e.count for g, e in self.estimates.items()},
            "estimates": {g: e.to_dict() for g, e in self.estimates.items()},
        }


@dataclass
class SimReport:
    config: SimConfig
    analytic_model: ChannelModel
    counts: np.ndarray
    amplitudes: tuple[complex, ...]
    sifted: int
    e_plus: Optional[Estimate]
    e_minus: Optional[Estimate]
    cells: list[CellReport] = field(default_factory=list)

    @property
    def insufficient_statistics(self) -> bool:
        return self.e_plus is None or self.e_minus is None

    def checks(self) -> list[tuple[str, Estimate]]:
        out = []
        for name, e in (("e_plus", self.e_plus), ("e_minus", self.e_minus)):
            if e is not None:
                out.append((name, e))
        for c in self.cells:
            for g, e in c.estimates.items():
                out.append((f"{_fmt_amp(c.alpha_A)},{_fmt_amp(c.alpha_B)}:{g}", e))
        return out

    def failures(self) -> list[str]:
        """Estimates individually outside 3 sigma."""
        return [name for name, e in self.checks() if not e.consistent]

    @property
    def all_consistent(self) -> bool:
        return not self.insufficient_statistics and not self.failures()

    def familywise_threshold(self) -> float:
        """Per-estimate p-value cut giving a 3-sigma false-alarm rate for the whole report."""
        m = max(len(self.checks()), 1)
        return -math.expm1(math.log1p(-THREE_SIGMA_P) / m)

    def check_failures(self) -> list[str]:
        """Estimates failing the familywise 3-sigma test used by ``--check``."""
        cut = self.familywise_threshold()
        return [name for name, e in self.checks() if e.p_value < cut]

    @property
    def passes_check(self) -> bool:
        return not self.insufficient_statistics and not self.check_failures()

    def error_rates_agree(self) -> bool:
        """e_plus and e_minus within combined 3 sigma of each other."""
        if self.insufficient_statistics:
            return False
        a, b = self.e_plus, self.e_minus
        var = a.analytic * (1 - a.analytic) / a.trials + b.analytic * (1 - b.analytic) / b.trials
        return abs(a.freq - b.freq) <= 3 * math.sqrt(var) if var > 0 else a.freq == b.freq

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "analytic_model": self.analytic_model.to_dict(),
            "rounds": int(self.counts.sum()),
            "sifted": self.sifted,
            "insufficient_statistics": self.insufficient_statistics,
            "e_plus": self.e_plus.to_dict() if self.e_plus else None,
            "e_minus": self.e_minus.to_dict() if self.e_minus else None,
            "cells": [c.to_dict() for c in self.cells],
            "failures": self.failures(),
            "all_consistent": self.all_consistent,
            "familywise_threshold": self.familywise_threshold(),
            "check_failures": self.check_failures(),
            "passes_check": self.passes_check,
        }

    def to_json(self, indent: Optional[int] = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True, allow_nan=True)


def _fmt_amp(z: complex) -> str:
    return f"({z.real:.6g}{z.imag:+.6g}j)"


def _key_error(counts: np.ndarray, g: int, wrong: Sequence[tuple[int, int]], analytic: float, exact: bool):
    n = int(counts[:2, :2, g].sum())
    if n == 0:
        return None
    k = int(sum(counts[i, j, g] for i, j in wrong))
    return estimate(k, n, analytic, exact)


def build_report(
    config: SimConfig,
    counts: np.ndarray,
    analytic_model: Optional[ChannelModel] = None,
    exact: bool = True,
    cells: bool = True,
) -> SimReport:
    ref = analytic_model or config.model
    alph = alphabet(config)
    e_ref = float(error_rate_array(ref, ref.mu))
    plus, minus = OUTCOMES.index("+"), OUTCOMES.index("-")
    sifted = int(counts[:2, :2, plus].sum() + counts[:2, :2, minus].sum())
    rep = SimReport(
        config=config,
        analytic_model=ref,
        counts=counts,
        amplitudes=alph.amplitudes,
        sifted=sifted,
        e_plus=_key_error(counts, plus, ((0, 1), (1, 0)), e_ref, exact),
        e_minus=_key_error(counts, minus, ((0, 0), (1, 1)), e_ref, exact),
    )
    if cells:
        # analytic reference uses the same amplitudes with the reference model
        ref_alph = alphabet(SimConfig(model=ref, rounds=1, test_grid=config.test_grid))
        probs = cell_probabilities(ref, Alphabet(alph.amplitudes, ref_alph.probs_A, ref_alph.probs_B))
        N = alph.size
        for i in range(N):
            for j in range(N):
                n = int(counts[i, j].sum())
                if n == 0:
                    continue
                est = {g: estimate(counts[i, j, a], n, probs[i, j, a], exact) for a, g in enumerate(OUTCOMES)}
                rep.cells.append(
                    CellReport(
                        alph.amplitudes[i],
                        alph.amplitudes[j],
                        "key" if i < 2 else "test",
                        "key" if j < 2 else "test",
                        n,
                        est,
                    )
                )
    return rep


def simulate(config: SimConfig, analytic_model: Optional[ChannelModel] = None, cells: bool = True) -> SimReport:
    """Run ``config.rounds`` rounds and compare against ``analytic_model``.

    The analytic reference defaults to the model that generated the data;
    passing a different one is how consistency checks are exercised.
    """
    return build_report(config, simulate_counts(config), analytic_model, cells=cells)


@dataclass(frozen=True)
class DiagonalEstimate:
    amplitude: TwoModeAmplitude
    trials: int
    estimates: dict[str, Estimate]

    @property
    def flagged(self) -> list[str]:
        """Outcomes whose analytic probability falls outside the 95% CI."""
        return [g for g, e in self.estimates.items() if not e.covered]


def estimate_diagonals(report: SimReport) -> dict[TwoModeAmplitude, DiagonalEstimate]:
    """Empirical <alpha|F^gamma|alpha> per distinct amplitude pair, with 95% CIs.

    Cells that share an amplitude pair (a test state equal to a key signal)
    are merged before estimating.
    """
    if not report.cells:
        raise ValueError("report carries no per-amplitude cells")
    merged: dict[tuple, list] = {}
    for c in report.cells:
        key = (round(c.alpha_A.real, 12), round(c.alpha_A.imag, 12), round(c.alpha_B.real, 12), round(c.alpha_B.imag, 12))
        slot = merged.setdefault(key, [c.alpha_A, c.alpha_B, np.zeros(len(OUTCOMES), dtype=np.int64)])
        slot[2] += [c.estimates[g].count for g in OUTCOMES]
    out = {}
    for a, b, cnt in merged.values():
        amp = TwoModeAmplitude(a, b)
        ref = announcement_array(amp.a, amp.b, report.analytic_model)
        n = int(cnt.sum())
        est = {g: estimate(cnt[i], n, float(ref[i])) for i, g in enumerate(OUTCOMES)}
        out[amp] = DiagonalEstimate(amp, n, est)
    return out


__all__ = [
    "Alphabet",
    "CellReport",
    "DEFAULT_TEST_GRID",
    "DiagonalEstimate",
    "Estimate",
    "RoundRecord",
    "SimConfig",
    "SimReport",
    "THREE_SIGMA_P",
    "alphabet",
    "build_report",
    "cell_probabilities",
    "estimate",
    "estimate_diagonals",
    "sample_rounds",
    "simulate",
    "simulate_counts",
    "grid_amplitudes",
    "wilson_interval",
]
