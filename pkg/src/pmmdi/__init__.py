"""Asymptotic key rates for phase-matching MDI QKD with coherent test states.

Modules: ``coherent`` (cat basis and signal vectors), ``povm`` (the effective
four-outcome measurement), ``keyrate`` (Holevo and Devetak-Winter rates),
``sweep`` (intensity optimization over distance), ``sim`` (Monte-Carlo
protocol play) and ``cli``.
"""

from .coherent import TwoModeAmplitude, cat_coeffs, signal_set, signal_vector
from .keyrate import loss_rate_analytic, plob_bound, rate_curve, total_rate
from .povm import ChannelModel, PovmSet, announcement_probs, eve_povm_loss, eve_povm_model
from .sim import SimConfig, simulate
from .sweep import ModelTemplate, SweepConfig, optimize_mu, run_sweep

__version__ = "0.1.0"

__all__ = [
    "ChannelModel",
    "ModelTemplate",
    "PovmSet",
    "SimConfig",
    "SweepConfig",
    "TwoModeAmplitude",
    "announcement_probs",
    "cat_coeffs",
    "eve_povm_loss",
    "eve_povm_model",
    "loss_rate_analytic",
    "optimize_mu",
    "plob_bound",
    "rate_curve",
    "run_sweep",
    "signal_set",
    "signal_vector",
    "simulate",
    "total_rate",
]
