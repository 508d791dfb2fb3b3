"""Asymptotic Devetak-Winter key rate from Eve's POVM.

For an announcement gamma in {+, -}, Eve's conditional state for key-mode
inputs (k, y) is ``sqrt(F^gamma)|phi_k, phi_y>`` normalised.  Mixing these
with the announcement-conditioned bit statistics gives rho_E^{k,gamma} and
rho_E^gamma, whose entropies yield the Holevo quantity.  The rate counts
secret bits per key-generation round with the sifting factor taken as 1
(mode-selection probabilities -> 1 asymptotically).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coherent import (
    SIGNAL_BITS,
    CatBasisCoeffs,
    cat_coeffs,
    signal_index,
    signal_matrix,
    signal_vector,
)
from .coherent import _SIGNS, MU_FLOOR
from .povm import ChannelModel, _cat_squares, announcement_array, model_stack

EIG_FLOOR = 1e-14
PROB_TOL = 1e-14


_SIGNAL_SIGN_ARRAYS = (np.array([1.0, -1.0, 1.0, -1.0]), np.array([1.0, -1.0, -1.0, 1.0]))

# signal indices grouped by Alice's bit k
_BIT_COLUMNS = tuple([i for i, (k, _) in enumerate(SIGNAL_BITS) if k == bit] for bit in (0, 1))


class ZeroProbability(ValueError):
    """The requested (inputs, announcement) combination never occurs."""


def binary_entropy(x: float) -> float:
    """h(x) in bits; h(0) = h(1) = 0."""
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"binary entropy argument {x} outside [0, 1]")
    if x == 0.0 or x == 1.0:
        return 0.0
    return float(-x * np.log2(x) - (1.0 - x) * np.log2(1.0 - x))


def entropy_from_eigenvalues(w) -> float:
    w = np.asarray(w, dtype=float)
    if w.min(initial=0.0) < -1e-10 or w.max(initial=0.0) > 1 + 1e-10:
        raise ValueError(f"density-operator eigenvalues out of range: {w}")
    w = w[w > EIG_FLOOR]
    return float(-(w * np.log2(w)).sum())


def von_neumann_entropy(rho) -> float:
    """S(rho) = -Tr rho log2 rho for a Hermitian density matrix."""
    return entropy_from_eigenvalues(np.linalg.eigvalsh(rho))


def psd_sqrt(F) -> np.ndarray:
    """Square root of a Hermitian PSD matrix; tiny negative eigenvalues clamp to 0."""
    w, U = np.linalg.eigh(F)
    return (U * np.sqrt(np.clip(w, 0.0, None))) @ U.conj().T


def theta_state(F, k: int, y: int, coeffs: CatBasisCoeffs) -> np.ndarray:
    """Eve's normalised conditional state for key bits (k, y) given outcome F."""
    phi = signal_vector(signal_index(k, y), coeffs)
    norm2 = float(np.real(phi.conj() @ F @ phi))
    if norm2 <= PROB_TOL:
        raise ZeroProbability(f"<phi_{k}{y}|F|phi_{k}{y}> = {norm2:.3g}")
    return psd_sqrt(F) @ phi / np.sqrt(norm2)


@dataclass(frozen=True)
class EveStates:
    """Eve's states conditioned on one announcement."""

    p_gamma: float  # joint probability of the announcement in key mode
    p_k: tuple[float, float]  # p(k | gamma)
    rho_k: tuple[np.ndarray, np.ndarray]  # rho_E^{k,gamma}
    rho: np.ndarray  # rho_E^gamma


def eve_states(F, coeffs: CatBasisCoeffs) -> EveStates:
    """Conditional states for uniform key bits, p(k, y) = 1/4.

    p(k,y,gamma) |Theta><Theta| equals p(k,y) sqrt(F)|phi><phi|sqrt(F), so the
    mixtures are assembled without dividing by the per-pair normalisers (some
    of which vanish exactly, e.g. "+" for opposite phases without noise).
    """
    M = signal_matrix(coeffs)
    R = 0.5 * (psd_sqrt(F) @ M)  # columns: sqrt(1/4) sqrt(F)|phi_i>
    diag = 0.25 * np.real(np.einsum("ji,jk,ki->i", M.conj(), F, M))
    unnorm, weight = [], []
    for cols in _BIT_COLUMNS:
        sub = R[:, cols]
        unnorm.append(sub @ sub.conj().T)
        weight.append(float(diag[cols].sum()))
    p_gamma = weight[0] + weight[1]
    if p_gamma <= 1e-300:
        raise ZeroProbability(f"announcement probability {p_gamma:.3g}")
    rho = (unnorm[0] + unnorm[1]) / p_gamma
    rho_k = tuple(unnorm[k] / weight[k] if weight[k] > 1e-300 else unnorm[k] for k in (0, 1))
    return EveStates(p_gamma, (weight[0] / p_gamma, weight[1] / p_gamma), rho_k, rho)


def _signal_matrices(c0sq, c1sq) -> np.ndarray:
    """Stack of matrices whose columns are the signal vectors."""
    c0sq, c1sq = np.atleast_1d(c0sq), np.atleast_1d(c1sq)
    mag = np.stack([c0sq, c1sq, np.sqrt(c0sq * c1sq), np.sqrt(c0sq * c1sq)], axis=-1)
    return (mag[:, :, None] * _SIGNS.T[None, :, :]).astype(complex)


def _entropies(w: np.ndarray) -> np.ndarray:
    if w.min() < -1e-10 or w.max() > 1 + 1e-10:
        raise ValueError(f"density-operator eigenvalues out of range [{w.min()}, {w.max()}]")
    safe = np.where(w > EIG_FLOOR, w, 1.0)
    return -(np.where(w > EIG_FLOOR, w, 0.0) * np.log2(safe)).sum(axis=-1)


def holevo_batch(F: np.ndarray, c0sq, c1sq) -> tuple[np.ndarray, np.ndarray]:
    """Holevo quantity and announcement probability for a stack of POVM elements.

    Same construction as ``eve_states`` evaluated for ``F[i]`` with cat
    coefficients ``(c0sq[i], c1sq[i])``; returns ``(chi, p_gamma)``.
    """
    M = _signal_matrices(c0sq, c1sq)
    w, U = np.linalg.eigh(F)
    root = (U * np.sqrt(np.clip(w, 0.0, None))[:, None, :]) @ np.conj(np.swapaxes(U, -1, -2))
    R = 0.5 * (root @ M)
    diag = 0.25 * np.real(np.einsum("nji,njk,nki->ni", M.conj(), F, M))
    weight = np.stack([diag[:, cols].sum(axis=1) for cols in _BIT_COLUMNS], axis=1)
    unnorm = np.stack(
        [R[:, :, cols] @ np.conj(np.swapaxes(R[:, :, cols], -1, -2)) for cols in _BIT_COLUMNS], axis=1
    )
    p_gamma = weight.sum(axis=1)
    live = p_gamma > 1e-300
    safe_p = np.where(live, p_gamma, 1.0)
    safe_w = np.where(weight > 1e-300, weight, 1.0)
    rho = unnorm.sum(axis=1) / safe_p[:, None, None]
    rho_k = unnorm / safe_w[:, :, None, None]
    S = _entropies(np.linalg.eigvalsh(rho))
    S_k = _entropies(np.linalg.eigvalsh(rho_k))
    chi = S - (weight / safe_p[:, None] * S_k).sum(axis=1)
    chi = np.where(live, np.clip(chi, 0.0, 2.0), 0.0)
    return chi, p_gamma


def holevo(F, coeffs: CatBasisCoeffs) -> float:
    """chi(K:E) = S(rho_E) - sum_k p(k|gamma) S(rho_E^k) for one POVM element."""
    chi, p = holevo_batch(np.asarray(F, dtype=complex)[None], coeffs.c0**2, coeffs.c1**2)
    if p[0] <= 1e-300:
        raise ZeroProbability(f"announcement probability {p[0]:.3g}")
    return float(chi[0])


def error_rates(model: ChannelModel) -> tuple[float, float]:
    """Bit error rates given "+" and given "-" (equal in the symmetric model)."""
    e = float(error_rate_array(model, model.mu))
    return e, e


def ec_leakage(e: float, f_EC: float) -> float:
    if f_EC < 1:
        raise ValueError(f"f_EC={f_EC} must be >= 1")
    return f_EC * binary_entropy(e)


def rate_per_announcement(delta_EC: float, chi: float) -> float:
    return float(min(max(1.0 - delta_EC - chi, 0.0), 1.0))


@dataclass(frozen=True)
class AnnouncementRate:
    p: float  # probability of the announcement in a key-mode round
    e: float
    delta_EC: float
    chi: float
    r: float


@dataclass(frozen=True)
class RateBreakdown:
    plus: AnnouncementRate
    minus: AnnouncementRate
    p_noclick: float
    p_double: float
    R_infinity: float


def key_mode_distribution(model: ChannelModel, mu=None) -> np.ndarray:
    """Announcement probabilities averaged over the four equiprobable signal pairs.

    Shape ``(4,)``, or ``(4, n)`` when ``mu`` is an array of intensities.
    """
    mu = model.mu if mu is None else np.asarray(mu, dtype=float)
    s = np.sqrt(mu)
    sa, sb = _SIGNAL_SIGN_ARRAYS
    probs = announcement_array(np.multiply.outer(sa, s), np.multiply.outer(sb, s), model)
    return probs.mean(axis=1)


def error_rate_array(model: ChannelModel, mu) -> np.ndarray:
    r = np.sqrt(model.eta) * np.asarray(mu, dtype=float)
    cp = np.sqrt(model.V) * np.cos(model.delta)
    z1 = np.exp(-r * (1 - cp))
    z2 = np.exp(-r * (1 + cp))
    keep = 1 - model.p_d
    return np.clip((z2 - keep * z1 * z2) / (z1 + z2 - 2 * keep * z1 * z2), 0.0, 0.5)


def _rate_arrays(model: ChannelModel, mu: np.ndarray) -> dict:
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    if np.any(mu <= MU_FLOOR):
        raise ValueError(f"intensities must exceed {MU_FLOOR}")
    Fs = model_stack(model, mu)
    c0sq, c1sq = _cat_squares(mu)
    probs = key_mode_distribution(model, mu)
    e = error_rate_array(model, mu)
    h = _binary_entropy_array(e)
    leak = model.f_EC * h
    out = {"p": probs, "e": e, "delta_EC": leak}
    # + and - share one batched Holevo evaluation
    n = mu.size
    chi, _ = holevo_batch(Fs[:2].reshape(2 * n, 4, 4), np.tile(c0sq, 2), np.tile(c1sq, 2))
    for i, label in enumerate(("plus", "minus")):
        out["chi_" + label] = chi[i * n : (i + 1) * n]
        out["r_" + label] = np.clip(1.0 - leak - out["chi_" + label], 0.0, 1.0)
    out["R"] = np.maximum(probs[0] * out["r_plus"] + probs[1] * out["r_minus"], 0.0)
    return out


def _binary_entropy_array(x: np.ndarray) -> np.ndarray:
    inner = (x > 0) & (x < 1)
    xs = np.where(inner, x, 0.5)
    return np.where(inner, -xs * np.log2(xs) - (1 - xs) * np.log2(1 - xs), 0.0)


def rate_curve(model: ChannelModel, mu) -> np.ndarray:
    """R_infinity of ``model`` evaluated at each intensity in ``mu``."""
    return _rate_arrays(model, mu)["R"]


def total_rate(model: ChannelModel) -> RateBreakdown:
    """Secret bits per key-generation round for the full imperfection model."""
    a = _rate_arrays(model, [model.mu])
    parts = [
        AnnouncementRate(
            p=float(a["p"][i, 0]),
            e=float(a["e"][0]),
            delta_EC=float(a["delta_EC"][0]),
            chi=float(a["chi_" + label][0]),
            r=float(a["r_" + label][0]),
        )
        for i, label in enumerate(("plus", "minus"))
    ]
    return RateBreakdown(parts[0], parts[1], float(a["p"][2, 0]), float(a["p"][3, 0]), float(a["R"][0]))


def loss_rate_analytic(eta: float, mu: float) -> float:
    """Closed-form loss-only rate (1 - e^{-2 mu sqrt eta}) [1 - h((1 - overlap)/2)]."""
    if not 0 < eta <= 1:
        raise ValueError(f"eta={eta} outside (0, 1]")
    if mu <= 0:
        raise ValueError(f"mu={mu} must be positive")
    s = np.sqrt(eta)
    overlap = np.exp(-4 * mu * (1 - s)) * np.exp(-2 * mu * s)
    click = -np.expm1(-2 * mu * s)
    return float(click * (1.0 - binary_entropy((1 - overlap) / 2)))


def plob_bound(eta: float) -> float:
    """Repeaterless secret-key capacity -log2(1 - eta)."""
    if not 0 < eta < 1:
        raise ValueError(f"eta={eta} outside (0, 1)")
    return float(-np.log1p(-eta) / np.log(2))


__all__ = [
    "ZeroProbability",
    "binary_entropy",
    "von_neumann_entropy",
    "psd_sqrt",
    "theta_state",
    "eve_states",
    "holevo",
    "error_rates",
    "ec_leakage",
    "rate_per_announcement",
    "AnnouncementRate",
    "RateBreakdown",
    "key_mode_distribution",
    "holevo_batch",
    "rate_curve",
    "total_rate",
    "loss_rate_analytic",
    "plob_bound",
    "cat_coeffs",
]
