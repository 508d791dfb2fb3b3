"""Eve's effective four-outcome POVM on the signal subspace.

Charlie's honest setup (symmetric lossy arms, 50:50 beam splitter, threshold
detectors D+ and D-) is folded into a POVM ``{F+, F-, F?, Fd}`` acting on the
two-mode inputs; only its restriction to the span of the four signal states
matters for the key rate.  Three constructions are provided:

* ``eve_povm_loss``: closed form for an ideal lossy channel.
* ``eve_povm_mismatch`` / ``eve_povm_model``: closed form with mode mismatch,
  phase mismatch and (after mixing) dark counts.
* ``eve_povm_direct``: the same operators obtained by propagating coherent
  states through the optical model and changing basis.  It shares no algebra
  with the closed forms and exists to cross-check them.

Detector efficiency is absorbed into the total transmissivity
``eta = eta_t * eta_d**2``; the formulas below then assume unit-efficiency
detectors.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .coherent import (
    HERMITIAN_TOL,
    CatBasisCoeffs,
    TwoModeAmplitude,
    cat_coeffs,
    coherent_overlap,
    is_hermitian,
    operator_from_signal_elements,
    signal_set,
)

OUTCOMES = ("+", "-", "?", "d")

COMPLETENESS_TOL = 1e-9
POSITIVITY_TOL = 1e-10


@dataclass(frozen=True)
class ChannelModel:
    """One simulation scenario.

    eta_t is the channel transmission between Alice and Bob, eta_d the
    efficiency of each detector, V the mode-overlap visibility, delta the
    relative phase mismatch (radians), p_d the per-gate dark-count
    probability of each detector, f_EC the error-correction inefficiency
    and mu the key-mode intensity.
    """

    eta_t: float
    mu: float
    eta_d: float = 1.0
    V: float = 1.0
    delta: float = 0.0
    p_d: float = 0.0
    f_EC: float = 1.0

    def __post_init__(self):
        for name in ("eta_t", "mu", "eta_d", "V", "delta", "p_d", "f_EC"):
            value = float(getattr(self, name))
            if not np.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, value)
        if not 0.0 < self.eta_t <= 1.0:
            raise ValueError(f"eta_t={self.eta_t} outside (0, 1]")
        if not 0.0 < self.eta_d <= 1.0:
            raise ValueError(f"eta_d={self.eta_d} outside (0, 1]")
        if not 0.0 < self.V <= 1.0:
            raise ValueError(f"V={self.V} outside (0, 1]")
        if not 0.0 <= self.p_d < 1.0:
            raise ValueError(f"p_d={self.p_d} outside [0, 1)")
        if self.f_EC < 1.0:
            raise ValueError(f"f_EC={self.f_EC} must be >= 1")
        if self.mu <= 0.0:
            raise ValueError(f"mu={self.mu} must be positive")

    @property
    def eta(self) -> float:
        """Total single-photon transmissivity including both detectors."""
        return self.eta_t * self.eta_d**2

    @classmethod
    def loss_only(cls, eta: float, mu: float) -> "ChannelModel":
        return cls(eta_t=eta, mu=mu)

    def with_(self, **changes) -> "ChannelModel":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class AnnouncementDistribution:
    p_plus: float
    p_minus: float
    p_noclick: float
    p_double: float

    def as_array(self) -> np.ndarray:
        return np.array([self.p_plus, self.p_minus, self.p_noclick, self.p_double])

    def __getitem__(self, gamma: str) -> float:
        return float(self.as_array()[OUTCOMES.index(gamma)])


@dataclass(frozen=True, eq=False)
class PovmSet:
    """The four POVM elements in the cat basis, plus the model that made them."""

    F_plus: np.ndarray
    F_minus: np.ndarray
    F_noclick: np.ndarray
    F_double: np.ndarray
    model: ChannelModel
    coeffs: CatBasisCoeffs = field(repr=False)

    def __getitem__(self, gamma: str) -> np.ndarray:
        return self.elements()[OUTCOMES.index(gamma)]

    def elements(self) -> tuple[np.ndarray, ...]:
        return (self.F_plus, self.F_minus, self.F_noclick, self.F_double)

    def total(self) -> np.ndarray:
        return sum(self.elements())

    def completeness_error(self) -> float:
        return float(np.max(np.abs(self.total() - np.eye(4))))

    def min_eigenvalue(self) -> float:
        return float(min(np.linalg.eigvalsh(F).min() for F in self.elements()))

    def hermiticity_error(self) -> float:
        return float(max(np.max(np.abs(F - F.conj().T)) for F in self.elements()))

    def check(self) -> None:
        """Raise ValueError unless completeness, positivity and Hermiticity hold."""
        if self.hermiticity_error() > HERMITIAN_TOL:
            raise ValueError(f"POVM not Hermitian: {self.hermiticity_error():.3g}")
        if self.min_eigenvalue() < -POSITIVITY_TOL:
            raise ValueError(f"POVM not positive: min eig {self.min_eigenvalue():.3g}")
        if self.completeness_error() > COMPLETENESS_TOL:
            raise ValueError(f"POVM incomplete: {self.completeness_error():.3g}")

    def sandwich(self, vec) -> AnnouncementDistribution:
        """Diagonal element <v|F^gamma|v> for every outcome."""
        vec = np.asarray(vec, dtype=complex)
        probs = [float(np.real(vec.conj() @ F @ vec)) for F in self.elements()]
        return AnnouncementDistribution(*probs)

    def to_json(self) -> dict:
        def encode(F):
            return [[[float(z.real), float(z.imag)] for z in row] for row in F]

        return {
            "model": self.model.to_dict(),
            "basis": ["e0e0", "e1e1", "e0e1", "e1e0"],
            "elements": {g: encode(F) for g, F in zip(OUTCOMES, self.elements())},
        }

    @classmethod
    def from_json(cls, doc: dict) -> "PovmSet":
        model = ChannelModel(**doc["model"])

        def decode(rows):
            return np.array([[complex(re, im) for re, im in row] for row in rows])

        mats = [decode(doc["elements"][g]) for g in OUTCOMES]
        return cls(*mats, model=model, coeffs=cat_coeffs(model.mu))


# -- announcement probabilities -------------------------------------------------


def _xi_arrays(a, b, model: ChannelModel):
    s = np.sqrt(model.eta)
    bv = np.sqrt(model.V) * b * np.exp(1j * model.delta)
    xi1 = np.exp(-0.5 * s * np.abs(a + bv) ** 2)
    xi2 = np.exp(-0.5 * s * (1.0 - model.V) * np.abs(b) ** 2)
    xi3 = np.exp(-0.5 * s * np.abs(a - bv) ** 2)
    return xi1, xi2, xi3


def xi_factors(x: TwoModeAmplitude, model: ChannelModel) -> tuple[float, float, float]:
    """Vacuum amplitudes at the detectors for input ``x``.

    xi1 and xi3 are the vacuum overlaps of the interfering mode at D+ and D-,
    xi2 that of the mismatched mode (which splits evenly between both).
    """
    return tuple(float(v) for v in _xi_arrays(x.a, x.b, model))


def announcement_array(a, b, model: ChannelModel) -> np.ndarray:
    """Announcement probabilities ``[gamma, ...]`` for array amplitudes ``a``, ``b``."""
    xi1, xi2, xi3 = _xi_arrays(np.asarray(a), np.asarray(b), model)
    pd = model.p_d
    vac_plus = xi1 * xi2  # D+ sees vacuum
    vac_minus = xi2 * xi3  # D- sees vacuum
    both = vac_plus * vac_minus
    plus = (1 - pd) * (1 - vac_plus) * vac_minus + (1 - pd) * pd * both
    minus = (1 - pd) * vac_plus * (1 - vac_minus) + (1 - pd) * pd * both
    noclick = (1 - pd) ** 2 * both
    double = (
        pd * (1 - vac_plus) * vac_minus
        + pd * vac_plus * (1 - vac_minus)
        + pd**2 * both
        + (1 - vac_plus) * (1 - vac_minus)
    )
    return np.stack([plus, minus, noclick, double])


def announcement_probs(x: TwoModeAmplitude, model: ChannelModel) -> AnnouncementDistribution:
    """Probability of each announcement for a two-mode coherent input."""
    return AnnouncementDistribution(*(float(v) for v in announcement_array(x.a, x.b, model)))


# -- closed-form POVMs ----------------------------------------------------------


def _loss_params(eta, mu):
    s = np.sqrt(eta)
    xi = np.exp(-s * mu)
    omega = np.exp(-2.0 * (1.0 - s) * mu)
    return s, xi, omega


def _cat_squares(mu):
    """(c0**2, c1**2) for scalar or array mu, in cancellation-free form."""
    return 0.5 * (1.0 + np.exp(-2.0 * mu)), -0.5 * np.expm1(-2.0 * mu)


def _noclick_stack(xi, omega, c0sq, c1sq) -> np.ndarray:
    out = np.zeros(np.shape(xi) + (4, 4), dtype=complex)
    x2 = xi**2
    out[..., 0, 0] = x2 * (1 + omega) ** 2 / (4 * c0sq**2)
    out[..., 1, 1] = x2 * (1 - omega) ** 2 / (4 * c1sq**2)
    out[..., 2, 2] = x2 * (1 - omega**2) / (4 * c0sq * c1sq)
    out[..., 3, 3] = out[..., 2, 2]
    return out


def _block_stack(d00, d11, off01, d22, off23, off32, sign) -> np.ndarray:
    """Two 2x2 blocks; ``sign`` flips every off-diagonal entry (the F- layout)."""
    out = np.zeros(np.shape(d00) + (4, 4), dtype=complex)
    out[..., 0, 0] = d00
    out[..., 1, 1] = d11
    out[..., 0, 1] = out[..., 1, 0] = sign * off01
    out[..., 2, 2] = out[..., 3, 3] = d22
    out[..., 2, 3] = sign * off23
    out[..., 3, 2] = sign * off32
    return out


def _hermitize(F):
    return 0.5 * (F + np.conj(np.swapaxes(F, -1, -2)))


def _make_povm(mats, model, cc) -> PovmSet:
    return PovmSet(*[_hermitize(F) for F in mats], model=model, coeffs=cc)


def eve_povm_loss(eta: float, mu: float) -> PovmSet:
    """Closed-form POVM for the loss-only channel (ideal detectors)."""
    model = ChannelModel.loss_only(eta, mu)
    cc = cat_coeffs(mu)
    _, xi, omega = _loss_params(model.eta, mu)
    c0sq, c1sq = cc.c0**2, cc.c1**2
    lo = 1 - xi**2 * omega**2
    hi = 1 + xi**2 * omega**2
    # 1 - xi^2 without cancellation at small eta
    pref = -np.expm1(-2.0 * np.sqrt(eta) * mu)
    k00, k11, k01 = 8 * c0sq**2, 8 * c1sq**2, 8 * c0sq * c1sq
    args = (pref * lo / k00, pref * lo / k11, pref * lo / k01, pref * hi / k01, pref * hi / k01, pref * hi / k01)
    F_q = _noclick_stack(xi, omega, c0sq, c1sq)
    mats = [_block_stack(*args, sign=+1), _block_stack(*args, sign=-1), F_q, np.zeros((4, 4), complex)]
    return _make_povm(mats, model, cc)


def mismatch_scalars(model: ChannelModel, mu=None) -> dict:
    """The scalar combinations a, b, c, d, o, p, q, m, n of the mismatch POVM.

    Powers ``xi**k`` are evaluated as ``exp(-sqrt(eta)*mu*k)`` and the
    ``1 - xi**k`` factors through expm1, so precision does not degrade as
    eta -> 0.  ``mu`` may be an array overriding ``model.mu``.
    """
    mu = model.mu if mu is None else np.asarray(mu, dtype=float)
    s, xi, omega = _loss_params(model.eta, mu)
    r = s * mu
    cp = np.sqrt(model.V) * np.cos(model.delta)
    sp = np.sqrt(model.V) * np.sin(model.delta)
    x_plus = np.exp(-r * (1 + cp))  # xi^(1 + sqrt(V) cos delta)
    x_minus = np.exp(-r * (1 - cp))
    one_minus_plus = -np.expm1(-r * (1 + cp))  # 1 - x_plus
    one_minus_minus = -np.expm1(-r * (1 - cp))
    # xi^(1 -+ i sqrt(V) sin delta) - xi
    c_core = xi * np.expm1(-1j * r * sp)
    d_core = xi * np.expm1(1j * r * sp)
    if np.max(np.abs(c_core - np.conj(d_core))) > 1e-14:
        raise ArithmeticError("phase-mismatch terms lost conjugate symmetry")
    w2 = omega**2
    return dict(
        a=one_minus_plus * x_minus,
        b=-x_plus * one_minus_plus * x_minus * w2,
        c=c_core * xi * omega,
        d=d_core * xi * omega,
        o=one_minus_minus * x_plus,
        p=-x_minus * one_minus_minus * x_plus * w2,
        q=c_core * d_core * omega,
        m=one_minus_plus * one_minus_minus,
        n=x_plus * one_minus_plus * x_minus * one_minus_minus * w2,
        xi=xi,
        omega=omega,
    )


def mismatch_stack(model: ChannelModel, mu=None) -> np.ndarray:
    """Mismatch POVM as an array ``[gamma, ..., 4, 4]`` (gamma in + - ? d order)."""
    mu = model.mu if mu is None else np.asarray(mu, dtype=float)
    k = mismatch_scalars(model, mu)
    a, b, c, d, o, p, q, m, n = (k[key] for key in "abcdopqmn")
    c0sq, c1sq = _cat_squares(mu)
    k00, k11, k01 = 8 * c0sq**2, 8 * c1sq**2, 8 * c0sq * c1sq
    args = (
        (a + b + 2 * c + 2 * d + o + p) / k00,
        (a + b - 2 * c - 2 * d + o + p) / k11,
        (a + b - o - p) / k01,
        (a - b + o - p) / k01,
        (a - b + 2 * c - 2 * d - o + p) / k01,
        (a - b - 2 * c + 2 * d - o + p) / k01,
    )
    F_d = np.zeros(np.shape(mu) + (4, 4), dtype=complex)
    F_d[..., 0, 0] = (m + n + 2 * q) / (4 * c0sq**2)
    F_d[..., 1, 1] = (m + n - 2 * q) / (4 * c1sq**2)
    F_d[..., 2, 2] = F_d[..., 3, 3] = (m - n) / (4 * c0sq * c1sq)
    F_q = _noclick_stack(k["xi"], k["omega"], c0sq, c1sq)
    return _hermitize(np.stack([_block_stack(*args, sign=+1), _block_stack(*args, sign=-1), F_q, F_d]))


def mix_dark_stack(Fs: np.ndarray, p_d: float) -> np.ndarray:
    """Fold independent per-detector dark counts into ``[gamma, ...]`` POVM stacks."""
    Fp, Fm, Fq, Fd = Fs
    return np.stack(
        [
            (1 - p_d) * Fp + (1 - p_d) * p_d * Fq,
            (1 - p_d) * Fm + (1 - p_d) * p_d * Fq,
            (1 - p_d) ** 2 * Fq,
            p_d * Fp + p_d * Fm + p_d**2 * Fq + Fd,
        ]
    )


def eve_povm_mismatch(model: ChannelModel) -> PovmSet:
    """Closed-form POVM with mode and phase mismatch; ``model.p_d`` is ignored."""
    return PovmSet(*mismatch_stack(model), model=model, coeffs=cat_coeffs(model.mu))


def mix_dark_counts(povm: PovmSet, p_d: float) -> PovmSet:
    """Fold independent per-detector dark counts into a dark-count-free POVM."""
    mats = mix_dark_stack(np.stack(povm.elements()), p_d)
    return PovmSet(*mats, model=povm.model.with_(p_d=p_d), coeffs=povm.coeffs)


def model_stack(model: ChannelModel, mu=None) -> np.ndarray:
    """Full-model POVM stack ``[gamma, ..., 4, 4]``, optionally over an array of mu."""
    return mix_dark_stack(mismatch_stack(model, mu), model.p_d)


def eve_povm_model(model: ChannelModel) -> PovmSet:
    """Full imperfection model: mismatch POVM mixed with dark counts."""
    cat_coeffs(model.mu)  # validates mu
    return PovmSet(*model_stack(model), model=model, coeffs=cat_coeffs(model.mu))


# -- direct construction from the optical model -----------------------------------


def _detector_modes(x: TwoModeAmplitude, model: ChannelModel) -> np.ndarray:
    """Amplitudes arriving at (D+ mode 1, D+ mode 2, D- mode 1, D- mode 2)."""
    t = model.eta**0.25
    ph = np.exp(1j * model.delta)
    matched = np.sqrt(model.V) * x.b * ph
    stray = np.sqrt(1.0 - model.V) * x.b * ph
    r2 = np.sqrt(2.0)
    return np.array(
        [t * (x.a + matched) / r2, t * stray / r2, t * (x.a - matched) / r2, -t * stray / r2]
    )


def povm_matrix_elements(x: TwoModeAmplitude, y: TwoModeAmplitude, model: ChannelModel) -> dict:
    """``<x|F^gamma|y>`` for all outcomes, from state propagation.

    Inputs pass the symmetric lossy arms (Eve keeps the reflected part),
    acquire the mode and phase mismatch, interfere on the beam splitter and
    hit threshold detectors whose projectors are built from vacuum overlaps.
    Dark counts are mixed in afterwards.
    """
    ox, oy = _detector_modes(x, model), _detector_modes(y, model)
    full = [coherent_overlap(u, v) for u, v in zip(ox, oy)]
    vac = [np.exp(-0.5 * (abs(u) ** 2 + abs(v) ** 2)) for u, v in zip(ox, oy)]
    ov_plus, ov_minus = full[0] * full[1], full[2] * full[3]
    vac_plus, vac_minus = vac[0] * vac[1], vac[2] * vac[3]
    e = np.sqrt(1.0 - np.sqrt(model.eta))
    eve = coherent_overlap(e * x.a, e * y.a) * coherent_overlap(e * x.b, e * y.b)

    ideal_plus = (ov_plus - vac_plus) * vac_minus * eve
    ideal_minus = vac_plus * (ov_minus - vac_minus) * eve
    ideal_q = vac_plus * vac_minus * eve
    ideal_d = (ov_plus - vac_plus) * (ov_minus - vac_minus) * eve
    pd = model.p_d
    return {
        "+": (1 - pd) * ideal_plus + (1 - pd) * pd * ideal_q,
        "-": (1 - pd) * ideal_minus + (1 - pd) * pd * ideal_q,
        "?": (1 - pd) ** 2 * ideal_q,
        "d": pd * ideal_plus + pd * ideal_minus + pd**2 * ideal_q + ideal_d,
    }


def signal_elements(model: ChannelModel) -> dict:
    """Matrices ``E[gamma][j, i] = <alpha_j|F^gamma|alpha_i>`` over the signal set."""
    states = signal_set(model.mu)
    out = {g: np.zeros((4, 4), dtype=complex) for g in OUTCOMES}
    for j, x in enumerate(states):
        for i, y in enumerate(states):
            for g, value in povm_matrix_elements(x, y, model).items():
                out[g][j, i] = value
    return out


def eve_povm_direct(model: ChannelModel) -> PovmSet:
    """Full-model POVM via signal-state matrix elements and change of basis."""
    cc = cat_coeffs(model.mu)
    elems = signal_elements(model)
    mats = [operator_from_signal_elements(elems[g], cc) for g in OUTCOMES]
    return PovmSet(*mats, model=model, coeffs=cc)


__all__ = [
    "OUTCOMES",
    "ChannelModel",
    "AnnouncementDistribution",
    "PovmSet",
    "xi_factors",
    "announcement_probs",
    "announcement_array",
    "eve_povm_loss",
    "eve_povm_mismatch",
    "eve_povm_model",
    "eve_povm_direct",
    "mix_dark_counts",
    "mismatch_stack",
    "model_stack",
    "mismatch_scalars",
    "povm_matrix_elements",
    "signal_elements",
    "is_hermitian",
]
