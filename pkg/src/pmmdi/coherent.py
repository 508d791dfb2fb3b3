"""Coherent-state arithmetic on the four-state signal subspace.

The key-generation states are the two-mode coherent states
``|+-sqrt(mu), +-sqrt(mu)>``.  Each single-mode pair ``{|+sqrt(mu)>, |-sqrt(mu)>}``
is written in an even/odd cat basis ``{|e0>, |e1>}``; the two-mode span is then
represented in the ordered product basis ``(e0e0, e1e1, e0e1, e1e0)``.  Every
operator in this package is a 4x4 matrix in that basis.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: Smallest accepted key-mode intensity; below it the 1/c1**2 entries of the
#: change-of-basis matrix make the representation ill conditioned.
MU_FLOOR = 1e-6

HERMITIAN_TOL = 1e-10


@dataclass(frozen=True)
class TwoModeAmplitude:
    """Amplitudes ``(a, b)`` of a two-mode coherent state ``|a>_A |b>_B``."""

    a: complex
    b: complex

    def __post_init__(self):
        object.__setattr__(self, "a", complex(self.a))
        object.__setattr__(self, "b", complex(self.b))
        if not (np.isfinite(self.a) and np.isfinite(self.b)):
            raise ValueError(f"non-finite amplitude {self!r}")


@dataclass(frozen=True)
class CatBasisCoeffs:
    """Real coefficients with ``|+-sqrt(mu)> = c0|e0> +- c1|e1>``."""

    c0: float
    c1: float
    mu: float


def coherent_overlap(alpha, beta):
    """Single-mode overlap ``<alpha|beta>``.

    Evaluated as one complex exponential so the phase of ``conj(alpha)*beta``
    never passes through a branch cut. The real part of the exponent is
    written as -|alpha - beta|^2 / 2, which cannot round above zero.
    """
    alpha = complex(alpha)
    beta = complex(beta)
    return np.exp(complex(-0.5 * abs(alpha - beta) ** 2, (alpha.conjugate() * beta).imag))


def two_mode_overlap(x: TwoModeAmplitude, y: TwoModeAmplitude) -> complex:
    return coherent_overlap(x.a, y.a) * coherent_overlap(x.b, y.b)


def signal_set(mu: float) -> tuple[TwoModeAmplitude, ...]:
    """The four key-mode states in the fixed order ``++, --, +-, -+``."""
    s = np.sqrt(mu)
    return (
        TwoModeAmplitude(s, s),
        TwoModeAmplitude(-s, -s),
        TwoModeAmplitude(s, -s),
        TwoModeAmplitude(-s, s),
    )


#: Key-mode bit pair (k_A, k_B) for each signal index; bit 1 means phase pi.
SIGNAL_BITS = ((0, 0), (1, 1), (0, 1), (1, 0))


def signal_index(k: int, y: int) -> int:
    return SIGNAL_BITS.index((k, y))


def cat_coeffs(mu: float) -> CatBasisCoeffs:
    """Canonical cat-basis coefficients ``c0 = e^{-mu/2} sqrt(cosh mu)``,
    ``c1 = e^{-mu/2} sqrt(sinh mu)``.

    Raises ValueError for ``mu <= MU_FLOOR``: the basis degenerates as c1 -> 0.
    """
    mu = float(mu)
    if not np.isfinite(mu) or mu <= MU_FLOOR:
        raise ValueError(f"intensity mu={mu} must exceed {MU_FLOOR}")
    # e^{-mu} cosh(mu) = (1 + e^{-2mu})/2 and e^{-mu} sinh(mu) = -expm1(-2mu)/2
    # avoid overflow for large mu and cancellation for small mu.
    c0 = np.sqrt(0.5 * (1.0 + np.exp(-2.0 * mu)))
    c1 = np.sqrt(-0.5 * np.expm1(-2.0 * mu))
    return CatBasisCoeffs(float(c0), float(c1), mu)


_SIGNS = np.array(
    [
        [1, 1, 1, 1],
        [1, 1, -1, -1],
        [1, -1, -1, 1],
        [1, -1, 1, -1],
    ],
    dtype=float,
)


def signal_vector(index: int, coeffs: CatBasisCoeffs) -> np.ndarray:
    """Coordinates of signal state ``index`` in the basis (e0e0, e1e1, e0e1, e1e0)."""
    if index not in range(4):
        raise IndexError(f"signal index {index} not in 0..3")
    c0, c1 = coeffs.c0, coeffs.c1
    magnitudes = np.array([c0 * c0, c1 * c1, c0 * c1, c0 * c1])
    return (_SIGNS[index] * magnitudes).astype(complex)


def signal_matrix(coeffs: CatBasisCoeffs) -> np.ndarray:
    """Matrix M whose columns are the four signal vectors."""
    return np.column_stack([signal_vector(i, coeffs) for i in range(4)])


def change_of_basis(coeffs: CatBasisCoeffs) -> np.ndarray:
    """Matrix A with ``|e_m> = sum_n A[n, m] |alpha_n>``, i.e. ``M @ A = I``."""
    c0, c1 = coeffs.c0, coeffs.c1
    scale = np.array([1 / (4 * c0 * c0), 1 / (4 * c1 * c1), 1 / (4 * c0 * c1), 1 / (4 * c0 * c1)])
    return (_SIGNS * scale).astype(complex)


def is_hermitian(op, tol=HERMITIAN_TOL) -> bool:
    op = np.asarray(op)
    return bool(np.max(np.abs(op - op.conj().T), initial=0.0) <= tol)


def operator_from_signal_elements(elements, coeffs: CatBasisCoeffs) -> np.ndarray:
    """Represent an operator in the cat basis from its signal-state matrix elements.

    ``elements[j, i]`` must hold ``<alpha_j|F|alpha_i>``; the result is
    ``A^dagger @ elements @ A``.
    """
    elements = np.asarray(elements, dtype=complex)
    if elements.shape != (4, 4):
        raise ValueError(f"expected a 4x4 matrix, got shape {elements.shape}")
    if not is_hermitian(elements):
        raise ValueError("signal-state matrix elements are not Hermitian")
    A = change_of_basis(coeffs)
    op = A.conj().T @ elements @ A
    return 0.5 * (op + op.conj().T)


def gram_matrix(mu: float) -> np.ndarray:
    """``G[j, i] = <alpha_j|alpha_i>`` over the signal set."""
    states = signal_set(mu)
    return np.array([[two_mode_overlap(x, y) for y in states] for x in states])
