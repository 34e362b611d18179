"""Phenomenological (Green-function) scheme in reciprocal space.

The vector potential obeys ``(k^2 (I - k^ k^) - omega^2 eps) A = source``;
its inverse splits into a transverse part ``(I - k^ k^)/(k^2 - omega^2 eps)``
and a longitudinal part ``-k^ k^/(omega^2 eps)``.  Mode-amplitude kernels
are returned without the common field prefactor ``FIELD_NORM``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import medium
from .errors import PoleError, SingularPermittivityError
from .medium import EPS0, HBAR, CouplingSpectrum, MediumModel

POLE_TOL = 1e-12
FIELD_NORM = float(np.sqrt(HBAR / (8 * np.pi ** 4 * EPS0)))
POLARIZATIONS = ("transverse", "longitudinal")


@dataclass(frozen=True)
class AmplitudeKernel:
    omega: float
    k: float
    polarization: str
    value: complex

    def __post_init__(self):
        if self.polarization not in POLARIZATIONS:
            raise ValueError(f"polarization must be one of {POLARIZATIONS}")

    def row(self) -> tuple:
        return (self.omega, self.k, self.polarization, self.value.real, self.value.imag)


def _check_eps(omega: float, eps: complex) -> None:
    if omega <= 0:
        raise ValueError("omega must be positive")
    if abs(eps) < POLE_TOL:
        raise SingularPermittivityError(f"eps = {eps:.3g} is (numerically) zero at omega = {omega:.6g}")


def _transverse_denominator(k2: float, omega: float, eps: complex) -> complex:
    den = k2 - omega ** 2 * eps
    if abs(den) < POLE_TOL:
        raise PoleError(f"|k^2 - omega^2 eps| = {abs(den):.3g} at omega = {omega:.6g}, k = {np.sqrt(k2):.6g}")
    return den


def green_tensor_parts(k_vec, omega: float, eps: complex, direction=None) -> tuple[np.ndarray, np.ndarray]:
    """Transverse and longitudinal pieces of the reciprocal-space Green tensor.

    ``direction`` supplies k^ when ``k_vec`` is the zero vector.
    """
    k_vec = np.asarray(k_vec, dtype=float)
    _check_eps(omega, eps)
    k2 = float(k_vec @ k_vec)
    if k2 > 0:
        khat = k_vec / np.sqrt(k2)
    elif direction is not None:
        khat = np.asarray(direction, dtype=float)
        khat = khat / np.linalg.norm(khat)
    else:
        raise ValueError("k = 0 needs an explicit direction for the transverse/longitudinal split")
    kk = np.outer(khat, khat)
    trans = (np.eye(3) - kk) / _transverse_denominator(k2, omega, eps)
    longi = -kk / (omega ** 2 * eps)
    return trans, longi


def green_tensor(k_vec, omega: float, eps: complex) -> np.ndarray:
    """Inverse of the reciprocal-space operator ``-k x (k x .) - omega^2 eps``."""
    k_vec = np.asarray(k_vec, dtype=float)
    if not np.any(k_vec):
        _check_eps(omega, eps)
        _transverse_denominator(0.0, omega, eps)
        return -np.eye(3, dtype=complex) / (omega ** 2 * eps)
    trans, longi = green_tensor_parts(k_vec, omega, eps)
    return trans + longi


def maxwell_operator(k_vec, omega: float, eps: complex) -> np.ndarray:
    """Matrix of ``A -> -k x (k x A) - omega^2 eps A``, built column by column."""
    k_vec = np.asarray(k_vec, dtype=float)
    cols = [-np.cross(k_vec, np.cross(k_vec, e)) - omega ** 2 * eps * e for e in np.eye(3)]
    return np.array(cols, dtype=complex).T


def green_tensor_single_bracket(k_vec, omega: float, eps: complex) -> np.ndarray:
    """One-bracket form ``[I - kk/(omega^2 eps)] / (k^2 - omega^2 eps)``; equal to green_tensor."""
    k_vec = np.asarray(k_vec, dtype=float)
    _check_eps(omega, eps)
    k2 = float(k_vec @ k_vec)
    den = _transverse_denominator(k2, omega, eps)
    return (np.eye(3) - np.outer(k_vec, k_vec) / (omega ** 2 * eps)) / den


def green_tensor_printed(k_vec, omega: float, eps: complex) -> np.ndarray:
    """The commonly printed bracket ``[I - (eps/omega^2) kk] / (k^2 - omega^2 eps)``.

    Kept only to quantify how far it is from the true inverse; see
    :func:`printed_bracket_discrepancy`.
    """
    k_vec = np.asarray(k_vec, dtype=float)
    _check_eps(omega, eps)
    k2 = float(k_vec @ k_vec)
    den = _transverse_denominator(k2, omega, eps)
    return (np.eye(3) - eps / omega ** 2 * np.outer(k_vec, k_vec)) / den


def printed_bracket_discrepancy(k_vec, omega: float, eps: complex) -> float:
    """Relative Frobenius distance between the printed bracket and the exact tensor."""
    exact = green_tensor(k_vec, omega, eps)
    return float(np.linalg.norm(green_tensor_printed(k_vec, omega, eps) - exact) / np.linalg.norm(exact))


def transverse_kernel(k: float, omega: float, model: MediumModel) -> complex:
    """``omega sqrt(Im chi) / (k^2 - omega^2 eps)`` (FIELD_NORM factored out)."""
    eps = complex(medium.epsilon(model, omega))
    _check_eps(omega, eps)
    den = _transverse_denominator(k * k, omega, eps)
    return complex(omega * np.sqrt(eps.imag) / den)


def longitudinal_kernel(omega: float, model: MediumModel) -> tuple[complex, complex]:
    """Longitudinal (vector-potential, electric-field) kernels.

    A-form ``sqrt(Im chi)/(omega eps)``, E-form ``i sqrt(Im chi)/eps``; the
    E-form is ``i omega`` times the A-form.  Independent of k.
    """
    eps = complex(medium.epsilon(model, omega))
    if omega <= 0:
        raise ValueError("omega must be positive")
    if abs(eps) < POLE_TOL:
        raise PoleError(f"longitudinal resonance: |eps| = {abs(eps):.3g} at omega = {omega:.6g}")
    root = np.sqrt(eps.imag)
    return complex(root / (omega * eps)), complex(1j * root / eps)


def noise_commutator_norm(model: MediumModel, omega) -> np.ndarray:
    """``2 eps0 hbar Im chi(omega)``, the noise-polarization commutator weight."""
    return 2 * EPS0 * HBAR * medium.im_chi(model, omega)


def noise_commutator_from_coupling(spectrum: CouplingSpectrum, omega) -> np.ndarray:
    """Same weight routed through the coupling function: ``2 eps0 hbar (pi/(hbar eps0)) |F|^2``."""
    return 2 * EPS0 * HBAR * medium.im_chi_from_coupling(spectrum, omega)


def kernel_grid(model: MediumModel, omegas, ks) -> list[AmplitudeKernel]:
    """Transverse kernels on the (omega, k) product grid plus one longitudinal entry per omega (k = 0)."""
    out = []
    for w in omegas:
        w = float(w)
        for k in ks:
            out.append(AmplitudeKernel(w, float(k), "transverse", transverse_kernel(float(k), w, model)))
        out.append(AmplitudeKernel(w, 0.0, "longitudinal", longitudinal_kernel(w, model)[0]))
    return out
