"""Damped-polarization matter Hamiltonian and its Bogoliubov (Fano) diagonalization.

The polarization oscillator ``b`` (frequency omega_tilde) couples to a
discretized reservoir ``b_j`` through ``(V_j sqrt(w_j) / 2)(b + b^+)(b_j + b_j^+)``.
A quadratic form is stored as

    H = sum_ij A_ij b_i^+ b_j + 1/2 sum_ij (B_ij b_i^+ b_j^+ + h.c.)

and diagonalized into eigenmodes ``C_m = sum_i alpha_mi b_i + beta_mi b_i^+``
with ``H = sum_m Omega_m C_m^+ C_m + const``.  Index 0 is always the
polarization mode, so ``alpha[:, 0]`` and ``beta[:, 0]`` are the polarization-mode
alpha_0 and beta_0 sampled at the eigenfrequencies.

Continuum dictionary: discrete coefficients relate to continuum densities
through ``alpha_0(Omega_m) ~ alpha[m, 0] / sqrt(w)``, with ``w`` the
quadrature weight of the reservoir node nearest ``Omega_m``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import medium
from .errors import RangeError, StabilityError
from .medium import EPS0, HBAR, MediumModel

ALPHA0_FLOOR = 1e-8
RATIO_FLOOR = 1e-6
IMAG_TOL = 1e-10


@dataclass(frozen=True)
class ReservoirDiscretization:
    """Reservoir mode frequencies and quadrature weights, ``int d omega ~ sum_j w_j``."""

    omega: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if omega.ndim != 1 or omega.shape != weights.shape:
            raise ValueError("omega and weights must be 1-D arrays of equal length")
        if len(omega) < 2:
            raise ValueError("need at least two reservoir oscillators")
        if not np.all(omega > 0) or not np.all(np.diff(omega) > 0):
            raise ValueError("reservoir frequencies must be positive and strictly increasing")
        if not np.all(weights > 0):
            raise ValueError("quadrature weights must be positive")
        object.__setattr__(self, "omega", medium._frozen(omega))
        object.__setattr__(self, "weights", medium._frozen(weights))

    @classmethod
    def gauss_legendre(cls, n: int, omega_min: float = 1e-2, omega_max: float = 20.0) -> "ReservoirDiscretization":
        x, w = np.polynomial.legendre.leggauss(n)
        half = 0.5 * (omega_max - omega_min)
        return cls(omega_min + half * (x + 1.0), half * w)

    @property
    def n(self) -> int:
        return len(self.omega)

    def nearest_weight(self, omega) -> np.ndarray:
        idx = np.clip(np.searchsorted(self.omega, omega), 1, self.n - 1)
        left = self.omega[idx - 1]
        right = self.omega[idx]
        idx = np.where(np.abs(omega - left) <= np.abs(right - omega), idx - 1, idx)
        return self.weights[idx]


@dataclass(frozen=True)
class QuadraticForm:
    """Hermitian ``A`` and symmetric ``B`` blocks of a bosonic quadratic Hamiltonian."""

    A: np.ndarray
    B: np.ndarray
    disc: ReservoirDiscretization | None = None
    omega_tilde: float | None = None

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A))
        B = np.atleast_2d(np.asarray(self.B))
        if A.shape != B.shape or A.shape[0] != A.shape[1]:
            raise ValueError("A and B must be square matrices of equal shape")
        scale = max(np.abs(A).max(), np.abs(B).max(), 1.0)
        if np.abs(A - A.conj().T).max() > 1e-12 * scale:
            raise ValueError("A must be Hermitian")
        if np.abs(B - B.T).max() > 1e-12 * scale:
            raise ValueError("B must be symmetric")
        object.__setattr__(self, "A", medium._frozen(A, A.dtype))
        object.__setattr__(self, "B", medium._frozen(B, B.dtype))

    @property
    def dimension(self) -> int:
        return self.A.shape[0]

    @property
    def is_real(self) -> bool:
        return not (np.iscomplexobj(self.A) and np.any(self.A.imag)) and not (
            np.iscomplexobj(self.B) and np.any(self.B.imag))

    def dynamical_matrix(self) -> np.ndarray:
        A, B = self.A, self.B
        return np.block([[A, B], [-B.conj(), -A.conj()]])


@dataclass(frozen=True)
class BogoliubovCoefficients:
    """Eigenfrequencies and Bogoliubov rows ``C_m = alpha[m] . b + beta[m] . b^+``."""

    frequencies: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    mode_weights: np.ndarray
    omega_tilde: float | None = None

    @property
    def alpha0(self) -> np.ndarray:
        return self.alpha[:, 0]

    @property
    def beta0(self) -> np.ndarray:
        return self.beta[:, 0]

    def normalization(self) -> np.ndarray:
        """Per eigenmode ``sum_i |alpha_mi|^2 - |beta_mi|^2`` (should be 1)."""
        return np.sum(np.abs(self.alpha) ** 2 - np.abs(self.beta) ** 2, axis=1)

    def column_normalization(self) -> np.ndarray:
        """Per original mode ``sum_m |alpha_mi|^2 - |beta_mi|^2``: conservation of [b_i, b_i^+]."""
        return np.sum(np.abs(self.alpha) ** 2 - np.abs(self.beta) ** 2, axis=0)

    def continuum_alpha0(self) -> np.ndarray:
        return self.alpha0 / np.sqrt(self.mode_weights)

    def continuum_beta0(self) -> np.ndarray:
        return self.beta0 / np.sqrt(self.mode_weights)

    def nearest_mode(self, omega: float) -> int:
        return int(np.argmin(np.abs(self.frequencies - omega)))

    def to_rows(self) -> list[tuple[float, float, float, float, float]]:
        """CSV rows ``omega, alpha0_re, alpha0_im, beta0_re, beta0_im`` (continuum-rescaled)."""
        a0, b0 = self.continuum_alpha0(), self.continuum_beta0()
        return [(float(w), float(a.real), float(a.imag), float(b.real), float(b.imag))
                for w, a, b in zip(self.frequencies, a0, b0)]


def build_matter_hamiltonian(model: MediumModel, disc: ReservoirDiscretization) -> QuadraticForm:
    """Discretized polarization + reservoir quadratic form at fixed k."""
    if model.kind != "hopfield-microscopic":
        raise ValueError("build_matter_hamiltonian needs a hopfield-microscopic model")
    v = model.reservoir_v(disc.omega)
    w_tilde = np.sqrt(model.omega_0 ** 2 + np.sum(disc.weights * v ** 2) / model.rho ** 2)
    V = (v / model.rho) * np.sqrt(disc.omega / w_tilde)
    c = V * np.sqrt(disc.weights)
    M = disc.n + 1
    A = np.zeros((M, M))
    B = np.zeros((M, M))
    A[0, 0] = w_tilde
    A[np.arange(1, M), np.arange(1, M)] = disc.omega
    A[0, 1:] = A[1:, 0] = c / 2
    B[0, 1:] = B[1:, 0] = c / 2
    # Schur complement of A + B (arrowhead) decides stability
    schur = w_tilde - np.sum(c ** 2 / disc.omega)
    if schur <= 0:
        raise StabilityError(f"matter Hamiltonian unstable (Schur complement {schur:.3g} <= 0)")
    return QuadraticForm(A, B, disc=disc, omega_tilde=float(w_tilde))


def _fix_phase(alpha: np.ndarray, beta: np.ndarray) -> None:
    """Make alpha[m, 0] real positive (or the first nonzero alpha entry when alpha[m, 0] = 0)."""
    for m in range(alpha.shape[0]):
        ref = alpha[m, 0]
        if abs(ref) <= 1e-300:
            nz = np.nonzero(np.abs(alpha[m]) > 1e-300)[0]
            if not len(nz):
                continue
            ref = alpha[m, nz[0]]
        phase = np.conj(ref) / abs(ref)
        alpha[m] *= phase
        beta[m] *= phase


def _diagonalize_reduced(form: QuadraticForm):
    A = np.real(form.A)
    B = np.real(form.B)
    D = A - B
    K = A + B
    if np.count_nonzero(D - np.diag(np.diag(D))) == 0:
        dvals = np.diag(D)
        if np.any(dvals <= 0):
            raise StabilityError("A - B is not positive definite")
        sq = np.sqrt(dvals)
        S = sq[:, None] * K * sq[None, :]
        Dh = lambda x: sq[:, None] * x
        Dmh = lambda x: x / sq[:, None]
    else:
        lam, Q = np.linalg.eigh(D)
        if np.any(lam <= 0):
            raise StabilityError("A - B is not positive definite")
        Dhalf = (Q * np.sqrt(lam)) @ Q.T
        Dmhalf = (Q / np.sqrt(lam)) @ Q.T
        S = Dhalf @ K @ Dhalf
        Dh = lambda x: Dhalf @ x
        Dmh = lambda x: Dmhalf @ x
    om2, phi = np.linalg.eigh(S)
    if om2[0] <= 0:
        raise StabilityError(f"non-positive symplectic eigenvalue Omega^2 = {om2[0]:.3g}")
    om = np.sqrt(om2)
    phi = phi / np.sqrt(om)[None, :]
    s = Dh(phi)
    d = Dmh(phi) * om[None, :]
    u = 0.5 * (s + d)
    v = 0.5 * (s - d)
    # columns are modes; C_m = sum_i u_i^* b_i - v_i^* b_i^+
    return om, u.T.astype(complex), (-v.T).astype(complex)


def _diagonalize_dynamical(form: QuadraticForm):
    M = form.dimension
    lam, vec = np.linalg.eig(form.dynamical_matrix())
    scale = max(1.0, np.abs(lam).max())
    if np.any(np.abs(lam.imag) > IMAG_TOL * scale):
        worst = lam[np.argmax(np.abs(lam.imag))]
        raise StabilityError(f"complex symplectic eigenvalue {worst:.6g}")
    lam = lam.real
    u, v = vec[:M], vec[M:]
    norm = np.sum(np.abs(u) ** 2, axis=0) - np.sum(np.abs(v) ** 2, axis=0)
    pos = np.nonzero(norm > 0)[0]
    if len(pos) != M:
        raise StabilityError("symplectic spectrum does not split into M positive-norm modes")
    pos = pos[np.argsort(lam[pos])]
    om = lam[pos]
    if om[0] <= 0:
        raise StabilityError(f"positive-norm mode with non-positive frequency {om[0]:.6g}")
    u, v = u[:, pos], v[:, pos]
    # symplectic Gram-Schmidt inside near-degenerate clusters
    start = 0
    while start < M:
        stop = start + 1
        while stop < M and om[stop] - om[stop - 1] <= 1e-9 * scale:
            stop += 1
        for j in range(start, stop):
            for i in range(start, j):
                overlap = u[:, i].conj() @ u[:, j] - v[:, i].conj() @ v[:, j]
                u[:, j] -= overlap * u[:, i]
                v[:, j] -= overlap * v[:, i]
            nrm = np.sqrt(np.sum(np.abs(u[:, j]) ** 2) - np.sum(np.abs(v[:, j]) ** 2))
            u[:, j] /= nrm
            v[:, j] /= nrm
        start = stop
    return om, u.conj().T, -v.conj().T


def bogoliubov_diagonalize(form: QuadraticForm, method: str = "auto") -> BogoliubovCoefficients:
    """Symplectic diagonalization of ``form``.

    ``method="dynamical"`` eigen-decomposes the dynamical matrix
    ``[[A, B], [-B*, -A*]]``; ``method="reduced"`` uses the equivalent real
    symmetric problem ``(A-B)^{1/2} (A+B) (A-B)^{1/2}`` (real forms only,
    much faster for large reservoirs).  ``"auto"`` picks ``reduced`` when
    the form is real.
    """
    if method == "auto":
        method = "reduced" if form.is_real else "dynamical"
    if method == "reduced":
        if not form.is_real:
            raise ValueError("reduced method needs real A and B")
        om, alpha, beta = _diagonalize_reduced(form)
    elif method == "dynamical":
        om, alpha, beta = _diagonalize_dynamical(form)
    else:
        raise ValueError(f"unknown method {method!r}")
    _fix_phase(alpha, beta)
    weights = form.disc.nearest_weight(om) if form.disc is not None else np.ones_like(om)
    coeffs = BogoliubovCoefficients(om, alpha, beta, weights, form.omega_tilde)
    bad = np.abs(coeffs.normalization() - 1.0)
    if bad.max() > 1e-8:
        m = int(np.argmax(bad))
        raise StabilityError(f"symplectic normalization failed: mode {m} (Omega={om[m]:.6g}) off by {bad[m]:.3g}")
    return coeffs


def reconstruct(coeffs: BogoliubovCoefficients) -> tuple[np.ndarray, np.ndarray]:
    """Rebuild (A, B) from ``sum_m Omega_m C_m^+ C_m``."""
    X, Y, om = coeffs.alpha, coeffs.beta, coeffs.frequencies
    A = X.conj().T @ (om[:, None] * X) + Y.T @ (om[:, None] * Y.conj())
    XY = X.conj().T @ (om[:, None] * Y)
    return A, XY + XY.T


def hopfield_ratio(omega, omega_tilde) -> np.ndarray:
    """beta_0 / alpha_0 = (omega - omega_tilde) / (omega + omega_tilde)."""
    omega = np.asarray(omega, dtype=float)
    return (omega - omega_tilde) / (omega + omega_tilde)


@dataclass(frozen=True)
class RatioReport:
    frequencies: np.ndarray
    ratio: np.ndarray
    expected: np.ndarray
    omega_tilde: float
    tol: float

    @property
    def abs_dev(self) -> np.ndarray:
        return np.abs(self.ratio - self.expected)

    @property
    def rel_dev(self) -> np.ndarray:
        return self.abs_dev / np.maximum(np.abs(self.expected), RATIO_FLOOR)

    @property
    def max_dev(self) -> float:
        return float(self.rel_dev.max()) if len(self.ratio) else 0.0

    @property
    def considered(self) -> int:
        return len(self.ratio)

    @property
    def passed(self) -> bool:
        return self.max_dev <= self.tol


def ratio_check(coeffs: BogoliubovCoefficients, omega_tilde: float, tol: float) -> RatioReport:
    """Compare beta_0/alpha_0 per eigenmode with the closed-form Hopfield ratio.

    Only modes with ``|alpha_0| > 1e-8`` are considered.  The relative
    deviation is measured against ``max(|expected|, 1e-6)``.
    """
    a0, b0 = coeffs.alpha0, coeffs.beta0
    keep = np.abs(a0) > ALPHA0_FLOOR
    om = coeffs.frequencies[keep]
    q = b0[keep] / a0[keep]
    return RatioReport(om, q, hopfield_ratio(om, omega_tilde), float(omega_tilde), float(tol))


def coupling_g(alpha0, beta0) -> np.ndarray:
    """Field-matter coupling g = i (alpha_0 + beta_0)."""
    return 1j * (np.asarray(alpha0) + np.asarray(beta0))


def _omega_ref(model: MediumModel, omega_tilde: float | None, reading: str) -> float:
    if reading == "renormalized":
        return omega_tilde if omega_tilde is not None else model.omega_tilde
    if reading == "bare":
        return model.omega_0
    raise ValueError("reading must be 'renormalized' or 'bare'")


def fano_im_chi(coeffs: BogoliubovCoefficients, model: MediumModel, reading: str = "renormalized") -> np.ndarray:
    """Im chi sampled at the eigenfrequencies, (pi/2)|f|^2 with f built from g.

    ``reading`` selects the frequency inside f: ``"renormalized"`` uses
    omega_tilde, ``"bare"`` the literal omega_0.
    """
    w_ref = _omega_ref(model, coeffs.omega_tilde, reading)
    om = coeffs.frequencies
    g = coupling_g(coeffs.continuum_alpha0(), coeffs.continuum_beta0())
    f2 = model.alpha_c ** 2 * w_ref / (model.rho * om ** 2 * EPS0) * np.abs(g) ** 2
    return 0.5 * np.pi * f2


def chi_from_fano(coeffs: BogoliubovCoefficients, model: MediumModel, omega, reading: str = "renormalized"):
    """Susceptibility recovered from the diagonalization.

    Im chi is taken from the eigenmode nearest ``omega``; Re chi is the
    principal-value transform of the sampled Im chi (odd extension to
    negative frequency).
    """
    x = np.atleast_1d(np.asarray(omega, dtype=float))
    om = coeffs.frequencies
    if np.any(x <= om[0]) or np.any(x >= om[-1]):
        raise RangeError(f"omega outside eigenfrequency range ({om[0]:.4g}, {om[-1]:.4g})")
    im = fano_im_chi(coeffs, model, reading)
    grid = medium.SusceptibilityGrid(om, 1j * im)
    medium._check_interior(grid, x)
    idx = np.abs(om[None, :] - x[:, None]).argmin(axis=1)
    re = medium.kk_transform(om, im, x)
    out = re + 1j * im[idx]
    return medium._scalar(out.reshape(np.shape(omega)), omega)


def minimal_coupling_F(alpha0, beta0, model: MediumModel, omega_tilde: float | None = None) -> np.ndarray:
    """Coupling function of the canonically transformed (minimal-coupling) Hamiltonian."""
    w_t = omega_tilde if omega_tilde is not None else model.omega_tilde
    pref = np.sqrt(HBAR * model.alpha_c ** 2 / (2 * model.rho * w_t))
    return -pref * (np.conj(alpha0) - np.conj(beta0))


@dataclass(frozen=True)
class ImChiConsistency:
    """Damped-polarization vs minimal-coupling Im chi at given frequencies."""

    omega: np.ndarray
    dp_renormalized: np.ndarray
    dp_bare: np.ndarray
    minimal_coupling: np.ndarray

    @property
    def rel_dev(self) -> np.ndarray:
        mc = self.minimal_coupling
        scale = np.maximum(np.abs(mc), np.abs(self.dp_renormalized))
        dev = np.abs(self.dp_renormalized - mc)
        return np.where(scale > 0, dev / np.where(scale > 0, scale, 1.0), 0.0)

    @property
    def max_dev(self) -> float:
        return float(self.rel_dev.max()) if len(self.omega) else 0.0

    @property
    def bare_over_mc(self) -> np.ndarray:
        """Ratio obtained when omega_0 is read literally (equals omega_0 / omega_tilde)."""
        mc = self.minimal_coupling
        return np.where(mc > 0, self.dp_bare / np.where(mc > 0, mc, 1.0), np.nan)


def imchi_consistency(alpha0, beta0, omega, model: MediumModel, omega_tilde: float | None = None) -> ImChiConsistency:
    """Evaluate both Im chi expressions for the same (alpha_0, beta_0) samples."""
    a0 = np.atleast_1d(np.asarray(alpha0, dtype=complex))
    b0 = np.atleast_1d(np.asarray(beta0, dtype=complex))
    om = np.atleast_1d(np.asarray(omega, dtype=float))
    w_t = omega_tilde if omega_tilde is not None else model.omega_tilde
    pref = np.pi * model.alpha_c ** 2 / (2 * model.rho * EPS0)
    dp_r = pref * w_t / om ** 2 * np.abs(a0 + b0) ** 2
    dp_b = pref * model.omega_0 / om ** 2 * np.abs(a0 + b0) ** 2
    F = minimal_coupling_F(a0, b0, model, w_t)
    mc = np.pi / (HBAR * EPS0) * np.abs(F) ** 2
    return ImChiConsistency(om, dp_r, dp_b, mc)


def f_sum_rule(coeffs: BogoliubovCoefficients, model: MediumModel) -> dict:
    """``int omega Im chi d omega`` from the eigenmodes vs the exact ``pi omega_c^2 / 2``."""
    exact = 0.5 * np.pi * model.omega_c_sq
    out = {"exact": exact}
    for reading in ("renormalized", "bare"):
        im = fano_im_chi(coeffs, model, reading)
        out[reading] = float(np.sum(coeffs.frequencies * im * coeffs.mode_weights))
    return out


def lambda_coupling(k, model: MediumModel, omega_tilde: float | None = None) -> np.ndarray:
    """Field-polarization coupling sqrt(omega_tilde c k_c^2 / k_tilde), natural units."""
    w_t = omega_tilde if omega_tilde is not None else model.omega_tilde
    kc2 = model.alpha_c ** 2 / (model.rho * EPS0)
    k = np.asarray(k, dtype=float)
    return np.sqrt(w_t * kc2 / np.sqrt(k ** 2 + kc2))
