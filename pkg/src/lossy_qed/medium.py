"""Dielectric descriptions, coupling spectra and Kramers-Kronig machinery.

All quantities are in natural units (hbar = eps0 = c = 1, frequencies in
units of the bare resonance omega_0).  The Fourier convention is the
physical one, ``chi(omega) = int_0^inf chi(t) exp(+i omega t) dt``, so a
passive medium has ``Im chi(omega) >= 0`` for ``omega > 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
from scipy import integrate

from .errors import (
    EdgeTruncationError,
    PassivityError,
    RangeError,
    ResolutionError,
)

HBAR = 1.0
EPS0 = 1.0

DEFAULT_OMEGA_MIN = 1e-3
DEFAULT_OMEGA_MAX = 50.0
DEFAULT_OMEGA_COUNT = 4000
DEFAULT_TAIL_TOL = 1e-4
EDGE_FRACTION = 0.05
# relative level below which |F|^2 is ignored by the Nyquist check
NYQUIST_FLOOR = 1e-6

KINDS = ("vacuum", "constant-chi", "lorentz-analytic", "tabulated", "hopfield-microscopic")

ReservoirCoupling = Union[float, Callable[[np.ndarray], np.ndarray]]


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def _scalar(out: np.ndarray, like) -> np.ndarray:
    return out[()] if np.ndim(like) == 0 else out


def log_trapezoid_weights(omega: np.ndarray) -> np.ndarray:
    """Quadrature weights for ``int d omega`` using the trapezoid rule in ``ln omega``.

    For geometric grids this is the spectrally accurate rule; for other
    positive grids it is still second order.
    """
    u = np.log(omega)
    du = np.diff(u)
    wu = np.zeros_like(u)
    wu[:-1] += du / 2
    wu[1:] += du / 2
    return wu * omega


def _local_poly(x: np.ndarray, y: np.ndarray, x0: np.ndarray, half: int = 3):
    """Value and first derivative at ``x0`` of the local degree-2*half Lagrange fit."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    n = len(x)
    p = min(2 * half + 1, n)
    centre = np.clip(np.searchsorted(x, x0), 0, n - 1)
    lo = np.clip(centre - p // 2, 0, n - p)
    cols = lo[:, None] + np.arange(p)[None, :]
    xs = x[cols] - x0[:, None]
    scale = np.max(np.abs(xs), axis=1)
    scale[scale == 0] = 1.0
    V = (xs / scale[:, None])[:, None, :] ** np.arange(p)[None, :, None]
    rhs = np.zeros((len(x0), p, 2))
    rhs[:, 0, 0] = 1.0
    rhs[:, 1, 1] = 1.0 / scale
    wts = np.linalg.solve(V, rhs)
    ys = y[cols]
    value = np.einsum("ip,ip->i", wts[:, :, 0], ys)
    deriv = np.einsum("ip,ip->i", wts[:, :, 1], ys)
    return value, deriv


@dataclass(frozen=True)
class SusceptibilityGrid:
    """Sampled complex susceptibility on an ascending positive frequency grid."""

    omega: np.ndarray
    chi: np.ndarray
    tail_tol: float = DEFAULT_TAIL_TOL
    re_from_kk: bool = False

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=float)
        chi = np.asarray(self.chi, dtype=complex)
        if omega.ndim != 1 or omega.shape != chi.shape:
            raise ValueError("omega and chi must be 1-D arrays of equal length")
        if len(omega) < 2:
            raise ValueError("a susceptibility grid needs at least two samples")
        if not np.all(omega > 0):
            raise RangeError("grid frequencies must be positive")
        if not np.all(np.diff(omega) > 0):
            raise RangeError("grid frequencies must be strictly increasing")
        bad = np.nonzero(chi.imag < 0)[0]
        if len(bad):
            i = int(bad[0])
            raise PassivityError(f"Im chi < 0 at sample {i} (omega={omega[i]:.6g}, Im chi={chi.imag[i]:.6g})")
        object.__setattr__(self, "omega", _frozen(omega))
        object.__setattr__(self, "chi", _frozen(chi, complex))

    @classmethod
    def from_imag(cls, omega, im_chi, tail_tol: float = DEFAULT_TAIL_TOL) -> "SusceptibilityGrid":
        """Build a grid from Im chi alone; Re chi is reconstructed by Kramers-Kronig."""
        omega = np.asarray(omega, dtype=float)
        im_chi = np.asarray(im_chi, dtype=float)
        probe = cls(omega, 1j * im_chi, tail_tol)
        re = kk_transform(probe.omega, probe.chi.imag, probe.omega)
        return cls(omega, re + 1j * im_chi, tail_tol, re_from_kk=True)

    @property
    def omega_max(self) -> float:
        return float(self.omega[-1])

    @property
    def omega_min(self) -> float:
        return float(self.omega[0])

    @property
    def tail_ok(self) -> bool:
        """Whether |chi(omega_max)| is below the declared tail tolerance."""
        return bool(abs(self.chi[-1]) < self.tail_tol)

    def interior_mask(self, fraction: float = EDGE_FRACTION) -> np.ndarray:
        u = np.log(self.omega)
        span = u[-1] - u[0]
        return (u >= u[0] + fraction * span) & (u <= u[-1] - fraction * span)

    def __len__(self) -> int:
        return len(self.omega)


@dataclass(frozen=True)
class CouplingSpectrum:
    """Sampled field-matter coupling F(omega) with optional reservoir coupling v(omega)."""

    omega: np.ndarray
    F: np.ndarray
    v: np.ndarray | None = None

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=float)
        F = np.asarray(self.F, dtype=complex)
        if omega.ndim != 1 or omega.shape != F.shape:
            raise ValueError("omega and F must be 1-D arrays of equal length")
        if len(omega) < 2 or not np.all(omega > 0) or not np.all(np.diff(omega) > 0):
            raise RangeError("coupling grid must be positive and strictly increasing")
        object.__setattr__(self, "omega", _frozen(omega))
        object.__setattr__(self, "F", _frozen(F, complex))
        if self.v is not None:
            v = np.asarray(self.v, dtype=float)
            if v.shape != omega.shape:
                raise ValueError("v must match the omega grid")
            object.__setattr__(self, "v", _frozen(v))

    @property
    def omega_max(self) -> float:
        return float(self.omega[-1])


@dataclass(frozen=True)
class MediumModel:
    """Description of a homogeneous isotropic dielectric.

    Use the named constructors (:meth:`vacuum`, :meth:`constant`,
    :meth:`lorentz`, :meth:`tabulated`, :meth:`hopfield`) rather than the
    raw initializer.
    """

    kind: str
    chi_const: float = 0.0
    omega_p: float = 0.0
    omega_0: float = 1.0
    gamma: float = 0.0
    grid: SusceptibilityGrid | None = None
    rho: float = 1.0
    alpha_c: float = 0.0
    v: ReservoirCoupling = 0.0
    band: tuple[float, float] = (1e-2, 20.0)
    label: str = field(default="", compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown medium kind {self.kind!r}")
        if self.omega_p < 0 or self.gamma < 0:
            raise ValueError("omega_p and gamma must be nonnegative")
        if self.omega_0 <= 0 or self.rho <= 0:
            raise ValueError("omega_0 and rho must be positive")
        if self.kind == "constant-chi" and self.chi_const < 0:
            raise ValueError("constant susceptibility must be nonnegative")
        if self.kind == "tabulated" and self.grid is None:
            raise ValueError("tabulated model needs a SusceptibilityGrid")
        if self.kind == "hopfield-microscopic" and not (0 < self.band[0] < self.band[1]):
            raise ValueError("reservoir band must satisfy 0 < min < max")

    @classmethod
    def vacuum(cls) -> "MediumModel":
        return cls("vacuum")

    @classmethod
    def constant(cls, chi: float) -> "MediumModel":
        return cls("constant-chi", chi_const=float(chi))

    @classmethod
    def lorentz(cls, omega_p: float, gamma: float, omega_0: float = 1.0) -> "MediumModel":
        return cls("lorentz-analytic", omega_p=float(omega_p), gamma=float(gamma), omega_0=float(omega_0))

    @classmethod
    def tabulated(cls, grid: SusceptibilityGrid) -> "MediumModel":
        return cls("tabulated", grid=grid)

    @classmethod
    def hopfield(cls, alpha_c: float, v: ReservoirCoupling, rho: float = 1.0, omega_0: float = 1.0,
                 band: tuple[float, float] = (1e-2, 20.0)) -> "MediumModel":
        return cls("hopfield-microscopic", alpha_c=float(alpha_c), v=v, rho=float(rho),
                   omega_0=float(omega_0), band=(float(band[0]), float(band[1])))

    @property
    def is_lossless(self) -> bool:
        if self.kind in ("vacuum", "constant-chi"):
            return True
        if self.kind == "lorentz-analytic":
            return self.gamma == 0 or self.omega_p == 0
        if self.kind == "tabulated":
            return not np.any(self.grid.chi.imag > 0)
        return self.alpha_c == 0 or not np.any(self.reservoir_v(np.linspace(*self.band, 64)) != 0)

    @property
    def is_analytic(self) -> bool:
        return self.kind in ("vacuum", "constant-chi", "lorentz-analytic")

    def reservoir_v(self, omega) -> np.ndarray:
        omega = np.asarray(omega, dtype=float)
        if callable(self.v):
            return np.asarray(self.v(omega), dtype=float) * np.ones_like(omega)
        return np.full_like(omega, float(self.v))

    @property
    def omega_c_sq(self) -> float:
        """Squared plasma-like coupling frequency alpha^2 / (rho eps0)."""
        return self.alpha_c ** 2 / (self.rho * EPS0)

    @property
    def omega_tilde(self) -> float:
        """Renormalized polarization frequency sqrt(omega_0^2 + int v^2/rho^2)."""
        a, b = self.band
        if callable(self.v):
            extra = integrate.quad(lambda w: float(self.reservoir_v(w)) ** 2, a, b, limit=200)[0]
        else:
            extra = float(self.v) ** 2 * (b - a)
        return float(np.sqrt(self.omega_0 ** 2 + extra / self.rho ** 2))

    @property
    def longitudinal_frequency(self) -> float:
        """Zero of Re epsilon for the lossless Lorentz/Hopfield medium."""
        if self.kind == "lorentz-analytic":
            return float(np.sqrt(self.omega_0 ** 2 + self.omega_p ** 2))
        if self.kind == "hopfield-microscopic":
            return float(np.sqrt(self.omega_0 ** 2 + self.omega_c_sq))
        raise ValueError(f"no longitudinal frequency for {self.kind}")


def _hopfield_chi(model: MediumModel, omega: np.ndarray) -> np.ndarray:
    """Exact continuum susceptibility of the oscillator + reservoir matter model."""
    a, b = model.band
    w2t = model.omega_tilde ** 2
    out = np.empty(omega.shape, dtype=complex)
    for i, W in np.ndenumerate(omega):
        inside = a < W < b
        if callable(model.v):
            v2 = lambda w: float(model.reservoir_v(w)) ** 2 / model.rho ** 2
            total = integrate.quad(v2, a, b, limit=400)[0]
            minus = integrate.quad(lambda w: v2(w) / (w + W), a, b, limit=400)[0]
            if inside:
                pv = integrate.quad(v2, a, b, weight="cauchy", wvar=W, limit=400)[0]
                im = np.pi * v2(W) * W / 2
            else:
                pv = integrate.quad(lambda w: v2(w) / (w - W), a, b, limit=400)[0]
                im = 0.0
            sigma = total + 0.5 * W * (pv - minus) + 1j * im
        else:
            v2 = float(model.v) ** 2 / model.rho ** 2
            log_term = np.log(abs((b - W) / (a - W))) - np.log((b + W) / (a + W))
            sigma = v2 * ((b - a) + 0.5 * W * log_term + (1j * np.pi * W / 2 if inside else 0.0))
        out[i] = model.omega_c_sq / (w2t - W ** 2 - sigma)
    return out


def chi(model: MediumModel, omega) -> np.ndarray:
    """Complex susceptibility of ``model`` at real positive ``omega``."""
    w = np.asarray(omega, dtype=float)
    if np.any(w <= 0):
        raise RangeError("omega must be positive")
    if model.kind == "vacuum":
        out = np.zeros(w.shape, dtype=complex)
    elif model.kind == "constant-chi":
        out = np.full(w.shape, model.chi_const, dtype=complex)
    elif model.kind == "lorentz-analytic":
        out = model.omega_p ** 2 / (model.omega_0 ** 2 - w ** 2 - 1j * model.gamma * w)
    elif model.kind == "tabulated":
        g = model.grid
        if np.any(w < g.omega_min) or np.any(w > g.omega_max):
            raise RangeError(f"omega outside tabulated range [{g.omega_min:.6g}, {g.omega_max:.6g}]")
        out = np.interp(w, g.omega, g.chi.real) + 1j * np.interp(w, g.omega, g.chi.imag)
    else:
        out = _hopfield_chi(model, np.atleast_1d(w)).reshape(w.shape)
    return _scalar(np.asarray(out, dtype=complex), omega)


def epsilon(model: MediumModel, omega) -> np.ndarray:
    """Relative permittivity ``1 + chi(omega)``."""
    return 1.0 + chi(model, omega)


def im_chi(model: MediumModel, omega) -> np.ndarray:
    return np.asarray(chi(model, omega)).imag


def sample(model: MediumModel, omega=None, tail_tol: float = DEFAULT_TAIL_TOL) -> SusceptibilityGrid:
    """Sample ``model`` on ``omega`` (default: the standard log grid)."""
    if omega is None:
        omega = default_omega_grid()
    if model.kind == "tabulated" and omega is model.grid.omega:
        return model.grid
    return SusceptibilityGrid(omega, chi(model, omega), tail_tol)


def default_omega_grid(omega_min: float = DEFAULT_OMEGA_MIN, omega_max: float = DEFAULT_OMEGA_MAX,
                       count: int = DEFAULT_OMEGA_COUNT) -> np.ndarray:
    return np.geomspace(omega_min, omega_max, count)


def coupling_from_im_chi(grid: SusceptibilityGrid) -> CouplingSpectrum:
    """Real nonnegative coupling F with Im chi = (pi / hbar eps0) |F|^2."""
    im = grid.chi.imag
    if np.any(im < 0):
        i = int(np.nonzero(im < 0)[0][0])
        raise PassivityError(f"Im chi < 0 at sample {i}")
    return CouplingSpectrum(grid.omega, np.sqrt(HBAR * EPS0 * im / np.pi))


def coupling_function(model: MediumModel, omega) -> np.ndarray:
    """F(omega) of the model, real nonnegative branch."""
    im = np.asarray(im_chi(model, omega))
    if np.any(im < 0):
        raise PassivityError("model has Im chi < 0")
    return np.sqrt(HBAR * EPS0 * im / np.pi)


def im_chi_from_coupling(spectrum: CouplingSpectrum, omega) -> np.ndarray:
    """(pi / hbar eps0) |F(omega)|^2, with |F|^2 linearly interpolated between samples."""
    w = np.asarray(omega, dtype=float)
    if np.any(w < spectrum.omega[0]) or np.any(w > spectrum.omega[-1]):
        raise RangeError("omega outside the coupling grid")
    f2 = np.abs(spectrum.F) ** 2
    return _scalar(np.asarray(np.pi / (HBAR * EPS0) * np.interp(w, spectrum.omega, f2)), omega)


def nyquist_time(spectrum: CouplingSpectrum) -> float:
    """Largest t with ``t * d omega <= pi/2`` on every interval carrying spectral weight."""
    f2 = np.abs(spectrum.F) ** 2
    if f2.max() == 0:
        return np.inf
    weight = np.maximum(f2[:-1], f2[1:])
    dw = np.diff(spectrum.omega)[weight > NYQUIST_FLOOR * f2.max()]
    return float(np.pi / 2 / dw.max()) if dw.size else np.inf


def check_resolution(spectrum: CouplingSpectrum, t: float) -> None:
    limit = nyquist_time(spectrum)
    if t > limit:
        raise ResolutionError(f"frequency grid too coarse for t={t:.3g} (t*d omega <= pi/2 needs t <= {limit:.3g})")


def chi_time(spectrum: CouplingSpectrum, t) -> np.ndarray:
    """Time-domain susceptibility chi(t) = (2 / hbar eps0) int |F|^2 sin(omega t) d omega.

    Raises :class:`ResolutionError` when some grid interval carrying
    non-negligible spectral weight is longer than a quarter period.
    """
    tt = np.asarray(t, dtype=float)
    if np.any(tt < 0):
        raise ValueError("t must be nonnegative")
    w = spectrum.omega
    f2 = np.abs(spectrum.F) ** 2
    if tt.size:
        check_resolution(spectrum, float(np.max(tt)))
    W = log_trapezoid_weights(w) * f2
    flat = np.atleast_1d(tt).ravel()
    out = np.empty(flat.shape)
    for start in range(0, len(flat), 256):
        chunk = flat[start:start + 256]
        out[start:start + 256] = np.sin(np.outer(chunk, w)) @ W
    out *= 2.0 / (HBAR * EPS0)
    out = out.reshape(np.shape(tt))
    return _scalar(out, t)


def kk_transform(omega: np.ndarray, im: np.ndarray, targets) -> np.ndarray:
    """Principal-value Kramers-Kronig transform of sampled Im chi (no edge guard).

    Uses the odd extension of Im chi to negative frequency:
    ``Re chi(x) = (1/pi) [PV int f(w)/(w - x) dw + int f(w)/(w + x) dw]``,
    with the singular part regularized by subtracting ``f(x)``.
    """
    omega = np.asarray(omega, dtype=float)
    im = np.asarray(im, dtype=float)
    x = np.atleast_1d(np.asarray(targets, dtype=float))
    W = log_trapezoid_weights(omega)
    fx, dfx = _local_poly(omega, im, x)
    lo, hi = omega[0], omega[-1]
    out = np.empty(x.shape)
    for start in range(0, len(x), 400):
        sl = slice(start, start + 400)
        xs = x[sl][:, None]
        d = omega[None, :] - xs
        near = np.abs(d) <= 1e-12 * xs
        with np.errstate(divide="ignore", invalid="ignore"):
            g = (im[None, :] - fx[sl][:, None]) / d
        g = np.where(near, dfx[sl][:, None], g)
        inside = (x[sl] > lo) & (x[sl] < hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            boundary = np.where(inside, np.log(np.abs((hi - x[sl]) / (x[sl] - lo))), 0.0)
        regular = (im[None, :] / (omega[None, :] + xs)) @ W
        out[sl] = (g @ W + fx[sl] * boundary + regular) / np.pi
    return out


def _check_interior(grid: SusceptibilityGrid, x: np.ndarray) -> None:
    u = np.log(grid.omega)
    span = u[-1] - u[0]
    ux = np.log(x)
    if np.any(ux < u[0] + EDGE_FRACTION * span) or np.any(ux > u[-1] - EDGE_FRACTION * span):
        raise EdgeTruncationError(
            f"omega must lie at least {EDGE_FRACTION:.0%} of the (log) grid span from either end")


def kk_real_from_imag(grid: SusceptibilityGrid, omega) -> np.ndarray:
    """Re chi(omega) reconstructed from the grid's Im chi by Kramers-Kronig."""
    x = np.atleast_1d(np.asarray(omega, dtype=float))
    if np.any(x <= 0):
        raise RangeError("omega must be positive")
    _check_interior(grid, x)
    if np.any(grid.chi.imag < 0):
        raise PassivityError("Im chi < 0 on grid")
    out = kk_transform(grid.omega, grid.chi.imag, x)
    return _scalar(out.reshape(np.shape(omega)), omega)


@dataclass(frozen=True)
class KKReport:
    """Per-sample causality deviations |Re chi - KK[Im chi]| over the grid interior."""

    omega: np.ndarray
    re_chi: np.ndarray
    im_chi: np.ndarray
    kk_re_chi: np.ndarray
    tol: float
    tail_ok: bool

    @property
    def abs_dev(self) -> np.ndarray:
        return np.abs(self.re_chi - self.kk_re_chi)

    @property
    def max_dev(self) -> float:
        return float(self.abs_dev.max()) if len(self.omega) else 0.0

    @property
    def rms_dev(self) -> float:
        return float(np.sqrt(np.mean(self.abs_dev ** 2))) if len(self.omega) else 0.0

    @property
    def worst_omega(self) -> float:
        return float(self.omega[np.argmax(self.abs_dev)]) if len(self.omega) else float("nan")

    @property
    def passed(self) -> bool:
        return self.max_dev <= self.tol

    def summary(self) -> dict:
        return {
            "interior_points": len(self.omega),
            "max_abs_dev": self.max_dev,
            "rms_abs_dev": self.rms_dev,
            "worst_omega": self.worst_omega,
            "tol": self.tol,
            "tail_ok": self.tail_ok,
            "passed": self.passed,
        }


def validate_kk(grid: SusceptibilityGrid, tol: float) -> KKReport:
    """Compare the stored Re chi with the KK transform of the stored Im chi."""
    mask = grid.interior_mask()
    w = grid.omega[mask]
    kk = kk_transform(grid.omega, grid.chi.imag, w) if len(w) else np.zeros(0)
    return KKReport(w, grid.chi.real[mask], grid.chi.imag[mask], kk, float(tol), grid.tail_ok)
