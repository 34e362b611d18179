"""Minimal-coupling scheme in the time domain.

Kernels are inverse Laplace transforms of rational-in-chi~ expressions::

    z(w_k, t)      = L^-1[(s (1 + chi~) - i w_k) / (s^2 (1 + chi~) + w_k^2)]
    xi(w, w_k, t)  = F(w) L^-1[s / ((s + i w)(s^2 (1 + chi~) + w_k^2))]
    Q(w, t)        = L^-1[1 / ((s + i w)(1 + chi~))]

with ``chi~(s) = int_0^inf chi(t) e^{-st} dt`` (so ``chi~(-i w) = chi(w)``).
The transforms are inverted on a deformed (Talbot-type) contour that
wraps the left half-plane; node doubling provides the error estimate.

Poles are reported as complex frequencies ``omega_n = -i s_n`` so that
``z(t) = sum_n r_n exp(i omega_n t)`` and decaying poles have
``Im omega_n > 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from . import medium
from ._parallel import pmap
from .errors import ConvergenceError, DomainError, PoleError, StabilityError
from .greenfn import POLE_TOL
from .medium import MediumModel

DEFAULT_TOL = 1e-8
TALBOT_C = 8.0
XI_NORM = -1j / math.sqrt(math.pi)
EXTRACTION_CAP = 2.0e4
KERNELS = ("z", "xi", "q")


# ---------------------------------------------------------------- chi~(s)

def _atan_band(s: np.ndarray, a: float, b: float) -> np.ndarray:
    # int_a^b s / (s^2 + w^2) dw, analytic off the cuts s in +-i[a, b]
    return np.arctan(b / s) - np.arctan(a / s)


def _chi_tilde(model: MediumModel, s) -> np.ndarray:
    """chi~(s) continued off the imaginary axis (no domain checks)."""
    s = np.asarray(s, dtype=complex)
    if model.kind == "vacuum":
        return np.zeros_like(s)
    if model.kind == "constant-chi":
        return np.full_like(s, model.chi_const)
    if model.kind == "lorentz-analytic":
        return model.omega_p ** 2 / (s * s + model.gamma * s + model.omega_0 ** 2)
    if model.kind == "tabulated":
        g = model.grid
        W = medium.log_trapezoid_weights(g.omega) * g.chi.imag * g.omega
        flat = s.ravel()
        out = np.empty(flat.shape, dtype=complex)
        for start in range(0, len(flat), 512):
            chunk = flat[start:start + 512]
            out[start:start + 512] = (1.0 / (chunk[:, None] ** 2 + g.omega[None, :] ** 2)) @ W
        return (2.0 / np.pi) * out.reshape(s.shape)
    a, b = model.band
    if callable(model.v):
        x, w = np.polynomial.legendre.leggauss(2000)
        nodes = a + 0.5 * (b - a) * (x + 1.0)
        wts = 0.5 * (b - a) * w * model.reservoir_v(nodes) ** 2 * nodes ** 2
        flat = s.ravel()
        sigma = np.array([np.sum(wts / (nodes ** 2 + z * z)) for z in flat]).reshape(s.shape)
    else:
        sigma = float(model.v) ** 2 * ((b - a) - s * _atan_band(s, a, b))
    sigma = sigma / model.rho ** 2
    return model.omega_c_sq / (model.omega_tilde ** 2 + s * s - sigma)


def laplace_chi(model: MediumModel, s):
    """Laplace transform of the memory susceptibility.

    Analytic for vacuum, constant (memoryless, chi~ = chi), Lorentz and
    Hopfield models; for tabulated models the quadrature
    ``(2/pi) int Im chi(w) w / (s^2 + w^2) dw`` of the time-domain
    transform, defined for Re s > 0 only.
    """
    z = np.asarray(s, dtype=complex)
    if model.kind == "tabulated" and np.any(z.real <= 0):
        raise DomainError("tabulated chi~(s) needs Re s > 0")
    return medium._scalar(_chi_tilde(model, z), s)


# ------------------------------------------------------- inverse Laplace

@dataclass(frozen=True)
class InverseLaplaceResult:
    value: complex
    error: float
    nodes: int
    method: str


def _vectorized(transform):
    def call(s: np.ndarray) -> np.ndarray:
        try:
            out = np.asarray(transform(s), dtype=complex)
            if out.shape == s.shape:
                return out
        except (TypeError, ValueError):
            pass
        return np.array([complex(transform(complex(z))) for z in s.ravel()]).reshape(s.shape)
    return call


def _talbot_sum(F, t: float, bound: float, n: int, c: float) -> tuple[complex, float]:
    a = c / t
    sigma = mu = 0.5 * a
    nu = max(1.0, 2.0 * bound / a)
    h = 2.0 * np.pi / n
    th = -np.pi + (np.arange(n) + 0.5) * h
    cot = 1.0 / np.tan(th)
    s = sigma + mu * (th * cot + 1j * nu * th)
    ds = mu * (cot - th / np.sin(th) ** 2 + 1j * nu)
    with np.errstate(over="ignore", invalid="ignore"):
        terms = np.exp(s * t) * F(s) * ds
    terms = np.where(np.isfinite(terms), terms, 0.0)
    scale = h / (2 * np.pi)
    # rounding floor of the cancelling sum
    floor = 1e-15 * scale * float(np.sum(np.abs(terms)))
    return complex(scale / 1j * np.sum(terms)), floor


def _resolved_nodes(t: float, bound: float, c: float) -> int:
    # exp(i Im(s) t) turns 0.5 nu c = max(0.5 c, bound t) times per unit theta;
    # fewer than two nodes per turn alias, and doubling can then agree on a wrong sum
    rate = max(0.5 * c, bound * t)
    return 1 << int(math.ceil(math.log2(max(2.0 * rate, 1.0))))


def _talbot(F, t, tol, bound, n0, nmax, c) -> InverseLaplaceResult:
    n = max(n0, _resolved_nodes(t, bound, c))
    if n >= nmax:
        raise ConvergenceError(f"contour inversion at t={t:.6g} needs more than {nmax} nodes to resolve the integrand")
    prev, _ = _talbot_sum(F, t, bound, n, c)
    while n < nmax:
        n *= 2
        cur, floor = _talbot_sum(F, t, bound, n, c)
        err = abs(cur - prev)
        if err <= max(tol * max(1.0, abs(cur)), 10.0 * floor):
            return InverseLaplaceResult(cur, max(err, floor), n, "talbot")
        prev = cur
    raise ConvergenceError(f"contour inversion at t={t:.6g} did not converge (estimate {err:.3g} after {n} nodes)")


def _dehoog(f, t: float, opts: dict) -> complex:
    try:
        return complex(mpmath.invertlaplace(f, t, **opts))
    except ZeroDivisionError:
        # an identically vanishing half of the split (real or imaginary f(t))
        probe = [opts["alpha"] + x + 1j * y for x in (0.5, 2.0) for y in (0.0, 1.0, 3.0)]
        if all(f(p) == 0 for p in probe):
            return 0j
        raise ConvergenceError(f"Bromwich inversion at t={t:.6g} broke down") from None


def _bromwich(transform, t, tol, abscissa) -> InverseLaplaceResult:
    # de Hoog acceleration on a vertical line; the conjugate-symmetric split
    # keeps each inversion real-valued as the algorithm assumes
    def part(kind):
        def f(p):
            z = complex(p)
            a = complex(transform(z))
            b = complex(transform(z.conjugate())).conjugate()
            return mpmath.mpc((a + b) / 2 if kind == "re" else (a - b) / 2j)
        return f

    vals = []
    for degree in (14, 22):
        opts = dict(method="dehoog", degree=degree, alpha=max(abscissa, 1e-12))
        re, im = (_dehoog(part(kind), t, opts) for kind in ("re", "im"))
        vals.append(re + 1j * im)
    err = abs(vals[1] - vals[0])
    if not np.isfinite(err) or err > tol * max(1.0, abs(vals[1])):
        raise ConvergenceError(f"Bromwich inversion at t={t:.6g} did not converge (estimate {err:.3g})")
    return InverseLaplaceResult(vals[1], err, 2 * 22 + 1, "bromwich")


def inverse_laplace_detailed(transform, t: float, tol: float = DEFAULT_TOL, singularity_bound: float = 0.0,
                             method: str = "auto", n0: int = 64, nmax: int = 2 ** 21,
                             c: float = TALBOT_C, abscissa: float = 0.0) -> InverseLaplaceResult:
    """Numerical inverse Laplace transform at one time ``t > 0``.

    ``singularity_bound`` bounds ``|Im s|`` of the transform's singularities
    (the contour is widened to enclose them).  ``method`` is ``"talbot"``,
    ``"bromwich"`` (de Hoog series on the line ``Re s = abscissa``) or
    ``"auto"`` (contour first, line as fallback).
    """
    if not t > 0:
        raise ValueError("t must be positive")
    F = _vectorized(transform)
    if method == "talbot":
        return _talbot(F, t, tol, singularity_bound, n0, nmax, c)
    if method == "bromwich":
        return _bromwich(transform, t, tol, abscissa)
    if method != "auto":
        raise ValueError(f"unknown method {method!r}")
    try:
        return _talbot(F, t, tol, singularity_bound, n0, nmax, c)
    except ConvergenceError:
        return _bromwich(transform, t, tol, abscissa)


def inverse_laplace(transform, t: float, tol: float = DEFAULT_TOL, singularity_bound: float = 0.0,
                    method: str = "auto", **kwargs) -> complex:
    return inverse_laplace_detailed(transform, t, tol, singularity_bound, method, **kwargs).value


# ------------------------------------------------------ rational pieces

def _polys(model: MediumModel) -> tuple[np.ndarray, np.ndarray]:
    """chi~ = p / q as highest-first polynomial coefficients (analytic models)."""
    if model.kind == "vacuum":
        return np.array([0.0]), np.array([1.0])
    if model.kind == "constant-chi":
        return np.array([model.chi_const]), np.array([1.0])
    if model.kind == "lorentz-analytic":
        return np.array([model.omega_p ** 2]), np.array([1.0, model.gamma, model.omega_0 ** 2])
    raise DomainError(f"no rational form for {model.kind} media")


def _dispersion_poly(model: MediumModel, omega_k: float) -> tuple[np.ndarray, np.ndarray]:
    p, q = _polys(model)
    qp = np.polyadd(q, p)
    return np.polyadd(np.polymul([1.0, 0.0, 0.0], qp), omega_k ** 2 * q), qp


def _roots(poly: np.ndarray) -> np.ndarray:
    poly = np.trim_zeros(np.asarray(poly, dtype=complex), "f")
    if len(poly) < 2:
        return np.array([], dtype=complex)
    r = np.roots(poly)
    d = np.polyder(poly)
    for _ in range(3):
        dv = np.polyval(d, r)
        ok = dv != 0
        r = np.where(ok, r - np.polyval(poly, r) / np.where(ok, dv, 1.0), r)
    scale = np.sum(np.abs(poly)) * np.maximum(1.0, np.abs(r)) ** (len(poly) - 1)
    if np.any(np.abs(np.polyval(poly, r)) > 1e-9 * scale):
        raise ConvergenceError("polynomial root polishing failed")
    return r


def _residues(num: np.ndarray, den: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    r = _roots(den)
    d = np.polyder(np.asarray(den, dtype=complex))
    dv = np.polyval(d, r)
    if np.any(np.abs(dv) < 1e-14 * np.max(np.abs(den))):
        raise PoleError("repeated pole: residues undefined")
    return r, np.polyval(num, r) / dv


def _singularity_bound(model: MediumModel, omega_k: float = 0.0, omega: float = 0.0) -> float:
    if model.is_analytic:
        D, qp = _dispersion_poly(model, omega_k)
        _, q = _polys(model)
        roots = np.concatenate([_roots(D), _roots(qp), _roots(q)])
        top = np.max(np.abs(roots.imag)) if roots.size else 0.0
    elif model.kind == "tabulated":
        top = model.grid.omega_max
    else:
        top = max(model.band[1], model.longitudinal_frequency, model.omega_tilde)
    return 1.1 * max(top, omega_k, abs(omega)) + 0.1


def _check_time(model: MediumModel, t: float) -> None:
    if model.kind == "tabulated":
        medium.check_resolution(medium.coupling_from_im_chi(model.grid), t)


def _check_longitudinal(model: MediumModel) -> None:
    if model.is_analytic:
        _, qp = _polys(model)
        r = _roots(qp)
        if np.any(r.real > 1e-12):
            raise StabilityError("1 + chi~(s) vanishes in the right half-plane")


# ----------------------------------------------------------- kernels

def _eval(transform, ts, model: MediumModel, bound: float, tol: float):
    tt = np.asarray(ts, dtype=float)
    flat = np.atleast_1d(tt).ravel()
    if np.any(flat <= 0):
        raise ValueError("t must be positive")
    _check_time(model, float(flat.max()))
    vals = pmap(lambda x: inverse_laplace(transform, float(x), tol, bound, method="talbot"), flat)
    out = np.array(vals, dtype=complex).reshape(tt.shape)
    return medium._scalar(out, ts)


def z_transform(omega_k: float, model: MediumModel):
    def Z(s):
        eps = 1.0 + _chi_tilde(model, s)
        return (s * eps - 1j * omega_k) / (s * s * eps + omega_k ** 2)
    return Z


def xi_transform(omega: float, omega_k: float, model: MediumModel):
    def X(s):
        eps = 1.0 + _chi_tilde(model, s)
        return s / ((s + 1j * omega) * (s * s * eps + omega_k ** 2))
    return X


def q_transform(omega: float, model: MediumModel):
    def Q(s):
        return 1.0 / ((s + 1j * omega) * (1.0 + _chi_tilde(model, s)))
    return Q


def z_kernel(omega_k: float, model: MediumModel, t, tol: float = DEFAULT_TOL):
    """Free-field memory kernel z(omega_k, t)."""
    return _eval(z_transform(omega_k, model), t, model, _singularity_bound(model, omega_k), tol)


def xi_kernel(omega: float, omega_k: float, model: MediumModel, t, tol: float = DEFAULT_TOL, F: complex | None = None):
    """Matter-to-field kernel xi(omega, omega_k, t); ``F`` defaults to the model's coupling."""
    if F is None:
        F = complex(medium.coupling_function(model, omega))
    if F == 0:
        return medium._scalar(np.zeros(np.shape(t), dtype=complex), t)
    raw = _eval(xi_transform(omega, omega_k, model), t, model, _singularity_bound(model, omega_k, omega), tol)
    return F * raw


def q_kernel(omega: float, model: MediumModel, t, tol: float = DEFAULT_TOL):
    """Longitudinal kernel Q(omega, t)."""
    _check_longitudinal(model)
    return _eval(q_transform(omega, model), t, model, _singularity_bound(model, 0.0, omega), tol)


# ------------------------------------------------------------- poles

@dataclass(frozen=True)
class PoleSet:
    """Poles ``omega_n`` and amplitudes ``r_n`` with ``z(t) = sum r_n exp(i omega_n t)``."""

    poles: np.ndarray
    residues: np.ndarray
    convention: str = "exp(+i omega t); omega_n = -i s_n, decaying poles have Im omega_n > 0"

    @property
    def s_poles(self) -> np.ndarray:
        return 1j * self.poles

    @property
    def decay_rates(self) -> np.ndarray:
        return self.poles.imag

    def evaluate(self, t) -> np.ndarray:
        tt = np.asarray(t, dtype=float)
        out = np.exp(1j * np.multiply.outer(tt, self.poles)) @ self.residues
        return medium._scalar(np.asarray(out), t)

    def slowest_decay(self, floor: float = 1e-12) -> float:
        keep = np.abs(self.residues) > floor * np.sum(np.abs(self.residues))
        return float(np.min(self.decay_rates[keep]))

    def to_rows(self) -> list[tuple[float, float, float, float]]:
        return [(float(w.real), float(w.imag), float(r.real), float(r.imag))
                for w, r in zip(self.poles, self.residues)]


def find_poles(omega_k: float, model: MediumModel) -> PoleSet:
    """Roots of ``omega_k^2 - omega^2 (1 + chi~(i omega))`` with the residues of the z transform."""
    if not model.is_analytic:
        raise DomainError(f"pole search needs an analytic model, got {model.kind}")
    D, qp = _dispersion_poly(model, omega_k)
    _, q = _polys(model)
    num = np.polysub(np.polymul([1.0, 0.0], qp), 1j * omega_k * q)
    s, res = _residues(num, D)
    order = np.lexsort((s.real, s.imag))
    return PoleSet(-1j * s[order], res[order])


# ------------------------------------------------------- asymptotics

def steady_state_xi(omega: float, omega_k: float, model: MediumModel) -> complex:
    """Surviving large-t coefficient of ``xi(t) e^{i omega t}``: ``-i omega F / (omega_k^2 - omega^2 eps)``.

    Equals ``XI_NORM * greenfn.transverse_kernel(omega_k, omega, model)``.
    """
    eps = complex(medium.epsilon(model, omega))
    den = omega_k ** 2 - omega ** 2 * eps
    if abs(den) < POLE_TOL:
        raise PoleError(f"|omega_k^2 - omega^2 eps| = {abs(den):.3g} at omega={omega:.6g}, omega_k={omega_k:.6g}")
    F = complex(medium.coupling_function(model, omega))
    return complex(-1j * omega * F / den)


def steady_state_q(omega: float, model: MediumModel) -> complex:
    """Large-t coefficient of ``Q(t) e^{i omega t}``: ``1 / eps(omega)``."""
    eps = complex(medium.epsilon(model, omega))
    if abs(eps) < POLE_TOL:
        raise PoleError(f"eps = 0 at omega = {omega:.6g}")
    return 1.0 / eps


def _settle_time(num, den, exclude: complex, rel: float, floor_t: float) -> float:
    s, res = _residues(num, den)
    keep = np.abs(s - exclude) > 1e-9 * max(1.0, abs(exclude))
    s, res = s[keep], res[keep]
    steady = np.polyval(num, exclude) / np.polyval(np.polydiv(den, [1.0, -exclude])[0], exclude)
    decay = -s.real
    if np.any(decay <= 0):
        return np.inf
    target = rel * abs(steady) / max(len(s), 1)
    with np.errstate(divide="ignore"):
        need = np.log(np.abs(res) / target) / decay
    return float(max(floor_t, np.max(need, initial=0.0)))


def xi_extraction_time(omega: float, omega_k: float, model: MediumModel, rel: float = 1e-6) -> float:
    """Time after which every transient of xi is below ``rel`` of the steady part.

    Never less than ``200 / gamma``; capped at ``EXTRACTION_CAP``.
    """
    D, _ = _dispersion_poly(model, omega_k)
    _, q = _polys(model)
    den = np.polymul([1.0, 1j * omega], D)
    num = np.polymul([1.0, 0.0], q)
    floor_t = 200.0 / model.gamma if model.kind == "lorentz-analytic" and model.gamma > 0 else 0.0
    return min(_settle_time(num, den, -1j * omega, rel, floor_t), EXTRACTION_CAP)


def q_extraction_time(omega: float, model: MediumModel, rel: float = 1e-9) -> float:
    _, qp = _dispersion_poly(model, 0.0)
    _, q = _polys(model)
    den = np.polymul([1.0, 1j * omega], qp)
    return min(_settle_time(q, den, -1j * omega, rel, 1.0), EXTRACTION_CAP)


def extract_steady_xi(omega: float, omega_k: float, model: MediumModel, t: float | None = None,
                      tol: float = DEFAULT_TOL) -> tuple[complex, float]:
    """``(xi(t) e^{i omega t}, t)`` at a large time chosen by :func:`xi_extraction_time`."""
    if t is None:
        t = xi_extraction_time(omega, omega_k, model)
    val = xi_kernel(omega, omega_k, model, t, tol) * np.exp(1j * omega * t)
    return complex(val), float(t)


def extract_steady_q(omega: float, model: MediumModel, t: float | None = None,
                     tol: float = DEFAULT_TOL) -> tuple[complex, float]:
    if t is None:
        t = q_extraction_time(omega, model)
    return complex(q_kernel(omega, model, t, tol) * np.exp(1j * omega * t)), float(t)


@dataclass(frozen=True)
class DecayReport:
    omega_k: float
    T: float
    max_abs_z: float
    lossless: bool
    fitted_rate: float
    pole_rate: float
    amplitude_bound: float
    note: str

    @property
    def rate_agrees(self) -> bool:
        if self.lossless or not np.isfinite(self.fitted_rate) or not np.isfinite(self.pole_rate):
            return False
        return abs(self.fitted_rate - self.pole_rate) <= 0.1 * self.pole_rate

    def summary(self) -> str:
        lines = [
            f"omega_k: {self.omega_k:.15g}",
            f"T: {self.T:.15g}",
            f"max_abs_z: {self.max_abs_z:.6e}",
            f"fitted_rate: {self.fitted_rate:.6e}",
            f"pole_rate: {self.pole_rate:.6e}",
            f"amplitude_bound: {self.amplitude_bound:.6e}",
            f"rate_agrees: {self.rate_agrees}",
            f"note: {self.note}",
        ]
        return "\n".join(lines)


def long_time_decay(omega_k: float, model: MediumModel, T: float, samples: int = 41,
                    floor: float = 1e-7) -> DecayReport:
    """max|z| over [T, 2T], fitted log-slope and the slowest pole decay rate."""
    t = np.linspace(T, 2 * T, samples)
    z = np.asarray(z_kernel(omega_k, model, t, tol=1e-10))
    mag = np.abs(z)
    if model.is_lossless:
        return DecayReport(omega_k, T, float(mag.max()), True, 0.0, 0.0, float(mag.max()),
                           "non-decaying (lossless)")
    pole_rate, bound, note = np.nan, np.nan, "decaying"
    if model.is_analytic:
        poles = find_poles(omega_k, model)
        pole_rate = poles.slowest_decay()
        bound = float(np.sum(np.abs(poles.residues)) * np.exp(-pole_rate * T))
    keep = mag > floor
    if keep.sum() >= 3:
        fitted = float(-np.polyfit(t[keep], np.log(mag[keep]), 1)[0])
    else:
        fitted = np.nan
        note = "decayed below numerical floor; rate not fitted"
    return DecayReport(omega_k, T, float(mag.max()), False, fitted, pole_rate, bound, note)


# --------------------------------------------------------- containers

@dataclass(frozen=True)
class TimeKernel:
    kind: str
    params: tuple[tuple[str, float], ...]
    t: np.ndarray
    values: np.ndarray
    medium_kind: str = field(default="")

    def header(self) -> str:
        items = " ".join(f"{k}={v:.15g}" for k, v in self.params)
        return f"# kernel={self.kind} medium={self.medium_kind} {items}".rstrip()

    def rows(self) -> list[tuple[float, float, float]]:
        return [(float(a), float(b.real), float(b.imag)) for a, b in zip(self.t, self.values)]


def time_kernel(kind: str, model: MediumModel, t, omega_k: float | None = None, omega: float | None = None,
                tol: float = DEFAULT_TOL) -> TimeKernel:
    t = np.asarray(t, dtype=float)
    if kind == "z":
        vals, params = z_kernel(omega_k, model, t, tol), (("omega_k", omega_k),)
    elif kind == "xi":
        vals, params = xi_kernel(omega, omega_k, model, t, tol), (("omega", omega), ("omega_k", omega_k))
    elif kind == "q":
        vals, params = q_kernel(omega, model, t, tol), (("omega", omega),)
    else:
        raise ValueError(f"kernel kind must be one of {KERNELS}")
    return TimeKernel(kind, tuple((k, float(v)) for k, v in params), medium._frozen(t),
                      medium._frozen(np.atleast_1d(vals), complex), model.kind)
