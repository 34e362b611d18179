"""Cross-scheme equivalence checks.

Three routes to the same field amplitudes are compared point by point:

* damped polarization (Fano diagonalization), field kernels written from chi;
* phenomenological Green function (``greenfn``);
* minimal coupling, via large-t extraction of the Laplace kernels (``dynamics``).

Each comparison produces per-point relative deviations for named method
pairs.  Pairs are either asserted against a tolerance or only reported
(known sign discrepancies in printed formulas are quantified, never
treated as physics).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import dynamics, greenfn, hopfield, medium
from ._parallel import pmap
from .hopfield import BogoliubovCoefficients, ReservoirDiscretization
from .medium import MediumModel

RESONANCE_GUARD = 1e-6
IDENTITY_TOL = 1e-12
LONGITUDINAL_NORM = 1j / math.sqrt(math.pi)


@dataclass(frozen=True)
class PointResult:
    omega: float
    k: float | None
    pair: str
    rel_dev: float
    flag: str


@dataclass(frozen=True)
class PairSpec:
    tol: float
    asserted: bool
    description: str


def _rel(a: complex, b: complex) -> float:
    scale = max(abs(a), abs(b))
    return 0.0 if scale == 0 else abs(a - b) / scale


@dataclass(frozen=True)
class EquivalenceReport:
    name: str
    model_kind: str
    pairs: dict[str, PairSpec]
    points: tuple[PointResult, ...]
    normalization: dict[str, str] = field(default_factory=dict)
    notes: tuple[str, ...] = ()
    vacuous: bool = False

    def _devs(self, pair: str) -> np.ndarray:
        return np.array([p.rel_dev for p in self.points if p.pair == pair and p.flag != "excluded"])

    def max_dev(self, pair: str) -> float:
        d = self._devs(pair)
        return float(d.max()) if d.size else 0.0

    def rms_dev(self, pair: str) -> float:
        d = self._devs(pair)
        return float(np.sqrt(np.mean(d ** 2))) if d.size else 0.0

    def excluded(self, pair: str) -> int:
        return sum(1 for p in self.points if p.pair == pair and p.flag == "excluded")

    def pair_passed(self, pair: str) -> bool:
        spec = self.pairs[pair]
        return (not spec.asserted) or self.max_dev(pair) <= spec.tol

    @property
    def passed(self) -> bool:
        return all(self.pair_passed(p) for p in self.pairs)

    def summary(self) -> str:
        lines = [f"report: {self.name}", f"medium: {self.model_kind}", f"passed: {self.passed}"]
        if self.vacuous:
            lines.append("vacuous: True")
        for name, spec in self.pairs.items():
            status = ("pass" if self.pair_passed(name) else "FAIL") if spec.asserted else "reported"
            lines.append(f"pair {name}: {status} max={self.max_dev(name):.6e} rms={self.rms_dev(name):.6e} "
                         f"tol={spec.tol:.3e} excluded={self.excluded(name)} ({spec.description})")
        for key, val in self.normalization.items():
            lines.append(f"normalization {key}: {val}")
        for note in self.notes:
            lines.append(f"note: {note}")
        return "\n".join(lines) + "\n"

    def rows(self) -> list[tuple]:
        return [(p.omega, p.k, p.pair, p.rel_dev, p.flag) for p in self.points]


def _flag(dev: float, spec: PairSpec) -> str:
    if not spec.asserted:
        return "reported"
    return "ok" if dev <= spec.tol else "fail"


# ------------------------------------------------------------ transverse

def _printed_damped_kernel(k: float, omega: float, eps: complex) -> complex:
    # damped-polarization transverse coefficient with the "+" denominator as it is usually printed
    return omega * math.sqrt(max(eps.imag, 0.0)) / (k * k + omega ** 2 * eps)


def compare_transverse(omegas, ks, model: MediumModel, tol: float = 1e-4, dynamics_check: bool = True,
                       extraction_rel: float = 1e-6) -> EquivalenceReport:
    """Per (omega, k): Green kernel vs closed-form steady state vs time-evolved xi.

    Pairs: ``green-vs-steady`` (shared formula, 1e-12), ``steady-vs-dynamics``
    (large-t extraction, ``tol``) and ``printed-sign-vs-green`` (reported only).
    Points with ``|k^2 - omega^2 eps| < 1e-6`` are excluded.
    """
    pairs = {
        "green-vs-steady": PairSpec(IDENTITY_TOL, True, "transverse Green kernel vs steady-state xi coefficient"),
        "steady-vs-dynamics": PairSpec(tol, True, "steady-state coefficient vs large-t numerical xi"),
        "printed-sign-vs-green": PairSpec(0.0, False, "denominator k^2 + omega^2 eps vs k^2 - omega^2 eps"),
    }
    notes = []
    lossless = model.is_lossless
    run_dyn = dynamics_check and not lossless
    if dynamics_check and not lossless and not model.is_analytic:
        run_dyn = False
        notes.append("steady-vs-dynamics skipped: large-t extraction needs an analytic (pole-resolved) model")
    if lossless:
        notes.append("all kernels zero (lossless medium): vacuous pass")
    if not run_dyn:
        del pairs["steady-vs-dynamics"]

    grid = [(float(w), float(k)) for w in omegas for k in ks]

    def point(wk):
        w, k = wk
        eps = complex(medium.epsilon(model, w))
        den = k * k - w * w * eps
        out = []
        if abs(den) < RESONANCE_GUARD:
            for name in pairs:
                out.append(PointResult(w, k, name, 0.0, "excluded"))
            return out
        green = dynamics.XI_NORM * greenfn.transverse_kernel(k, w, model)
        steady = dynamics.steady_state_xi(w, k, model)
        d = _rel(green, steady)
        out.append(PointResult(w, k, "green-vs-steady", d, _flag(d, pairs["green-vs-steady"])))
        if run_dyn:
            t = dynamics.xi_extraction_time(w, k, model, extraction_rel)
            num, _ = dynamics.extract_steady_xi(w, k, model, t)
            d = abs(num - steady) / abs(steady) if steady != 0 else abs(num)
            out.append(PointResult(w, k, "steady-vs-dynamics", d, _flag(d, pairs["steady-vs-dynamics"])))
        raw = green / dynamics.XI_NORM
        printed = _printed_damped_kernel(k, w, eps)
        out.append(PointResult(w, k, "printed-sign-vs-green", _rel(printed, raw), "reported"))
        return out

    points = tuple(p for chunk in pmap(point, grid) for p in chunk)
    norm = {
        "field_prefactor": f"{greenfn.FIELD_NORM:.15g} (sqrt(hbar/(8 pi^4 eps0)), factored out of every kernel)",
        "steady_over_green": "-i/sqrt(pi) (F = sqrt(Im chi/pi))",
    }
    return EquivalenceReport("transverse", model.kind, pairs, points, norm, tuple(notes), lossless)


# ---------------------------------------------------------- longitudinal

def compare_longitudinal(omegas, model: MediumModel, tol: float = 1e-6, dynamics_check: bool = True) -> EquivalenceReport:
    """Longitudinal E-field kernel from the three routes.

    Pairs: ``fano-vs-green`` (``i sqrt(Im chi)/(1 + chi)`` vs ``i omega`` times
    the Green A-form, 1e-12) and ``green-vs-minimal`` (``-F Q_ss`` from the
    time-evolved Q kernel, rescaled by ``i/sqrt(pi)``, ``tol``).  Points with
    ``|1 + chi| < 1e-6`` are excluded.
    """
    pairs = {
        "fano-vs-green": PairSpec(IDENTITY_TOL, True, "damped-polarization E-form vs i*omega*Green A-form"),
        "green-vs-minimal": PairSpec(tol, True, "Green E-form vs -F * steady Q from the Laplace kernel"),
    }
    notes = []
    lossless = model.is_lossless
    run_dyn = dynamics_check and not lossless and model.is_analytic
    if lossless:
        notes.append("all kernels zero (lossless medium): vacuous pass")
    elif dynamics_check and not model.is_analytic:
        notes.append("green-vs-minimal uses the closed-form steady Q: large-t extraction needs an analytic model")

    def point(w):
        w = float(w)
        eps = complex(medium.epsilon(model, w))
        if abs(eps) < RESONANCE_GUARD:
            return [PointResult(w, None, name, 0.0, "excluded") for name in pairs]
        a_form, e_form = greenfn.longitudinal_kernel(w, model)
        fano = 1j * math.sqrt(eps.imag) / eps
        d1 = _rel(fano, 1j * w * a_form)
        if run_dyn:
            q_ss, _ = dynamics.extract_steady_q(w, model)
        else:
            q_ss = dynamics.steady_state_q(w, model)
        F = complex(medium.coupling_function(model, w))
        minimal = -F * q_ss / medium.EPS0
        d2 = _rel(minimal, LONGITUDINAL_NORM * e_form)
        return [PointResult(w, None, "fano-vs-green", d1, _flag(d1, pairs["fano-vs-green"])),
                PointResult(w, None, "green-vs-minimal", d2, _flag(d2, pairs["green-vs-minimal"]))]

    points = tuple(p for chunk in pmap(point, list(omegas)) for p in chunk)
    norm = {"minimal_over_green": "i/sqrt(pi) (F = sqrt(Im chi/pi))"}
    return EquivalenceReport("longitudinal", model.kind, pairs, points, norm, tuple(notes), lossless)


# ------------------------------------------------------------ commutators

def commutator_suite(model: MediumModel, disc: ReservoirDiscretization | None = None, tol: float = 0.04,
                     omegas=None, coeffs: BogoliubovCoefficients | None = None,
                     norm_tol: float = 1e-10) -> EquivalenceReport:
    """Fluctuation-dissipation and commutator checks.

    ``noise-vs-coupling``: 2 Im chi vs the coupling route (1e-12, any model).
    ``fano-vs-minimal``: Im chi of the diagonalized matter model computed the
    damped-polarization way vs pi |F|^2 with F from the same coefficients
    (``tol``).  ``symplectic``: |alpha|^2 - |beta|^2 = 1 per eigenmode
    (``norm_tol``).  The last two need a hopfield-microscopic model;
    ``coeffs`` may be supplied directly (e.g. with the exact ratio imposed).
    """
    if omegas is None:
        omegas = np.geomspace(0.05, 10.0, 50)
    omegas = np.asarray(omegas, dtype=float)
    pairs = {"noise-vs-coupling": PairSpec(IDENTITY_TOL, True, "2 Im chi vs 2 pi |F|^2 (F from Im chi)")}
    notes = []
    points = []
    grid = medium.sample(model, omegas)
    spectrum = medium.coupling_from_im_chi(grid)
    direct = greenfn.noise_commutator_norm(model, omegas)
    routed = greenfn.noise_commutator_from_coupling(spectrum, omegas)
    spec = pairs["noise-vs-coupling"]
    for w, a, b in zip(omegas, direct, routed):
        d = _rel(a, b)
        points.append(PointResult(float(w), None, "noise-vs-coupling", d, _flag(d, spec)))

    micro = model.kind == "hopfield-microscopic"
    if coeffs is None and micro and disc is not None:
        coeffs = hopfield.bogoliubov_diagonalize(hopfield.build_matter_hamiltonian(model, disc))
    if coeffs is not None and micro:
        pairs["fano-vs-minimal"] = PairSpec(tol, True, "damped-polarization Im chi vs pi |F|^2 from the same coefficients")
        pairs["symplectic"] = PairSpec(norm_tol, True, "per-eigenmode |alpha|^2 - |beta|^2 - 1")
        keep = np.abs(coeffs.alpha0) > hopfield.ALPHA0_FLOOR
        w_t = coeffs.omega_tilde if coeffs.omega_tilde is not None else model.omega_tilde
        cons = hopfield.imchi_consistency(coeffs.continuum_alpha0()[keep], coeffs.continuum_beta0()[keep],
                                          coeffs.frequencies[keep], model, w_t)
        for w, d in zip(cons.omega, cons.rel_dev):
            points.append(PointResult(float(w), None, "fano-vs-minimal", float(d), _flag(float(d), pairs["fano-vs-minimal"])))
        for w, n in zip(coeffs.frequencies, coeffs.normalization()):
            d = abs(float(n) - 1.0)
            points.append(PointResult(float(w), None, "symplectic", d, _flag(d, pairs["symplectic"])))
        ratio = cons.bare_over_mc
        finite = ratio[np.isfinite(ratio)]
        if finite.size:
            notes.append(f"reading omega_0 literally (bare) scales the damped-polarization Im chi by "
                         f"{np.median(finite):.6g} (omega_0/omega_tilde = {model.omega_0 / w_t:.6g})")
    elif micro:
        notes.append("no reservoir discretization supplied: diagonalization checks skipped")
    else:
        notes.append("diagonalization checks need a hopfield-microscopic model; skipped")
    return EquivalenceReport("commutator", model.kind, pairs, tuple(points), {}, tuple(notes), False)
