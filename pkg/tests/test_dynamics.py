from __future__ import annotations

import numpy as np
import pytest
import sympy as sp

from lossy_qed import dynamics, greenfn, medium
from lossy_qed.errors import ConvergenceError, DomainError, ResolutionError
from lossy_qed.medium import MediumModel

S, T = sp.symbols("s t", positive=True)


def sympy_inverse(expr, times):
    f = sp.inverse_laplace_transform(sp.apart(expr, S, full=False), S, T)
    f = f.subs(sp.Heaviside(T), 1)
    fn = sp.lambdify(T, f, "numpy")
    return np.array([complex(fn(x)) for x in times])


@pytest.mark.parametrize("F, f", [
    (lambda s: 1 / (s + 2), lambda t: np.exp(-2 * t)),
    (lambda s: 1 / (s * s + 1), np.sin),
    (lambda s: 1 / s ** 2, lambda t: t),
    (lambda s: s / (s * s + 4), lambda t: np.cos(2 * t)),
    (lambda s: 1 / (s + 1j), lambda t: np.exp(-1j * t)),
])
def test_textbook_pairs(F, f):
    for t in (0.1, 1.0, 7.5, 30.0):
        got = dynamics.inverse_laplace(F, t, tol=1e-12, singularity_bound=2.5)
        assert abs(got - f(t)) <= 1e-10 * max(1.0, abs(f(t)))


def test_bromwich_line_route():
    res = dynamics.inverse_laplace_detailed(lambda s: 1 / (s + 2), 1.0, tol=1e-8, method="bromwich")
    assert res.method == "bromwich"
    assert res.value == pytest.approx(np.exp(-2.0), rel=1e-8)


def test_convergence_error_when_budget_too_small():
    with pytest.raises(ConvergenceError):
        dynamics.inverse_laplace(lambda s: 1 / (s * s + 1), 200.0, tol=1e-14, method="talbot", n0=8, nmax=16)


def test_bad_arguments():
    with pytest.raises(ValueError):
        dynamics.inverse_laplace(lambda s: 1 / s, 0.0)
    with pytest.raises(ValueError):
        dynamics.inverse_laplace(lambda s: 1 / s, 1.0, method="stehfest")
    with pytest.raises(ValueError):
        dynamics.time_kernel("w", MediumModel.vacuum(), [1.0], omega_k=1.0)


def test_vacuum_kernels_against_sympy():
    times = np.array([0.3, 2.0, 11.0])
    wk, w = 1.3, 0.7
    z_ref = sympy_inverse((S - sp.I * sp.Rational(13, 10)) / (S ** 2 + sp.Rational(169, 100)), times)
    assert np.allclose(dynamics.z_kernel(wk, MediumModel.vacuum(), times), z_ref, atol=1e-9)
    assert np.allclose(z_ref, np.exp(-1j * wk * times), atol=1e-12)
    xi_ref = sympy_inverse(S / ((S + sp.I * sp.Rational(7, 10)) * (S ** 2 + sp.Rational(169, 100))), times)
    got = dynamics.xi_kernel(w, wk, MediumModel.vacuum(), times, F=1.0)
    assert np.allclose(got, xi_ref, atol=1e-9)
    assert np.all(dynamics.xi_kernel(w, wk, MediumModel.vacuum(), times) == 0)


def test_constant_chi_kernels_against_sympy():
    model = MediumModel.constant(1.25)
    c = sp.Rational(9, 4)
    times = np.array([0.5, 3.0, 20.0])
    z_ref = sympy_inverse((S * c - sp.I) / (S ** 2 * c + 1), times)
    assert np.allclose(dynamics.z_kernel(1.0, model, times), z_ref, atol=1e-9)
    omega_p = 2 / 3
    assert np.allclose(z_ref, np.cos(omega_p * times) - 1j * np.sin(omega_p * times) / 1.5, atol=1e-12)
    q_ref = sympy_inverse(1 / ((S + sp.I / 2) * c), times)
    assert np.allclose(dynamics.q_kernel(0.5, model, times), q_ref, atol=1e-9)
    assert dynamics.q_kernel(0.5, model, 1e-9) == pytest.approx(1 / 2.25, abs=1e-8)


def test_initial_values(lorentz):
    t0 = 1e-9
    assert abs(dynamics.z_kernel(1.0, lorentz, t0) - 1) < 1e-5
    assert abs(dynamics.xi_kernel(1.0, 1.0, lorentz, t0)) < 1e-5
    assert abs(dynamics.q_kernel(1.0, lorentz, t0) - 1) < 1e-5


def test_pole_set_against_companion_matrix(lorentz):
    wk = 1.5
    poles = dynamics.find_poles(wk, lorentz)
    # s^2 (s^2 + g s + w0^2 + wp^2) + wk^2 (s^2 + g s + w0^2)
    g, w0, wp = lorentz.gamma, lorentz.omega_0, lorentz.omega_p
    coeffs = np.array([1.0, g, w0 ** 2 + wp ** 2 + wk ** 2, g * wk ** 2, w0 ** 2 * wk ** 2])
    comp = np.zeros((4, 4))
    comp[0] = -coeffs[1:]
    comp[1:, :3] = np.eye(3)
    s_ref = np.linalg.eigvals(comp)
    got = poles.s_poles
    for s in s_ref:
        assert np.min(np.abs(got - s)) < 1e-10
    assert np.all(poles.decay_rates > 0)
    assert len(poles.to_rows()) == 4


def test_pole_expansion_reproduces_kernel(lorentz):
    poles = dynamics.find_poles(0.8, lorentz)
    t = np.array([0.5, 5.0, 40.0])
    assert np.allclose(poles.evaluate(t), dynamics.z_kernel(0.8, lorentz, t), atol=1e-9)
    assert abs(np.sum(poles.residues) - 1) < 1e-12


def test_poles_need_analytic_model(lorentz_grid):
    with pytest.raises(DomainError):
        dynamics.find_poles(1.0, MediumModel.tabulated(lorentz_grid))


def test_steady_state_matches_transverse_kernel(lorentz):
    for w, wk in [(0.5, 0.8), (1.0, 1.2), (1.8, 0.6)]:
        ss = dynamics.steady_state_xi(w, wk, lorentz)
        assert ss == pytest.approx(dynamics.XI_NORM * greenfn.transverse_kernel(wk, w, lorentz), rel=1e-12)
    assert dynamics.steady_state_q(0.7, lorentz) == pytest.approx(1 / medium.epsilon(lorentz, 0.7), rel=1e-14)


def test_extracted_steady_state(lorentz):
    val, t = dynamics.extract_steady_xi(1.1, 0.9, lorentz)
    assert t >= 200 / lorentz.gamma
    assert abs(val - dynamics.steady_state_xi(1.1, 0.9, lorentz)) < 1e-6 * abs(val)
    q, _ = dynamics.extract_steady_q(1.1, lorentz)
    assert abs(q - dynamics.steady_state_q(1.1, lorentz)) < 1e-6


def test_long_time_decay(lorentz):
    rep = dynamics.long_time_decay(1.0, lorentz, 2000.0)
    assert rep.max_abs_z < 1e-3 and not rep.lossless
    assert rep.max_abs_z <= rep.amplitude_bound * 1.01 + 1e-9
    fit = dynamics.long_time_decay(2.0, lorentz, 200.0)
    assert fit.rate_agrees
    assert fit.fitted_rate == pytest.approx(fit.pole_rate, rel=0.05)
    assert "rate_agrees: True" in fit.summary()


def test_lossless_never_decays():
    rep = dynamics.long_time_decay(1.0, MediumModel.constant(0.5), 200.0)
    assert rep.lossless and not rep.rate_agrees
    assert 1 / np.sqrt(1.5) < rep.max_abs_z <= 1 + 1e-8


def test_laplace_chi_examples(lorentz, lorentz_grid):
    assert dynamics.laplace_chi(lorentz, 1.0) == pytest.approx(0.25 / 2.1, rel=1e-14)
    assert dynamics.laplace_chi(lorentz, 1.0).real == pytest.approx(0.11905, abs=1e-5)
    assert dynamics.laplace_chi(MediumModel.constant(0.3), 2.0 + 1j) == 0.3
    assert dynamics.laplace_chi(MediumModel.vacuum(), 1.0) == 0
    tab = MediumModel.tabulated(lorentz_grid)
    with pytest.raises(DomainError):
        dynamics.laplace_chi(tab, -0.1 + 1j)
    for s in (0.5 + 0.3j, 1.0, 2.0 - 1.0j):
        assert abs(dynamics.laplace_chi(tab, s) - dynamics.laplace_chi(lorentz, s)) < 2e-3


def test_hopfield_laplace_chi_static_limit():
    model = MediumModel.hopfield(alpha_c=1.0, v=0.1)
    assert dynamics.laplace_chi(model, 1e-9) == pytest.approx(medium.chi(model, 1e-9), rel=1e-6)


def test_tabulated_kernel_tracks_analytic(lorentz, lorentz_grid):
    tab = MediumModel.tabulated(lorentz_grid)
    t = np.array([1.0, 5.0])
    assert np.allclose(dynamics.z_kernel(1.0, tab, t), dynamics.z_kernel(1.0, lorentz, t), atol=2e-3)
    with pytest.raises(ResolutionError):
        dynamics.z_kernel(1.0, tab, 1e5)


def test_time_kernel_container(lorentz):
    tk = dynamics.time_kernel("q", lorentz, [1.0, 2.0], omega=0.5)
    assert tk.header() == "# kernel=q medium=lorentz-analytic omega=0.5"
    assert len(tk.rows()) == 2 and tk.rows()[0][0] == 1.0


def test_bromwich_complex_valued():
    res = dynamics.inverse_laplace_detailed(lambda s: 1 / (s + 2 + 1j), 1.0, tol=1e-8, method="bromwich")
    assert res.value == pytest.approx(np.exp(-(2 + 1j)), rel=1e-8)


def test_long_time_kernel_matches_pole_expansion(lorentz):
    # under-resolved contour sums once agreed across doublings on a wrong value here
    k = float(np.linspace(0.6, 2, 20)[7])
    assert abs(dynamics.z_kernel(k, lorentz, 3100.0, tol=1e-10)) < 1e-9
    rng = np.random.default_rng(5)
    for k in rng.uniform(0.3, 3.0, 6):
        t = rng.uniform(500, 6000, 4)
        z = dynamics.z_kernel(float(k), lorentz, t, tol=1e-10)
        assert np.max(np.abs(z - dynamics.find_poles(float(k), lorentz).evaluate(t))) < 1e-8


def test_node_budget_exhausted_is_reported():
    with pytest.raises(ConvergenceError, match="resolve"):
        dynamics.inverse_laplace(lambda s: 1 / (s * s + 1), 1e6, singularity_bound=1.2, method="talbot")
