from __future__ import annotations

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from lossy_qed import hopfield, medium
from lossy_qed.errors import RangeError, StabilityError
from lossy_qed.hopfield import BogoliubovCoefficients, QuadraticForm, ReservoirDiscretization
from lossy_qed.medium import MediumModel


def weak(v=0.02, **kw):
    return MediumModel.hopfield(alpha_c=1.0, v=v, **kw)


def diag(model, n, method="auto", lo=1e-2, hi=20.0):
    disc = ReservoirDiscretization.gauss_legendre(n, lo, hi)
    form = hopfield.build_matter_hamiltonian(model, disc)
    return form, hopfield.bogoliubov_diagonalize(form, method)


def test_discretization_invariants():
    d = ReservoirDiscretization.gauss_legendre(50, 0.01, 10.0)
    assert d.weights.sum() == pytest.approx(9.99, rel=1e-13)
    with pytest.raises(ValueError):
        ReservoirDiscretization([1.0], [1.0])
    with pytest.raises(ValueError):
        ReservoirDiscretization([1.0, 0.5], [1.0, 1.0])
    with pytest.raises(ValueError):
        ReservoirDiscretization([0.5, 1.0], [1.0, -1.0])


def test_decoupled_form():
    disc = ReservoirDiscretization.gauss_legendre(20)
    form = hopfield.build_matter_hamiltonian(weak(v=0.0), disc)
    assert np.array_equal(form.A, np.diag(np.concatenate([[1.0], disc.omega])))
    assert not np.any(form.B)
    coeffs = hopfield.bogoliubov_diagonalize(form)
    assert np.allclose(np.sort(coeffs.frequencies), np.sort(np.diag(form.A)), rtol=0, atol=1e-14)
    assert np.allclose(np.abs(coeffs.alpha), np.abs(np.eye(21))[np.argsort(np.argsort(np.diag(form.A)))], atol=1e-14) or \
        np.allclose(np.abs(coeffs.alpha) @ np.abs(coeffs.alpha).T, np.eye(21), atol=1e-14)
    assert not np.any(np.abs(coeffs.beta) > 1e-14)


def test_two_node_renormalized_frequency():
    disc = ReservoirDiscretization([0.5, 1.5], [1.0, 1.0])
    form = hopfield.build_matter_hamiltonian(MediumModel.hopfield(alpha_c=1.0, v=0.1), disc)
    assert form.A[0, 0] == pytest.approx(np.sqrt(1.02), rel=1e-15)
    assert form.A[0, 0] == pytest.approx(1.00995, abs=1e-5)
    c = 0.1 * np.sqrt(np.array([0.5, 1.5]) / np.sqrt(1.02))
    assert np.allclose(form.A[0, 1:], c / 2) and np.allclose(form.B[0, 1:], c / 2)


def test_single_mode_squeezing_against_dense_solver():
    form = QuadraticForm(np.array([[1.0]]), np.array([[0.1]]))
    oracle = np.linalg.eigvals(np.array([[1.0, 0.1], [-0.1, -1.0]]))
    expected = float(np.max(oracle.real))
    for method in ("reduced", "dynamical"):
        c = hopfield.bogoliubov_diagonalize(form, method)
        assert c.frequencies[0] == pytest.approx(expected, rel=1e-14)
        assert c.frequencies[0] == pytest.approx(np.sqrt(0.99), rel=1e-14)
        assert c.normalization()[0] == pytest.approx(1.0, abs=1e-14)


def test_spectrum_matches_dense_solver():
    model = weak(v=0.05, band=(0.01, 10.0))
    disc = ReservoirDiscretization.gauss_legendre(500, 0.01, 10.0)
    form = hopfield.build_matter_hamiltonian(model, disc)
    M = form.dimension
    dense = np.linalg.eigvals(np.block([[form.A, form.B], [-form.B, -form.A]]))
    assert np.max(np.abs(dense.imag)) < 1e-10
    positive = np.sort(dense.real[dense.real > 0])
    assert len(positive) == M
    coeffs = hopfield.bogoliubov_diagonalize(form)
    assert np.all(coeffs.frequencies > 0)
    assert np.allclose(coeffs.frequencies, positive, rtol=1e-10, atol=0)
    assert np.max(np.abs(coeffs.normalization() - 1)) < 1e-10


@pytest.mark.parametrize("method", ["reduced", "dynamical"])
def test_reconstruction_and_column_normalization(method):
    form, coeffs = diag(weak(v=0.1), 200, method)
    A, B = hopfield.reconstruct(coeffs)
    assert np.linalg.norm(A - form.A) / np.linalg.norm(form.A) < 1e-8
    assert np.linalg.norm(B - form.B) / np.linalg.norm(form.A) < 1e-8
    assert np.max(np.abs(coeffs.column_normalization() - 1)) < 1e-10
    assert np.all(coeffs.alpha0.real > 0) and not np.any(coeffs.alpha0.imag)


def test_methods_agree():
    _, a = diag(weak(v=0.1), 150, "reduced")
    _, b = diag(weak(v=0.1), 150, "dynamical")
    assert np.allclose(a.frequencies, b.frequencies, rtol=1e-12)
    assert np.allclose(a.alpha0, b.alpha0, atol=1e-10)
    assert np.allclose(a.beta0, b.beta0, atol=1e-10)


def test_unstable_form_rejected():
    form = QuadraticForm(np.array([[1.0]]), np.array([[2.0]]))
    for method in ("reduced", "dynamical"):
        with pytest.raises(StabilityError):
            hopfield.bogoliubov_diagonalize(form, method)


def test_complex_form_uses_dynamical_path():
    A = np.array([[1.0, 0.1j], [-0.1j, 2.0]])
    B = np.array([[0.05, 0.02], [0.02, 0.0]])
    form = QuadraticForm(A, B)
    c = hopfield.bogoliubov_diagonalize(form)
    A2, B2 = hopfield.reconstruct(c)
    assert np.allclose(A2, A, atol=1e-12) and np.allclose(B2, B, atol=1e-12)


def test_hopfield_ratio_examples():
    assert hopfield.hopfield_ratio(1.0, 1.0) == 0
    assert hopfield.hopfield_ratio(3.0, 1.0) == 0.5
    assert hopfield.hopfield_ratio(1e-12, 1.0) == pytest.approx(-1.0, abs=1e-11)


def test_ratio_check_decoupled_is_vacuous():
    form, coeffs = diag(weak(v=0.0), 30)
    rep = hopfield.ratio_check(coeffs, form.omega_tilde, 0.02)
    assert rep.considered == 1 and rep.passed and rep.max_dev == 0


def test_ratio_check_weak_coupling():
    form, coeffs = diag(weak(), 1000, "dynamical")
    rep = hopfield.ratio_check(coeffs, form.omega_tilde, 0.02)
    assert rep.passed and rep.considered == 1001


def test_ratio_deviation_does_not_grow():
    devs = []
    for n in (250, 500, 1000, 2000):
        form, coeffs = diag(weak(), n)
        devs.append(hopfield.ratio_check(coeffs, form.omega_tilde, 0.02).max_dev)
    for prev, cur in zip(devs, devs[1:]):
        assert cur <= max(prev, 1e-10)


def test_strong_coupling_reports_without_raising():
    form, coeffs = diag(weak(v=0.5), 300)
    rep = hopfield.ratio_check(coeffs, form.omega_tilde, 0.02)
    assert np.isfinite(rep.max_dev)


def test_coupling_g_examples():
    assert hopfield.coupling_g(1.0, 0.0) == 1j
    assert hopfield.coupling_g(0.5, 0.5) == 1j
    assert hopfield.coupling_g(1.0, hopfield.hopfield_ratio(3.0, 1.0)) == 1.5j


def test_minimal_coupling_examples():
    model = MediumModel.hopfield(alpha_c=1.0, v=0.0)
    assert hopfield.minimal_coupling_F(0.3, 0.3, model, 1.0) == 0
    assert hopfield.minimal_coupling_F(1.0, 0.0, model, 1.0) == pytest.approx(-np.sqrt(0.5), rel=1e-15)
    # omega = 3, omega_tilde = 1: beta0 = 0.5 alpha0
    assert hopfield.minimal_coupling_F(1.0, 0.5, model, 1.0) == pytest.approx(-0.5 * np.sqrt(0.5), rel=1e-15)


def test_consistency_identity_symbolic():
    a, w, wt = sp.symbols("alpha omega omega_t", positive=True)
    b = (w - wt) / (w + wt) * a
    assert sp.simplify((a - b) ** 2 - wt ** 2 / w ** 2 * (a + b) ** 2) == 0


def test_imchi_consistency_exact_pairs():
    model = MediumModel.hopfield(alpha_c=1.0, v=0.0)
    rep = hopfield.imchi_consistency(1.0, hopfield.hopfield_ratio(2.0, 1.0), 2.0, model, 1.0)
    assert rep.max_dev < 1e-12
    rep = hopfield.imchi_consistency(0.7, 0.0, 1.0, model, 1.0)
    assert rep.max_dev < 1e-15
    w = np.geomspace(0.05, 20, 300)
    a0 = np.linspace(0.1, 2.0, 300)
    rep = hopfield.imchi_consistency(a0, hopfield.hopfield_ratio(w, 1.3) * a0, w, model, 1.3)
    assert rep.max_dev < 1e-12
    # literal omega_0 reading differs by omega_0 / omega_tilde
    assert np.allclose(rep.bare_over_mc, 1.0 / 1.3, rtol=1e-12)


def test_imchi_consistency_numerical_coefficients():
    form, coeffs = diag(weak(), 600)
    keep = np.abs(coeffs.alpha0) > 1e-8
    rep = hopfield.imchi_consistency(coeffs.continuum_alpha0()[keep], coeffs.continuum_beta0()[keep],
                                     coeffs.frequencies[keep], weak(), form.omega_tilde)
    assert rep.max_dev < 0.04


def test_chi_from_fano_identities():
    model = weak(v=0.1)
    form, coeffs = diag(model, 800)
    im = hopfield.fano_im_chi(coeffs, model)
    m = coeffs.nearest_mode(1.2)
    val = hopfield.chi_from_fano(coeffs, model, coeffs.frequencies[m])
    f2 = model.alpha_c ** 2 * form.omega_tilde / (model.rho * coeffs.frequencies[m] ** 2) * \
        np.abs(hopfield.coupling_g(coeffs.continuum_alpha0()[m], coeffs.continuum_beta0()[m])) ** 2
    assert val.imag == pytest.approx(0.5 * np.pi * f2, rel=1e-12)
    grid = medium.SusceptibilityGrid(coeffs.frequencies, 1j * im)
    assert hopfield.chi_from_fano(coeffs, model, 1.2).real == pytest.approx(
        medium.kk_real_from_imag(grid, 1.2), rel=1e-3)
    with pytest.raises(RangeError):
        hopfield.chi_from_fano(coeffs, model, 25.0)


def test_chi_from_fano_zero_coupling():
    model = MediumModel.hopfield(alpha_c=0.0, v=0.1)
    _, coeffs = diag(model, 200)
    assert hopfield.chi_from_fano(coeffs, model, 1.2) == 0


def test_chi_from_fano_converges_to_continuum():
    model = weak(v=0.3)
    x = np.array([0.5, 1.5, 3.0])
    exact = medium.chi(model, x)
    errs = []
    for n in (500, 2000):
        _, coeffs = diag(model, n)
        errs.append(np.max(np.abs(hopfield.chi_from_fano(coeffs, model, x) - exact) / np.abs(exact)))
    assert errs[1] < errs[0] and errs[1] < 0.05


def test_f_sum_rule_prefers_renormalized_reading():
    model = weak(v=0.3)
    _, coeffs = diag(model, 800)
    rule = hopfield.f_sum_rule(coeffs, model)
    assert rule["renormalized"] == pytest.approx(rule["exact"], rel=1e-10)
    assert rule["bare"] == pytest.approx(rule["exact"] * model.omega_0 / model.omega_tilde, rel=1e-10)


def test_lambda_coupling_metadata():
    model = MediumModel.hopfield(alpha_c=1.0, v=0.0)
    assert hopfield.lambda_coupling(0.0, model, 1.0) == pytest.approx(1.0)
    assert hopfield.lambda_coupling(np.sqrt(3.0), model, 1.0) == pytest.approx(np.sqrt(0.5))


def test_csv_rows_rescaled():
    _, coeffs = diag(weak(), 50)
    rows = coeffs.to_rows()
    assert len(rows) == 51
    m = 10
    assert rows[m][1] == pytest.approx(coeffs.alpha0[m].real / np.sqrt(coeffs.mode_weights[m]))


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 12), st.floats(0.0, 0.3), st.integers(0, 10 ** 6))
def test_random_stable_forms(n, strength, seed):
    rng = np.random.default_rng(seed)
    freqs = np.sort(rng.uniform(0.5, 3.0, n))
    A = np.diag(freqs) + strength * 0.1 * (lambda X: X + X.T)(rng.normal(size=(n, n)))
    B = strength * 0.1 * (lambda X: X + X.T)(rng.normal(size=(n, n)))
    form = QuadraticForm(A, B)
    try:
        coeffs = hopfield.bogoliubov_diagonalize(form)
    except StabilityError:
        return
    assert np.max(np.abs(coeffs.normalization() - 1)) < 1e-10
    A2, B2 = hopfield.reconstruct(coeffs)
    assert np.allclose(A2, A, atol=1e-9) and np.allclose(B2, B, atol=1e-9)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.0, 0.2), st.integers(20, 120))
def test_ratio_identity_property(v, n):
    form, coeffs = diag(weak(v=v), n)
    assert hopfield.ratio_check(coeffs, form.omega_tilde, 1e-8).passed
