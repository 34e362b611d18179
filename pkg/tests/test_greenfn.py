from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from lossy_qed import greenfn, medium
from lossy_qed.errors import PoleError, SingularPermittivityError
from lossy_qed.medium import MediumModel


def random_unit(rng):
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def test_vacuum_example():
    trans, longi = greenfn.green_tensor_parts([0.0, 0.0, 1.0], 2.0, 1.0)
    assert trans[0, 0] == pytest.approx(-1 / 3, rel=1e-15)
    assert longi[2, 2] == pytest.approx(-1 / 4, rel=1e-15)
    assert trans[2, 2] == 0 and longi[0, 0] == 0


def test_inverse_against_linear_solve():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        k = rng.uniform(0.1, 5.0) * random_unit(rng)
        omega = rng.uniform(0.1, 5.0)
        eps = complex(rng.uniform(0.2, 4.0), rng.uniform(0.0, 2.0))
        if abs(k @ k - omega ** 2 * eps) < 1e-3:
            continue
        G = greenfn.green_tensor(k, omega, eps)
        oracle = np.linalg.solve(greenfn.maxwell_operator(k, omega, eps), np.eye(3))
        worst = max(worst, np.linalg.norm(G - oracle) / np.linalg.norm(oracle))
    assert worst < 1e-10


def test_operator_matches_explicit_matrix():
    k = np.array([0.3, -1.2, 0.7])
    omega, eps = 1.3, 2.0 + 0.4j
    explicit = (k @ k) * np.eye(3) - np.outer(k, k) - omega ** 2 * eps * np.eye(3)
    assert np.allclose(greenfn.maxwell_operator(k, omega, eps), explicit, atol=1e-15)


def test_transversality_and_parity():
    rng = np.random.default_rng(3)
    for _ in range(20):
        k = rng.uniform(0.2, 3) * random_unit(rng)
        trans, longi = greenfn.green_tensor_parts(k, 1.1, 1.5 + 0.2j)
        assert np.max(np.abs(trans @ k)) < 1e-14
        assert np.max(np.abs(longi - np.outer(k, k) @ longi / (k @ k))) < 1e-14
        assert np.allclose(greenfn.green_tensor(-k, 1.1, 1.5 + 0.2j), greenfn.green_tensor(k, 1.1, 1.5 + 0.2j),
                           rtol=0, atol=1e-15)


def test_zero_wavevector():
    G = greenfn.green_tensor([0, 0, 0], 2.0, 1.0)
    assert np.allclose(G, -np.eye(3) / 4)
    with pytest.raises(ValueError):
        greenfn.green_tensor_parts([0, 0, 0], 2.0, 1.0)
    trans, longi = greenfn.green_tensor_parts([0, 0, 0], 2.0, 1.0, direction=[0, 0, 1])
    assert np.allclose(trans + longi, G)


def test_single_bracket_equals_inverse():
    rng = np.random.default_rng(11)
    for _ in range(30):
        k = rng.uniform(0.1, 4) * random_unit(rng)
        omega = rng.uniform(0.2, 3)
        eps = complex(rng.uniform(0.5, 3), rng.uniform(0, 1))
        G = greenfn.green_tensor(k, omega, eps)
        assert np.allclose(greenfn.green_tensor_single_bracket(k, omega, eps), G, rtol=1e-12, atol=1e-14)


def test_printed_bracket_is_not_the_inverse():
    assert greenfn.printed_bracket_discrepancy([0, 0, 1.0], 2.0, 1.0) < 1e-16
    assert greenfn.printed_bracket_discrepancy([0, 0, 1.0], 2.0, 2.0 + 0.1j) > 0.1


def test_errors():
    with pytest.raises(PoleError):
        greenfn.green_tensor([0, 0, 2.0], 2.0, 1.0)
    with pytest.raises(SingularPermittivityError):
        greenfn.green_tensor([0, 0, 1.0], 1.0, 0.0)
    with pytest.raises(ValueError):
        greenfn.green_tensor([0, 0, 1.0], -1.0, 1.0)
    with pytest.raises(ValueError):
        greenfn.AmplitudeKernel(1.0, 1.0, "diagonal", 0j)


def test_transverse_kernel_lorentz(lorentz):
    for omega, k in [(0.5, 0.3), (1.0, 1.0), (1.7, 2.4)]:
        re, im = medium.chi(lorentz, omega).real, medium.chi(lorentz, omega).imag
        # independent closed form for the Lorentz permittivity
        chi = lorentz.omega_p ** 2 / complex(lorentz.omega_0 ** 2 - omega ** 2, -lorentz.gamma * omega)
        assert complex(re, im) == pytest.approx(chi, rel=1e-14)
        expected = omega * np.sqrt(chi.imag) / (k * k - omega ** 2 * (1 + chi))
        assert greenfn.transverse_kernel(k, omega, lorentz) == pytest.approx(expected, rel=1e-13)


def test_transverse_kernel_lossless_is_zero():
    assert greenfn.transverse_kernel(1.0, 0.5, MediumModel.constant(1.0)) == 0


def test_longitudinal_forms(lorentz):
    for omega in (0.4, 1.0, 2.5):
        a, e = greenfn.longitudinal_kernel(omega, lorentz)
        assert e == pytest.approx(1j * omega * a, rel=1e-14)
        eps = 1 + medium.chi(lorentz, omega)
        assert e == pytest.approx(1j * np.sqrt(eps.imag) / eps, rel=1e-14)


def test_longitudinal_resonance_raises():
    model = MediumModel.lorentz(0.5, 1e-14)
    wl = brentq(lambda w: medium.epsilon(model, w).real, 1.01, 1.5, xtol=1e-16)
    assert wl == pytest.approx(np.sqrt(1.25), rel=1e-12)
    assert model.longitudinal_frequency == pytest.approx(wl, rel=1e-12)
    with pytest.raises(PoleError):
        greenfn.longitudinal_kernel(wl, model)


def test_noise_commutator_examples(lorentz):
    assert medium.im_chi(lorentz, 1.0) == pytest.approx(2.5, rel=1e-14)
    assert greenfn.noise_commutator_norm(lorentz, 1.0) == pytest.approx(5.0, rel=1e-14)
    assert greenfn.noise_commutator_norm(MediumModel.constant(2.0), 1.0) == 0


def test_noise_commutator_two_routes(lorentz_grid):
    spec = medium.coupling_from_im_chi(lorentz_grid)
    x = np.linspace(0.2, 5, 40)
    lhs = greenfn.noise_commutator_from_coupling(spec, x)
    rhs = 2 * np.interp(x, lorentz_grid.omega, lorentz_grid.chi.imag)
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=0)


def test_kernel_grid_layout(lorentz):
    grid = greenfn.kernel_grid(lorentz, [0.5, 1.5], [0.2, 0.4, 0.8])
    assert len(grid) == 8
    assert [g.polarization for g in grid[:4]] == ["transverse"] * 3 + ["longitudinal"]
    assert grid[3].value == greenfn.longitudinal_kernel(0.5, lorentz)[0]
    assert len(grid[0].row()) == 5


def test_field_norm():
    assert greenfn.FIELD_NORM == pytest.approx(1 / np.sqrt(8 * np.pi ** 4), rel=1e-15)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.1, 5), st.floats(0.1, 5), st.floats(0.2, 4), st.floats(0, 2),
       st.floats(-1, 1), st.floats(0, 2 * np.pi))
def test_inverse_property(kmag, omega, re_eps, im_eps, cz, phi):
    eps = complex(re_eps, im_eps)
    if abs(kmag ** 2 - omega ** 2 * eps) < 1e-3:
        return
    s = np.sqrt(1 - cz * cz)
    k = kmag * np.array([s * np.cos(phi), s * np.sin(phi), cz])
    G = greenfn.green_tensor(k, omega, eps)
    prod = greenfn.maxwell_operator(k, omega, eps) @ G
    assert np.max(np.abs(prod - np.eye(3))) < 1e-9
