from __future__ import annotations

import numpy as np
import pytest

from lossy_qed import medium

ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def lorentz():
    return medium.MediumModel.lorentz(0.5, 0.1)


@pytest.fixture(scope="session")
def lorentz_grid(lorentz):
    return medium.sample(lorentz)


def lorentz_chi_oracle(omega, omega_p=0.5, gamma=0.1, omega_0=1.0):
    """Closed-form real and imaginary parts, written out independently of the package."""
    omega = np.asarray(omega, dtype=float)
    d = (omega_0 ** 2 - omega ** 2) ** 2 + gamma ** 2 * omega ** 2
    return omega_p ** 2 * (omega_0 ** 2 - omega ** 2) / d, omega_p ** 2 * gamma * omega / d


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
