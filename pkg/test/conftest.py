"""
Shared fixtures: scenario channels, seeded generators and small hand-built families
"""

import math
import os

import numpy as np
import pytest

from seqmetrology.channels import (
    DerivativeMode,
    KrausChannel,
    ParamChannel,
    TransitionMatrix,
    kraus_to_transition,
)
from seqmetrology.config import reload_settings
from seqmetrology.scenarios import SIGMA_X, SIGMA_Z, dephasing, heisenberg_noisy, qutrit_decay

SHIFT = np.array([[0, 0, 1], [1, 0, 0], [0, 1, 0]], dtype=np.complex128)
X3 = np.array([[0, 1, 0], [1, 0, 0], [0, 0, 1]], dtype=np.complex128)


@pytest.fixture(autouse=True)
def fresh_settings(monkeypatch):
    """Every test starts from config.yaml without SEQMET_* overrides"""
    for key in list(os.environ):
        if key.startswith("SEQMET_"):
            monkeypatch.delenv(key)
    reload_settings()
    yield
    reload_settings()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def dephasing_linear():
    """p(θ) = θ, φ = π/4, at θ₀ = 0"""
    return dephasing(lambda theta: theta, lambda theta: math.pi / 4, 0.0, p_dot=1.0, phi_dot=0.0)


@pytest.fixture
def qutrit():
    return qutrit_decay(0.0)


@pytest.fixture
def heisenberg():
    return heisenberg_noisy(1.0, (0.1, 0.2, 0.3), (0.3, 0.7, 1.1, 1.9), 0.5)


def static_family(t: TransitionMatrix, name: str = "static") -> ParamChannel:
    zero = np.zeros_like(t.t)
    return ParamChannel(
        family=lambda theta: t,
        theta0=0.0,
        derivative_mode=DerivativeMode.analytic(lambda: zero),
        name=name,
    )


def unitary_family(generator: np.ndarray, theta0: float = 0.0) -> ParamChannel:
    """θ ↦ exp(-iθG)·exp(-iθG)† with analytic derivative"""
    w, v = np.linalg.eigh(generator)

    def u(theta):
        return (v * np.exp(-1j * theta * w)) @ v.conj().T

    def family(theta):
        return kraus_to_transition(KrausChannel((u(theta),)))

    def tdot():
        g = generator
        ut = u(theta0)
        return np.kron(-1j * g @ ut, ut.conj()) + np.kron(ut, (-1j * g @ ut).conj())

    return ParamChannel(
        family=family,
        theta0=theta0,
        derivative_mode=DerivativeMode.analytic(tdot),
        kraus_family=lambda theta: KrausChannel((u(theta),)),
        kraus_derivative=lambda: [-1j * generator @ u(theta0)],
        name="unitary",
    )


@pytest.fixture
def z_rotation():
    return unitary_family(SIGMA_Z / 2)


def nonnormal_family() -> ParamChannel:
    """
    T(θ) = (1-θ)·I + (θ/2)·S⊗S* + (θ/2)·X⊗X at θ₀ = 0, qutrit shift S and swap X

    The identity channel at θ₀ with a degenerate peripheral spectrum and a
    non-normal derivative block.
    """
    eye = np.eye(9, dtype=np.complex128)
    shift = np.kron(SHIFT, SHIFT.conj())
    swap = np.kron(X3, X3.conj())

    def family(theta):
        return TransitionMatrix(3, (1 - theta) * eye + theta / 2 * shift + theta / 2 * swap)

    return ParamChannel(
        family=family,
        theta0=0.0,
        derivative_mode=DerivativeMode.analytic(lambda: -eye + shift / 2 + swap / 2),
        domain=(0.0, 1.0),
        name="shift-swap",
    )


def bit_flip(p: float) -> KrausChannel:
    return KrausChannel((math.sqrt(1 - p) * np.eye(2), math.sqrt(p) * SIGMA_X))
