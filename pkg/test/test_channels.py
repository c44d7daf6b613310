"""
Tests for channel representations and parametrized families
"""

import math

import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings, strategies as st

from conftest import bit_flip, static_family
from seqmetrology.channels import (
    DensityMatrix,
    DerivativeMode,
    DerivativeKind,
    KrausChannel,
    ParamChannel,
    TransitionMatrix,
    apply_channel,
    choi_matrix,
    compose_control,
    derivative,
    difference_stencil,
    hs_inner,
    kraus_to_transition,
    random_density_matrix,
    unitality_check,
    unvectorize,
    validate_cptp,
    vectorize,
)
from seqmetrology.config import reload_settings
from seqmetrology.errors import DomainViolation, InvalidState, NotCPTP, ShapeMismatch
from seqmetrology.numerics import random_unitary
from seqmetrology.scenarios import SIGMA_X, SIGMA_Y, SIGMA_Z


def test_vectorize_is_row_major():
    a = np.array([[1, 2], [3, 4]])
    npt.assert_array_equal(vectorize(a), [1, 2, 3, 4])
    npt.assert_array_equal(unvectorize(vectorize(a)), a)


def test_hs_inner_is_trace_of_adjoint_product():
    a = np.array([[1, 1j], [0, 2]])
    b = np.array([[0, 1], [1, 1]])
    assert hs_inner(a, b) == pytest.approx(np.trace(a.conj().T @ b))


def test_transition_matches_kraus_action(rng):
    ch = bit_flip(0.3)
    t = kraus_to_transition(ch)
    rho = random_density_matrix(2, rng)
    npt.assert_allclose(unvectorize(t.t @ vectorize(rho)), ch.act(rho), atol=1e-14)
    npt.assert_allclose(apply_channel(t, rho).rho, ch.act(rho), atol=1e-14)


def test_kraus_completeness_is_enforced():
    with pytest.raises(NotCPTP):
        KrausChannel((np.eye(2), SIGMA_X))


def test_transition_shape_and_trace_checks():
    with pytest.raises(ShapeMismatch):
        TransitionMatrix(2, np.eye(3))
    with pytest.raises(NotCPTP):
        TransitionMatrix(2, 2 * np.eye(4))


def test_transpose_map_is_not_completely_positive():
    swap = np.zeros((4, 4))
    for i in range(2):
        for j in range(2):
            swap[2 * j + i, 2 * i + j] = 1
    t = TransitionMatrix(2, swap)
    assert np.linalg.eigvalsh(choi_matrix(t)).min() == pytest.approx(-1.0)
    with pytest.raises(NotCPTP):
        validate_cptp(t)


def test_choi_of_identity_is_maximally_entangled_projector():
    choi = choi_matrix(TransitionMatrix(2, np.eye(4)))
    omega = np.array([1, 0, 0, 1])
    npt.assert_allclose(choi, np.outer(omega, omega), atol=1e-15)


def test_density_matrix_validation():
    with pytest.raises(InvalidState):
        DensityMatrix(np.diag([1.5, -0.5]))
    with pytest.raises(InvalidState):
        DensityMatrix(np.diag([0.5, 0.6]))
    assert DensityMatrix.maximally_mixed(3).dim == 3


def _drifting_transition() -> TransitionMatrix:
    """Completeness off by 1.5e-10, inside the channel check"""
    return kraus_to_transition(KrausChannel((np.diag([math.sqrt(1 + 1.5e-10), 1.0]),)))


def test_apply_channel_renormalizes_small_trace_drift():
    out = apply_channel(_drifting_transition(), DensityMatrix(np.diag([1.0, 0.0])))
    assert np.trace(out.rho).real == pytest.approx(1.0, abs=1e-15)
    npt.assert_allclose(out.rho, np.diag([1.0, 0.0]), atol=1e-12)


def test_apply_channel_rejects_drift_beyond_tolerance(monkeypatch):
    monkeypatch.setenv("SEQMET_CHANNELS_APPLY_DRIFT_TOL", "1e-11")
    reload_settings()
    with pytest.raises(InvalidState, match="drift"):
        apply_channel(_drifting_transition(), DensityMatrix(np.diag([1.0, 0.0])))


def test_compose_control_equals_kraus_then(rng):
    u = random_unitary(2, rng)
    ch = bit_flip(0.2)
    npt.assert_allclose(
        compose_control(kraus_to_transition(ch), u).t,
        kraus_to_transition(ch.then(u)).t,
        atol=1e-13,
    )


def test_unitality():
    assert unitality_check(kraus_to_transition(bit_flip(0.4)))
    decay = KrausChannel((np.array([[1, 0], [0, math.sqrt(0.5)]]), np.array([[0, math.sqrt(0.5)], [0, 0]])))
    assert not unitality_check(kraus_to_transition(decay))


def _rotation_family(kind: str) -> ParamChannel:
    def family(theta):
        u = np.cos(theta / 2) * np.eye(2) - 1j * np.sin(theta / 2) * SIGMA_Y
        return kraus_to_transition(KrausChannel((u,)))

    mode = DerivativeMode.central() if kind == "central" else DerivativeMode.one_sided()
    return ParamChannel(family=family, theta0=0.3, derivative_mode=mode, name=kind)


@pytest.mark.parametrize("kind, atol", [("central", 1e-8), ("one_sided", 1e-6)])
def test_finite_difference_derivatives(kind, atol):
    pc = _rotation_family(kind)
    h = 1e-5
    reference = (pc.at(0.3 + h).t - pc.at(0.3 - h).t) / (2 * h)
    npt.assert_allclose(derivative(pc), reference, atol=atol)


def test_domain_forces_one_sided_stencil():
    t = kraus_to_transition(bit_flip(0.0))
    pc = ParamChannel(
        family=lambda theta: kraus_to_transition(bit_flip(theta)),
        theta0=0.0,
        derivative_mode=DerivativeMode.one_sided(),
        domain=(0.0, 1.0),
    )
    low, high = difference_stencil(pc)
    assert low == 0.0 and high == pytest.approx(1e-7)
    assert not pc.admits(-1e-3)
    with pytest.raises(DomainViolation):
        pc.at(-0.1)
    npt.assert_allclose(derivative(pc), kraus_to_transition(bit_flip(1.0)).t - t.t, atol=1e-6)


def test_from_samples_central_and_pinned_step():
    samples = {theta: kraus_to_transition(bit_flip(0.2 + theta)) for theta in (-0.01, -1e-6, 0.0, 1e-6, 0.02)}
    pc = ParamChannel.from_samples(samples, 0.0)
    assert pc.derivative_mode.kind is DerivativeKind.CENTRAL
    pinned = ParamChannel.from_samples(samples, 0.0, step=0.01)
    assert pinned.derivative_mode.kind is DerivativeKind.ONE_SIDED
    assert pinned.derivative_mode.step == pytest.approx(-0.01)
    slope = kraus_to_transition(bit_flip(1.0)).t - kraus_to_transition(bit_flip(0.0)).t
    npt.assert_allclose(derivative(pc), slope, atol=1e-8)
    with pytest.raises(DomainViolation):
        pc.at(0.5)


def test_from_samples_needs_a_neighbour():
    with pytest.raises(DomainViolation):
        ParamChannel.from_samples({0.0: kraus_to_transition(bit_flip(0.1))}, 0.0)


def test_with_control_derivative(rng):
    u = random_unitary(2, rng)
    pc = _rotation_family("central")
    regulated = pc.with_control(u)
    npt.assert_allclose(derivative(regulated), np.kron(u, u.conj()) @ derivative(pc), atol=1e-12)
    npt.assert_allclose(regulated.at(0.3).t, compose_control(pc.at(0.3), u).t, atol=1e-14)


def test_static_family_has_zero_derivative():
    pc = static_family(kraus_to_transition(bit_flip(0.1)))
    assert np.linalg.norm(derivative(pc)) == 0.0


@settings(max_examples=25, deadline=None, derandomize=True)
@given(p=st.floats(min_value=0.0, max_value=1.0), seed=st.integers(0, 10_000))
def test_random_kraus_channels_are_cptp(p, seed):
    rng = np.random.default_rng(seed)
    u = random_unitary(2, rng)
    ch = KrausChannel((math.sqrt(1 - p) * u, math.sqrt(p) * SIGMA_Z))
    t = validate_cptp(kraus_to_transition(ch))
    assert np.linalg.eigvalsh(choi_matrix(t)).min() >= -1e-12
