"""
Tests for the peripheral spectrum and its derivatives
"""

import math

import numpy as np
import numpy.testing as npt
import pytest

from conftest import bit_flip, nonnormal_family, static_family
from seqmetrology.channels import DensityMatrix, kraus_to_transition, random_density_matrix, vectorize
from seqmetrology.numerics import eig_general
from seqmetrology.scenarios import dephasing, dephasing_input_state, qutrit_decay, qutrit_input_state
from seqmetrology.spectral import (
    asymptotic_state,
    eigenvalue_derivative,
    expand_state,
    fixed_point,
    peripheral_spectrum,
    track_peripheral,
)


@pytest.mark.parametrize("p, phi", [(0.0, math.pi / 4), (0.1, math.pi / 4), (0.5, 1.0)])
def test_dephasing_transition_eigenvalues(p, phi):
    pc = dephasing(lambda theta: p, lambda theta: phi, 0.0, p_dot=0.0, phi_dot=0.0)
    values = sorted((pair.value for pair in eig_general(pc.at(0.0).t)), key=lambda z: (round(z.real, 8), round(z.imag, 8)))
    expected = sorted(
        [1, 1, (1 - 2 * p) * np.exp(-1j * phi), (1 - 2 * p) * np.exp(1j * phi)],
        key=lambda z: (round(z.real, 8), round(z.imag, 8)),
    )
    npt.assert_allclose(values, expected, atol=1e-10)


def test_dephasing_peripheral_spectrum(dephasing_linear):
    spec = peripheral_spectrum(dephasing_linear)
    assert len(spec) == 4
    npt.assert_allclose(np.abs(spec.lambdas), 1.0, atol=1e-12)
    moving = sorted(abs(d) for d in spec.lambda_dots)
    npt.assert_allclose(moving, [0, 0, 2, 2], atol=1e-10)
    npt.assert_allclose(spec.fixed_point.rho, np.eye(2) / 2, atol=1e-12)
    first = spec.entries[0]
    assert first.is_fixed_point
    npt.assert_allclose(first.right, vectorize(np.eye(2)) / math.sqrt(2), atol=1e-12)
    npt.assert_allclose(spec.gram(), np.eye(4), atol=1e-10)


def test_biorthonormal_peripheral_vectors(dephasing_linear, qutrit):
    for pc in (dephasing_linear, qutrit):
        spec = peripheral_spectrum(pc)
        npt.assert_allclose(spec.lefts.conj().T @ spec.rights, np.eye(len(spec)), atol=1e-9)
        t = pc.at(pc.theta0).t
        for e in spec.entries:
            npt.assert_allclose(t @ e.right, e.lam * e.right, atol=1e-10)


def test_qutrit_peripheral_pair_is_not_orthogonal(qutrit):
    spec = peripheral_spectrum(qutrit)
    npt.assert_allclose(sorted(spec.lambdas.real), [-1.0, 1.0], atol=1e-12)
    by_lambda = {round(e.lam.real): e for e in spec.entries}
    assert by_lambda[-1].lam_dot == pytest.approx(2.0, abs=1e-9)
    assert by_lambda[1].lam_dot == pytest.approx(0.0, abs=1e-9)
    assert abs(spec.gram()[0, 1]) > 0.1
    npt.assert_allclose(spec.fixed_point.rho, np.diag([0.25, 0.25, 0.5]), atol=1e-12)


def test_fixed_point_of_unital_channel_is_maximally_mixed():
    npt.assert_allclose(fixed_point(kraus_to_transition(bit_flip(0.3))).rho, np.eye(2) / 2, atol=1e-12)


def test_eigenvalue_derivative_matches_closed_form():
    phi = math.pi / 4
    pc = dephasing(lambda theta: 0.1 + theta, lambda theta: phi, 0.0, p_dot=1.0, phi_dot=0.0)
    pair = min(eig_general(pc.at(0.0).t), key=lambda e: abs(e.value - 0.8 * np.exp(-1j * phi)))
    assert eigenvalue_derivative(pc, pair) == pytest.approx(-2 * np.exp(-1j * phi), abs=1e-9)


def test_static_family_has_no_moving_eigenvalue():
    spec = peripheral_spectrum(static_family(kraus_to_transition(bit_flip(0.2))))
    assert all(abs(d) < 1e-12 for d in spec.lambda_dots)


def test_near_peripheral_eigenvalues_are_reported():
    pc = dephasing(lambda theta: 1e-6, lambda theta: 0.3, 0.0, p_dot=0.0, phi_dot=0.0)
    spec = peripheral_spectrum(pc)
    assert len(spec) == 2
    assert any("near-peripheral" in w for w in spec.warnings)


def test_degenerate_cluster_split_by_derivative_block():
    pc = nonnormal_family()
    spec = peripheral_spectrum(pc)
    assert len(spec) == 9
    assert all(e.cluster_size == 9 for e in spec.entries)
    npt.assert_allclose(
        sorted(d.real for d in spec.lambda_dots), [-1.5] * 3 + [-1.0] * 4 + [0.0] * 2, atol=1e-8
    )
    npt.assert_allclose(spec.fixed_point.rho, np.eye(3) / 3, atol=1e-12)
    assert spec.entries[0].is_fixed_point
    npt.assert_allclose(spec.lefts.conj().T @ spec.rights, np.eye(9), atol=1e-8)


def test_unitary_state_expansion_is_exact(dephasing_linear):
    spec = peripheral_spectrum(dephasing_linear)
    rho0 = dephasing_input_state(0.3)
    exp = expand_state(spec, rho0)
    assert exp.residual < 1e-12
    t = dephasing_linear.at(0.0).t
    v = vectorize(rho0)
    for _ in range(3):
        v = t @ v
    npt.assert_allclose(asymptotic_state(spec, exp, 3), v, atol=1e-12)


def test_qutrit_expansion_leaves_transient_remainder(qutrit):
    spec = peripheral_spectrum(qutrit)
    rho0 = DensityMatrix(np.full((3, 3), 1 / 3))
    exp = expand_state(spec, rho0)
    assert exp.residual > 0.1
    t = qutrit.at(0.0).t
    v = vectorize(rho0)
    for _ in range(4):
        v = t @ v
    npt.assert_allclose(asymptotic_state(spec, exp, 4), v, atol=1e-12)


def test_tracking_unavailable_for_clusters(dephasing_linear):
    spec = peripheral_spectrum(dephasing_linear)
    assert track_peripheral(dephasing_linear, spec, dephasing_input_state(0.2)) is None


def test_tracking_simple_spectrum(qutrit):
    spec = peripheral_spectrum(qutrit)
    derivs = track_peripheral(qutrit, spec, qutrit_input_state(0.9))
    assert derivs is not None
    assert derivs.right_dots.shape == (9, 2)
    assert derivs.coefficient_dots.shape == (2,)
    assert np.all(np.isfinite(derivs.right_dots))


def test_spectrum_table_columns(dephasing_linear):
    table = peripheral_spectrum(dephasing_linear).table()
    assert list(table.columns) == ["lambda", "|lambda|", "lambda_dot", "fixed_point"]
    assert len(table) == 4


def test_qutrit_fixed_point_away_from_zero():
    t = qutrit_decay(0.1).at(0.1)
    npt.assert_allclose(fixed_point(t).rho, np.diag([0.4, 0.4, 1.0]) / 1.8, atol=1e-12)


def test_asymptotic_state_matches_long_power(rng):
    pc = qutrit_decay(0.1)
    spec = peripheral_spectrum(pc)
    rho0 = random_density_matrix(3, rng)
    exact = np.linalg.matrix_power(pc.at(0.1).t, 200) @ vectorize(rho0)
    assert np.linalg.norm(asymptotic_state(spec, expand_state(spec, rho0), 200) - exact) <= 1e-8


def _tracked_slope(pc, lam: complex) -> complex:
    def nearest(theta: float) -> complex:
        values = np.linalg.eigvals(pc.at(theta).t)
        return values[np.argmin(np.abs(values - lam))]

    h = 1e-6
    if pc.admits(pc.theta0 - h) and pc.admits(pc.theta0 + h):
        return (nearest(pc.theta0 + h) - nearest(pc.theta0 - h)) / (2 * h)
    h = 1e-7
    return (nearest(pc.theta0 + h) - nearest(pc.theta0)) / h


def test_eigenvalue_derivative_agrees_with_tracking(dephasing_linear, qutrit, heisenberg):
    checked = 0
    for pc in (dephasing_linear, qutrit, heisenberg):
        for entry in peripheral_spectrum(pc).entries:
            if not entry.simple:
                continue
            analytic = eigenvalue_derivative(pc, entry)
            assert abs(_tracked_slope(pc, entry.lam) - analytic) <= 1e-5 * max(1.0, abs(analytic))
            checked += 1
    assert checked >= 4
