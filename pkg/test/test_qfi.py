"""
Tests for QFI, associated QFI and the asymptotic coefficients
"""

import math

import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings, strategies as st

from conftest import bit_flip, static_family
from seqmetrology.channels import DensityMatrix, kraus_to_transition, random_density_matrix, vectorize
from seqmetrology.errors import DegeneratePurity, MalformedInput, NotNormalized, RankDeficientSignal
from seqmetrology.numerics import hermitize, random_unitary
from seqmetrology.qfi import (
    _oscillation_period,
    associated_qfi,
    asymptotic_lower_bound,
    asymptotic_qfi,
    bound_factor,
    exact_sequence_qfi,
    qfi_lower_bound,
    qfi_mixed,
    qfi_pure,
    sequence_qfi_sweep,
    sld,
)
from seqmetrology.scenarios import (
    dephasing_input_state,
    heisenberg_control,
    heisenberg_input_state,
    qutrit_input_state,
)
from seqmetrology.spectral import expand_state, peripheral_spectrum


def test_pure_phase_state():
    theta = 0.4
    psi = np.array([1, np.exp(1j * theta)]) / math.sqrt(2)
    psi_dot = np.array([0, 1j * np.exp(1j * theta)]) / math.sqrt(2)
    assert qfi_pure(psi, psi_dot) == pytest.approx(1.0)
    rho = DensityMatrix(np.outer(psi, psi.conj()))
    rho_dot = np.outer(psi_dot, psi.conj()) + np.outer(psi, psi_dot.conj())
    assert qfi_mixed(rho, rho_dot) == pytest.approx(1.0)
    with pytest.raises(NotNormalized):
        qfi_pure(2 * psi, psi_dot)


def test_classical_limit_is_fisher_information():
    p = 0.3
    rho = DensityMatrix(np.diag([p, 1 - p]))
    rho_dot = np.diag([1.0, -1.0])
    assert qfi_mixed(rho, rho_dot) == pytest.approx(1 / p + 1 / (1 - p))
    result = sld(rho, rho_dot)
    assert result.support_dim == 2
    npt.assert_allclose(rho.rho @ result.l + result.l @ rho.rho, 2 * rho_dot, atol=1e-12)


def test_associated_qfi_and_bound_closed_form():
    p = 0.3
    rho = np.diag([p, 1 - p])
    rho_dot = np.diag([1.0, -1.0])
    assert associated_qfi(rho, rho_dot) == pytest.approx(11.89060642, rel=1e-8)
    assert bound_factor(rho) == pytest.approx(0.58 / 2.8)
    assert qfi_lower_bound(rho, rho_dot) == pytest.approx(0.58 / 2.8 * 11.89060642, rel=1e-8)


def test_signal_outside_support_is_rejected():
    rho = DensityMatrix(np.diag([1.0, 0.0]))
    with pytest.raises(RankDeficientSignal):
        qfi_mixed(rho, np.diag([-0.1, 0.1]))


def test_rho_dot_must_be_traceless_and_hermitian():
    rho = DensityMatrix(np.eye(2) / 2)
    with pytest.raises(MalformedInput):
        qfi_mixed(rho, np.diag([1.0, 0.0]))
    with pytest.raises(MalformedInput):
        qfi_mixed(rho, np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_zero_state_has_no_purity():
    with pytest.raises(DegeneratePurity):
        associated_qfi(np.zeros((2, 2)), np.zeros((2, 2)))


@settings(max_examples=100, deadline=None, derandomize=True)
@given(dim=st.integers(min_value=2, max_value=4), seed=st.integers(0, 10_000))
def test_lower_bound_never_exceeds_qfi(dim, seed):
    rng = np.random.default_rng(seed)
    rho = random_density_matrix(dim, rng)
    rho_dot = _random_signal(dim, rng)
    assert qfi_lower_bound(rho, rho_dot) <= qfi_mixed(rho, rho_dot) * (1 + 1e-9) + 1e-12


def test_oscillation_period_detection():
    full = np.ones((2, 2))
    assert _oscillation_period(np.array([1, -1], dtype=complex), full) == (2, True)
    assert _oscillation_period(np.array([1, 1j], dtype=complex), full) == (4, True)
    assert _oscillation_period(np.array([1, 1], dtype=complex), full) == (None, True)
    assert _oscillation_period(np.array([1, np.exp(1j)], dtype=complex), full) == (None, False)
    assert _oscillation_period(np.array([1, np.exp(1j)], dtype=complex), np.eye(2)) == (None, True)


def test_dephasing_asymptotic_coefficient(dephasing_linear):
    rho0 = dephasing_input_state(0.25)
    report = asymptotic_qfi(dephasing_linear, rho0)
    assert report.n2_coefficient == pytest.approx(2.56, rel=1e-9)
    assert report.achieves_hl
    assert report.oscillation_period is None
    assert report.n1_coefficient is None
    for n in (1, 7, 30):
        exact = exact_sequence_qfi(dephasing_linear, rho0, n=n)
        assert exact.associated == pytest.approx(2.56 * n * n, rel=1e-8)
        assert exact.qfi == pytest.approx(4 / 3 * n * n, rel=1e-8)
        assert exact.bound <= exact.qfi


def test_qutrit_oscillating_branches(qutrit):
    rho0 = qutrit_input_state(0.9)
    report = asymptotic_qfi(qutrit, rho0)
    assert report.oscillation_period == 2
    npt.assert_allclose(report.n2_by_residue, [7.86830, 1.98344], rtol=1e-5)
    # even N carries no 1/N correction; odd N follows n2·(1 - 1/(αN))²
    assert report.n1_by_residue[0] == pytest.approx(0.0, abs=1e-5)
    assert report.n1_by_residue[1] == pytest.approx(-2 * report.n2_by_residue[1] / 0.9, rel=1e-4)
    assert report.achieves_hl

    spec = peripheral_spectrum(qutrit)
    exp = expand_state(spec, rho0)
    bounds = [asymptotic_lower_bound(report, spec, exp, r) for r in (0, 1)]
    npt.assert_allclose(bounds, [1.87908, 0.47172], rtol=1e-4)

    for n in (100, 101, 200, 201):
        n2 = report.n2_by_residue[n % 2]
        n1 = report.n1_by_residue[n % 2]
        exact = exact_sequence_qfi(qutrit, rho0, n=n).associated / n ** 2
        assert abs(exact - n2) <= 3 / n * n2
        assert abs(exact - (n2 + n1 / n)) <= 5 / n ** 2
        if n < 200:
            assert exact == pytest.approx(n2, rel=3e-2)


def test_static_channel_has_no_heisenberg_scaling():
    pc = static_family(kraus_to_transition(bit_flip(0.2)))
    report = asymptotic_qfi(pc, DensityMatrix(np.diag([0.7, 0.3])))
    assert report.n2_coefficient == pytest.approx(0.0, abs=1e-12)
    assert not report.achieves_hl


def test_sweep_matches_single_evaluations(qutrit):
    rho0 = qutrit_input_state(0.9)
    frame = sequence_qfi_sweep(qutrit, rho0, None, 3, 8)
    assert list(frame.columns) == ["N", "qfi", "assoc_qfi", "lower_bound"]
    assert list(frame["N"]) == list(range(3, 9))
    for row in frame.itertuples(index=False):
        single = exact_sequence_qfi(qutrit, rho0, n=row.N)
        assert row.qfi == pytest.approx(single.qfi, rel=1e-12)
        assert row.assoc_qfi == pytest.approx(single.associated, rel=1e-12)
        assert row.lower_bound <= row.qfi * (1 + 1e-9)


def test_single_row_sweep(qutrit):
    frame = sequence_qfi_sweep(qutrit, qutrit_input_state(0.9), None, 5, 5)
    assert len(frame) == 1 and frame["N"].iloc[0] == 5


def test_control_argument_matches_regulated_family(dephasing_linear):
    u = random_unitary(2, np.random.default_rng(11))
    rho0 = dephasing_input_state(0.2)
    direct = exact_sequence_qfi(dephasing_linear, rho0, control=u, n=6)
    regulated = exact_sequence_qfi(dephasing_linear.with_control(u), rho0, n=6)
    assert direct.qfi == pytest.approx(regulated.qfi, rel=1e-10)
    assert direct.associated == pytest.approx(regulated.associated, rel=1e-10)


def test_invalid_sweep_range(qutrit):
    with pytest.raises(ValueError):
        sequence_qfi_sweep(qutrit, qutrit_input_state(0.5), None, 0, 3)


def _random_signal(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho_dot = hermitize(g)
    return rho_dot - np.trace(rho_dot).real / dim * np.eye(dim)


@settings(max_examples=100, deadline=None, derandomize=True)
@given(dim=st.integers(min_value=2, max_value=3), seed=st.integers(0, 10_000))
def test_associated_qfi_is_qfi_of_normalized_vectorization(dim, seed):
    rng = np.random.default_rng(seed)
    rho = random_density_matrix(dim, rng).rho
    rho_dot = _random_signal(dim, rng)
    v, v_dot = vectorize(rho), vectorize(rho_dot)
    norm = np.linalg.norm(v)
    psi = v / norm
    psi_dot = v_dot / norm - v * np.vdot(v, v_dot).real / norm ** 3
    expected = qfi_pure(psi, psi_dot)
    assert associated_qfi(rho, rho_dot) == pytest.approx(expected, abs=1e-10 * max(1.0, expected))


@settings(max_examples=30, deadline=None, derandomize=True)
@given(dim=st.integers(min_value=2, max_value=4), seed=st.integers(0, 10_000))
def test_qfi_invariant_under_fixed_unitary(dim, seed):
    rng = np.random.default_rng(seed)
    rho = random_density_matrix(dim, rng)
    rho_dot = _random_signal(dim, rng)
    u = random_unitary(dim, rng)
    rotated = DensityMatrix(hermitize(u @ rho.rho @ u.conj().T))
    reference = qfi_mixed(rho, rho_dot)
    assert qfi_mixed(rotated, u @ rho_dot @ u.conj().T) == pytest.approx(reference, rel=1e-9, abs=1e-9)


def test_beta_invariants_on_scenarios(dephasing_linear, qutrit, heisenberg):
    cases = [
        (dephasing_linear, dephasing_input_state(0.25)),
        (qutrit, qutrit_input_state(0.9)),
        (heisenberg.with_control(heisenberg_control(1.0, 0.5)), heisenberg_input_state(0.5, 0.2)),
    ]
    for pc, rho0 in cases:
        beta = np.asarray(asymptotic_qfi(pc, rho0).beta)
        assert np.sum(beta) == pytest.approx(1.0, abs=1e-10)
        assert np.all(np.diag(beta).real >= -1e-12)
        npt.assert_allclose(np.diag(beta).imag, 0.0, atol=1e-12)
        npt.assert_allclose(beta, beta.conj().T, atol=1e-12)


def test_qutrit_sweep_branches_and_bound(qutrit):
    alpha = 0.9
    frame = sequence_qfi_sweep(qutrit, qutrit_input_state(alpha), None, 1, 50)
    assert len(frame) == 50
    assert np.all(frame["qfi"] >= frame["lower_bound"] - 1e-9)

    n = frame["N"].to_numpy()
    odd = n % 2 == 1
    assoc = frame["assoc_qfi"].to_numpy() / n ** 2
    bound = frame["lower_bound"].to_numpy() / n ** 2
    npt.assert_allclose(assoc[~odd], 7.86830, rtol=1e-5)
    assert np.all(assoc[odd] < 2.0)
    npt.assert_allclose(bound[~odd], 1.87908, rtol=1e-4)
    npt.assert_allclose(bound[odd], 0.47172 * (1 - 1 / (alpha * n[odd])) ** 2, rtol=1e-4)
    assert bound[n == 50][0] == pytest.approx(1.87908, rel=2e-2)
