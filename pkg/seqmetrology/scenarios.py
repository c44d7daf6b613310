#!/usr/bin/env python3
"""
Worked Scenarios
Single-qubit dephasing, qutrit decay and the noisy two-qubit Heisenberg
coupling estimation, each with analytic derivatives and Kraus derivatives
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .channels import (
    DensityMatrix,
    DerivativeMode,
    KrausChannel,
    ParamChannel,
    TransitionMatrix,
    kraus_to_transition,
)
from .config import tol
from .errors import AlgorithmInvariantViolated, DomainViolation
from .numerics import dagger, expm_hermitian
from .qfi import AsymptoticQfiReport, asymptotic_qfi

logger = logging.getLogger(__name__)

I2 = np.eye(2, dtype=np.complex128)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=np.complex128
)
SWAP = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=np.complex128
)


def _sqrt_dot(x: float, x_dot: float) -> float:
    """d√x/dθ; infinite at x = 0 unless x does not move"""
    if x_dot == 0:
        return 0.0
    if x <= 0:
        return math.copysign(math.inf, x_dot)
    return x_dot / (2 * math.sqrt(x))


def _scalar_derivative(fn: Callable[[float], float], theta0: float, valid: Callable[[float], bool]) -> float:
    h = tol("channels", "central_step")
    if valid(fn(theta0 - h)) and valid(fn(theta0 + h)):
        return (fn(theta0 + h) - fn(theta0 - h)) / (2 * h)
    h = tol("channels", "one_sided_step")
    if valid(fn(theta0 + h)):
        return (fn(theta0 + h) - fn(theta0)) / h
    return (fn(theta0) - fn(theta0 - h)) / h


# --- dephasing ---------------------------------------------------------------

def _phase_gate(phi: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * phi), np.exp(0.5j * phi)])


def _dephasing_kraus(p: float, phi: float) -> KrausChannel:
    if not 0 <= p <= 1:
        raise DomainViolation(f"dephasing probability p = {p:.12g} outside [0, 1]")
    e = _phase_gate(phi)
    return KrausChannel((math.sqrt(1 - p) * e, math.sqrt(p) * SIGMA_Z @ e))


def dephasing(
    p_fn: Callable[[float], float],
    phi_fn: Callable[[float], float],
    theta0: float,
    p_dot: Optional[float] = None,
    phi_dot: Optional[float] = None,
    name: str = "dephasing",
) -> ParamChannel:
    """
    Qubit dephasing K₁ = √(1-p)e^{-iφσz/2}, K₂ = √p σz e^{-iφσz/2} with p, φ functions of θ

    Args:
        p_fn, phi_fn: parametrizations of θ
        theta0: working point
        p_dot, phi_dot: derivatives at θ₀; finite-differenced when omitted

    Raises:
        DomainViolation: p(θ₀) outside [0, 1]
    """
    p0, phi0 = p_fn(theta0), phi_fn(theta0)
    if not 0 <= p0 <= 1:
        raise DomainViolation(f"dephasing probability p(θ₀) = {p0:.12g} outside [0, 1]")
    if p_dot is None:
        p_dot = _scalar_derivative(p_fn, theta0, lambda p: 0 <= p <= 1)
    if phi_dot is None:
        phi_dot = _scalar_derivative(phi_fn, theta0, lambda _: True)

    def family(theta: float) -> TransitionMatrix:
        return kraus_to_transition(_dephasing_kraus(p_fn(theta), phi_fn(theta)))

    def tdot() -> np.ndarray:
        e = _phase_gate(phi0)
        a = np.kron(e, e.conj())
        b = np.kron(SIGMA_Z, SIGMA_Z) @ a
        g = -0.5j * (np.kron(SIGMA_Z, I2) - np.kron(I2, SIGMA_Z))
        return p_dot * (b - a) + phi_dot * g @ ((1 - p0) * a + p0 * b)

    def kraus_dots() -> List[np.ndarray]:
        e = _phase_gate(phi0)
        e_dot = -0.5j * phi_dot * SIGMA_Z @ e
        k1 = _sqrt_dot(1 - p0, -p_dot) * e + math.sqrt(1 - p0) * e_dot
        k2 = _sqrt_dot(p0, p_dot) * SIGMA_Z @ e + math.sqrt(p0) * SIGMA_Z @ e_dot
        return [k1, k2]

    return ParamChannel(
        family=family,
        theta0=theta0,
        derivative_mode=DerivativeMode.analytic(tdot),
        kraus_family=lambda theta: _dephasing_kraus(p_fn(theta), phi_fn(theta)),
        kraus_derivative=kraus_dots,
        name=name,
    )


def dephasing_input_state(alpha: float) -> DensityMatrix:
    """I/2 + α(|0⟩⟨1| + |1⟩⟨0|)"""
    if abs(alpha) > 0.5:
        raise DomainViolation(f"α = {alpha} gives a non-positive state (need |α| ≤ 1/2)")
    return DensityMatrix(I2 / 2 + alpha * SIGMA_X)


# --- qutrit decay ------------------------------------------------------------

def _ket_bra(i: int, j: int, dim: int = 3) -> np.ndarray:
    m = np.zeros((dim, dim), dtype=np.complex128)
    m[i, j] = 1
    return m


def qutrit_kraus(theta: float) -> KrausChannel:
    if not 0 <= theta <= 0.5:
        raise DomainViolation(f"θ = {theta:.12g} outside [0, 1/2]")
    return KrausChannel(
        (
            _ket_bra(2, 0),
            _ket_bra(2, 1),
            math.sqrt(2 * theta) * _ket_bra(2, 2),
            math.sqrt(0.5 - theta) * _ket_bra(0, 2),
            math.sqrt(0.5 - theta) * _ket_bra(1, 2),
        )
    )


def qutrit_decay(theta0: float) -> ParamChannel:
    """
    Qutrit channel with nonzero eigenvalues {1, -1+2θ} on θ ∈ [0, 1/2]

    T is affine in θ, so Ṫ = 2(T(1/2) - T(0)) exactly.
    """
    if not 0 <= theta0 <= 0.5:
        raise DomainViolation(f"θ₀ = {theta0:.12g} outside [0, 1/2]")

    def family(theta: float) -> TransitionMatrix:
        return kraus_to_transition(qutrit_kraus(theta))

    def tdot() -> np.ndarray:
        return 2 * (family(0.5).t - family(0.0).t)

    def kraus_dots() -> List[np.ndarray]:
        root = _sqrt_dot(2 * theta0, 2.0)
        tail = _sqrt_dot(0.5 - theta0, -1.0)
        zero = np.zeros((3, 3), dtype=np.complex128)
        return [zero, zero.copy(), root * _ket_bra(2, 2), tail * _ket_bra(0, 2), tail * _ket_bra(1, 2)]

    return ParamChannel(
        family=family,
        theta0=theta0,
        derivative_mode=DerivativeMode.analytic(tdot),
        domain=(0.0, 0.5),
        kraus_family=qutrit_kraus,
        kraus_derivative=kraus_dots,
        name="qutrit-decay",
    )


def qutrit_input_state(alpha: float) -> DensityMatrix:
    """diag(1/4, 1/4, 1/2) + α diag(1/4, 1/4, -1/2)"""
    if abs(alpha) > 1:
        raise DomainViolation(f"α = {alpha} gives a non-positive state (need |α| ≤ 1)")
    return DensityMatrix(np.diag([0.25, 0.25, 0.5]) + alpha * np.diag([0.25, 0.25, -0.5]))


# --- noisy Heisenberg coupling -----------------------------------------------

def heisenberg_omegas(p: Sequence[float], phi: Sequence[float]) -> Tuple[complex, complex, complex, complex]:
    p1, p2, p3 = p
    phi1, phi2, phi3, phi4 = phi
    return (
        complex(1 - p1 - p2),
        complex(p1 + p2),
        np.exp(-1j * phi1) * (1 - p1 - p2 - p3) - np.exp(-1j * phi4) * p3,
        np.exp(-1j * phi2) * p1 - np.exp(-1j * phi3) * p2,
    )


# (row, column, ω index, conjugated) in 1-based positions
_NOISE_PATTERN = (
    (1, 1, 1, False), (1, 16, 2, False),
    (2, 2, 3, False), (2, 15, 4, False),
    (3, 4, 3, False), (3, 13, 4, False),
    (4, 3, 1, False), (4, 14, 2, False),
    (5, 5, 3, True), (5, 12, 4, True),
    (6, 6, 1, False), (6, 11, 2, False),
    (7, 8, 1, False), (7, 9, 2, False),
    (8, 7, 3, True), (8, 10, 4, True),
    (9, 4, 4, True), (9, 13, 3, True),
    (10, 3, 2, False), (10, 14, 1, False),
    (11, 1, 2, False), (11, 16, 1, False),
    (12, 2, 4, True), (12, 15, 3, True),
    (13, 9, 1, False), (13, 8, 2, False),
    (14, 10, 3, False), (14, 7, 4, False),
    (15, 12, 3, False), (15, 5, 4, False),
    (16, 11, 1, False), (16, 6, 2, False),
)


def noise_transition(omegas: Sequence[complex]) -> np.ndarray:
    """The explicit 16×16 T^(noise) in the |00⟩,|01⟩,|10⟩,|11⟩ row-major basis"""
    t = np.zeros((16, 16), dtype=np.complex128)
    for row, col, k, conj in _NOISE_PATTERN:
        w = omegas[k - 1]
        t[row - 1, col - 1] = np.conj(w) if conj else w
    return t


def w_gate(phi: float) -> np.ndarray:
    """|00⟩→|00⟩, |01⟩→e^{iφ}|01⟩, |10⟩→|11⟩, |11⟩→e^{iφ}|10⟩"""
    w = np.zeros((4, 4), dtype=np.complex128)
    w[0, 0] = 1
    w[1, 1] = np.exp(1j * phi)
    w[3, 2] = 1
    w[2, 3] = np.exp(1j * phi)
    return w


def noise_kraus(p: Sequence[float], phi: Sequence[float]) -> KrausChannel:
    p1, p2, p3 = p
    q = 1 - p1 - p2 - p3
    return KrausChannel(
        (
            math.sqrt(q) * w_gate(phi[0]),
            math.sqrt(p1) * w_gate(phi[1]) @ np.kron(SIGMA_X, SIGMA_X),
            math.sqrt(p2) * w_gate(phi[2]) @ np.kron(SIGMA_X, SIGMA_Y),
            math.sqrt(p3) * w_gate(phi[3]) @ np.kron(I2, SIGMA_Z),
        )
    )


def coupling_hamiltonian() -> np.ndarray:
    """H_J = σxσx + σyσy + σzσz = 2·SWAP - I"""
    return 2 * SWAP - np.eye(4)


def _free_hamiltonian(theta: float) -> np.ndarray:
    return np.kron(SIGMA_Z, I2) + np.kron(I2, SIGMA_Z) + theta * coupling_hamiltonian()


def heisenberg_unitary(t: float, theta: float) -> np.ndarray:
    return expm_hermitian(_free_hamiltonian(theta), -1j * t)


def heisenberg_eigenmatrix(t: float, theta0: float) -> np.ndarray:
    """R₁ = U_t†(|01⟩⟨11| + |10⟩⟨00|)U_t"""
    u = heisenberg_unitary(t, theta0)
    core = np.zeros((4, 4), dtype=np.complex128)
    core[1, 3] = 1
    core[2, 0] = 1
    return dagger(u) @ core @ u


def heisenberg_control(t: float, theta0: float, u_tilde: np.ndarray = CNOT) -> np.ndarray:
    """U_c = U_t(θ₀)†·Ũ_c"""
    return dagger(heisenberg_unitary(t, theta0)) @ u_tilde


def _check_noise(p: Sequence[float], phi: Sequence[float]) -> None:
    if len(p) != 3 or len(phi) != 4:
        raise DomainViolation("the Heisenberg scenario takes three probabilities and four phases")
    if min(p) < 0 or sum(p) > 1:
        raise DomainViolation(f"noise probabilities {tuple(p)} must be non-negative with sum ≤ 1")


def heisenberg_noisy(
    t: float,
    p: Sequence[float],
    phi: Sequence[float],
    theta0: float,
) -> ParamChannel:
    """
    T_θ = T^(noise)(U_t(θ) ⊗ U_t(θ)*) for H₀ = σz⊗I + I⊗σz + θH_J

    Raises:
        DomainViolation: invalid noise parameters
        AlgorithmInvariantViolated: explicit and Kraus-built T^(noise) disagree
    """
    _check_noise(p, phi)
    noise = noise_kraus(p, phi)
    t_noise = noise_transition(heisenberg_omegas(p, phi))
    mismatch = np.linalg.norm(kraus_to_transition(noise).t - t_noise)
    if mismatch > 1e-10:
        raise AlgorithmInvariantViolated(f"noise transition pattern differs from its Kraus form by {mismatch:.3e}")
    h_j = coupling_hamiltonian()

    def family(theta: float) -> TransitionMatrix:
        u = heisenberg_unitary(t, theta)
        return TransitionMatrix(4, t_noise @ np.kron(u, u.conj()))

    def tdot() -> np.ndarray:
        u = heisenberg_unitary(t, theta0)
        generator = -1j * t * (np.kron(h_j, np.eye(4)) - np.kron(np.eye(4), h_j.T))
        return t_noise @ generator @ np.kron(u, u.conj())

    def kraus_family(theta: float) -> KrausChannel:
        u = heisenberg_unitary(t, theta)
        return KrausChannel(tuple(k @ u for k in noise.kraus_ops))

    def kraus_dots() -> List[np.ndarray]:
        u_dot = -1j * t * h_j @ heisenberg_unitary(t, theta0)
        return [k @ u_dot for k in noise.kraus_ops]

    return ParamChannel(
        family=family,
        theta0=theta0,
        derivative_mode=DerivativeMode.analytic(tdot),
        kraus_family=kraus_family,
        kraus_derivative=kraus_dots,
        name="heisenberg",
    )


def heisenberg_input_state(theta0: float, alpha: float, t: float = 1.0) -> DensityMatrix:
    """I/4 + α U_t(θ₀)†(σx ⊗ I)U_t(θ₀) = I/4 + α(R₁ + R₁†)"""
    if not 0 < alpha < 0.25:
        raise DomainViolation(f"α = {alpha} outside (0, 1/4)")
    u = heisenberg_unitary(t, theta0)
    return DensityMatrix(np.eye(4) / 4 + alpha * dagger(u) @ np.kron(SIGMA_X, I2) @ u)


def bloch_state(r: Sequence[float]) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if r.shape != (3,) or np.linalg.norm(r) > 1 + 1e-12:
        raise DomainViolation(f"Bloch vector {tuple(r)} must have three components and length ≤ 1")
    return (I2 + r[0] * SIGMA_X + r[1] * SIGMA_Y + r[2] * SIGMA_Z) / 2


def robustness_sweep(
    theta0: float,
    t: float,
    common_w_phase: float,
    alpha: float,
    blochs: Sequence[Sequence[float]],
    p: Sequence[float] = (0.1, 0.2, 0.3),
    control: Optional[np.ndarray] = None,
) -> List[AsymptoticQfiReport]:
    """
    Asymptotic reports for inputs U_t†[(I/2 + 2ασx) ⊗ σ]U_t over second-qubit states σ

    All W_i share one phase; the default control is U_t(θ₀)†W†.
    """
    if not 0 < alpha < 0.25:
        raise DomainViolation(f"α = {alpha} outside (0, 1/4)")
    pc = heisenberg_noisy(t, p, (common_w_phase,) * 4, theta0)
    if control is None:
        control = heisenberg_control(t, theta0, dagger(w_gate(common_w_phase)))
    regulated = pc.with_control(control)
    u = heisenberg_unitary(t, theta0)
    first = I2 / 2 + 2 * alpha * SIGMA_X
    reports = []
    for r in blochs:
        rho0 = DensityMatrix(dagger(u) @ np.kron(first, bloch_state(r)) @ u)
        reports.append(asymptotic_qfi(regulated, rho0))
    return reports


# --- scenario dispatch -------------------------------------------------------

class ScenarioName(Enum):
    DEPHASING = "dephasing"
    QUTRIT_DECAY = "qutrit-decay"
    HEISENBERG = "heisenberg"


DEFAULT_PARAMS: Dict[ScenarioName, Dict[str, float]] = {
    ScenarioName.DEPHASING: {"p": 0.0, "phi": math.pi / 4, "p_slope": 1.0, "phi_slope": 0.0},
    ScenarioName.QUTRIT_DECAY: {},
    ScenarioName.HEISENBERG: {
        "t": 1.0, "p1": 0.1, "p2": 0.2, "p3": 0.3,
        "phi1": 0.3, "phi2": 0.7, "phi3": 1.1, "phi4": 1.9,
    },
}

DEFAULT_THETA0 = {ScenarioName.DEPHASING: 0.0, ScenarioName.QUTRIT_DECAY: 0.0, ScenarioName.HEISENBERG: 0.5}


@dataclass(frozen=True)
class ScenarioSpec:
    """
    Named scenario with real parameters

    Dephasing uses p(θ) = p + p_slope·θ and φ(θ) = phi + phi_slope·θ.
    """
    name: ScenarioName
    params: Mapping[str, float] = field(default_factory=dict)
    theta0: Optional[float] = None

    def __post_init__(self):
        name = ScenarioName(self.name)
        merged = dict(DEFAULT_PARAMS[name])
        unknown = set(self.params) - set(merged)
        if unknown:
            raise DomainViolation(f"unknown parameters for {name.value}: {sorted(unknown)}")
        merged.update({k: float(v) for k, v in self.params.items()})
        theta0 = DEFAULT_THETA0[name] if self.theta0 is None else float(self.theta0)
        if name is ScenarioName.DEPHASING and not 0 <= merged["p"] + merged["p_slope"] * theta0 <= 1:
            raise DomainViolation("p(θ₀) must lie in [0, 1]")
        if name is ScenarioName.QUTRIT_DECAY and not 0 <= theta0 <= 0.5:
            raise DomainViolation("θ₀ must lie in [0, 1/2] for qutrit-decay")
        if name is ScenarioName.HEISENBERG:
            _check_noise(self._probabilities(merged), self._phases(merged))
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "params", merged)
        object.__setattr__(self, "theta0", theta0)

    @staticmethod
    def _probabilities(params: Mapping[str, float]) -> Tuple[float, float, float]:
        return params["p1"], params["p2"], params["p3"]

    @staticmethod
    def _phases(params: Mapping[str, float]) -> Tuple[float, float, float, float]:
        return params["phi1"], params["phi2"], params["phi3"], params["phi4"]

    def build(self) -> ParamChannel:
        ps = self.params
        if self.name is ScenarioName.DEPHASING:
            return dephasing(
                lambda theta: ps["p"] + ps["p_slope"] * theta,
                lambda theta: ps["phi"] + ps["phi_slope"] * theta,
                self.theta0,
                p_dot=ps["p_slope"],
                phi_dot=ps["phi_slope"],
            )
        if self.name is ScenarioName.QUTRIT_DECAY:
            return qutrit_decay(self.theta0)
        return heisenberg_noisy(ps["t"], self._probabilities(ps), self._phases(ps), self.theta0)

    def input_state(self, alpha: float) -> DensityMatrix:
        if self.name is ScenarioName.DEPHASING:
            return dephasing_input_state(alpha)
        if self.name is ScenarioName.QUTRIT_DECAY:
            return qutrit_input_state(alpha)
        return heisenberg_input_state(self.theta0, alpha, self.params["t"])
