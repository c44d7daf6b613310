#!/usr/bin/env python3
"""
Heisenberg-Limit Conditions
Sufficient-condition checkers on the peripheral spectrum, the signal operator
P·T†·Ṫ·P of the unitality-based criterion, and the HNKS span diagnostic
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
import scipy.optimize

from .channels import (
    DensityMatrix,
    KrausChannel,
    ParamChannel,
    derivative,
    kraus_dots_shape_check,
    unitality_check,
    unvectorize,
)
from .config import tol
from .errors import DegenerateUnresolved
from .numerics import dagger, eig_hermitian, eigensystem, hermitize
from .spectral import PeripheralSpectrum, expand_state, peripheral_spectrum

logger = logging.getLogger(__name__)


class HlStatus(Enum):
    ACHIEVABLE = "Achievable"
    NOT_DETECTED = "NotDetected"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class Witness:
    index: int
    lam: complex
    lam_dot: complex
    rho0: DensityMatrix


@dataclass(frozen=True)
class HlVerdict:
    status: HlStatus
    witness: Optional[Witness] = None
    diagnostics: Tuple[str, ...] = ()

    def __post_init__(self):
        if self.status is HlStatus.ACHIEVABLE and self.witness is None:
            raise ValueError("an Achievable verdict needs a witness")

    def to_dict(self) -> Dict:
        out = {"status": self.status.value, "diagnostics": list(self.diagnostics), "witness": None}
        if self.witness is not None:
            w = self.witness
            out["witness"] = {
                "index": w.index,
                "lambda": [w.lam.real, w.lam.imag],
                "lambda_dot": [w.lam_dot.real, w.lam_dot.imag],
                "rho0": [[[z.real, z.imag] for z in row] for row in w.rho0.rho],
            }
        return out


def hermitian_phase(r: np.ndarray, atol: Optional[float] = None) -> Optional[complex]:
    """
    Phase c with c·R Hermitian, if R is Hermitian up to a scalar

    Minimizes ||R - e^{iγ}R†|| at γ = -arg Tr(R†R†); then c = e^{-iγ/2}.
    """
    atol = tol("conditions", "hermitian_phase_tol", atol)
    overlap = np.trace(dagger(r) @ dagger(r))
    if abs(overlap) <= 1e-14:
        return None
    gamma = -np.angle(overlap)
    if np.linalg.norm(r - np.exp(1j * gamma) * dagger(r)) > atol * max(1.0, np.linalg.norm(r)):
        return None
    return complex(np.exp(-0.5j * gamma))


def witness_direction(r: np.ndarray) -> np.ndarray:
    """R + R† after rotating R to a Hermitian representative when possible"""
    phase = hermitian_phase(r)
    if phase is not None:
        r = r * phase
    return hermitize(r) * 2


def mix_with_margin(base: np.ndarray, direction: np.ndarray) -> Tuple[DensityMatrix, float]:
    """
    base + β·direction with the largest β in (0, max_mixing] keeping λ_min ≥ margin

    Raises:
        ValueError: base itself violates the margin
    """
    margin = tol("conditions", "psd_margin")
    upper = tol("conditions", "max_mixing")

    def slack(beta: float) -> float:
        return np.linalg.eigvalsh(hermitize(base + beta * direction)).min() - margin

    if slack(0.0) <= 0:
        raise ValueError("base state has no PSD margin to mix into")
    if slack(upper) >= 0:
        beta = upper
    else:
        # λ_min is concave in β, so the root is unique
        beta = scipy.optimize.brentq(slack, 0.0, upper, xtol=1e-14)
    rho = hermitize(base + beta * direction)
    return DensityMatrix(rho / np.trace(rho).real), beta


def _spectrum_or_diagnostic(pc: ParamChannel) -> Tuple[Optional[PeripheralSpectrum], List[str]]:
    try:
        spec = peripheral_spectrum(pc)
    except DegenerateUnresolved as exc:
        return None, [f"peripheral spectrum unresolved: {exc}"]
    return spec, list(spec.warnings)


def _moving_entries(spec: PeripheralSpectrum) -> List[int]:
    """Indices with |λ̇| above threshold, largest first (stable)"""
    threshold = tol("conditions", "lambda_dot_tol")
    moving = [k for k, e in enumerate(spec.entries) if e.lam_dot is not None and abs(e.lam_dot) > threshold]
    return sorted(moving, key=lambda k: -round(abs(spec.entries[k].lam_dot), 10))


def check_corollary1(pc: ParamChannel, rho0_hint: Optional[DensityMatrix] = None) -> HlVerdict:
    """
    Orthogonal peripheral eigenvectors with some λ̇ ≠ 0

    Args:
        pc: channel family
        rho0_hint: preferred input state; used as witness when it populates a moving entry

    Returns:
        HlVerdict with a constructive input state when Achievable
    """
    spec, notes = _spectrum_or_diagnostic(pc)
    if spec is None:
        return HlVerdict(HlStatus.INCONCLUSIVE, diagnostics=tuple(notes))

    gram = spec.gram()
    off_diagonal = np.abs(gram - np.diag(np.diag(gram))).max(initial=0.0)
    unavailable = [k for k, e in enumerate(spec.entries) if e.lam_dot is None]
    if unavailable:
        notes.append(f"λ̇ unavailable for peripheral entries {unavailable}")
    if off_diagonal > tol("conditions", "orthogonality_tol"):
        notes.append(
            f"peripheral eigenvectors are not mutually orthogonal (max overlap {off_diagonal:.3e}); "
            "use asymptotic_qfi for a direct test"
        )
        return HlVerdict(HlStatus.NOT_DETECTED, diagnostics=tuple(notes))

    moving = _moving_entries(spec)
    if not moving:
        status = HlStatus.INCONCLUSIVE if unavailable else HlStatus.NOT_DETECTED
        notes.append("no peripheral eigenvalue moves with θ at θ₀")
        return HlVerdict(status, diagnostics=tuple(notes))

    if rho0_hint is not None:
        coefficients = expand_state(spec, rho0_hint).coefficients
        populated = [k for k in moving if abs(coefficients[k]) > 1e-12]
        if populated:
            e = spec.entries[populated[0]]
            return HlVerdict(
                HlStatus.ACHIEVABLE,
                Witness(populated[0], e.lam, e.lam_dot, rho0_hint),
                tuple(notes + ["witness uses the supplied input state"]),
            )
        notes.append("supplied input state has no weight on a moving eigenvector; constructing one")

    j = moving[0]
    e = spec.entries[j]
    d = spec.fixed_point.dim
    alpha = tol("conditions", "corollary1_alpha")
    base = (1 - alpha) * np.eye(d) / d + alpha * spec.fixed_point.rho
    rho0, beta = mix_with_margin(base, witness_direction(e.eigenmatrix))
    logger.debug("corollary 1 witness: entry %d, β = %.6g", j, beta)
    return HlVerdict(HlStatus.ACHIEVABLE, Witness(j, e.lam, e.lam_dot, rho0), tuple(notes))


def check_corollary2(pc: ParamChannel) -> HlVerdict:
    """Unital channel with a moving peripheral eigenmatrix that is Hermitian up to phase or squares to trace zero"""
    t = pc.at(pc.theta0)
    if not unitality_check(t):
        return HlVerdict(HlStatus.INCONCLUSIVE, diagnostics=("NotUnital: T(θ₀) does not fix I",))
    spec, notes = _spectrum_or_diagnostic(pc)
    if spec is None:
        return HlVerdict(HlStatus.INCONCLUSIVE, diagnostics=tuple(notes))

    moving = _moving_entries(spec)
    if not moving:
        notes.append("no peripheral eigenvalue moves with θ at θ₀")
        return HlVerdict(HlStatus.NOT_DETECTED, diagnostics=tuple(notes))

    square_tol = tol("conditions", "hermitian_phase_tol")
    for j in moving:
        e = spec.entries[j]
        r = e.eigenmatrix
        if hermitian_phase(r) is None and abs(np.trace(r @ r)) > square_tol:
            notes.append(f"entry {j}: eigenmatrix neither Hermitian up to phase nor trace-zero squared")
            continue
        rho0, _ = mix_with_margin(np.eye(t.dim) / t.dim, witness_direction(r))
        return HlVerdict(HlStatus.ACHIEVABLE, Witness(j, e.lam, e.lam_dot, rho0), tuple(notes))
    return HlVerdict(HlStatus.NOT_DETECTED, diagnostics=tuple(notes))


@dataclass(frozen=True)
class SignalEigen:
    mu: complex
    r0: np.ndarray


@dataclass(frozen=True)
class SignalOperator:
    """P·T†·Ṫ·P on the isometric subspace of T (eigenvalue-1 space of T†T)"""
    p: np.ndarray
    s: np.ndarray
    nonzero_eigs: Tuple[SignalEigen, ...]

    @property
    def rank(self) -> int:
        return int(round(np.trace(self.p).real))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.s))

    def is_normal(self, atol: Optional[float] = None) -> bool:
        atol = tol("conditions", "normal_tol", atol)
        s = self.s
        return bool(np.linalg.norm(s @ dagger(s) - dagger(s) @ s) <= atol * max(self.norm ** 2, 1e-300))


def signal_operator(pc: ParamChannel) -> SignalOperator:
    t = pc.at(pc.theta0).t
    tdot = derivative(pc)
    signal_tol = tol("conditions", "signal_tol")

    w, v = eig_hermitian(hermitize(dagger(t) @ t))
    isometric = v[:, np.abs(w - 1) <= signal_tol]
    p = isometric @ dagger(isometric)
    s = p @ dagger(t) @ tdot @ p

    eigs: List[SignalEigen] = []
    if np.linalg.norm(s) > signal_tol:
        system = eigensystem(s)
        normal = np.linalg.norm(s @ dagger(s) - dagger(s) @ s) <= tol("conditions", "normal_tol") * np.linalg.norm(s) ** 2
        for members in system.clusters:
            values = [system.pairs[k].value for k in members]
            if abs(np.mean(values)) <= signal_tol:
                continue
            vectors = np.column_stack([system.pairs[k].right for k in members])
            if normal and len(members) > 1:
                vectors, _ = np.linalg.qr(vectors)
            for k, value in enumerate(values):
                eigs.append(SignalEigen(mu=value, r0=unvectorize(vectors[:, k])))
    return SignalOperator(p=p, s=s, nonzero_eigs=tuple(eigs))


@dataclass(frozen=True)
class Theorem2Check:
    """Condition (i) of the unitary-control criterion and the eigenmatrices R₀ it offers"""
    signal_nonvanishing: bool
    signal_normal: bool
    r0_candidates: List[np.ndarray]
    unital: bool
    signal: SignalOperator
    adjoint_of: List[Optional[int]] = field(default_factory=list)
    diagnostics: Tuple[str, ...] = ()

    @property
    def condition_i_holds(self) -> bool:
        return self.unital and self.signal_nonvanishing and self.signal_normal

    def to_dict(self) -> Dict:
        return {
            "unital": self.unital,
            "signal_nonvanishing": self.signal_nonvanishing,
            "signal_normal": self.signal_normal,
            "signal_rank": self.signal.rank,
            "mu": [[e.mu.real, e.mu.imag] for e in self.signal.nonzero_eigs],
            "adjoint_of": self.adjoint_of,
            "diagnostics": list(self.diagnostics),
        }


def _adjoint_pairs(candidates: Sequence[np.ndarray]) -> List[Optional[int]]:
    """For each R₀, the index of a candidate proportional to R₀†"""
    paired: List[Optional[int]] = []
    for r in candidates:
        adj = dagger(r).reshape(-1)
        match = None
        for j, other in enumerate(candidates):
            if abs(abs(np.vdot(other.reshape(-1), adj)) - 1) <= 1e-6:
                match = j
                break
        paired.append(match)
    return paired


def check_theorem2_conditions(pc: ParamChannel) -> Theorem2Check:
    notes: List[str] = []
    unital = unitality_check(pc.at(pc.theta0))
    if not unital:
        notes.append("NotUnital: the unitary-control criterion does not apply")
    signal = signal_operator(pc)
    nonvanishing = signal.norm > tol("conditions", "signal_tol")
    normal = nonvanishing and signal.is_normal()
    if not nonvanishing:
        notes.append("P·T†·Ṫ·P vanishes")
    elif not normal:
        notes.append("P·T†·Ṫ·P is not normal; control synthesis is not attempted")
    candidates = [e.r0 for e in signal.nonzero_eigs] if normal else []
    return Theorem2Check(
        signal_nonvanishing=nonvanishing,
        signal_normal=normal,
        r0_candidates=candidates,
        unital=unital,
        signal=signal,
        adjoint_of=_adjoint_pairs(candidates),
        diagnostics=tuple(notes),
    )


class HnksStatus(Enum):
    IN_SPAN = "InSpan"
    NOT_IN_SPAN = "NotInSpan"
    ILL_DEFINED = "IllDefined"


@dataclass(frozen=True)
class HnksResult:
    status: HnksStatus
    h: Optional[np.ndarray] = None
    residual: Optional[float] = None

    def to_dict(self) -> Dict:
        return {"status": self.status.value, "residual": self.residual}


def _span_matrix(ops: Sequence[np.ndarray]) -> np.ndarray:
    """Real columns spanning Span_Herm{K_i†K_j}"""
    columns = []
    for i in range(len(ops)):
        for j in range(i, len(ops)):
            a = dagger(ops[i]) @ ops[j]
            for m in (a + dagger(a), 1j * (a - dagger(a))):
                flat = m.reshape(-1)
                columns.append(np.concatenate([flat.real, flat.imag]))
    return np.column_stack(columns)


def hnks_check(ch: KrausChannel, kraus_dots: Sequence[np.ndarray]) -> HnksResult:
    """
    Whether H = iΣK†K̇ lies in the Hermitian span of {K_i†K_j}

    Raises:
        ShapeMismatch: derivatives not aligned with the Kraus operators
    """
    dots = kraus_dots_shape_check(ch, kraus_dots)
    if not all(np.all(np.isfinite(k)) for k in dots):
        return HnksResult(HnksStatus.ILL_DEFINED)
    h = hermitize(1j * sum(dagger(k) @ kd for k, kd in zip(ch.kraus_ops, dots)))
    flat = h.reshape(-1)
    target = np.concatenate([flat.real, flat.imag])
    basis = _span_matrix(ch.kraus_ops)
    coefficients, *_ = scipy.linalg.lstsq(basis, target)
    residual = float(np.linalg.norm(basis @ coefficients - target))
    in_span = residual <= tol("conditions", "hnks_tol") * max(1.0, np.linalg.norm(h))
    return HnksResult(HnksStatus.IN_SPAN if in_span else HnksStatus.NOT_IN_SPAN, h, residual)
