#!/usr/bin/env python3
"""
Quantum Fisher Information
SLD and exact QFI, the associated QFI of the vectorized state, its lower
bound, asymptotic N² and N coefficients and exact finite-N sequences
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from .channels import DensityMatrix, MatrixLike, ParamChannel, derivative, unvectorize, vectorize
from .config import tol
from .errors import (
    DegeneratePurity,
    DegenerateUnresolved,
    MalformedInput,
    NotHermitian,
    NotNormalized,
    RankDeficientSignal,
)
from .numerics import as_square, dagger, hermitize, is_hermitian, require_unitary
from .spectral import (
    PeripheralSpectrum,
    StateExpansion,
    asymptotic_state,
    expand_state,
    peripheral_spectrum,
    track_peripheral,
)

logger = logging.getLogger(__name__)


def _as_rho(rho: MatrixLike) -> np.ndarray:
    return rho.rho if isinstance(rho, DensityMatrix) else as_square(rho, "rho")


def _as_rho_dot(rho_dot, dim: int) -> np.ndarray:
    m = as_square(rho_dot, "rho_dot")
    if m.shape[0] != dim:
        raise MalformedInput(f"rho_dot has shape {m.shape}, state dimension is {dim}")
    if not is_hermitian(m, 1e-9):
        raise NotHermitian("rho_dot is not Hermitian")
    return hermitize(m)


def qfi_pure(psi, psi_dot) -> float:
    """4(<ψ̇|ψ̇> - |<ψ|ψ̇>|²) for a normalized pure state"""
    psi = np.asarray(psi, dtype=np.complex128).reshape(-1)
    psi_dot = np.asarray(psi_dot, dtype=np.complex128).reshape(-1)
    if abs(np.linalg.norm(psi) - 1) > 1e-10:
        raise NotNormalized(f"state has norm {np.linalg.norm(psi):.12g}")
    value = 4 * (np.vdot(psi_dot, psi_dot).real - abs(np.vdot(psi, psi_dot)) ** 2)
    return max(0.0, float(value))


@dataclass(frozen=True)
class SldResult:
    l: np.ndarray
    support_dim: int


def _eigen_frame(rho: DensityMatrix, rho_dot) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Pairwise eigenvalue sums p_i + p_j, ρ̇ in ρ's eigenbasis, the in-support mask and the eigenbasis"""
    rho_dot = _as_rho_dot(rho_dot, rho.dim)
    if abs(np.trace(rho_dot)) > 1e-9 * max(1.0, np.linalg.norm(rho_dot)):
        raise MalformedInput(f"rho_dot has non-zero trace {np.trace(rho_dot).real:.3e}")
    p, v = np.linalg.eigh(hermitize(rho.rho))
    p = np.clip(p, 0.0, None)
    d = dagger(v) @ rho_dot @ v
    sums = p[:, None] + p[None, :]
    inside = sums > tol("qfi", "support_tol")
    leak = np.abs(d[~inside]).max(initial=0.0)
    if leak >= tol("qfi", "rank_tol"):
        raise RankDeficientSignal(
            f"rho_dot has weight {leak:.3e} outside the support of rho; QFI is discontinuous here"
        )
    return sums, d, inside, v


def sld(rho: DensityMatrix, rho_dot) -> SldResult:
    """
    Symmetric logarithmic derivative solving 2ρ̇ = ρL + Lρ

    Raises:
        RankDeficientSignal: ρ̇ leaves the support of ρ
    """
    sums, d, inside, v = _eigen_frame(rho, rho_dot)
    l_eig = np.zeros_like(d)
    l_eig[inside] = 2 * d[inside] / sums[inside]
    support = int(np.sum(np.diag(inside)))
    return SldResult(l=hermitize(v @ l_eig @ dagger(v)), support_dim=support)


def qfi_mixed(rho: DensityMatrix, rho_dot) -> float:
    """Tr(ρL²) = Σ 2|ρ̇_ij|²/(p_i + p_j) over the support"""
    sums, d, inside, _ = _eigen_frame(rho, rho_dot)
    value = np.sum(2 * np.abs(d[inside]) ** 2 / sums[inside])
    return max(0.0, float(value))


def _purity(rho: np.ndarray) -> float:
    purity = float(np.vdot(rho, rho).real)
    if purity <= tol("qfi", "purity_tol"):
        raise DegeneratePurity(f"Tr(ρ²) = {purity:.3e} is too small")
    return purity


def associated_qfi(rho: MatrixLike, rho_dot) -> float:
    """
    QFI of the normalized vectorization |ρ>>/√Tr(ρ²)

    4{<<ρ̇|ρ̇>>/Tr(ρ²) - [<<ρ|ρ̇>>/Tr(ρ²)]²}
    """
    rho = _as_rho(rho)
    rho_dot = as_square(rho_dot, "rho_dot")
    purity = _purity(rho)
    overlap = np.vdot(rho, rho_dot).real / purity
    value = 4 * (np.vdot(rho_dot, rho_dot).real / purity - overlap ** 2)
    return max(0.0, float(value))


def bound_factor(rho: MatrixLike) -> float:
    """Tr(ρ²)/(4 λ_max(ρ))"""
    rho = _as_rho(rho)
    return _purity(rho) / (4 * np.linalg.eigvalsh(hermitize(rho)).max())


def qfi_lower_bound(rho: MatrixLike, rho_dot) -> float:
    return bound_factor(rho) * associated_qfi(rho, rho_dot)


@dataclass(frozen=True)
class AsymptoticQfiReport:
    """
    Leading coefficients of the associated QFI of T^N|ρ₀>> as N grows

    Coefficients oscillate with N when peripheral phases differ; *_by_residue
    holds one value per class N mod oscillation_period.
    """
    n2_coefficient: float
    n1_coefficient: Optional[float]
    beta: np.ndarray
    lambda_dots: List[Optional[complex]]
    oscillation_period: Optional[int]
    achieves_hl: bool
    n2_by_residue: Tuple[float, ...] = ()
    n1_by_residue: Optional[Tuple[float, ...]] = None
    residue: int = 0
    lambdas: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.complex128))
    warnings: Tuple[str, ...] = ()

    def to_dict(self) -> Dict:
        out = asdict(self)
        out["beta"] = [[[z.real, z.imag] for z in row] for row in np.asarray(self.beta)]
        out["lambdas"] = [[z.real, z.imag] for z in np.asarray(self.lambdas)]
        out["lambda_dots"] = [None if z is None else [z.real, z.imag] for z in self.lambda_dots]
        out["n2_by_residue"] = list(self.n2_by_residue)
        out["n1_by_residue"] = None if self.n1_by_residue is None else list(self.n1_by_residue)
        out["warnings"] = list(self.warnings)
        return out


def _oscillation_period(lambdas: np.ndarray, weights: np.ndarray) -> Tuple[Optional[int], bool]:
    """
    Least p ≤ max_period with (λ_i*λ_j)^p = 1 on every weighted pair

    Returns:
        (period or None when it is 1, whether a period was found)
    """
    phases = np.conj(lambdas)[:, None] * lambdas[None, :]
    mask = np.abs(weights) > 1e-12
    period_tol = tol("qfi", "period_tol")
    for p in range(1, tol("spectral", "max_period") + 1):
        if np.all(np.abs(phases[mask] ** p - 1) <= period_tol):
            return (None if p == 1 else p), True
    return None, False


def asymptotic_qfi(
    pc: ParamChannel,
    rho0: DensityMatrix,
    residue: int = 0,
    spectrum: Optional[PeripheralSpectrum] = None,
) -> AsymptoticQfiReport:
    """
    N² (and where available N) coefficients of the associated QFI

    Args:
        pc: channel family
        rho0: input state
        residue: class N mod oscillation_period reported as the headline value
        spectrum: precomputed peripheral spectrum of pc

    Raises:
        DegenerateUnresolved: λ̇ unavailable on an entry the input state populates
    """
    spec = spectrum if spectrum is not None else peripheral_spectrum(pc)
    exp = expand_state(spec, rho0)
    a = exp.coefficients
    lam = spec.lambdas
    notes = list(spec.warnings)

    active = np.abs(a) > 1e-12
    lam_dots = spec.lambda_dots
    if any(active[k] and lam_dots[k] is None for k in range(len(spec))):
        raise DegenerateUnresolved("λ̇ unavailable for a peripheral entry the input state populates")
    kappa = np.array(
        [lam_dots[k] / lam[k] if active[k] else 0j for k in range(len(spec))], dtype=np.complex128
    )
    gram = spec.gram()
    weights = np.conj(a)[:, None] * a[None, :] * gram

    period, periodic = _oscillation_period(lam, weights)
    if not periodic:
        notes.append("peripheral phases are incommensurate; coefficients evaluated at N ≡ residue only")
    classes = period or 1

    derivs = track_peripheral(pc, spec, rho0)
    if derivs is None:
        logger.debug("eigenvector derivatives unavailable; N-order coefficient omitted")
    else:
        h = dagger(derivs.right_dots) @ spec.rights
        linear = np.conj(derivs.coefficient_dots)[:, None] * a[None, :] * gram + np.conj(a)[:, None] * a[None, :] * h

    n2_values, n1_values, betas = [], [], []
    exponents = range(classes) if periodic else [residue]
    for r in exponents:
        phase = (np.conj(lam)[:, None] * lam[None, :]) ** r
        w = phase * weights
        purity = float(np.sum(w).real)
        if purity <= tol("qfi", "purity_tol"):
            raise DegeneratePurity(f"asymptotic state has purity {purity:.3e}")
        beta = w / purity
        s = float(np.sum(beta * kappa[None, :]).real)
        n2 = 4 * (float(np.sum(beta * np.conj(kappa)[:, None] * kappa[None, :]).real) - s ** 2)
        n2_values.append(max(n2, 0.0))
        betas.append(beta)
        if derivs is not None:
            n1_values.append(float(8 / purity * np.sum(phase * linear * (kappa[None, :] - s)).real))

    index = residue % classes if periodic else 0
    threshold = tol("qfi", "hl_threshold")
    return AsymptoticQfiReport(
        n2_coefficient=n2_values[index],
        n1_coefficient=n1_values[index] if n1_values else None,
        beta=betas[index],
        lambda_dots=lam_dots,
        oscillation_period=period,
        achieves_hl=max(n2_values) > threshold,
        n2_by_residue=tuple(n2_values),
        n1_by_residue=tuple(n1_values) if n1_values else None,
        residue=index,
        lambdas=lam,
        warnings=tuple(notes),
    )


def _peripheral_density(spec: PeripheralSpectrum, exp: StateExpansion, n: int) -> np.ndarray:
    m = unvectorize(asymptotic_state(spec, exp, n))
    trace = np.trace(m)
    m = hermitize(m * (abs(trace) / trace))
    return m / np.trace(m).real


def asymptotic_lower_bound(
    report: AsymptoticQfiReport,
    spectrum: PeripheralSpectrum,
    expansion: StateExpansion,
    residue: Optional[int] = None,
) -> float:
    """N² coefficient of the QFI lower bound on the residue class's peripheral state"""
    residue = report.residue if residue is None else residue
    classes = len(report.n2_by_residue)
    r = residue % classes
    rho_inf = _peripheral_density(spectrum, expansion, r)
    return bound_factor(rho_inf) * report.n2_by_residue[r]


@dataclass(frozen=True)
class SequenceQfi:
    n: int
    qfi: float
    associated: float
    bound: float

    def to_dict(self) -> Dict:
        return asdict(self)


def _controlled(pc: ParamChannel, control: Optional[np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
    t = pc.at(pc.theta0).t
    tdot = derivative(pc)
    if control is not None:
        u = require_unitary(control)
        uu = np.kron(u, u.conj())
        t, tdot = uu @ t, uu @ tdot
    return t, tdot


def _evaluate(n: int, v: np.ndarray, vd: np.ndarray) -> SequenceQfi:
    rho = hermitize(unvectorize(v))
    trace = np.trace(rho).real
    rho_dot = hermitize(unvectorize(vd)) / trace
    state = DensityMatrix(rho / trace)
    try:
        qfi = qfi_mixed(state, rho_dot)
    except RankDeficientSignal as exc:
        raise RankDeficientSignal(
            f"{exc} after {n} steps; perturb the input state so the output rank does not change with θ"
        ) from exc
    associated = associated_qfi(state, rho_dot)
    return SequenceQfi(n, qfi, associated, bound_factor(state) * associated)


def exact_sequence_qfi(
    pc: ParamChannel, rho0: DensityMatrix, control: Optional[np.ndarray] = None, n: int = 1
) -> SequenceQfi:
    """
    QFI of n sequential (optionally controlled) channel uses at θ₀

    The output derivative is propagated with the product rule
    ρ̇_{k+1} = Ṫρ_k + Tρ̇_k, never by differencing across n applications.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    t, tdot = _controlled(pc, control)
    v = vectorize(rho0)
    vd = np.zeros_like(v)
    for _ in range(n):
        vd = t @ vd + tdot @ v
        v = t @ v
    return _evaluate(n, v, vd)


def sequence_qfi_sweep(
    pc: ParamChannel,
    rho0: DensityMatrix,
    control: Optional[np.ndarray] = None,
    n_min: int = 1,
    n_max: int = 100,
) -> pd.DataFrame:
    """Exact QFI, associated QFI and lower bound for every N in [n_min, n_max]"""
    if n_min < 1 or n_max < n_min:
        raise ValueError(f"invalid range [{n_min}, {n_max}]")
    t, tdot = _controlled(pc, control)
    v = vectorize(rho0)
    vd = np.zeros_like(v)
    rows = []
    for n in range(1, n_max + 1):
        vd = t @ vd + tdot @ v
        v = t @ v
        if n >= n_min:
            res = _evaluate(n, v, vd)
            rows.append({"N": n, "qfi": res.qfi, "assoc_qfi": res.associated, "lower_bound": res.bound})
    return pd.DataFrame(rows, columns=["N", "qfi", "assoc_qfi", "lower_bound"])
