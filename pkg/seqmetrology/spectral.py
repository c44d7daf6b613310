#!/usr/bin/env python3
"""
Peripheral Spectrum
Unit-modulus eigenvalues of T_θ₀ with biorthonormal eigenvectors, their
θ-derivatives, the canonical fixed point and the expansion of input states
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .channels import (
    DensityMatrix,
    ParamChannel,
    TransitionMatrix,
    derivative,
    difference_stencil,
    identity_vector,
    unvectorize,
    vectorize,
)
from .config import tol
from .errors import DegenerateUnresolved, DomainViolation
from .numerics import EigPair, dagger, eigensystem, fix_phase, hermitize

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PeripheralEntry:
    lam: complex
    lam_dot: Optional[complex]
    right: np.ndarray
    left: np.ndarray
    is_fixed_point: bool
    cluster_size: int = 1

    @property
    def eigenmatrix(self) -> np.ndarray:
        return unvectorize(self.right)

    @property
    def simple(self) -> bool:
        return self.cluster_size == 1


@dataclass(frozen=True)
class PeripheralSpectrum:
    entries: Tuple[PeripheralEntry, ...]
    tolerance_used: float
    fixed_point: DensityMatrix
    warnings: Tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([e.lam for e in self.entries], dtype=np.complex128)

    @property
    def lambda_dots(self) -> List[Optional[complex]]:
        return [e.lam_dot for e in self.entries]

    @property
    def rights(self) -> np.ndarray:
        return np.column_stack([e.right for e in self.entries])

    @property
    def lefts(self) -> np.ndarray:
        return np.column_stack([e.left for e in self.entries])

    def gram(self) -> np.ndarray:
        r = self.rights
        return dagger(r) @ r

    def table(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "lambda": [complex(np.round(e.lam, 10)) for e in self.entries],
                "|lambda|": [round(abs(e.lam), 12) for e in self.entries],
                "lambda_dot": [
                    None if e.lam_dot is None else complex(np.round(e.lam_dot, 10)) for e in self.entries
                ],
                "fixed_point": [e.is_fixed_point for e in self.entries],
            }
        )


@dataclass(frozen=True)
class StateExpansion:
    coefficients: np.ndarray
    remainder: np.ndarray

    @property
    def residual(self) -> float:
        return float(np.linalg.norm(self.remainder))


@dataclass(frozen=True)
class EigenvectorDerivatives:
    """dR_i/dθ (unit, phase-aligned right vectors) and da_i/dθ at θ₀"""
    right_dots: np.ndarray
    coefficient_dots: np.ndarray


def _is_psd_up_to_phase(r: np.ndarray) -> bool:
    m = unvectorize(r)
    trace = np.trace(m)
    if abs(trace) < 1e-12:
        return False
    m = m * (abs(trace) / trace)
    if np.linalg.norm(m - dagger(m)) > 1e-8 * max(1.0, np.linalg.norm(m)):
        return False
    return np.linalg.eigvalsh(hermitize(m)).min() >= -1e-8 * np.linalg.norm(m)


def _fix_sign_hermitian(v: np.ndarray) -> np.ndarray:
    """Real-sign normalization for a vectorized Hermitian matrix"""
    d = int(round(np.sqrt(v.size)))
    trace = np.trace(v.reshape(d, d)).real
    if abs(trace) > 1e-12:
        return v if trace > 0 else -v
    k = int(np.argmax(np.round(np.abs(v), 10)))
    ref = v[k].real if abs(v[k].real) > 1e-12 else v[k].imag
    return v if ref > 0 else -v


def _gram_schmidt(candidates: Sequence[np.ndarray], rank: int, atol: float = 1e-8) -> List[np.ndarray]:
    basis: List[np.ndarray] = []
    for c in candidates:
        v = np.array(c, dtype=np.complex128)
        for b in basis:
            v = v - b * np.vdot(b, v)
        norm = np.linalg.norm(v)
        if norm > atol:
            basis.append(v / norm)
        if len(basis) == rank:
            break
    return basis


def _canonical_group_basis(group: np.ndarray, anchor: Optional[np.ndarray]) -> List[np.ndarray]:
    """
    Deterministic orthonormal basis of span(group columns)

    The anchor (fixed point) comes first when it lies in the span; a Hermitian
    basis is used when the span is closed under the adjoint.
    """
    q, _ = np.linalg.qr(group)
    rank = group.shape[1]
    projector = q @ dagger(q)
    candidates: List[np.ndarray] = []
    anchored = False
    if anchor is not None and np.linalg.norm(projector @ anchor - anchor) <= 1e-8:
        candidates.append(anchor)
        anchored = True

    adjoints = [vectorize(dagger(unvectorize(q[:, k]))) for k in range(rank)]
    closed = all(np.linalg.norm(projector @ a - a) <= 1e-8 for a in adjoints)
    if closed:
        for k in range(rank):
            m = unvectorize(q[:, k])
            candidates.append(vectorize((m + dagger(m)) / 2))
            candidates.append(vectorize((m - dagger(m)) / 2j))
    else:
        candidates.extend(group[:, k] / np.linalg.norm(group[:, k]) for k in range(rank))

    basis = _gram_schmidt(candidates, rank)
    if len(basis) < rank:
        basis = [q[:, k] for k in range(rank)]
        anchored, closed = False, False
    fixed = []
    for k, v in enumerate(basis):
        if anchored and k == 0:
            fixed.append(v)
        elif closed:
            fixed.append(_fix_sign_hermitian(v))
        else:
            fixed.append(fix_phase(v))
    return fixed


def _resolve_cluster(
    right: np.ndarray,
    left: np.ndarray,
    tdot: np.ndarray,
    anchor: Optional[np.ndarray],
) -> Tuple[np.ndarray, np.ndarray, List[Optional[complex]], List[str]]:
    """
    Split a degenerate peripheral cluster with the restricted block L†ṪR

    Returns:
        (R', L', λ̇ per column or None, warnings)
    """
    notes: List[str] = []
    m = right.shape[1]
    block = dagger(left) @ tdot @ right
    groups: List[Tuple[Optional[complex], np.ndarray]] = []

    if np.linalg.norm(block) <= 1e-12 * max(1.0, np.linalg.norm(tdot)):
        groups.append((0j, np.eye(m, dtype=np.complex128)))
    else:
        try:
            system = eigensystem(block)
            for members in system.clusters:
                mu = complex(np.mean([system.pairs[k].value for k in members]))
                if len(members) == 1:
                    coeffs = system.pairs[members[0]].right[:, None]
                else:
                    coeffs, _ = system.cluster_basis(members)
                groups.append((mu, coeffs))
        except DegenerateUnresolved as exc:
            notes.append(f"block perturbation not diagonalizable ({exc}); λ̇ unavailable")
            groups = [(None, np.eye(m, dtype=np.complex128))]

    # fixed-point group first so ρ_* leads the cluster
    if anchor is not None:
        def holds_anchor(g):
            span = right @ g[1]
            q, _ = np.linalg.qr(span)
            return np.linalg.norm(q @ (dagger(q) @ anchor) - anchor) <= 1e-8
        groups.sort(key=lambda g: not holds_anchor(g))

    columns: List[np.ndarray] = []
    mus: List[Optional[complex]] = []
    for mu, coeffs in groups:
        for v in _canonical_group_basis(right @ coeffs, anchor):
            columns.append(v)
            mus.append(mu)
    new_right = np.column_stack(columns)

    overlap = dagger(left) @ new_right
    if np.linalg.cond(overlap) > tol("numerics", "max_cond"):
        notes.append("cluster basis ill-conditioned; λ̇ unavailable")
        return right, left, [None] * m, notes
    new_left = left @ dagger(np.linalg.inv(overlap))
    return new_right, new_left, mus, notes


def _fixed_point_from(system, dim: int, fp_tol: float) -> DensityMatrix:
    clusters = system.clusters
    distance = [abs(np.mean([system.pairs[k].value for k in c]) - 1) for c in clusters]
    best = int(np.argmin(distance))
    if distance[best] > fp_tol:
        logger.warning("no eigenvalue within %.1e of 1 (closest %.3e)", fp_tol, distance[best])
    members = clusters[best]
    if len(members) == 1:
        pair = system.pairs[members[0]]
        if pair.left is None:
            raise DegenerateUnresolved("fixed-point eigenvector has no dual left vector")
        right, left = pair.right[:, None], pair.left[:, None]
    else:
        right, left = system.cluster_basis(members)
    v = right @ (dagger(left) @ (identity_vector(dim) / dim))
    rho = hermitize(unvectorize(v))
    return DensityMatrix(rho / np.trace(rho).real)


def fixed_point(t: TransitionMatrix) -> DensityMatrix:
    """
    Canonical fixed point: spectral projection of I/d onto the λ = 1 eigenspace

    Args:
        t: valid transition matrix

    Returns:
        Fixed-point density matrix (I/d for unital channels)
    """
    return _fixed_point_from(eigensystem(t.t), t.dim, tol("spectral", "fixed_point_tol"))


def peripheral_spectrum(pc: ParamChannel, tol_: Optional[float] = None) -> PeripheralSpectrum:
    """
    Peripheral eigenvalues of T(θ₀) with eigenvectors and eigenvalue derivatives

    Simple eigenvalues use first-order perturbation; degenerate clusters are
    split by the eigenvalues of the restricted block L†ṪR.

    Raises:
        DegenerateUnresolved: a peripheral cluster is not diagonalizable at tolerance
    """
    periph_tol = tol("spectral", "peripheral_tol", tol_)
    near_tol = tol("spectral", "near_peripheral_tol")
    fp_tol = tol("spectral", "fixed_point_tol")

    t = pc.at(pc.theta0)
    tdot = derivative(pc)
    system = eigensystem(t.t)
    rho_star = _fixed_point_from(system, t.dim, fp_tol)
    anchor = vectorize(rho_star)
    anchor = anchor / np.linalg.norm(anchor)

    entries: List[PeripheralEntry] = []
    warnings: List[str] = []
    for members in system.clusters:
        lam = complex(np.mean([system.pairs[k].value for k in members]))
        gap = 1 - abs(lam)
        if gap > periph_tol:
            if gap < near_tol:
                warnings.append(
                    f"near-peripheral eigenvalue {lam:.10g} (1-|λ| = {gap:.2e}); finite-N behaviour may differ"
                )
            continue

        if len(members) == 1:
            pair = system.pairs[members[0]]
            if pair.left is None:
                raise DegenerateUnresolved(f"peripheral eigenvalue {lam:.10g} has no dual left vector")
            rights, lefts = pair.right[:, None], pair.left[:, None]
            dots: List[Optional[complex]] = [complex(np.vdot(pair.left, tdot @ pair.right))]
        else:
            right, left = system.cluster_basis(members)
            is_one = abs(lam - 1) <= fp_tol
            rights, lefts, dots, notes = _resolve_cluster(right, left, tdot, anchor if is_one else None)
            warnings.extend(f"cluster at λ = {lam:.6g}: {n}" for n in notes)

        for k in range(rights.shape[1]):
            r = rights[:, k]
            entries.append(
                PeripheralEntry(
                    lam=lam,
                    lam_dot=dots[k],
                    right=r,
                    left=lefts[:, k],
                    is_fixed_point=abs(lam - 1) <= fp_tol and _is_psd_up_to_phase(r),
                    cluster_size=len(members),
                )
            )

    for w in warnings:
        logger.warning(w)
    return PeripheralSpectrum(tuple(entries), periph_tol, rho_star, tuple(warnings))


def eigenvalue_derivative(pc: ParamChannel, entry) -> complex:
    """
    λ̇ = left†·Ṫ·right / (left†·right) for a simple eigenvalue

    Args:
        entry: PeripheralEntry or EigPair of T(θ₀)
    """
    if entry.left is None or (isinstance(entry, PeripheralEntry) and not entry.simple):
        raise DegenerateUnresolved("eigenvalue derivative requires a simple eigenvalue")
    tdot = derivative(pc)
    return complex(np.vdot(entry.left, tdot @ entry.right) / np.vdot(entry.left, entry.right))


def expand_state(spec: PeripheralSpectrum, rho0: DensityMatrix) -> StateExpansion:
    v = vectorize(rho0)
    if len(spec) == 0:
        return StateExpansion(np.zeros(0, dtype=np.complex128), v)
    coefficients = dagger(spec.lefts) @ v
    return StateExpansion(coefficients, v - spec.rights @ coefficients)


def asymptotic_state(spec: PeripheralSpectrum, exp: StateExpansion, n: int) -> np.ndarray:
    """Σ a_i λ_i^n |R_i>> over the peripheral entries"""
    if n < 0:
        raise ValueError("n must be non-negative")
    if len(spec) == 0:
        return np.zeros_like(exp.remainder)
    return spec.rights @ (exp.coefficients * spec.lambdas ** n)


def track_peripheral(
    pc: ParamChannel, spec: PeripheralSpectrum, rho0: DensityMatrix
) -> Optional[EigenvectorDerivatives]:
    """
    Finite-difference derivatives of peripheral eigenvectors and coefficients

    Eigenpairs at the stencil points are matched to θ₀ by nearest predicted
    eigenvalue, right vectors are phase-aligned to θ₀; None when any peripheral
    entry is clustered or no stencil is admissible.
    """
    if len(spec) == 0 or not all(e.simple and e.lam_dot is not None for e in spec.entries):
        return None
    try:
        low, high = difference_stencil(pc)
    except DomainViolation:
        return None
    v = vectorize(rho0)

    def sample(theta: float) -> Optional[Tuple[np.ndarray, np.ndarray]]:
        if theta == pc.theta0:
            return spec.rights, dagger(spec.lefts) @ v
        pairs: List[EigPair] = list(eigensystem(pc.at(theta).t).pairs)
        used = set()
        rights, coeffs = [], []
        for e in spec.entries:
            predicted = e.lam + e.lam_dot * (theta - pc.theta0)
            order = np.argsort([abs(p.value - predicted) for p in pairs], kind="stable")
            k = next(int(j) for j in order if int(j) not in used)
            used.add(k)
            pair = pairs[k]
            if pair.left is None:
                return None
            overlap = np.vdot(e.right, pair.right)
            if abs(overlap) < 1e-6:
                return None
            phase = np.conj(overlap) / abs(overlap)
            rights.append(pair.right * phase)
            coeffs.append(np.vdot(pair.left * phase, v))
        return np.column_stack(rights), np.array(coeffs)

    lo, hi = sample(low), sample(high)
    if lo is None or hi is None:
        logger.debug("eigenvector tracking failed for %s", pc.name)
        return None
    step = high - low
    return EigenvectorDerivatives(
        right_dots=(hi[0] - lo[0]) / step,
        coefficient_dots=(hi[1] - lo[1]) / step,
    )
