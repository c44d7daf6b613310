#!/usr/bin/env python3
"""
Control Synthesis
Identifies an interleaving unitary U_c with U_c† R U_c = Σ K R K† for both
Hermitian parts of R₀: spectral subspaces, principal-angle refinement,
canonical basis propagation and a Procrustes solve
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from .channels import KrausChannel, ParamChannel, vectorize
from .config import tol
from .errors import AlgorithmInvariantViolated, DimensionMismatch, NoConvergence
from .numerics import as_square, dagger, eig_hermitian, fix_phase, procrustes, require_unitary
from .spectral import peripheral_spectrum

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Subspace:
    """Span of orthonormal basis columns"""
    basis: np.ndarray

    def __post_init__(self):
        basis = np.asarray(self.basis, dtype=np.complex128)
        if basis.ndim != 2 or basis.shape[1] == 0:
            raise AlgorithmInvariantViolated(f"subspace basis has shape {basis.shape}")
        if np.linalg.norm(dagger(basis) @ basis - np.eye(basis.shape[1])) > 1e-10 * basis.shape[1]:
            raise AlgorithmInvariantViolated("subspace basis is not orthonormal")
        object.__setattr__(self, "basis", basis)

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    @property
    def projection(self) -> np.ndarray:
        return self.basis @ dagger(self.basis)

    def same_as(self, other: "Subspace", atol: float = 1e-8) -> bool:
        return self.rank == other.rank and np.linalg.norm(self.projection - other.projection) <= atol


@dataclass(frozen=True)
class ControlSolution:
    u_c: np.ndarray
    sanity_residual: float
    succeeded: bool
    trace: Tuple[Dict, ...] = field(default_factory=tuple)

    def to_dict(self) -> Dict:
        return {
            "u_c": [[[z.real, z.imag] for z in row] for row in self.u_c],
            "sanity_residual": self.sanity_residual,
            "succeeded": self.succeeded,
            "trace": list(self.trace),
        }


def hermitian_split(r0) -> Tuple[np.ndarray, np.ndarray]:
    """R₁ = R₀ + R₀†, R₂ = i(R₀ - R₀†)"""
    r0 = as_square(r0, "r0")
    return r0 + dagger(r0), 1j * (r0 - dagger(r0))


def spectral_subspaces(h, group_tol: Optional[float] = None) -> List[Subspace]:
    """Eigenspaces of Hermitian h, descending, eigenvalues within group_tol merged; zero space included"""
    group_tol = tol("control", "group_tol", group_tol)
    w, v = eig_hermitian(h)
    groups: List[List[int]] = [[0]]
    for k in range(1, len(w)):
        if abs(w[k] - w[groups[-1][-1]]) <= group_tol:
            groups[-1].append(k)
        else:
            groups.append([k])
    return [Subspace(v[:, g]) for g in groups]


def _singular_values(a: Subspace, b: Subspace) -> np.ndarray:
    return scipy.linalg.svd(dagger(a.basis) @ b.basis, compute_uv=False)


def _pair_settled(a: Subspace, b: Subspace) -> bool:
    """Orthogonal, or equal rank with all singular values nonzero and equal"""
    s = _singular_values(a, b)
    nonzero = s > tol("control", "nonzero_tol")
    if not nonzero.any():
        return True
    return (
        a.rank == b.rank
        and int(nonzero.sum()) == a.rank
        and s.max() - s.min() <= tol("control", "group_tol")
    )


def _group_ascending(values: np.ndarray, group_tol: float) -> List[List[int]]:
    order = np.argsort(values, kind="stable")
    groups: List[List[int]] = []
    for k in order:
        if groups and values[k] - values[groups[-1][-1]] <= group_tol:
            groups[-1].append(int(k))
        else:
            groups.append([int(k)])
    return groups


def _split_pair(a: Subspace, b: Subspace) -> Tuple[List[Subspace], List[Subspace]]:
    """
    X-pieces of a and Y-pieces of b from the SVD of Π_a Π_b

    One piece per distinct nonzero singular value (ascending), plus the
    orthogonal complements of the nonzero parts inside a and b.
    """
    u, s, vh = scipy.linalg.svd(dagger(a.basis) @ b.basis, full_matrices=False)
    v = dagger(vh)
    nonzero = [k for k in range(len(s)) if s[k] > tol("control", "nonzero_tol")]
    groups = _group_ascending(s[nonzero], tol("control", "group_tol"))

    xs: List[Subspace] = []
    ys: List[Subspace] = []
    for g in groups:
        cols = [nonzero[k] for k in g]
        xs.append(Subspace(a.basis @ u[:, cols]))
        ys.append(Subspace(b.basis @ v[:, cols]))
    for pieces, space, vectors in ((xs, a, u), (ys, b, v)):
        used = vectors[:, nonzero]
        complement = scipy.linalg.null_space(dagger(used)) if used.shape[1] else np.eye(space.rank)
        if complement.shape[1]:
            pieces.append(Subspace(space.basis @ complement))
    return xs, ys


def _deduplicate(subspaces: Sequence[Subspace]) -> List[Subspace]:
    kept: List[Subspace] = []
    for s in subspaces:
        if not any(s.same_as(k) for k in kept):
            kept.append(s)
    return kept


def _refine(subspaces: Sequence[Subspace], max_rounds: Optional[int] = None) -> Tuple[List[Subspace], int]:
    max_rounds = tol("control", "max_rounds", max_rounds)
    current = _deduplicate(subspaces)
    for round_ in range(max_rounds):
        violating = next(
            ((i, j) for i in range(len(current)) for j in range(i + 1, len(current))
             if not _pair_settled(current[i], current[j])),
            None,
        )
        if violating is None:
            return current, round_
        i, j = violating
        xs, ys = _split_pair(current[i], current[j])
        logger.debug("round %d: split pair (%d, %d) into %d + %d pieces", round_, i, j, len(xs), len(ys))
        current = _deduplicate(current[:i] + xs + current[i + 1 : j] + ys + current[j + 1 :])
    raise NoConvergence(f"subspace refinement did not settle within {max_rounds} rounds")


def refine_subspaces(subspaces: Sequence[Subspace], max_rounds: Optional[int] = None) -> List[Subspace]:
    """
    Split subspaces until every pair is orthogonal or equiangular of equal rank

    Raises:
        NoConvergence: refinement cap reached
    """
    return _refine(subspaces, max_rounds)[0]


def _seed_basis(space: Subspace) -> np.ndarray:
    """Projected coordinate axes, Gram-Schmidt in index order"""
    projection = space.projection
    seed_tol = tol("control", "seed_tol")
    basis: List[np.ndarray] = []
    for k in range(projection.shape[0]):
        w = projection[:, k].copy()
        for b in basis:
            w = w - b * np.vdot(b, w)
        norm = np.linalg.norm(w)
        if norm > seed_tol:
            basis.append(w / norm)
        if len(basis) == space.rank:
            break
    if len(basis) != space.rank:
        raise AlgorithmInvariantViolated("could not seed a basis from the coordinate axes")
    return np.column_stack(basis)


def _propagate(source: np.ndarray, target: Subspace) -> np.ndarray:
    """Ṽ = Π_target Ũ / σ for the common singular value σ"""
    s = scipy.linalg.svd(dagger(source) @ target.basis, compute_uv=False)
    nonzero = s > tol("control", "nonzero_tol")
    if source.shape[1] != target.rank or int(nonzero.sum()) != target.rank:
        raise AlgorithmInvariantViolated(
            f"cannot propagate a rank-{source.shape[1]} basis onto a rank-{target.rank} subspace"
        )
    if s.max() - s.min() > tol("control", "group_tol"):
        raise AlgorithmInvariantViolated("singular values of a settled pair differ")
    return target.projection @ source / s.mean()


def canonical_order(subspaces: Sequence[Subspace]) -> np.ndarray:
    """
    Basis vectors of every subspace in a uniquely determined order

    Each connected component (non-orthogonality graph) is seeded at its first
    subspace and propagated breadth-first; columns follow list order.

    Raises:
        AlgorithmInvariantViolated: subspaces not refined
    """
    bases: List[Optional[np.ndarray]] = [None] * len(subspaces)
    nonzero_tol = tol("control", "nonzero_tol")
    for seed in range(len(subspaces)):
        if bases[seed] is not None:
            continue
        bases[seed] = _seed_basis(subspaces[seed])
        queue = [seed]
        while queue:
            k = queue.pop(0)
            for j, space in enumerate(subspaces):
                if bases[j] is not None:
                    continue
                if np.linalg.norm(dagger(bases[k]) @ space.basis, 2) <= nonzero_tol:
                    continue
                bases[j] = _propagate(bases[k], space)
                queue.append(j)
    return np.column_stack(bases)


def gram_preserved(m1: np.ndarray, m2: np.ndarray, atol: float = 1e-8) -> bool:
    """Equal inner-product matrices of the canonical vectors"""
    if m1.shape != m2.shape:
        return False
    return np.abs(dagger(m1) @ m1 - dagger(m2) @ m2).max() <= atol


def _canonical_matrix(mats: Sequence[np.ndarray], label: str, trace: List[Dict]) -> np.ndarray:
    subspaces: List[Subspace] = []
    for m in mats:
        subspaces.extend(spectral_subspaces(m))
    refined, rounds = _refine(subspaces)
    trace.append({"list": label, "subspaces": len(subspaces), "refined": len(refined), "rounds": rounds})
    return canonical_order(refined)


def _residual(u: np.ndarray, ins: Sequence[np.ndarray], outs: Sequence[np.ndarray]) -> float:
    return max(
        np.linalg.norm(dagger(u) @ r @ u - out) / max(1.0, np.linalg.norm(r))
        for r, out in zip(ins, outs)
    )


def synthesize_control(ch: KrausChannel, r0) -> ControlSolution:
    """
    Unitary U_c with U_c† R_i U_c = Σ K R_i K† for the Hermitian parts R_i of r0

    Args:
        ch: channel at θ₀ in Kraus form
        r0: eigenmatrix of the signal operator (or any matching square matrix)

    Returns:
        ControlSolution; succeeded is False when no unitary relates the lists

    Raises:
        NoConvergence, AlgorithmInvariantViolated: the construction itself broke down
    """
    r0 = as_square(r0, "r0")
    if r0.shape[0] != ch.dim:
        raise DimensionMismatch(f"r0 has dimension {r0.shape[0]}, channel dimension is {ch.dim}")
    ins = list(hermitian_split(r0))
    outs = [ch.act(r) for r in ins]

    trace: List[Dict] = []
    m1 = _canonical_matrix(ins, "in", trace)
    m2 = _canonical_matrix(outs, "out", trace)
    if m1.shape != m2.shape:
        logger.info("canonical bases differ in size (%d vs %d columns)", m1.shape[1], m2.shape[1])
        u = np.eye(ch.dim, dtype=np.complex128)
    else:
        u = fix_phase(procrustes(m1, m2))
        trace.append({"gram_preserved": bool(gram_preserved(m1, m2))})

    residual = float(_residual(u, ins, outs))
    succeeded = residual <= tol("control", "sanity_tol")
    logger.debug("control synthesis residual %.3e (%s)", residual, "ok" if succeeded else "failed")
    return ControlSolution(u_c=u, sanity_residual=residual, succeeded=succeeded, trace=tuple(trace))


def verify_control(pc: ParamChannel, u_c, r0) -> bool:
    """
    T(θ₀)|R_i>> = (U_c† ⊗ U_c^T)|R_i>> for both Hermitian parts, and the
    regulated channel has a moving peripheral eigenvalue
    """
    u = require_unitary(u_c)
    r0 = as_square(r0, "r0")
    t = pc.at(pc.theta0).t
    if u.shape[0] != pc.dim or r0.shape[0] != pc.dim:
        return False
    conjugation = np.kron(dagger(u), u.T)
    for r in hermitian_split(r0):
        v = vectorize(r)
        if np.linalg.norm(t @ v - conjugation @ v) > 1e-8 * max(1.0, np.linalg.norm(v)):
            return False
    spec = peripheral_spectrum(pc.with_control(u))
    threshold = tol("conditions", "lambda_dot_tol")
    return any(e.lam_dot is not None and abs(e.lam_dot) > threshold for e in spec.entries)
