#!/usr/bin/env python3
"""
Dense Complex Linear Algebra
General and Hermitian eigendecompositions, SVD, Hermitian matrix exponential
and the unitary Procrustes solve used throughout the package
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import scipy.linalg

from .config import tol
from .errors import (
    DegenerateUnresolved,
    MalformedInput,
    NonConvergence,
    NotHermitian,
    NotUnitary,
    ShapeMismatch,
)

logger = logging.getLogger(__name__)


def as_cmatrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-D complex128 array"""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise ShapeMismatch(f"{name} must be 2-dimensional, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise MalformedInput(f"{name} has non-finite entries")
    return m


def as_square(a, name: str = "matrix") -> np.ndarray:
    m = as_cmatrix(a, name)
    if m.shape[0] != m.shape[1]:
        raise ShapeMismatch(f"{name} must be square, got shape {m.shape}")
    return m


def dagger(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def hermitize(a: np.ndarray) -> np.ndarray:
    return (a + dagger(a)) / 2


def is_hermitian(a: np.ndarray, atol: Optional[float] = None) -> bool:
    atol = tol("numerics", "hermitian_tol", atol)
    return bool(np.linalg.norm(a - dagger(a)) <= atol * max(1.0, np.linalg.norm(a)))


def is_unitary(u: np.ndarray, atol: Optional[float] = None) -> bool:
    atol = tol("numerics", "unitary_tol", atol)
    u = np.asarray(u, dtype=np.complex128)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return bool(np.linalg.norm(dagger(u) @ u - np.eye(u.shape[0])) <= atol * max(1, u.shape[0]))


def require_unitary(u, name: str = "control") -> np.ndarray:
    m = as_square(u, name)
    if not is_unitary(m):
        raise NotUnitary(f"{name} is not unitary within tolerance")
    return m


def fix_phase(v: np.ndarray) -> np.ndarray:
    """Rotate so the largest-modulus entry is real positive"""
    flat = v.reshape(-1)
    k = int(np.argmax(np.round(np.abs(flat), 10)))
    if abs(flat[k]) == 0:
        return v
    return v * (abs(flat[k]) / flat[k])


def _sort_key(value: complex) -> Tuple[float, float, float]:
    return (-round(abs(value), 10), -round(value.real, 10), -round(value.imag, 10))


@dataclass(frozen=True)
class EigPair:
    """Eigenvalue with unit right eigenvector and, for simple eigenvalues, a dual left vector"""
    value: complex
    right: np.ndarray
    left: Optional[np.ndarray]
    cluster: int

    @property
    def degenerate(self) -> bool:
        return self.left is None


@dataclass(frozen=True)
class SvdResult:
    u: np.ndarray
    singular_values: np.ndarray
    v: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.singular_values) @ dagger(self.v)


@dataclass(frozen=True)
class EigenSystem:
    """
    Full output of eig_general

    pairs are sorted by descending modulus, then real part, then imaginary part;
    clusters groups pair indices whose eigenvalues coincide within tolerance
    """
    matrix: np.ndarray
    pairs: List[EigPair]
    clusters: List[List[int]]
    _adjoint_values: np.ndarray = field(repr=False)
    _adjoint_vectors: np.ndarray = field(repr=False)

    def cluster_basis(self, members: List[int]) -> Tuple[np.ndarray, np.ndarray]:
        """
        Biorthonormal right/left bases of a cluster's eigenspace

        Args:
            members: pair indices forming one cluster

        Returns:
            (R, L) with unit-norm columns in R and L†R = I

        Raises:
            DegenerateUnresolved: the cluster is not diagonalizable at tolerance
        """
        right = np.column_stack([self.pairs[k].right for k in members])
        center = np.mean([self.pairs[k].value for k in members])
        nearest = np.argsort(np.abs(self._adjoint_values - np.conj(center)), kind="stable")
        left = self._adjoint_vectors[:, nearest[: len(members)]]

        s = np.linalg.svd(right, compute_uv=False)
        if s[-1] <= 1e-8 * max(1.0, s[0]):
            raise DegenerateUnresolved(
                f"eigenvalue cluster near {center:.6g} has a non-trivial Jordan block"
            )
        overlap = dagger(right) @ left
        if np.linalg.cond(overlap) > tol("numerics", "max_cond"):
            raise DegenerateUnresolved(
                f"left/right eigenspaces near {center:.6g} cannot be paired"
            )
        return right, left @ np.linalg.inv(overlap)


def eigensystem(a, degenerate_tol: Optional[float] = None) -> EigenSystem:
    """
    Eigendecomposition of a general square matrix with left eigenvectors

    Left eigenvectors come from the adjoint's eigenvectors matched by conjugate
    eigenvalue, so the (possibly ill-conditioned) eigenvector matrix is never inverted.
    """
    a = as_square(a)
    degenerate_tol = tol("numerics", "degenerate_tol", degenerate_tol)
    try:
        values, vectors = np.linalg.eig(a)
        adj_values, adj_vectors = np.linalg.eig(dagger(a))
    except np.linalg.LinAlgError as exc:
        raise NonConvergence(f"eigenvalue iteration failed: {exc}") from exc

    order = sorted(range(len(values)), key=lambda k: _sort_key(complex(values[k])))
    values = values[order]
    vectors = vectors[:, order]

    # single-linkage clustering on the sorted spectrum
    n = len(values)
    labels = list(range(n))
    for i in range(n):
        for j in range(i + 1, n):
            scale = max(1.0, abs(values[i]), abs(values[j]))
            if abs(values[i] - values[j]) <= degenerate_tol * scale:
                old, new = labels[j], labels[i]
                labels = [new if lab == old else lab for lab in labels]
    ids = {}
    clusters: List[List[int]] = []
    for k, lab in enumerate(labels):
        if lab not in ids:
            ids[lab] = len(clusters)
            clusters.append([])
        clusters[ids[lab]].append(k)

    pairs = []
    for k in range(n):
        right = fix_phase(vectors[:, k] / np.linalg.norm(vectors[:, k]))
        cluster = ids[labels[k]]
        left = None
        if len(clusters[cluster]) == 1:
            j = int(np.argmin(np.abs(adj_values - np.conj(values[k]))))
            candidate = adj_vectors[:, j]
            overlap = np.vdot(candidate, right)
            if abs(overlap) > 1e-14:
                left = candidate / np.conj(overlap)
            else:
                logger.debug("left eigenvector for %s is orthogonal to the right one", values[k])
        pairs.append(EigPair(value=complex(values[k]), right=right, left=left, cluster=cluster))

    return EigenSystem(a, pairs, clusters, adj_values, adj_vectors)


def eig_general(a, degenerate_tol: Optional[float] = None) -> List[EigPair]:
    return eigensystem(a, degenerate_tol).pairs


def eig_hermitian(a, atol: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Eigendecomposition of a Hermitian matrix

    Returns:
        (eigenvalues descending, unitary eigenvector matrix with matching columns)
    """
    a = as_square(a)
    if not is_hermitian(a, atol):
        raise NotHermitian("matrix is not Hermitian within tolerance")
    try:
        w, v = np.linalg.eigh(hermitize(a))
    except np.linalg.LinAlgError as exc:
        raise NonConvergence(f"Hermitian eigensolver failed: {exc}") from exc
    order = np.argsort(-np.round(w, 12), kind="stable")
    return w[order], v[:, order]


def svd(a) -> SvdResult:
    a = as_cmatrix(a)
    try:
        u, s, vh = scipy.linalg.svd(a, full_matrices=False, lapack_driver="gesdd")
    except np.linalg.LinAlgError:
        logger.debug("gesdd failed, retrying with gesvd")
        try:
            u, s, vh = scipy.linalg.svd(a, full_matrices=False, lapack_driver="gesvd")
        except np.linalg.LinAlgError as exc:
            raise NonConvergence(f"SVD failed: {exc}") from exc
    return SvdResult(u=u, singular_values=s, v=dagger(vh))


def expm_hermitian(h, scale: complex) -> np.ndarray:
    """exp(scale * h) through the eigendecomposition of Hermitian h"""
    w, v = eig_hermitian(h)
    return (v * np.exp(scale * w)) @ dagger(v)


def procrustes(m1, m2) -> np.ndarray:
    """
    Unitary U minimizing ||U† m1 - m2||

    With svd(m2 m1†) = U' D' V'†, the minimizer is V' U'†.
    """
    m1 = as_cmatrix(m1, "m1")
    m2 = as_cmatrix(m2, "m2")
    if m1.shape != m2.shape:
        raise ShapeMismatch(f"Procrustes operands differ in shape: {m1.shape} vs {m2.shape}")
    res = svd(m2 @ dagger(m1))
    return res.v @ dagger(res.u)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary from the QR decomposition of a complex Ginibre matrix"""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))
