#!/usr/bin/env python3
"""
Channel Representations
Kraus form, row-major Liouville transition matrices, control composition and
parametrized channel families with their θ-derivative
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .config import tol
from .errors import (
    DimensionMismatch,
    DomainViolation,
    InvalidState,
    NotCPTP,
    ShapeMismatch,
)
from .numerics import as_square, dagger, hermitize, require_unitary

logger = logging.getLogger(__name__)


def _dim_of_square(n: int) -> int:
    d = math.isqrt(n)
    if d * d != n:
        raise ShapeMismatch(f"length {n} is not a perfect square")
    return d


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite d×d matrix"""
    rho: np.ndarray

    def __post_init__(self):
        rho = as_square(self.rho, "density matrix")
        atol = tol("channels", "state_tol")
        if np.linalg.norm(rho - dagger(rho)) > atol * max(1.0, np.linalg.norm(rho)):
            raise InvalidState("density matrix is not Hermitian")
        if abs(np.trace(rho) - 1) > atol:
            raise InvalidState(f"density matrix has trace {np.trace(rho).real:.12g}, expected 1")
        if np.linalg.eigvalsh(hermitize(rho)).min() < -atol:
            raise InvalidState("density matrix has a negative eigenvalue")
        object.__setattr__(self, "rho", rho)

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        return cls(np.eye(dim, dtype=np.complex128) / dim)


MatrixLike = Union[DensityMatrix, np.ndarray]


def _matrix(a: MatrixLike) -> np.ndarray:
    return a.rho if isinstance(a, DensityMatrix) else np.asarray(a, dtype=np.complex128)


def vectorize(a: MatrixLike) -> np.ndarray:
    """Row-major |A>> = (A11, A12, ..., Add)ᵀ"""
    return _matrix(a).reshape(-1).copy()


def unvectorize(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.complex128).reshape(-1)
    d = _dim_of_square(v.size)
    return v.reshape(d, d).copy()


def hs_inner(a: MatrixLike, b: MatrixLike) -> complex:
    """<<A|B>> = Tr(A† B)"""
    return complex(np.vdot(vectorize(a), vectorize(b)))


def identity_vector(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=np.complex128).reshape(-1)


@dataclass(frozen=True)
class KrausChannel:
    """Channel ρ ↦ Σ K ρ K† with completeness Σ K†K = I"""
    kraus_ops: Tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.kraus_ops) == 0:
            raise ShapeMismatch("a Kraus channel needs at least one operator")
        ops = tuple(as_square(k, "Kraus operator") for k in self.kraus_ops)
        dim = ops[0].shape[0]
        if any(k.shape != (dim, dim) for k in ops):
            raise ShapeMismatch("Kraus operators differ in dimension")
        completeness = sum(dagger(k) @ k for k in ops)
        if np.linalg.norm(completeness - np.eye(dim)) > tol("channels", "trace_tol") * max(1, dim):
            raise NotCPTP("Kraus operators are not trace preserving (Σ K†K ≠ I)")
        object.__setattr__(self, "kraus_ops", ops)

    @property
    def dim(self) -> int:
        return self.kraus_ops[0].shape[0]

    def act(self, x: MatrixLike) -> np.ndarray:
        """Σ K X K† for any square X (not only states)"""
        x = _matrix(x)
        if x.shape != (self.dim, self.dim):
            raise DimensionMismatch(f"operand has shape {x.shape}, channel dimension is {self.dim}")
        return sum(k @ x @ dagger(k) for k in self.kraus_ops)

    def then(self, u: np.ndarray) -> "KrausChannel":
        """Channel followed by unitary conjugation with u"""
        u = require_unitary(u)
        return KrausChannel(tuple(u @ k for k in self.kraus_ops))


@dataclass(frozen=True)
class TransitionMatrix:
    """Liouville matrix T = Σ K ⊗ K* acting on row-major vectorized operators"""
    dim: int
    t: np.ndarray

    def __post_init__(self):
        t = as_square(self.t, "transition matrix")
        d2 = self.dim * self.dim
        if t.shape != (d2, d2):
            raise ShapeMismatch(f"transition matrix must be {d2}×{d2}, got {t.shape}")
        eye = identity_vector(self.dim)
        if np.linalg.norm(eye.conj() @ t - eye.conj()) > tol("channels", "trace_tol") * self.dim:
            raise NotCPTP("transition matrix is not trace preserving (<<I|T ≠ <<I|)")
        object.__setattr__(self, "t", t)

    def __matmul__(self, v: np.ndarray) -> np.ndarray:
        return self.t @ v


def kraus_to_transition(ch: KrausChannel) -> TransitionMatrix:
    t = sum(np.kron(k, k.conj()) for k in ch.kraus_ops)
    return TransitionMatrix(ch.dim, t)


def choi_matrix(t: TransitionMatrix) -> np.ndarray:
    """Σ |vec K⟩⟨vec K| reshuffled from the row-major transition matrix"""
    d = t.dim
    return t.t.reshape(d, d, d, d).transpose(0, 2, 1, 3).reshape(d * d, d * d)


def validate_cptp(t: TransitionMatrix) -> TransitionMatrix:
    """
    Complete positivity check for untrusted transition matrices

    Raises:
        NotCPTP: Choi matrix not Hermitian or has an eigenvalue below -choi_tol
    """
    choi = choi_matrix(t)
    choi_tol = tol("channels", "choi_tol")
    if np.linalg.norm(choi - dagger(choi)) > choi_tol * max(1.0, np.linalg.norm(choi)):
        raise NotCPTP("transition matrix is not Hermiticity preserving")
    lowest = np.linalg.eigvalsh(hermitize(choi)).min()
    if lowest < -choi_tol:
        raise NotCPTP(f"Choi matrix has negative eigenvalue {lowest:.3e}")
    return t


def apply_channel(t: TransitionMatrix, rho: DensityMatrix) -> DensityMatrix:
    if rho.dim != t.dim:
        raise DimensionMismatch(f"state dimension {rho.dim} does not match channel dimension {t.dim}")
    out = hermitize(unvectorize(t.t @ vectorize(rho)))
    trace = np.trace(out).real
    if abs(trace - 1) > tol("channels", "apply_drift_tol"):
        raise InvalidState(f"channel output has trace {trace:.12g}, beyond the allowed drift")
    return DensityMatrix(out / trace)


def compose_control(t: TransitionMatrix, u: np.ndarray) -> TransitionMatrix:
    """(U ⊗ U*)·T, the channel followed by the control unitary"""
    u = require_unitary(u)
    if u.shape[0] != t.dim:
        raise DimensionMismatch(f"control dimension {u.shape[0]} does not match channel dimension {t.dim}")
    return TransitionMatrix(t.dim, np.kron(u, u.conj()) @ t.t)


def unitality_check(t: TransitionMatrix, atol: Optional[float] = None) -> bool:
    eye = identity_vector(t.dim)
    unital = bool(np.linalg.norm(t.t @ eye - eye) <= tol("channels", "unital_tol", atol))
    if unital:
        top = np.linalg.svd(t.t, compute_uv=False)[0]
        if top > 1 + 1e-9:
            raise NotCPTP(f"unital channel has singular value {top:.12g} > 1")
    return unital


class DerivativeKind(Enum):
    """How Ṫ at θ₀ is obtained"""
    ANALYTIC = "analytic"
    CENTRAL = "central"
    ONE_SIDED = "one_sided"


@dataclass(frozen=True)
class DerivativeMode:
    kind: DerivativeKind
    step: Optional[float] = None
    supplier: Optional[Callable[[], np.ndarray]] = field(default=None, compare=False)

    @classmethod
    def analytic(cls, supplier: Callable[[], np.ndarray]) -> "DerivativeMode":
        return cls(DerivativeKind.ANALYTIC, supplier=supplier)

    @classmethod
    def central(cls, step: Optional[float] = None) -> "DerivativeMode":
        return cls(DerivativeKind.CENTRAL, step=step)

    @classmethod
    def one_sided(cls, step: Optional[float] = None) -> "DerivativeMode":
        return cls(DerivativeKind.ONE_SIDED, step=step)


@dataclass(frozen=True)
class ParamChannel:
    """
    Channel family θ ↦ T_θ around the working point θ₀

    Args:
        family: θ -> TransitionMatrix; may raise DomainViolation itself
        theta0: working point
        derivative_mode: how Ṫ(θ₀) is obtained
        domain: optional closed interval of admissible θ
        kraus_family: optional θ -> KrausChannel
        kraus_derivative: optional supplier of dK/dθ at θ₀, aligned with kraus_family(θ₀)
    """
    family: Callable[[float], TransitionMatrix] = field(compare=False)
    theta0: float
    derivative_mode: DerivativeMode
    domain: Optional[Tuple[float, float]] = None
    kraus_family: Optional[Callable[[float], KrausChannel]] = field(default=None, compare=False)
    kraus_derivative: Optional[Callable[[], List[np.ndarray]]] = field(default=None, compare=False)
    name: str = "channel"

    def at(self, theta: float) -> TransitionMatrix:
        if self.domain is not None:
            lo, hi = self.domain
            slack = 1e-15 * max(1.0, abs(theta))
            if theta < lo - slack or theta > hi + slack:
                raise DomainViolation(f"θ = {theta:.12g} outside [{lo}, {hi}] for {self.name}")
        return self.family(theta)

    def admits(self, theta: float) -> bool:
        try:
            self.at(theta)
        except DomainViolation:
            return False
        return True

    @property
    def dim(self) -> int:
        return self.at(self.theta0).dim

    def kraus_at_theta0(self) -> Optional[KrausChannel]:
        return self.kraus_family(self.theta0) if self.kraus_family else None

    def kraus_dots(self) -> Optional[List[np.ndarray]]:
        return list(self.kraus_derivative()) if self.kraus_derivative else None

    def with_control(self, u: np.ndarray) -> "ParamChannel":
        """Regulated family θ ↦ (U ⊗ U*)T_θ with the same working point"""
        u = require_unitary(u)
        uu = np.kron(u, u.conj())
        kraus_family = None
        kraus_derivative = None
        if self.kraus_family is not None:
            kraus_family = lambda theta: self.kraus_family(theta).then(u)
        if self.kraus_derivative is not None:
            kraus_derivative = lambda: [u @ k for k in self.kraus_derivative()]
        return ParamChannel(
            family=lambda theta: compose_control(self.at(theta), u),
            theta0=self.theta0,
            derivative_mode=DerivativeMode.analytic(lambda: uu @ derivative(self)),
            domain=self.domain,
            kraus_family=kraus_family,
            kraus_derivative=kraus_derivative,
            name=f"{self.name}+control",
        )

    @classmethod
    def from_samples(
        cls,
        samples: Dict[float, TransitionMatrix],
        theta0: float,
        tdot: Optional[np.ndarray] = None,
        kraus: Optional[KrausChannel] = None,
        kraus_dots: Optional[List[np.ndarray]] = None,
        name: str = "sampled",
        step: Optional[float] = None,
    ) -> "ParamChannel":
        """
        Family known only at sampled θ values

        Without tdot, Ṫ is the central difference if samples bracket θ₀,
        otherwise the one-sided difference towards the nearest sample; step
        pins the difference to the samples at θ₀ ± step.
        """
        thetas = sorted(samples)

        def lookup(theta: float) -> TransitionMatrix:
            for s in thetas:
                if abs(s - theta) <= 1e-15 * max(1.0, abs(theta)):
                    return samples[s]
            raise DomainViolation(f"θ = {theta:.12g} was not sampled")

        def kraus_lookup(theta: float) -> KrausChannel:
            if abs(theta - theta0) <= 1e-15 * max(1.0, abs(theta)):
                return kraus
            raise DomainViolation(f"Kraus operators are only known at θ₀ = {theta0}")

        lookup(theta0)
        if tdot is not None:
            mode = DerivativeMode.analytic(lambda: as_square(tdot, "tdot"))
        else:
            below = [s for s in thetas if s < theta0]
            above = [s for s in thetas if s > theta0]
            if step is not None:
                below = [s for s in below if math.isclose(theta0 - s, step, rel_tol=1e-9)]
                above = [s for s in above if math.isclose(s - theta0, step, rel_tol=1e-9)]
            if below and above and math.isclose(theta0 - below[-1], above[0] - theta0, rel_tol=1e-9):
                mode = DerivativeMode.central(above[0] - theta0)
            elif above:
                mode = DerivativeMode.one_sided(above[0] - theta0)
            elif below:
                mode = DerivativeMode.one_sided(below[-1] - theta0)
            else:
                raise DomainViolation("a sampled family needs a second sample next to θ₀")
        return cls(
            family=lookup,
            theta0=theta0,
            derivative_mode=mode,
            kraus_family=kraus_lookup if kraus is not None else None,
            kraus_derivative=(lambda: kraus_dots) if kraus_dots is not None else None,
            name=name,
        )


def derivative(pc: ParamChannel) -> np.ndarray:
    """Ṫ at θ₀ according to the family's derivative mode"""
    mode = pc.derivative_mode
    theta0 = pc.theta0
    if mode.kind is DerivativeKind.ANALYTIC:
        return as_square(mode.supplier(), "analytic derivative")
    if mode.kind is DerivativeKind.CENTRAL:
        h = tol("channels", "central_step", mode.step)
        return (pc.at(theta0 + h).t - pc.at(theta0 - h).t) / (2 * h)
    h = tol("channels", "one_sided_step", mode.step)
    if mode.step is None and not pc.admits(theta0 + h):
        logger.debug("forward point outside domain for %s, using backward difference", pc.name)
        h = -h
    return (pc.at(theta0 + h).t - pc.at(theta0).t) / h


def difference_stencil(pc: ParamChannel) -> Tuple[float, float]:
    """
    Pair of θ values bracketing (or touching) θ₀ used for finite differences

    Central points when both are admissible, else a one-sided pair.
    """
    theta0 = pc.theta0
    h = tol("channels", "central_step")
    if pc.admits(theta0 - h) and pc.admits(theta0 + h):
        return theta0 - h, theta0 + h
    h = tol("channels", "one_sided_step")
    if pc.admits(theta0 + h):
        return theta0, theta0 + h
    if pc.admits(theta0 - h):
        return theta0 - h, theta0
    raise DomainViolation(f"no finite-difference points admissible around θ₀ = {theta0}")


def random_density_matrix(dim: int, rng: np.random.Generator, rank: Optional[int] = None) -> DensityMatrix:
    rank = rank or dim
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ dagger(g)
    return DensityMatrix(hermitize(rho / np.trace(rho).real))


def kraus_dots_shape_check(ch: KrausChannel, kraus_dots: Sequence[np.ndarray]) -> List[np.ndarray]:
    """Align derivative operators with the channel's Kraus list (non-finite entries allowed)"""
    if len(kraus_dots) != len(ch.kraus_ops):
        raise ShapeMismatch(f"{len(kraus_dots)} Kraus derivatives for {len(ch.kraus_ops)} operators")
    dots = [np.asarray(k, dtype=np.complex128) for k in kraus_dots]
    if any(k.shape != (ch.dim, ch.dim) for k in dots):
        raise ShapeMismatch("Kraus derivative shapes do not match the Kraus operators")
    return dots
