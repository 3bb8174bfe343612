"""
Dense complex operator algebra over composite finite-dimensional Hilbert spaces.

Operators are immutable: the backing array of a :class:`DenseOperator` is copied on
construction and marked read-only, so values can be shared freely between threads.
System factors always precede environment factors in a :class:`HilbertSpace`.
"""

from __future__ import annotations

import logging
import math

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

from .config import EngineConfig
from .utils import (
    Constants,
    DimensionCapExceeded,
    DimensionMismatch,
    InvalidDensityMatrix,
    InvalidFactorIndex,
    InvalidPauliIndex,
    InvalidUnitVector,
    NotHermitian,
    NotUnitary,
)

logger = logging.getLogger(__name__)

SYSTEM = Constants.SYSTEM
ENVIRONMENT = Constants.ENVIRONMENT

UNIT_NORM_TOL = 1e-12

_PAULI_MATRICES = (
    np.array([[1, 0], [0, 1]], dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)
for _matrix in _PAULI_MATRICES:
    _matrix.setflags(write=False)


def _numerics() -> dict:
    return EngineConfig.get_or_create_instance().numerics


@dataclass(frozen=True)
class HilbertSpace:
    """Ordered tensor product of labelled factors, system factors first."""

    factors: tuple[tuple[str, int], ...]

    def __post_init__(self):
        factors = tuple((str(label), int(dim)) for label, dim in self.factors)
        seen_environment = False
        for label, dim in factors:
            if label not in (SYSTEM, ENVIRONMENT):
                raise DimensionMismatch(f"unknown factor label {label!r}")
            if dim < 1:
                raise DimensionMismatch(f"factor dimension must be >= 1, got {dim}")
            if label == SYSTEM and seen_environment:
                raise DimensionMismatch("system factors must precede environment factors")
            seen_environment = seen_environment or label == ENVIRONMENT
        object.__setattr__(self, "factors", factors)
        cap = EngineConfig.get_or_create_instance().dim_cap
        if self.dim > cap:
            raise DimensionCapExceeded(self.dim, cap)

    @classmethod
    def qubits(cls, n: int, env_dims: Sequence[int] = ()) -> HilbertSpace:
        return cls(
            tuple((SYSTEM, 2) for _ in range(n))
            + tuple((ENVIRONMENT, d) for d in env_dims)
        )

    @classmethod
    def environment_only(cls, dims: Sequence[int]) -> HilbertSpace:
        return cls(tuple((ENVIRONMENT, d) for d in dims))

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(dim for _, dim in self.factors)

    @property
    def dim(self) -> int:
        return math.prod(self.dims)

    @property
    def system_indices(self) -> tuple[int, ...]:
        return tuple(i for i, (label, _) in enumerate(self.factors) if label == SYSTEM)

    @property
    def environment_indices(self) -> tuple[int, ...]:
        return tuple(
            i for i, (label, _) in enumerate(self.factors) if label == ENVIRONMENT
        )

    @property
    def system_dim(self) -> int:
        return math.prod(self.dims[i] for i in self.system_indices)

    @property
    def environment_dim(self) -> int:
        return math.prod(self.dims[i] for i in self.environment_indices)

    def subspace(self, indices: Iterable[int]) -> HilbertSpace:
        return HilbertSpace(tuple(self.factors[i] for i in sorted(indices)))

    def tensor(self, other: HilbertSpace) -> HilbertSpace:
        return HilbertSpace(self.factors + other.factors)


@dataclass(frozen=True, eq=False)
class DenseOperator:
    space: HilbertSpace
    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=complex)
        if matrix.shape != (self.space.dim, self.space.dim):
            raise DimensionMismatch(
                f"matrix shape {matrix.shape} does not fit space of dimension {self.space.dim}"
            )
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @classmethod
    def identity(cls, space: HilbertSpace) -> DenseOperator:
        return cls(space, np.eye(space.dim, dtype=complex))

    @classmethod
    def zeros(cls, space: HilbertSpace) -> DenseOperator:
        return cls(space, np.zeros((space.dim, space.dim), dtype=complex))

    @classmethod
    def from_dict(cls, payload: dict) -> DenseOperator:
        """Reads the ``{dims, re, im}`` row-major dump; factors labelled by ``labels`` if given."""
        dims = [int(d) for d in payload["dims"]]
        labels = payload.get("labels") or [ENVIRONMENT] * len(dims)
        re = np.asarray(payload["re"], dtype=float)
        im = np.asarray(payload.get("im", np.zeros_like(re)), dtype=float)
        return cls(HilbertSpace(tuple(zip(labels, dims))), re + 1j * im)

    def to_dict(self) -> dict:
        return {
            "dims": list(self.space.dims),
            "labels": [label for label, _ in self.space.factors],
            "re": self.matrix.real.tolist(),
            "im": self.matrix.imag.tolist(),
        }

    @property
    def dim(self) -> int:
        return self.space.dim

    def dagger(self) -> DenseOperator:
        return DenseOperator(self.space, self.matrix.conj().T)

    def _check_space(self, other: DenseOperator):
        if self.space != other.space:
            raise DimensionMismatch(f"{self.space.factors} vs {other.space.factors}")

    def __matmul__(self, other: DenseOperator) -> DenseOperator:
        self._check_space(other)
        return DenseOperator(self.space, self.matrix @ other.matrix)

    def __add__(self, other: DenseOperator) -> DenseOperator:
        self._check_space(other)
        return DenseOperator(self.space, self.matrix + other.matrix)

    def __sub__(self, other: DenseOperator) -> DenseOperator:
        self._check_space(other)
        return DenseOperator(self.space, self.matrix - other.matrix)

    def __neg__(self) -> DenseOperator:
        return DenseOperator(self.space, -self.matrix)

    def __mul__(self, scalar: complex) -> DenseOperator:
        return DenseOperator(self.space, scalar * self.matrix)

    __rmul__ = __mul__

    def __truediv__(self, scalar: complex) -> DenseOperator:
        return DenseOperator(self.space, self.matrix / scalar)

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def max_norm(self) -> float:
        return float(np.max(np.abs(self.matrix))) if self.matrix.size else 0.0

    def hs_inner(self, other: DenseOperator) -> complex:
        """Hilbert-Schmidt inner product tr(A^dag B)."""
        self._check_space(other)
        return complex(np.vdot(self.matrix, other.matrix))

    def hs_norm(self) -> float:
        return float(np.linalg.norm(self.matrix))

    def kron(self, other: DenseOperator) -> DenseOperator:
        return DenseOperator(
            self.space.tensor(other.space), np.kron(self.matrix, other.matrix)
        )

    def hermitian_deviation(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def unitary_deviation(self) -> float:
        gram = self.matrix.conj().T @ self.matrix
        return float(np.max(np.abs(gram - np.eye(self.dim))))

    def is_hermitian(self, tol: float | None = None) -> bool:
        tol = _numerics()["hermitian_tol"] if tol is None else tol
        return self.hermitian_deviation() <= tol

    def is_unitary(self, tol: float | None = None) -> bool:
        tol = _numerics()["unitary_tol"] if tol is None else tol
        return self.unitary_deviation() <= tol

    def require_hermitian(self, what: str = "operator") -> DenseOperator:
        if not self.is_hermitian():
            raise NotHermitian(self.hermitian_deviation(), what)
        return self

    def require_unitary(self, what: str = "operator") -> DenseOperator:
        if not self.is_unitary():
            raise NotUnitary(self.unitary_deviation(), what)
        return self

    def allclose(self, other: DenseOperator, atol: float = 1e-10) -> bool:
        self._check_space(other)
        return bool(np.allclose(self.matrix, other.matrix, rtol=0.0, atol=atol))


@dataclass(frozen=True)
class UnitVector3:
    components: tuple[float, float, float]

    def __post_init__(self):
        components = tuple(float(c) for c in self.components)
        if len(components) != 3:
            raise InvalidUnitVector(float("nan"))
        norm = math.sqrt(sum(c * c for c in components))
        if abs(norm - 1.0) > UNIT_NORM_TOL:
            raise InvalidUnitVector(norm)
        object.__setattr__(self, "components", components)

    @classmethod
    def normalized(cls, vector: Sequence[float]) -> UnitVector3:
        v = np.asarray(vector, dtype=float)
        norm = float(np.linalg.norm(v))
        if norm == 0.0:
            raise InvalidUnitVector(norm)
        v = v / norm
        # re-normalize once more so the 1e-12 invariant holds after rounding
        return cls(tuple(v / np.linalg.norm(v)))

    @property
    def array(self) -> np.ndarray:
        return np.array(self.components)

    def dot(self, other: UnitVector3 | Sequence[float]) -> float:
        other = other.array if isinstance(other, UnitVector3) else np.asarray(other)
        return float(self.array @ other)

    def cross(self, other: UnitVector3) -> np.ndarray:
        return np.cross(self.array, other.array)

    def __neg__(self) -> UnitVector3:
        return UnitVector3(tuple(-c for c in self.components))


X_AXIS = UnitVector3((1.0, 0.0, 0.0))
Y_AXIS = UnitVector3((0.0, 1.0, 0.0))
Z_AXIS = UnitVector3((0.0, 0.0, 1.0))


def pauli(j: int) -> DenseOperator:
    if j not in (0, 1, 2, 3):
        raise InvalidPauliIndex(j)
    return DenseOperator(HilbertSpace.qubits(1), _PAULI_MATRICES[j])


def pauli_string(label: str) -> DenseOperator:
    """Kronecker product of single-qubit Paulis, e.g. ``"IXZ"`` = I (x) sigma_1 (x) sigma_3."""
    try:
        indices = [Constants.PAULI_LABELS.index(ch) for ch in label.upper()]
    except ValueError:
        raise InvalidPauliIndex(label)
    space = HilbertSpace.qubits(len(indices))
    matrix = reduce(np.kron, (_PAULI_MATRICES[j] for j in indices), np.eye(1))
    return DenseOperator(space, matrix)


def sigma_n(n: UnitVector3 | Sequence[float]) -> DenseOperator:
    if not isinstance(n, UnitVector3):
        n = UnitVector3(tuple(n))
    matrix = sum(c * _PAULI_MATRICES[k + 1] for k, c in enumerate(n.components))
    return DenseOperator(HilbertSpace.qubits(1), matrix)


def embed(op: DenseOperator, site: int, space: HilbertSpace) -> DenseOperator:
    if not 0 <= site < len(space.factors):
        raise InvalidFactorIndex(site, len(space.factors))
    if op.dim != space.dims[site]:
        raise DimensionMismatch(
            f"operator of dimension {op.dim} cannot act on factor {site} of dimension {space.dims[site]}"
        )
    left = math.prod(space.dims[:site])
    right = math.prod(space.dims[site + 1 :])
    matrix = np.kron(np.kron(np.eye(left), op.matrix), np.eye(right))
    return DenseOperator(space, matrix)


def identity_on(op: DenseOperator, space: HilbertSpace) -> DenseOperator:
    """Extends an operator on the leading factors of ``space`` by the identity on the rest."""
    n = len(op.space.factors)
    if space.factors[:n] != op.space.factors:
        raise DimensionMismatch(f"{op.space.factors} is not a prefix of {space.factors}")
    rest = math.prod(space.dims[n:])
    return DenseOperator(space, np.kron(op.matrix, np.eye(rest)))


def evolve(H: DenseOperator, t: float) -> DenseOperator:
    """exp(-iHt) for Hermitian H through its eigendecomposition."""
    H.require_hermitian("generator")
    hermitian = 0.5 * (H.matrix + H.matrix.conj().T)
    w, v = np.linalg.eigh(hermitian)
    return DenseOperator(H.space, (v * np.exp(-1j * w * t)) @ v.conj().T)


def expm_general(M: DenseOperator, t: float) -> DenseOperator:
    """exp(-iMt) by scaling and squaring; used to validate non-Hermitian inputs."""
    return DenseOperator(M.space, scipy.linalg.expm(-1j * t * M.matrix))


def partial_trace(rho: DenseOperator, keep: Iterable[int]) -> DenseOperator:
    n = len(rho.space.factors)
    keep = sorted(set(keep))
    for index in keep:
        if not 0 <= index < n:
            raise InvalidFactorIndex(index, n)
    traced = [i for i in range(n) if i not in keep]
    dims = rho.space.dims
    tensor = rho.matrix.reshape(dims + dims)
    perm = keep + traced + [n + i for i in keep] + [n + i for i in traced]
    d_keep = math.prod(dims[i] for i in keep)
    d_traced = math.prod(dims[i] for i in traced)
    blocks = tensor.transpose(perm).reshape(d_keep, d_traced, d_keep, d_traced)
    return DenseOperator(rho.space.subspace(keep), np.einsum("ajbj->ab", blocks))


def require_density(rho: DenseOperator, what: str = "state") -> DenseOperator:
    tol = max(_numerics()["psd_tol"], 1e-10)
    if rho.hermitian_deviation() > tol:
        raise InvalidDensityMatrix(f"{what} is not Hermitian")
    trace = rho.trace().real
    if abs(trace - 1.0) > max(_numerics()["trace_tol"], 1e-10):
        raise InvalidDensityMatrix(f"{what} has trace {trace!r}")
    lowest = float(np.linalg.eigvalsh(0.5 * (rho.matrix + rho.matrix.conj().T))[0])
    if lowest < -tol:
        raise InvalidDensityMatrix(f"{what} has negative eigenvalue {lowest:.3e}")
    return rho


def _psd_sqrt(matrix: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (matrix + matrix.conj().T))
    cutoff = 1e-14 * max(float(w[-1]), 1.0)
    w = np.where(w > cutoff, w, 0.0)
    return (v * np.sqrt(w)) @ v.conj().T


def uhlmann_fidelity(rho: DenseOperator, tau: DenseOperator) -> float:
    """
    Root fidelity tr sqrt(tau^1/2 rho tau^1/2), evaluated as the trace norm of
    sqrt(rho) sqrt(tau) so that near-pure states keep full double precision.
    """
    require_density(rho, "rho")
    require_density(tau, "tau")
    rho._check_space(tau)
    singular = scipy.linalg.svdvals(_psd_sqrt(rho.matrix) @ _psd_sqrt(tau.matrix))
    return float(min(1.0, max(0.0, np.sum(singular))))


def ket_projector(vector: np.ndarray, space: HilbertSpace) -> DenseOperator:
    vector = np.asarray(vector, dtype=complex)
    vector = vector / np.linalg.norm(vector)
    return DenseOperator(space, np.outer(vector, vector.conj()))


def ghz_vector(n: int) -> np.ndarray:
    vector = np.zeros(2**n, dtype=complex)
    vector[0] = vector[-1] = 1 / math.sqrt(2)
    return vector


def ghz_state(n: int) -> DenseOperator:
    return ket_projector(ghz_vector(n), HilbertSpace.qubits(n))


def random_hermitian(space: HilbertSpace, rng: np.random.Generator) -> DenseOperator:
    raw = rng.normal(size=(space.dim, space.dim)) + 1j * rng.normal(size=(space.dim, space.dim))
    return DenseOperator(space, 0.5 * (raw + raw.conj().T))


def random_density_matrix(
    space: HilbertSpace, rng: np.random.Generator, rank: int | None = None
) -> DenseOperator:
    rank = space.dim if rank is None else rank
    g = rng.normal(size=(space.dim, rank)) + 1j * rng.normal(size=(space.dim, rank))
    rho = g @ g.conj().T
    return DenseOperator(space, rho / np.trace(rho).real)


def random_unit_vector(rng: np.random.Generator) -> UnitVector3:
    return UnitVector3.normalized(rng.normal(size=3))
