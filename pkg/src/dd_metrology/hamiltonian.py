"""
System-environment Hamiltonians

    H = omega * sum_P w_P P (x) 1  +  sum_terms c * P (x) A  +  sum_trivial c0 * 1 (x) A0

with P Pauli strings over the system sites. The signal starts out as S3 (weight 1
on every single-site Z) and is rewritten by decoupling maps.
"""

from __future__ import annotations

import logging
import math

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .config import EngineConfig
from .operators import (
    DenseOperator,
    HilbertSpace,
    UnitVector3,
    pauli,
    pauli_string,
    sigma_n,
)
from .utils import DimensionMismatch, NotHermitian

logger = logging.getLogger(__name__)

INDEPENDENT = "independent"
COMMON = "common"
AXIS_LABELS = "XYZ"


@dataclass(frozen=True, eq=False)
class CouplingTerm:
    """One ``coupling * paulis (x) env_op`` term; ``env_op`` acts on the whole environment."""

    coupling: float
    paulis: str
    env_op: DenseOperator

    @property
    def sites(self) -> tuple[int, ...]:
        return tuple(i for i, ch in enumerate(self.paulis) if ch != "I")

    @property
    def single_site(self) -> tuple[int, str] | None:
        sites = self.sites
        if len(sites) != 1:
            return None
        return sites[0], self.paulis[sites[0]]


def single_site_label(n_sites: int, site: int, axis: str) -> str:
    return "".join(axis if a == site else "I" for a in range(n_sites))


@dataclass(frozen=True, eq=False)
class SEHamiltonian:
    omega: float
    n_sites: int
    env_model: str
    env_dims: tuple[int, ...]
    terms: tuple[CouplingTerm, ...]
    trivial_terms: tuple[CouplingTerm, ...] = ()
    signal: tuple[tuple[str, float], ...] | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "env_dims", tuple(int(d) for d in self.env_dims))
        object.__setattr__(self, "terms", tuple(self.terms))
        object.__setattr__(self, "trivial_terms", tuple(self.trivial_terms))
        if self.env_model not in (INDEPENDENT, COMMON):
            raise DimensionMismatch(f"unknown environment model {self.env_model!r}")
        if self.signal is None:
            signal = tuple(
                (single_site_label(self.n_sites, a, "Z"), 1.0) for a in range(self.n_sites)
            )
            object.__setattr__(self, "signal", signal)
        # constructing the full space enforces the dimension cap
        _ = self.space
        env_space = self.env_space
        for term in self.terms + self.trivial_terms:
            if len(term.paulis) != self.n_sites:
                raise DimensionMismatch(
                    f"Pauli label {term.paulis!r} does not cover {self.n_sites} sites"
                )
            if term.env_op.space != env_space:
                raise DimensionMismatch(
                    f"environment operator on {term.env_op.space.factors}, expected {env_space.factors}"
                )
            term.env_op.require_hermitian("environment operator")
        for term in self.trivial_terms:
            if term.sites:
                raise DimensionMismatch("trivial terms must act as identity on the system")

    @classmethod
    def from_terms(
        cls,
        omega: float,
        n_sites: int,
        env_model: str,
        env_dims: Sequence[int],
        terms: Iterable[tuple[float, str, DenseOperator | np.ndarray, int | None]],
    ) -> SEHamiltonian:
        """
        Builds a Hamiltonian from ``(coupling, paulis, env_op, env_site)`` tuples. When
        ``env_site`` is given the operator acts on that environment factor only and is
        extended by identities; otherwise it must already act on the full environment.
        Terms whose Pauli label is all identities are stored as uncontrollable.
        """
        env_space = HilbertSpace.environment_only(env_dims)
        regular, trivial = [], []
        for coupling, paulis, env_op, env_site in terms:
            op = _embed_environment(env_op, env_site, env_space)
            term = CouplingTerm(float(coupling), paulis.upper(), op)
            (regular if term.sites else trivial).append(term)
        return cls(omega, n_sites, env_model, tuple(env_dims), tuple(regular), tuple(trivial))

    @property
    def space(self) -> HilbertSpace:
        return HilbertSpace.qubits(self.n_sites, self.env_dims)

    @property
    def env_space(self) -> HilbertSpace:
        return HilbertSpace.environment_only(self.env_dims)

    @property
    def system_space(self) -> HilbertSpace:
        return HilbertSpace.qubits(self.n_sites)

    def signal_generator(self) -> DenseOperator:
        """System-only operator sum_P w_P P multiplying omega."""
        matrix = np.zeros((2**self.n_sites,) * 2, dtype=complex)
        for label, weight in self.signal:
            matrix += weight * pauli_string(label).matrix
        return DenseOperator(self.system_space, matrix)

    def system_operator(self) -> DenseOperator:
        env_identity = np.eye(self.space.environment_dim)
        return DenseOperator(
            self.space, self.omega * np.kron(self.signal_generator().matrix, env_identity)
        )

    def _sum_terms(self, terms: Iterable[CouplingTerm]) -> DenseOperator:
        matrix = np.zeros((self.space.dim,) * 2, dtype=complex)
        for term in terms:
            matrix += term.coupling * np.kron(
                pauli_string(term.paulis).matrix, term.env_op.matrix
            )
        return DenseOperator(self.space, matrix)

    def noise_operator(self) -> DenseOperator:
        return self._sum_terms(self.terms)

    def uncontrollable_operator(self) -> DenseOperator:
        return self._sum_terms(self.trivial_terms)

    def full_operator(self) -> DenseOperator:
        return self.system_operator() + self.noise_operator() + self.uncontrollable_operator()

    def replace(self, **changes) -> SEHamiltonian:
        fields = {
            "omega": self.omega,
            "n_sites": self.n_sites,
            "env_model": self.env_model,
            "env_dims": self.env_dims,
            "terms": self.terms,
            "trivial_terms": self.trivial_terms,
            "signal": self.signal,
            "metadata": dict(self.metadata),
        }
        fields.update(changes)
        return SEHamiltonian(**fields)


def _embed_environment(
    op: DenseOperator | np.ndarray, env_site: int | None, env_space: HilbertSpace
) -> DenseOperator:
    matrix = op.matrix if isinstance(op, DenseOperator) else np.asarray(op, dtype=complex)
    dims = env_space.dims
    if env_site is None:
        return DenseOperator(env_space, matrix)
    if not 0 <= env_site < len(dims):
        raise DimensionMismatch(f"environment factor {env_site} outside 0..{len(dims) - 1}")
    if matrix.shape != (dims[env_site], dims[env_site]):
        raise DimensionMismatch(
            f"operator of shape {matrix.shape} cannot act on environment factor of dimension {dims[env_site]}"
        )
    left = math.prod(dims[:env_site])
    right = math.prod(dims[env_site + 1 :])
    return DenseOperator(env_space, np.kron(np.kron(np.eye(left), matrix), np.eye(right)))


def _operator_dim(op) -> int:
    return op.dim if isinstance(op, DenseOperator) else np.asarray(op).shape[0]


def _site_terms(
    site: int,
    n_sites: int,
    couplings: Sequence[float],
    ops: Sequence,
    env_site: int | None,
) -> list[tuple[float, str, object, int | None]]:
    if len(couplings) != 4 or len(ops) != 4:
        raise DimensionMismatch("each site needs four couplings and four environment operators")
    rows = []
    for j, (c, op) in enumerate(zip(couplings, ops)):
        if op is None:
            if c != 0:
                raise DimensionMismatch(f"coupling c_{j} = {c} has no environment operator")
            continue
        matrix = op.matrix if isinstance(op, DenseOperator) else np.asarray(op, dtype=complex)
        deviation = float(np.max(np.abs(matrix - matrix.conj().T)))
        if deviation > EngineConfig.get_or_create_instance().numerics["hermitian_tol"]:
            raise NotHermitian(deviation, f"A_{j} on site {site}")
        if c == 0:
            continue
        label = "I" * n_sites if j == 0 else single_site_label(n_sites, site, AXIS_LABELS[j - 1])
        rows.append((c, label, op, env_site))
    return rows


def _env_dim(ops: Iterable) -> int:
    for op in ops:
        if op is not None:
            return _operator_dim(op)
    return 1


def single_qubit(
    omega: float, c: Sequence[float], A: Sequence[DenseOperator | np.ndarray | None]
) -> SEHamiltonian:
    """omega sigma_3 (x) 1 + sum_j c_j sigma_j (x) A_j with the A_0 term kept apart."""
    d = _env_dim(A)
    rows = _site_terms(0, 1, c, A, 0)
    return SEHamiltonian.from_terms(omega, 1, INDEPENDENT, (d,), rows)


def n_qubit_independent(
    omega: float,
    couplings: Sequence[Sequence[float]],
    env_ops: Sequence[Sequence[DenseOperator | np.ndarray | None]],
) -> SEHamiltonian:
    """Each site couples to its own environment factor; factor ``a`` belongs to site ``a``."""
    n = len(couplings)
    if n < 1 or len(env_ops) != n:
        raise DimensionMismatch("need one coupling row and one operator row per site")
    dims = tuple(_env_dim(ops) for ops in env_ops)
    rows = []
    for a in range(n):
        rows.extend(_site_terms(a, n, couplings[a], env_ops[a], a))
    return SEHamiltonian.from_terms(omega, n, INDEPENDENT, dims, rows)


def n_qubit_common(
    omega: float,
    couplings: Sequence[Sequence[float]],
    env_ops: Sequence,
) -> SEHamiltonian:
    """
    All sites couple to one shared environment factor. ``env_ops`` is either a single
    row of four operators used by every site or one row per site.
    """
    n = len(couplings)
    if n < 1:
        raise DimensionMismatch("need at least one site")
    per_site = len(env_ops) == n and all(
        isinstance(row, (list, tuple)) for row in env_ops
    )
    rows_of_ops = list(env_ops) if per_site else [list(env_ops)] * n
    d = _env_dim(op for row in rows_of_ops for op in row)
    rows = []
    for a in range(n):
        rows.extend(_site_terms(a, n, couplings[a], rows_of_ops[a], 0))
    return SEHamiltonian.from_terms(omega, n, COMMON, (d,), rows)


def env_preset(name: str, dim: int) -> DenseOperator:
    """Named environment operators used by scenario files."""
    space = HilbertSpace.environment_only((dim,))
    if name.startswith("random_hermitian"):
        _, _, seed = name.partition(":")
        rng = np.random.Generator(np.random.Philox(int(seed or 0)))
        raw = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        return DenseOperator(space, 0.5 * (raw + raw.conj().T))
    if name == "identity":
        return DenseOperator.identity(space)
    if name == "number_op":
        return DenseOperator(space, np.diag(np.arange(dim, dtype=float)))
    if name in ("pauli_x", "pauli_y", "pauli_z"):
        if dim != 2:
            raise DimensionMismatch(f"preset {name} needs a two-level environment, got {dim}")
        return DenseOperator(space, pauli(" xyz".index(name[-1])).matrix)
    raise DimensionMismatch(f"unknown environment preset {name!r}")


@dataclass(frozen=True, eq=False)
class StandardForm:
    b: tuple[float, float, float]
    frame: tuple[UnitVector3, UnitVector3, UnitVector3]
    B: tuple[DenseOperator, DenseOperator, DenseOperator]
    rotation: np.ndarray
    lambdas: tuple[float, float, float] = (0.0, 0.0, 0.0)
    degenerate: bool = False

    def __post_init__(self):
        rotation = np.array(self.rotation, dtype=float)
        rotation.setflags(write=False)
        object.__setattr__(self, "rotation", rotation)

    @classmethod
    def synthetic(
        cls, b: Sequence[float], frame: Sequence[UnitVector3 | Sequence[float]]
    ) -> StandardForm:
        """A standard form on a qubit environment with B_j = sigma_j / sqrt(2)."""
        vectors = tuple(
            n if isinstance(n, UnitVector3) else UnitVector3.normalized(n) for n in frame
        )
        env_space = HilbertSpace.environment_only((2,))
        B = tuple(
            DenseOperator(env_space, pauli(j).matrix / math.sqrt(2))
            if b[j - 1] > 0
            else DenseOperator.zeros(env_space)
            for j in (1, 2, 3)
        )
        rotation = np.column_stack([n.array for n in vectors])
        return cls(tuple(float(x) for x in b), vectors, B, rotation, tuple(float(x) ** 2 for x in b))

    @property
    def env_space(self) -> HilbertSpace:
        return self.B[0].space

    def overlap(self) -> np.ndarray:
        """Overlap matrix tr(C_j C_k) of the rotated operators C_j = b_j B_j."""
        C = [b * B.matrix for b, B in zip(self.b, self.B)]
        return np.array([[np.trace(Ci @ Ck).real for Ck in C] for Ci in C])


@dataclass(frozen=True)
class NoiseRank:
    rank: int
    tolerance: float


def site_noise_components(H: SEHamiltonian, site: int = 0) -> tuple[DenseOperator, ...]:
    """C~_j = sum of c A over terms acting as sigma_j on ``site`` alone (j = 1, 2, 3)."""
    if not 0 <= site < H.n_sites:
        raise DimensionMismatch(f"site {site} outside 0..{H.n_sites - 1}")
    env_space = H.env_space
    components = [np.zeros((env_space.dim,) * 2, dtype=complex) for _ in range(3)]
    for term in H.terms:
        single = term.single_site
        if single is None:
            logger.debug(f"[STANDARD FORM] Skipping multi-site term {term.paulis}")
            continue
        if single[0] != site:
            continue
        components[AXIS_LABELS.index(single[1])] += term.coupling * term.env_op.matrix
    return tuple(DenseOperator(env_space, C) for C in components)


def site_noise_operator(H: SEHamiltonian, site: int = 0) -> DenseOperator:
    """Single-site noise sum_j sigma_j (x) C~_j on the qubit (x) environment space."""
    components = site_noise_components(H, site)
    space = HilbertSpace.qubits(1).tensor(H.env_space)
    matrix = sum(np.kron(pauli(j + 1).matrix, C.matrix) for j, C in enumerate(components))
    return DenseOperator(space, matrix)


def _canonical_eigenbasis(lambdas: np.ndarray, vectors: np.ndarray) -> tuple[np.ndarray, bool]:
    """
    Fixes the eigenbasis inside degenerate clusters of the overlap spectrum by
    Gram-Schmidt on the cluster projector applied to the coordinate axes in order.
    """
    scale = max(float(np.max(np.abs(lambdas))), 1e-300)
    tie_tol = 1e-10 * max(scale, 1.0)
    basis = vectors.copy()
    degenerate = False
    start = 0
    while start < 3:
        stop = start + 1
        while stop < 3 and abs(lambdas[stop] - lambdas[start]) <= tie_tol:
            stop += 1
        if stop - start > 1:
            degenerate = True
            block = vectors[:, start:stop]
            projector = block @ block.T
            chosen: list[np.ndarray] = []
            for axis in np.eye(3):
                candidate = projector @ axis
                for prior in chosen:
                    candidate = candidate - (prior @ candidate) * prior
                norm = np.linalg.norm(candidate)
                if norm > 1e-8:
                    chosen.append(candidate / norm)
                if len(chosen) == stop - start:
                    break
            basis[:, start:stop] = np.column_stack(chosen)
        start = stop
    return basis, degenerate


def standard_form(H: SEHamiltonian, site: int = 0) -> StandardForm:
    """
    Rewrites the single-site noise sum_j sigma_j (x) C~_j as sum_k b_k sigma_{n_k} (x) B_k
    with tr(B_j B_k) = delta_jk and b sorted descending, by diagonalizing the overlap
    matrix O~_ik = tr(C~_i C~_k) = R diag(lambda) R^T.
    """
    tol = EngineConfig.get_or_create_instance().decoupling["rank_tol"]
    components = site_noise_components(H, site)
    stacked = np.array([C.matrix for C in components])
    overlap = np.einsum("iab,kba->ik", stacked, stacked).real
    overlap = 0.5 * (overlap + overlap.T)

    lambdas, vectors = np.linalg.eigh(overlap)
    order = np.argsort(-lambdas, kind="stable")
    lambdas, vectors = lambdas[order], vectors[:, order]
    rotation, degenerate = _canonical_eigenbasis(lambdas, vectors)

    rotated = np.einsum("jk,jab->kab", rotation, stacked)
    b = np.sqrt(np.einsum("kab,kba->k", rotated, rotated).real.clip(min=0.0))
    order = np.argsort(-b, kind="stable")
    rotation, lambdas = rotation[:, order], lambdas[order]

    for k in range(3):
        if rotation[np.argmax(np.abs(rotation[:, k])), k] < 0:
            rotation[:, k] = -rotation[:, k]
    if np.linalg.det(rotation) < 0:
        rotation[:, 2] = -rotation[:, 2]

    rotated = np.einsum("jk,jab->kab", rotation, stacked)
    b = np.sqrt(np.einsum("kab,kba->k", rotated, rotated).real.clip(min=0.0))
    env_space = H.env_space
    B = tuple(
        DenseOperator(env_space, rotated[k] / b[k]) if b[k] > tol else DenseOperator.zeros(env_space)
        for k in range(3)
    )
    if b[0] <= tol:
        degenerate = True
        logger.warning(f"[STANDARD FORM] Site {site} carries no noise; frame is arbitrary")
    frame = tuple(UnitVector3.normalized(rotation[:, k]) for k in range(3))
    return StandardForm(
        tuple(float(x) for x in b),
        frame,
        B,
        rotation,
        tuple(float(x) for x in lambdas),
        degenerate,
    )


def reconstruct(sf: StandardForm) -> DenseOperator:
    """sum_k b_k sigma_{n_k} (x) B_k on the qubit (x) environment space."""
    space = HilbertSpace.qubits(1).tensor(sf.env_space)
    matrix = sum(
        b * np.kron(sigma_n(n).matrix, B.matrix) for b, n, B in zip(sf.b, sf.frame, sf.B)
    )
    return DenseOperator(space, matrix)


def noise_rank(sf: StandardForm, tol: float | None = None) -> NoiseRank:
    tol = EngineConfig.get_or_create_instance().decoupling["rank_tol"] if tol is None else tol
    return NoiseRank(sum(1 for b in sf.b if b > tol), tol)
