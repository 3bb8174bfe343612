"""
Decoupling maps: pulse schedules as unital maps, projections pi_r, feasibility of
exact decoupling, permutation symmetrization and correlated-noise pulse schemes.
"""

from __future__ import annotations

import itertools
import logging
import math

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.optimize

from .config import EngineConfig
from .hamiltonian import (
    AXIS_LABELS,
    CouplingTerm,
    SEHamiltonian,
    StandardForm,
    noise_rank,
    single_site_label,
    site_noise_components,
)
from .operators import (
    Z_AXIS,
    DenseOperator,
    HilbertSpace,
    UnitVector3,
    embed,
    pauli,
    pauli_string,
    sigma_n,
)
from .utils import (
    DecouplingInfeasible,
    InvalidSchedule,
    InvalidSchemeRange,
    MixedParallelDirections,
    RankTooHigh,
    SpaceMismatch,
)

logger = logging.getLogger(__name__)

PROBABILITY_TOL = 1e-12
COEFFICIENT_CUTOFF = 1e-14


def _decoupling_config() -> dict:
    return EngineConfig.get_or_create_instance().decoupling


@dataclass(frozen=True, eq=False)
class PulseSchedule:
    """Gate ``gates[i]`` fires at ``times[i]``; the cycle ends at ``times[-1]``."""

    gates: tuple[DenseOperator, ...]
    times: tuple[float, ...]

    def __post_init__(self):
        gates, times = tuple(self.gates), tuple(float(t) for t in self.times)
        if not gates:
            raise InvalidSchedule("schedule has no gates")
        if len(times) != len(gates) + 1:
            raise InvalidSchedule(f"{len(gates)} gates need {len(gates) + 1} times, got {len(times)}")
        if times[0] != 0.0:
            raise InvalidSchedule(f"first gate must fire at t = 0, got {times[0]}")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise InvalidSchedule("times must be strictly increasing")
        space = gates[0].space
        if space.environment_indices:
            raise InvalidSchedule("gates must act on system factors only")
        for i, gate in enumerate(gates):
            if gate.space != space:
                raise InvalidSchedule(f"gate {i} acts on {gate.space.factors}, expected {space.factors}")
            gate.require_unitary(f"gate {i}")
        object.__setattr__(self, "gates", gates)
        object.__setattr__(self, "times", times)

    @classmethod
    def from_fractions(
        cls, gates: Sequence[DenseOperator], fractions: Sequence[float], duration: float = 1.0
    ) -> PulseSchedule:
        total = float(sum(fractions))
        times = np.concatenate([[0.0], np.cumsum(fractions) / total * duration])
        times[-1] = duration
        return cls(tuple(gates), tuple(times))

    @property
    def space(self) -> HilbertSpace:
        return self.gates[0].space

    @property
    def duration(self) -> float:
        return self.times[-1]

    @property
    def intervals(self) -> tuple[float, ...]:
        return tuple(b - a for a, b in zip(self.times, self.times[1:]))

    def rescaled(self, duration: float) -> PulseSchedule:
        return PulseSchedule.from_fractions(self.gates, self.intervals, duration)

    def residual_unitary(self) -> DenseOperator:
        """Product u_{n-1} ... u_0 of all pulses in one cycle."""
        matrix = np.eye(self.space.dim, dtype=complex)
        for gate in self.gates:
            matrix = gate.matrix @ matrix
        return DenseOperator(self.space, matrix)


@dataclass(frozen=True, eq=False)
class UnitalMap:
    branches: tuple[tuple[float, DenseOperator], ...]

    def __post_init__(self):
        branches = tuple((float(p), U) for p, U in self.branches)
        if not branches:
            raise InvalidSchedule("a unital map needs at least one branch")
        total = sum(p for p, _ in branches)
        if abs(total - 1.0) > PROBABILITY_TOL or any(p < 0 for p, _ in branches):
            raise InvalidSchedule(f"branch probabilities must be a distribution, total {total!r}")
        space = branches[0][1].space
        for p, U in branches:
            if U.space != space:
                raise SpaceMismatch("all branch unitaries must act on the same space")
            U.require_unitary("branch unitary")
        object.__setattr__(self, "branches", branches)

    @classmethod
    def identity(cls, space: HilbertSpace) -> UnitalMap:
        return cls(((1.0, DenseOperator.identity(space)),))

    @property
    def space(self) -> HilbertSpace:
        return self.branches[0][1].space

    def apply_operator(self, op: DenseOperator) -> DenseOperator:
        """sum_i p_i (U_i (x) 1) op (U_i (x) 1)^dag for ``op`` on this space or an extension of it."""
        n = len(self.space.factors)
        if op.space.factors[:n] != self.space.factors:
            raise SpaceMismatch(f"map acts on {self.space.factors}, operator on {op.space.factors}")
        rest = op.dim // self.space.dim
        result = np.zeros_like(op.matrix)
        for p, U in self.branches:
            lifted = U.matrix if rest == 1 else np.kron(U.matrix, np.eye(rest))
            result += p * (lifted @ op.matrix @ lifted.conj().T)
        return DenseOperator(op.space, result)

    def compose(self, other: UnitalMap) -> UnitalMap:
        """The map ``self o other``: apply ``other`` first."""
        if self.space != other.space:
            raise SpaceMismatch("cannot compose maps on different spaces")
        return UnitalMap(
            tuple((p * q, U @ V) for p, U in self.branches for q, V in other.branches)
        )

    def mix(self, other: UnitalMap, weight: float) -> UnitalMap:
        """Convex mixture ``weight * self + (1 - weight) * other``."""
        return UnitalMap(
            tuple((weight * p, U) for p, U in self.branches)
            + tuple(((1 - weight) * q, V) for q, V in other.branches)
        )


def schedule_to_map(s: PulseSchedule) -> UnitalMap:
    """
    First-order effective map of one cycle. Branch i is U_i = (u_{i-1} ... u_0)^dag
    with weight (t_i - t_{i-1}) / t_n; for Hermitian pulses U_i = u_0 u_1 ... u_{i-1}.
    """
    branches = []
    frame = np.eye(s.space.dim, dtype=complex)
    for gate, interval in zip(s.gates, s.intervals):
        frame = gate.matrix @ frame
        branches.append((interval / s.duration, DenseOperator(s.space, frame.conj().T)))
    return UnitalMap(tuple(branches))


def pauli_decompose(op: DenseOperator) -> dict[str, float]:
    """Real Pauli-string coefficients of a Hermitian operator on qubit factors."""
    n = len(op.space.factors)
    stacked = np.array([pauli(j).matrix for j in range(4)])
    kernel = stacked.transpose(0, 2, 1).reshape(4, 4)
    tensor = op.matrix.reshape([2] * (2 * n))
    order = [axis for k in range(n) for axis in (k, n + k)]
    tensor = tensor.transpose(order).reshape([4] * n) if n else tensor
    for k in range(n):
        tensor = np.moveaxis(np.tensordot(kernel, tensor, axes=([1], [k])), 0, k)
    coefficients = tensor.real / 2**n
    result = {}
    for index in zip(*np.nonzero(np.abs(coefficients) > COEFFICIENT_CUTOFF)):
        label = "".join("IXYZ"[q] for q in index)
        result[label] = float(coefficients[index])
    return result


def apply_map(m: UnitalMap, H: SEHamiltonian) -> SEHamiltonian:
    """H_eff = sum_i p_i (U_i (x) 1) H (U_i (x) 1)^dag, kept in Pauli-string form."""
    if m.space != H.system_space:
        raise SpaceMismatch(
            f"map acts on {m.space.factors}, Hamiltonian system is {H.system_space.factors}"
        )
    images: dict[str, dict[str, float]] = {}

    def image(label: str) -> dict[str, float]:
        if label not in images:
            images[label] = pauli_decompose(m.apply_operator(pauli_string(label)))
        return images[label]

    signal: dict[str, float] = {}
    for label, weight in H.signal:
        for out, alpha in image(label).items():
            signal[out] = signal.get(out, 0.0) + weight * alpha

    merged: dict[tuple[str, int], list] = {}
    for term in H.terms:
        for out, alpha in image(term.paulis).items():
            key = (out, id(term.env_op))
            if key not in merged:
                merged[key] = [0.0, term.env_op]
            merged[key][0] += term.coupling * alpha
    terms = tuple(
        CouplingTerm(coupling, label, env_op)
        for (label, _), (coupling, env_op) in merged.items()
        if abs(coupling) > COEFFICIENT_CUTOFF
    )
    signal_terms = tuple(
        (label, weight) for label, weight in signal.items() if abs(weight) > COEFFICIENT_CUTOFF
    )
    logger.debug(
        f"[DECOUPLING] Applied {len(m.branches)}-branch map: {len(H.terms)} -> {len(terms)} noise terms"
    )
    return H.replace(terms=terms, signal=signal_terms)


def projection_map(r: UnitVector3 | Sequence[float]) -> UnitalMap:
    """pi_r(X) = (X + sigma_r X sigma_r) / 2, so pi_r(sigma_n) = (r.n) sigma_r."""
    s = sigma_n(r)
    return UnitalMap(((0.5, DenseOperator.identity(s.space)), (0.5, s)))


def projection_schedule(r: UnitVector3 | Sequence[float], duration: float = 1.0) -> PulseSchedule:
    """Two sigma_r pulses per cycle; the cycle closes on the identity and realizes pi_r."""
    s = sigma_n(r)
    return PulseSchedule.from_fractions((s, s), (0.5, 0.5), duration)


def embed_map(m: UnitalMap, site: int, n_sites: int) -> UnitalMap:
    space = HilbertSpace.qubits(n_sites)
    return UnitalMap(tuple((p, embed(U, site, space)) for p, U in m.branches))


def local_projection_map(r: UnitVector3 | Sequence[float], n_sites: int) -> UnitalMap:
    """pi_r applied independently on every site."""
    result = UnitalMap.identity(HilbertSpace.qubits(n_sites))
    for site in range(n_sites):
        result = result.compose(embed_map(projection_map(r), site, n_sites))
    return result


def local_projection_schedule(
    r: UnitVector3 | Sequence[float], n_sites: int, duration: float = 1.0
) -> PulseSchedule:
    """
    Per-site sigma_r pulses ordered along a Gray code, so the toggling frame visits
    every subset of flipped sites once per cycle and realizes ``local_projection_map``.
    """
    space = HilbertSpace.qubits(n_sites)
    flips = [embed(sigma_n(r), site, space) for site in range(n_sites)]
    count = 2**n_sites
    gates = []
    for i in range(count):
        changed = (i ^ (i >> 1)) ^ (((i + 1) % count) ^ (((i + 1) % count) >> 1))
        gates.append(flips[changed.bit_length() - 1])
    return PulseSchedule.from_fractions(gates, [1.0] * count, duration)


@dataclass(frozen=True)
class DecouplingDirection:
    r: UnitVector3
    r3: float
    rank: int


def decoupling_direction(sf: StandardForm) -> DecouplingDirection:
    """
    Direction r whose projection pi_r annihilates rank <= 2 noise while keeping the
    largest signal fraction r3 = r.z. For rank two r = n1 x n2; for rank one the best
    r orthogonal to n1 is used.
    """
    config = _decoupling_config()
    rank = noise_rank(sf, config["rank_tol"]).rank
    z = Z_AXIS.array
    if rank == 3:
        raise RankTooHigh(sf.b[2], config["rank_tol"])
    if rank == 0:
        return DecouplingDirection(Z_AXIS, 1.0, 0)
    n1 = sf.frame[0].array
    if rank == 1:
        v = z - (z @ n1) * n1
    else:
        v = np.cross(n1, sf.frame[1].array)
        v = v / np.linalg.norm(v)
    overlap = float(z @ v)
    if abs(overlap) <= config["infeasible_tol"]:
        raise DecouplingInfeasible(abs(overlap))
    r = UnitVector3.normalized(np.sign(overlap) * v)
    return DecouplingDirection(r, r.dot(z), rank)


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    alphas: tuple[float, float] | None
    slowdown: float | None
    residual: float


def _real_vector(op: DenseOperator) -> np.ndarray:
    return np.concatenate([op.matrix.real.ravel(), op.matrix.imag.ravel()])


def feasibility(H: SEHamiltonian, site: int = 0) -> FeasibilityReport:
    """
    Least-squares test of c3 A3 = alpha_1 c1 A1 + alpha_2 c2 A2 in the Hilbert-Schmidt
    inner product. Feasible when the misfit is below feasibility_rel_tol * ||c3 A3||.
    """
    rel_tol = _decoupling_config()["feasibility_rel_tol"]
    c1A1, c2A2, c3A3 = site_noise_components(H, site)
    target = _real_vector(c3A3)
    scale = float(np.linalg.norm(target))
    if scale == 0.0:
        return FeasibilityReport(True, (0.0, 0.0), 1.0, 0.0)
    design = np.column_stack([_real_vector(c1A1), _real_vector(c2A2)])
    alphas, *_ = np.linalg.lstsq(design, target, rcond=None)
    residual = float(np.linalg.norm(target - design @ alphas))
    if residual > rel_tol * scale:
        logger.info(f"[DECOUPLING] Site {site} infeasible: residual {residual:.3e}")
        return FeasibilityReport(False, None, None, residual)
    a1, a2 = (float(a) for a in alphas)
    return FeasibilityReport(True, (a1, a2), 1.0 / math.sqrt(1.0 + a1 * a1 + a2 * a2), residual)


@dataclass(frozen=True, eq=False)
class SymmetrizationResult:
    hamiltonian: SEHamiltonian
    c_bar: float
    A_bar: DenseOperator | None
    direction: UnitVector3 | None
    site_couplings: tuple[float, ...]
    swaps_per_permutation: int
    metadata: dict = field(default_factory=dict)


def _site_vectors(H: SEHamiltonian) -> np.ndarray:
    vectors = np.zeros((H.n_sites, 3))
    for label, weight in H.signal:
        sites = [i for i, ch in enumerate(label) if ch != "I"]
        if len(sites) != 1:
            raise MixedParallelDirections(f"signal term {label} is not single-site")
        vectors[sites[0], AXIS_LABELS.index(label[sites[0]])] += weight
    return vectors


def _parallel_couplings(
    H: SEHamiltonian, r: np.ndarray, site_ops: list[DenseOperator]
) -> list[float]:
    """
    Signed c~_a against one reference operator A~ shared by all sites. A~ is the env
    operator of the first noisy site's first term when that site's noise lies along it,
    otherwise that site's noise rescaled to the same Hilbert-Schmidt norm.
    """
    noisy = [a for a, C in enumerate(site_ops) if C.hs_norm() > COEFFICIENT_CUTOFF]
    if not noisy:
        return [0.0] * len(site_ops)
    first = site_ops[noisy[0]]
    site_terms = [t for t in H.terms if t.single_site[0] == noisy[0]]
    reference = site_terms[0].env_op if site_terms else first
    overlap = reference.hs_inner(first).real
    if abs(abs(overlap) - reference.hs_norm() * first.hs_norm()) > 1e-10 * max(1.0, abs(overlap)):
        reference = first * (reference.hs_norm() / first.hs_norm())
    scale = reference.hs_norm() ** 2
    couplings = [C.hs_inner(reference).real / scale for C in site_ops]
    for c_tilde, C in zip(couplings, site_ops):
        if (C - reference * c_tilde).max_norm() > 1e-10 * max(1.0, C.max_norm()):
            logger.info("[DECOUPLING] Site env operators are not collinear; using norms")
            return [C.hs_norm() / reference.hs_norm() for C in site_ops]
    return couplings


def symmetrize(H: SEHamiltonian) -> SymmetrizationResult:
    """
    Average over all site permutations in closed form. Parallel per-site noise
    c~_a sigma_r^(a) (x) A~_a becomes c_bar S_r (x) A_bar with c_bar = mean(c~_a) and
    A_bar = sum_a c~_a A~_a / (N c_bar).
    """
    n = H.n_sites
    if any(term.single_site is None for term in H.terms):
        raise MixedParallelDirections("noise contains multi-site terms")
    signal = _site_vectors(H)
    if not np.allclose(signal, signal[0], rtol=0.0, atol=1e-12):
        raise MixedParallelDirections("signal directions differ between sites")

    components = [np.array([C.matrix for C in site_noise_components(H, a)]) for a in range(n)]
    if np.linalg.norm(signal[0]) > 0:
        r = signal[0] / np.linalg.norm(signal[0])
    else:
        stacked = np.concatenate([c.reshape(3, -1) for c in components], axis=1)
        u, _, _ = np.linalg.svd(np.concatenate([stacked.real, stacked.imag], axis=1))
        r = u[:, 0]

    env_space = H.env_space
    site_ops = []
    for a in range(n):
        C = np.einsum("k,kab->ab", r, components[a])
        misfit = np.max(np.abs(components[a] - np.einsum("k,ab->kab", r, C)), initial=0.0)
        if misfit > 1e-10 * max(1.0, float(np.max(np.abs(components[a]), initial=0.0))):
            raise MixedParallelDirections(f"site {a} noise is not parallel to {np.round(r, 6)}")
        site_ops.append(DenseOperator(env_space, C))
    couplings = _parallel_couplings(H, r, site_ops)
    weighted = [C.matrix for C in site_ops]

    mean_op = sum(weighted) / n if weighted else np.zeros((env_space.dim,) * 2)
    c_bar = float(np.mean(couplings))
    A_bar = DenseOperator(env_space, mean_op / c_bar) if abs(c_bar) > COEFFICIENT_CUTOFF else None

    terms = []
    if np.max(np.abs(mean_op), initial=0.0) > COEFFICIENT_CUTOFF:
        op, scale = (A_bar, c_bar) if A_bar is not None else (DenseOperator(env_space, mean_op), 1.0)
        for b in range(n):
            for k, axis in enumerate(AXIS_LABELS):
                if abs(r[k]) > COEFFICIENT_CUTOFF:
                    terms.append(CouplingTerm(scale * r[k], single_site_label(n, b, axis), op))
    logger.info(f"[DECOUPLING] Symmetrized {n} sites: c_bar = {c_bar:.6g}")
    return SymmetrizationResult(
        H.replace(terms=tuple(terms)),
        c_bar,
        A_bar,
        UnitVector3.normalized(r) if np.linalg.norm(r) > 0 else None,
        tuple(couplings),
        max(n - 1, 0),
    )


def permutation_average(H: SEHamiltonian) -> DenseOperator:
    """Explicit average of the full operator over all N! system-site permutations."""
    n = H.n_sites
    full = H.full_operator()
    dims = H.space.dims
    k = len(dims)
    tensor = full.matrix.reshape(dims + dims)
    total = np.zeros_like(tensor)
    perms = list(itertools.permutations(range(n)))
    for perm in perms:
        axes = list(perm) + list(range(n, k))
        total += tensor.transpose(axes + [k + a for a in axes])
    return DenseOperator(full.space, (total / len(perms)).reshape(full.matrix.shape))


@dataclass(frozen=True)
class DirectionOptimum:
    r: UnitVector3
    merit: float
    unbounded: bool
    gradient_norm: float


def _fibonacci_starts(count: int) -> list[tuple[float, float]]:
    golden_angle = math.pi * (3.0 - math.sqrt(5.0))
    starts = []
    for i in range(count):
        z = 1.0 - (2.0 * i + 1.0) / count
        starts.append((math.acos(z), (i * golden_angle) % (2 * math.pi)))
    return starts


def _sphere_point(angles: np.ndarray) -> np.ndarray:
    theta, phi = angles
    return np.array([math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)])


def optimize_direction(
    sf: StandardForm,
    noise_variances: Sequence[float] = (1.0, 1.0, 1.0),
    threads: int | None = None,
) -> DirectionOptimum:
    """
    Best-found r for reducing rank-3 noise to parallel noise, maximizing
    r3^2 / sum_j (n_j.r)^2 b_j^2 Var_j over the unit sphere by multi-start ascent.
    """
    config = _decoupling_config()
    z = Z_AXIS.array
    Q = sum(
        (b * b * var) * np.outer(n.array, n.array)
        for b, var, n in zip(sf.b, noise_variances, sf.frame)
    )
    eigenvalues, eigenvectors = np.linalg.eigh(Q)
    null = eigenvectors[:, eigenvalues <= 1e-12 * max(float(eigenvalues[-1]), 1e-300)]
    leak = null @ (null.T @ z) if null.size else np.zeros(3)
    if np.linalg.norm(leak) > config["infeasible_tol"]:
        r = UnitVector3.normalized(leak)
        logger.info("[DECOUPLING] Merit unbounded: exact decoupling is possible")
        return DirectionOptimum(r, math.inf, True, 0.0)

    def merit_and_gradient(r: np.ndarray) -> tuple[float, np.ndarray]:
        num = float(r @ z) ** 2
        den = max(float(r @ Q @ r), 1e-300)
        grad = 2.0 * float(r @ z) * z / den - 2.0 * num * (Q @ r) / den**2
        return num / den, grad

    def objective(angles: np.ndarray) -> tuple[float, np.ndarray]:
        theta, phi = angles
        r = _sphere_point(angles)
        value, grad = merit_and_gradient(r)
        d_theta = np.array([math.cos(theta) * math.cos(phi), math.cos(theta) * math.sin(phi), -math.sin(theta)])
        d_phi = np.array([-math.sin(theta) * math.sin(phi), math.sin(theta) * math.cos(phi), 0.0])
        return -value, -np.array([grad @ d_theta, grad @ d_phi])

    def ascend(start: tuple[float, float]) -> np.ndarray:
        result = scipy.optimize.minimize(
            objective, np.array(start), jac=True, method="BFGS", options={"gtol": 1e-13}
        )
        return _sphere_point(result.x)

    starts = _fibonacci_starts(config["direction_starts"])
    with ThreadPoolExecutor(max_workers=threads or EngineConfig.get_or_create_instance().threads) as pool:
        candidates = list(pool.map(ascend, starts))

    best_index, best_merit = 0, -math.inf
    for index, r in enumerate(candidates):
        value, _ = merit_and_gradient(r)
        if value > best_merit:
            best_index, best_merit = index, value
    r = candidates[best_index]
    if r @ z < 0:
        r = -r
    r = r / np.linalg.norm(r)
    _, grad = merit_and_gradient(r)
    tangent = grad - (grad @ r) * r
    logger.debug(f"[DECOUPLING] Best of {len(starts)} starts: index {best_index}, merit {best_merit:.6g}")
    return DirectionOptimum(UnitVector3.normalized(r), best_merit, False, float(np.linalg.norm(tangent)))


@dataclass(frozen=True)
class SchemeLayer:
    gate: str
    sites: tuple[int, ...]
    period: int
    offset: int = 0


@dataclass(frozen=True)
class CorrelatedScheme:
    """
    Pulse recipe for a 1-D chain with diagonal noise of range k: independent sigma_3
    pulses on every site, then one sigma_1 layer per residue class o = 1..k modulo k+1.
    Sites in class 0 keep their signal.
    """

    n_sites: int
    k: int
    layers: tuple[SchemeLayer, ...]
    alpha: float

    def to_dict(self) -> dict:
        return {
            "layers": [
                {"gate": layer.gate, "sites": list(layer.sites), "period": layer.period}
                for layer in self.layers
            ],
            "alpha": self.alpha,
        }

    @property
    def signal_sites(self) -> tuple[int, ...]:
        return tuple(a for a in range(self.n_sites) if a % (self.k + 1) == 0)

    def to_map(self) -> UnitalMap:
        n = self.n_sites
        space = HilbertSpace.qubits(n)
        result = UnitalMap.identity(space)
        for layer in self.layers:
            if layer.gate == "Z":
                for site in layer.sites:
                    result = result.compose(embed_map(projection_map(Z_AXIS), site, n))
            else:
                flips = pauli_string("".join("X" if a in layer.sites else "I" for a in range(n)))
                result = result.compose(
                    UnitalMap(((0.5, DenseOperator.identity(space)), (0.5, flips)))
                )
        return result


def correlated_scheme(n_sites: int, k: int) -> CorrelatedScheme:
    if k < 0 or k >= n_sites:
        raise InvalidSchemeRange(k, n_sites)
    layers = [SchemeLayer("Z", tuple(range(n_sites)), 1, 0)]
    for offset in range(1, k + 1):
        sites = tuple(a for a in range(n_sites) if a % (k + 1) == offset)
        if sites:
            layers.append(SchemeLayer("X", sites, k + 1, offset))
    kept = sum(1 for a in range(n_sites) if a % (k + 1) == 0)
    return CorrelatedScheme(n_sites, k, tuple(layers), kept / n_sites)


def surviving_signal(scheme: CorrelatedScheme) -> DenseOperator:
    """Image of S3 under the scheme's map."""
    n = scheme.n_sites
    s3 = sum(
        (pauli_string(single_site_label(n, a, "Z")) for a in range(1, n)),
        pauli_string(single_site_label(n, 0, "Z")),
    )
    return scheme.to_map().apply_operator(s3)
