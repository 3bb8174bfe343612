"""
Finite-rate pulsed evolution, its Trotter distance to the effective Hamiltonian, and
the collective dephasing channel left after tracing out a parallel-noise environment.

The signal generator is S3/2: a GHZ probe picks up the relative phase
exp(-i N (omega + lambda) t) and its noiseless QFI is N^2 t^2.
"""

from __future__ import annotations

import logging
import math

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.integrate
import scipy.optimize

from .config import EngineConfig
from .decoupling import PulseSchedule, apply_map, schedule_to_map
from .hamiltonian import SEHamiltonian
from .operators import DenseOperator, HilbertSpace, evolve, identity_on
from .utils import (
    DimensionMismatch,
    InvalidSchedule,
    UnnormalizedDistribution,
    UnsupportedDistributionOperation,
)

logger = logging.getLogger(__name__)

GAUSSIAN = "gaussian"
DISCRETE = "discrete"
TABULATED = "tabulated"

WEIGHT_CUTOFF = 1e-14
DISCRETE_NORM_TOL = 1e-10
TABULATED_NORM_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class PulsedEvolution:
    H: SEHamiltonian
    schedule: PulseSchedule
    cycles: int
    total_time: float

    def __post_init__(self):
        if self.cycles < 1:
            raise InvalidSchedule(f"cycle count must be positive, got {self.cycles}")
        if self.schedule.space != self.H.system_space:
            raise DimensionMismatch(
                f"schedule acts on {self.schedule.space.factors}, system is {self.H.system_space.factors}"
            )
        cycle = self.total_time / self.cycles
        if abs(self.schedule.duration - cycle) > 1e-12 * max(1.0, cycle):
            object.__setattr__(self, "schedule", self.schedule.rescaled(cycle))

    @property
    def cycle_duration(self) -> float:
        return self.schedule.duration


def _propagator(w: np.ndarray, v: np.ndarray, dt: float) -> np.ndarray:
    return (v * np.exp(-1j * w * dt)) @ v.conj().T


def exact_pulsed_unitary(pe: PulsedEvolution) -> DenseOperator:
    """
    One cycle is exp(-iH dt_n) u_{n-1} ... exp(-iH dt_1) u_0 with every pulse lifted
    as u (x) 1_E; the cycle is repeated ``pe.cycles`` times.
    """
    full = pe.H.full_operator().require_hermitian("Hamiltonian")
    w, v = np.linalg.eigh(0.5 * (full.matrix + full.matrix.conj().T))
    cycle = np.eye(full.dim, dtype=complex)
    for gate, dt in zip(pe.schedule.gates, pe.schedule.intervals):
        lifted = identity_on(gate, full.space).matrix
        cycle = _propagator(w, v, dt) @ lifted @ cycle
    return DenseOperator(full.space, np.linalg.matrix_power(cycle, pe.cycles))


def trotter_error(pe: PulsedEvolution, H_eff: SEHamiltonian) -> float:
    """
    min over phi of || U_exact - e^{i phi} V^m exp(-i H_eff t) ||_2, where V is the
    product of all pulses in one cycle.
    """
    exact = exact_pulsed_unitary(pe).matrix
    space = pe.H.space
    residual = identity_on(pe.schedule.residual_unitary(), space).matrix
    target = np.linalg.matrix_power(residual, pe.cycles) @ evolve(
        H_eff.full_operator(), pe.total_time
    ).matrix

    def distance(phi: float) -> float:
        return float(np.linalg.norm(exact - np.exp(1j * phi) * target, ord=2))

    phase = float(np.angle(np.trace(target.conj().T @ exact)))
    result = scipy.optimize.minimize_scalar(
        distance, bounds=(phase - 0.5, phase + 0.5), method="bounded", options={"xatol": 1e-12}
    )
    error = min(float(result.fun), distance(phase))
    logger.debug(f"[DYNAMICS] m = {pe.cycles} on {space.dims}: trotter error {error:.3e}")
    return error


@dataclass(frozen=True)
class ConvergenceReport:
    points: tuple[tuple[int, float], ...]
    slope: float | None

    @property
    def fitted_order(self) -> float | None:
        return None if self.slope is None else -self.slope


def fit_loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float]:
    """Least-squares slope of log y against log x and the largest absolute residual."""
    lx, ly = np.log(np.asarray(xs, dtype=float)), np.log(np.asarray(ys, dtype=float))
    slope, intercept = np.polyfit(lx, ly, 1)
    residual = float(np.max(np.abs(ly - (slope * lx + intercept))))
    return float(slope), residual


def convergence_study(
    H: SEHamiltonian,
    schedule: PulseSchedule,
    total_time: float,
    ms: Sequence[int],
    threads: int | None = None,
) -> ConvergenceReport:
    """Trotter error over the cycle counts ``ms`` and the fitted log-log slope."""
    H_eff = apply_map(schedule_to_map(schedule), H)

    def error_at(m: int) -> float:
        return trotter_error(PulsedEvolution(H, schedule, m, total_time), H_eff)

    workers = threads or EngineConfig.get_or_create_instance().threads
    with ThreadPoolExecutor(max_workers=workers) as pool:
        errors = list(pool.map(error_at, ms))

    fit = [(m, e) for m, e in zip(ms, errors) if e > 1e-13]
    slope = fit_loglog_slope(*zip(*fit))[0] if len(fit) >= 2 else None
    logger.info(f"[DYNAMICS] Convergence over m = {list(ms)}: slope {slope}")
    return ConvergenceReport(tuple(zip(ms, errors)), slope)


@dataclass(frozen=True, eq=False)
class NoiseDistribution:
    """Distribution of the fluctuating parallel coupling lambda."""

    kind: str
    mean: float = 0.0
    sigma: float = 0.0
    points: np.ndarray | None = None
    weights: np.ndarray | None = None

    def __post_init__(self):
        if self.kind == GAUSSIAN:
            if self.sigma < 0:
                raise UnsupportedDistributionOperation(f"gaussian sigma must be >= 0, got {self.sigma}")
            return
        if self.kind not in (DISCRETE, TABULATED):
            raise UnsupportedDistributionOperation(f"unknown distribution kind {self.kind!r}")
        points = np.array(self.points, dtype=float)
        weights = np.array(self.weights, dtype=float)
        if points.shape != weights.shape or points.ndim != 1 or not points.size:
            raise UnsupportedDistributionOperation("points and weights must be non-empty 1-D arrays of equal length")
        if np.any(weights < 0):
            raise UnnormalizedDistribution(float(np.sum(weights)))
        if self.kind == DISCRETE:
            total = float(np.sum(weights))
            if abs(total - 1.0) > DISCRETE_NORM_TOL:
                raise UnnormalizedDistribution(total)
        else:
            if np.any(np.diff(points) <= 0):
                raise UnsupportedDistributionOperation("tabulated grid must be strictly increasing")
            total = float(np.trapezoid(weights, points))
            if abs(total - 1.0) > TABULATED_NORM_TOL:
                raise UnnormalizedDistribution(total)
        points.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def gaussian(cls, mean: float, sigma: float) -> NoiseDistribution:
        return cls(GAUSSIAN, mean=float(mean), sigma=float(sigma))

    @classmethod
    def discrete(cls, points: Sequence[float], weights: Sequence[float]) -> NoiseDistribution:
        return cls(DISCRETE, points=np.asarray(points), weights=np.asarray(weights))

    @classmethod
    def tabulated(cls, grid: Sequence[float], density: Sequence[float]) -> NoiseDistribution:
        return cls(TABULATED, points=np.asarray(grid), weights=np.asarray(density))

    @classmethod
    def equally_gapped(
        cls,
        gap: float,
        levels: int,
        coupling: float = 1.0,
        weights: Sequence[float] | None = None,
        offset: float = 0.0,
    ) -> NoiseDistribution:
        """lambda = coupling * (offset + k * gap) for k = 0 .. levels-1; uniform weights by default."""
        weights = np.full(levels, 1.0 / levels) if weights is None else np.asarray(weights, dtype=float)
        points = coupling * (offset + gap * np.arange(levels))
        return cls.discrete(points, weights)

    def characteristic(self, s: float) -> complex:
        """E[exp(-i lambda s)]."""
        if self.kind == GAUSSIAN:
            return complex(np.exp(-1j * self.mean * s - 0.5 * (self.sigma * s) ** 2))
        if self.kind == DISCRETE:
            keep = self.weights > WEIGHT_CUTOFF
            return complex(np.sum(self.weights[keep] * np.exp(-1j * self.points[keep] * s)))
        rel = EngineConfig.get_or_create_instance().metrology["quad_rel_tol"]
        lo, hi = float(self.points[0]), float(self.points[-1])

        def density(x: float) -> float:
            return float(np.interp(x, self.points, self.weights))

        kwargs = {"epsrel": rel, "epsabs": 0.0, "limit": 400}
        if s == 0:
            return complex(scipy.integrate.quad(density, lo, hi, **kwargs)[0])
        re = scipy.integrate.quad(density, lo, hi, weight="cos", wvar=s, **kwargs)[0]
        im = scipy.integrate.quad(density, lo, hi, weight="sin", wvar=s, **kwargs)[0]
        return complex(re, -im)

    def expectation(self) -> float:
        if self.kind == GAUSSIAN:
            return self.mean
        if self.kind == DISCRETE:
            return float(np.sum(self.weights * self.points))
        return float(np.trapezoid(self.weights * self.points, self.points))

    def variance(self) -> float:
        if self.kind == GAUSSIAN:
            return self.sigma**2
        mu = self.expectation()
        if self.kind == DISCRETE:
            return float(np.sum(self.weights * (self.points - mu) ** 2))
        return float(np.trapezoid(self.weights * (self.points - mu) ** 2, self.points))

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == GAUSSIAN:
            return rng.normal(self.mean, self.sigma, size=n)
        if self.kind == DISCRETE:
            return rng.choice(self.points, size=n, p=self.weights / np.sum(self.weights))
        cdf = scipy.integrate.cumulative_trapezoid(self.weights, self.points, initial=0.0)
        return np.interp(rng.uniform(0.0, cdf[-1], size=n), cdf, self.points)

    def convolve(self, other: NoiseDistribution) -> NoiseDistribution:
        """Distribution of the sum of two independent couplings."""
        if self.kind == GAUSSIAN and other.kind == GAUSSIAN:
            return NoiseDistribution.gaussian(self.mean + other.mean, math.hypot(self.sigma, other.sigma))
        if self.kind == DISCRETE and other.kind == DISCRETE:
            points = np.add.outer(self.points, other.points).ravel()
            weights = np.multiply.outer(self.weights, other.weights).ravel()
            return NoiseDistribution.discrete(points, weights / np.sum(weights))
        raise UnsupportedDistributionOperation(f"convolution of {self.kind} with {other.kind}")


@dataclass(frozen=True)
class GhzCoherenceState:
    """A state on span{|0...0>, |1...1>}: two populations and one coherence."""

    n_qubits: int
    populations: tuple[float, float] = (0.5, 0.5)
    coherence: complex = 0.5

    def to_matrix(self) -> np.ndarray:
        p0, p1 = self.populations
        return np.array([[p0, self.coherence], [np.conj(self.coherence), p1]], dtype=complex)

    def to_dense(self) -> DenseOperator:
        dim = 2**self.n_qubits
        matrix = np.zeros((dim, dim), dtype=complex)
        corners = [0, dim - 1]
        matrix[np.ix_(corners, corners)] = self.to_matrix()
        return DenseOperator(HilbertSpace.qubits(self.n_qubits), matrix)


def ghz_subspace_state(n: int) -> GhzCoherenceState:
    return GhzCoherenceState(n, (0.5, 0.5), 0.5)


@dataclass(frozen=True, eq=False)
class ParallelNoiseChannel:
    n_qubits: int
    distribution: NoiseDistribution
    time: float
    omega: float = 0.0


def ghz_coherence(channel: ParallelNoiseChannel) -> complex:
    """gamma = E[exp(-i N lambda t)], the dephasing factor on the GHZ coherence."""
    return channel.distribution.characteristic(channel.n_qubits * channel.time)


def _charges(n: int) -> np.ndarray:
    """Eigenvalues (N - 2 popcount(x)) / 2 of S3/2 on computational basis states."""
    return (n - 2 * np.bitwise_count(np.arange(2**n, dtype=np.uint64)).astype(int)) / 2


def channel_output(
    channel: ParallelNoiseChannel, rho_in: DenseOperator | GhzCoherenceState
) -> DenseOperator | GhzCoherenceState:
    """
    rho_xy -> rho_xy exp(-i omega t (g_x - g_y)) E[exp(-i lambda t (g_x - g_y))] with
    g the S3/2 charges. The 2x2 GHZ representation only updates the coherence.
    """
    n, t = channel.n_qubits, channel.time
    if isinstance(rho_in, GhzCoherenceState):
        if rho_in.n_qubits != n:
            raise DimensionMismatch(f"state of {rho_in.n_qubits} qubits on a {n}-qubit channel")
        factor = np.exp(-1j * n * channel.omega * t) * ghz_coherence(channel)
        return GhzCoherenceState(n, rho_in.populations, complex(rho_in.coherence * factor))
    if rho_in.space != HilbertSpace.qubits(n):
        raise DimensionMismatch(f"state on {rho_in.space.factors} for a {n}-qubit channel")
    g = _charges(n)
    # charge differences are integers in -N..N
    delta = np.rint(np.subtract.outer(g, g)).astype(int)
    table = {
        k: np.exp(-1j * channel.omega * t * k) * channel.distribution.characteristic(k * t)
        for k in range(-n, n + 1)
    }
    factors = np.vectorize(table.__getitem__, otypes=[complex])(delta)
    return DenseOperator(rho_in.space, rho_in.matrix * factors)
