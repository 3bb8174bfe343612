"""
Quantum and classical Fisher information, the parallel-noise rate bound, optimal
interrogation times for GHZ probes and precision-scaling sweeps.
"""

from __future__ import annotations

import logging
import math

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np
import scipy.optimize

from .config import EngineConfig
from .decoupling import CorrelatedScheme, surviving_signal
from .dynamics import (
    DISCRETE,
    GAUSSIAN,
    NoiseDistribution,
    fit_loglog_slope,
)
from .operators import DenseOperator, ghz_vector, uhlmann_fidelity
from .utils import (
    Constants,
    FidelityComputationError,
    InsufficientSweepPoints,
    InvalidDensityMatrix,
    ScenarioParseError,
    ZeroFisherInformation,
)

logger = logging.getLogger(__name__)

NOISELESS = "noiseless"
COLLECTIVE = "collective"
LOCAL = "local"


class Unbounded(Enum):
    UNBOUNDED = Constants.UNBOUNDED_TOKEN


def _metrology_config() -> dict:
    return EngineConfig.get_or_create_instance().metrology


@dataclass(frozen=True)
class QFIResult:
    qfi: float
    qfi_per_time: float
    time: float
    n_qubits: int
    convention: str = Constants.CONVENTION


@dataclass(frozen=True)
class ScalingFit:
    n_values: tuple[int, ...]
    rates: tuple[float, ...]
    beta: float
    residual: float

    def to_dict(self) -> dict:
        return {
            "beta": self.beta,
            "residual": self.residual,
            "points": [{"N": n, "qfi_rate": rate} for n, rate in zip(self.n_values, self.rates)],
        }


@dataclass(frozen=True)
class PrecisionEstimate:
    delta_omega: float
    repetitions: float
    total_time: float | None = None


def _fidelity_qfi(
    state_family: Callable[[float], DenseOperator], theta: float, dtheta: float
) -> float:
    try:
        fidelity = uhlmann_fidelity(
            state_family(theta - 0.5 * dtheta), state_family(theta + 0.5 * dtheta)
        )
    except (InvalidDensityMatrix, np.linalg.LinAlgError) as e:
        raise FidelityComputationError(f"fidelity at theta = {theta} failed: {e}") from e
    return max(0.0, 8.0 * (1.0 - fidelity) / dtheta**2)


def qfi_from_fidelity(
    state_family: Callable[[float], DenseOperator],
    theta: float,
    dtheta: float | None = None,
) -> float:
    """
    8 (1 - F(rho(theta - d/2), rho(theta + d/2))) / d^2 with the Uhlmann root fidelity,
    checked against the same estimate at d/2.
    """
    config = _metrology_config()
    dtheta = config["dtheta"] if dtheta is None else dtheta
    coarse = _fidelity_qfi(state_family, theta, dtheta)
    fine = _fidelity_qfi(state_family, theta, 0.5 * dtheta)
    scale = max(coarse, fine)
    if scale > 0 and abs(coarse - fine) > config["richardson_rel_tol"] * scale:
        logger.warning(
            f"[METROLOGY] Fidelity QFI not converged at theta = {theta}: {coarse:.6g} vs {fine:.6g}"
        )
    return coarse


def qfi_pure(state: np.ndarray, generator: DenseOperator, t: float) -> float:
    """4 t^2 Var(G) for a pure state evolving under exp(-i theta G t)."""
    psi = np.asarray(state, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    g = generator.matrix
    mean = np.vdot(psi, g @ psi).real
    second = np.vdot(g @ psi, g @ psi).real
    return 4.0 * t * t * max(0.0, second - mean * mean)


def qfi_sld(rho: DenseOperator, drho: DenseOperator) -> float:
    """sum over lambda_i + lambda_j > 0 of 2 |<i|d rho|j>|^2 / (lambda_i + lambda_j)."""
    w, v = np.linalg.eigh(0.5 * (rho.matrix + rho.matrix.conj().T))
    d = v.conj().T @ drho.matrix @ v
    denominator = np.add.outer(w, w)
    mask = denominator > 1e-12
    return float(np.sum(2.0 * np.abs(d[mask]) ** 2 / denominator[mask]))


def qfi_ghz(n_qubits: int, distribution: NoiseDistribution, t: float) -> QFIResult:
    """F = N^2 t^2 |gamma|^2 for a GHZ probe after collective dephasing."""
    gamma = distribution.characteristic(n_qubits * t)
    qfi = (n_qubits * t) ** 2 * abs(gamma) ** 2
    return QFIResult(qfi, qfi / t if t > 0 else 0.0, t, n_qubits)


def qfi_ghz_gaussian(n_qubits: int, sigma: float, t: float) -> QFIResult:
    return qfi_ghz(n_qubits, NoiseDistribution.gaussian(0.0, sigma), t)


def _vanishing_order(points: np.ndarray, weights: np.ndarray, zero: int, step: int) -> float:
    """Order k of p ~ |x - x0|^k next to a grid zero, from the two nearest points on one side."""
    near, far = zero + step, zero + 2 * step
    if not 0 <= far < len(points) or weights[far] <= 0:
        return 0.0
    ratio = weights[far] / weights[near]
    return math.log(ratio) / math.log(abs(points[far] - points[zero]) / abs(points[near] - points[zero]))


def classical_fisher(p: NoiseDistribution) -> float | Unbounded:
    """
    Location Fisher information of the noise density. Unbounded for discrete noise and
    for tabulated densities that reach a zero no faster than linearly, edges included.
    """
    if p.kind == GAUSSIAN:
        return 1.0 / p.sigma**2 if p.sigma > 0 else Unbounded.UNBOUNDED
    if p.kind == DISCRETE:
        return Unbounded.UNBOUNDED
    points, weights = np.asarray(p.points, dtype=float), np.asarray(p.weights, dtype=float)
    support = weights > 1e-300
    for zero in np.flatnonzero(~support):
        for step in (-1, 1):
            near = zero + step
            if 0 <= near < len(points) and support[near]:
                if _vanishing_order(points, weights, zero, step) < 1.5:
                    return Unbounded.UNBOUNDED
    derivative = np.gradient(weights, points)
    integrand = np.where(support, derivative**2 / np.where(support, weights, 1.0), 0.0)
    return float(np.trapezoid(integrand, points))


def parallel_bound(n_qubits: int, p: NoiseDistribution) -> float | Unbounded:
    """N sqrt(F_cl): the largest QFI rate any strategy reaches under parallel noise."""
    fisher = classical_fisher(p)
    if fisher is Unbounded.UNBOUNDED:
        return Unbounded.UNBOUNDED
    return n_qubits * math.sqrt(fisher)


@dataclass(frozen=True)
class OptimalTime:
    n_qubits: int
    sigma: float
    t_opt: float | Unbounded
    rate: float | Unbounded


def optimal_time(n_qubits: int, sigma: float) -> OptimalTime:
    """Maximizes F/t over t in (0, 10/(N sigma)] by bracketing then golden-section search."""
    if sigma <= 0:
        return OptimalTime(n_qubits, sigma, Unbounded.UNBOUNDED, Unbounded.UNBOUNDED)

    def negative_rate(t: float) -> float:
        return -qfi_ghz_gaussian(n_qubits, sigma, t).qfi_per_time

    upper = 10.0 / (n_qubits * sigma)
    grid = np.linspace(upper / 64, upper, 64)
    best = int(np.argmin([negative_rate(t) for t in grid]))
    best = min(max(best, 1), len(grid) - 2)
    result = scipy.optimize.minimize_scalar(
        negative_rate,
        bracket=(grid[best - 1], grid[best], grid[best + 1]),
        method="golden",
        options={"xtol": _metrology_config()["golden_xtol"]},
    )
    t_opt = float(result.x)
    return OptimalTime(n_qubits, sigma, t_opt, -float(result.fun))


def local_fluctuation_rate(n_qubits: int, sigma: float) -> QFIResult:
    """
    Optimal GHZ rate when each site has an independent Gaussian coupling of width sigma
    and the sites are symmetrized, so the shared coupling has width sigma / sqrt(N).
    """
    optimum = optimal_time(n_qubits, sigma / math.sqrt(n_qubits))
    return QFIResult(
        optimum.rate * optimum.t_opt, optimum.rate, optimum.t_opt, n_qubits
    )


@dataclass(frozen=True)
class FluctuationEstimate:
    n_qubits: int
    draws: int
    empirical_std: float
    expected_std: float
    standard_error: float

    @property
    def z_score(self) -> float:
        return (self.empirical_std - self.expected_std) / self.standard_error


def fluctuation_monte_carlo(
    n_qubits: int, sigma: float, draws: int, rng: np.random.Generator
) -> FluctuationEstimate:
    """Spread of the site-averaged coupling when every site draws its own Gaussian coupling."""
    couplings = rng.normal(0.0, sigma, size=(draws, n_qubits))
    averages = couplings.mean(axis=1)
    expected = sigma / math.sqrt(n_qubits)
    return FluctuationEstimate(
        n_qubits,
        draws,
        float(np.std(averages, ddof=1)),
        expected,
        expected / math.sqrt(2.0 * (draws - 1)),
    )


@dataclass(frozen=True)
class ScalingScenario:
    kind: str
    sigma: float = 1.0
    t: float = 1.0

    def rate(self, n_qubits: int) -> float:
        if self.kind == NOISELESS:
            return qfi_ghz_gaussian(n_qubits, 0.0, self.t).qfi_per_time
        if self.kind == COLLECTIVE:
            return optimal_time(n_qubits, self.sigma).rate
        if self.kind == LOCAL:
            return local_fluctuation_rate(n_qubits, self.sigma).qfi_per_time
        raise ScenarioParseError(f"unknown scaling scenario {self.kind!r}")


def scaling_sweep(
    n_values: Sequence[int], scenario: ScalingScenario, threads: int | None = None
) -> ScalingFit:
    if len(n_values) < 4:
        raise InsufficientSweepPoints(len(n_values))
    workers = threads or EngineConfig.get_or_create_instance().threads
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rates = list(pool.map(scenario.rate, n_values))
    beta, residual = fit_loglog_slope(n_values, rates)
    logger.info(f"[METROLOGY] {scenario.kind} sweep over N = {list(n_values)}: beta = {beta:.6f}")
    return ScalingFit(tuple(n_values), tuple(rates), beta, residual)


def cramer_rao(
    F: float,
    repetitions: float | None = None,
    total_time: float | None = None,
    t_opt: float | None = None,
) -> PrecisionEstimate:
    """delta omega = (nu F)^{-1/2}, with nu = T / t_opt when a total time is given."""
    if F <= 0:
        raise ZeroFisherInformation()
    if total_time is not None and t_opt is not None:
        repetitions = total_time / t_opt
    nu = 1.0 if repetitions is None else float(repetitions)
    return PrecisionEstimate(1.0 / math.sqrt(nu * F), nu, total_time)


@dataclass(frozen=True)
class SystematicFloor:
    floor: float
    trivial: bool


def systematic_error_floor(prior_width: float, eigenvalue: float = 1.0) -> SystematicFloor:
    """
    A fixed but unknown coupling shifts omega by c * l, so its prior width w leaves an
    error w |l| that no repetition removes. l = 0 is the trivial exception.
    """
    return SystematicFloor(abs(prior_width * eigenvalue), eigenvalue == 0)


def correlated_scheme_qfi(scheme: CorrelatedScheme, t: float) -> QFIResult:
    """Noiseless GHZ QFI under the signal that survives the scheme, (alpha N)^2 t^2."""
    generator = 0.5 * surviving_signal(scheme)
    qfi = qfi_pure(ghz_vector(scheme.n_sites), generator, t)
    return QFIResult(qfi, qfi / t if t > 0 else 0.0, t, scheme.n_sites)
