"""
Acceptance suite behind ``reproduce-paper``. Every criterion returns its metric, the
configured tolerance and a table of the points it checked; tolerances come from the
``acceptance`` section of the engine configuration.
"""

import logging
import math
import time

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from ..config import EngineConfig
from ..decoupling import (
    apply_map,
    correlated_scheme,
    decoupling_direction,
    permutation_average,
    projection_map,
    projection_schedule,
    symmetrize,
)
from ..dynamics import (
    NoiseDistribution,
    ParallelNoiseChannel,
    channel_output,
    convergence_study,
    ghz_coherence,
)
from ..hamiltonian import (
    n_qubit_common,
    reconstruct,
    single_qubit,
    site_noise_operator,
    standard_form,
)
from ..metrology import (
    LOCAL,
    ScalingScenario,
    Unbounded,
    classical_fisher,
    correlated_scheme_qfi,
    fluctuation_monte_carlo,
    optimal_time,
    parallel_bound,
    qfi_from_fidelity,
    qfi_ghz_gaussian,
    scaling_sweep,
)
from ..operators import (
    Z_AXIS,
    DenseOperator,
    HilbertSpace,
    ghz_state,
    pauli_string,
    random_hermitian,
    sigma_n,
)
from .output import render_table

logger = logging.getLogger(__name__)

RATE_CONSTANT = 1.0 / math.sqrt(2.0 * math.e)


@dataclass
class CriterionResult:
    key: str
    passed: bool
    metric: float
    tolerance: float
    columns: list[str]
    rows: list[dict] = field(default_factory=list)
    seconds: float = 0.0


def _tolerances() -> dict:
    return EngineConfig.get_or_create_instance().acceptance


def _random_hermitian(dim: int, rng: np.random.Generator) -> DenseOperator:
    return random_hermitian(HilbertSpace.environment_only((dim,)), rng)


def standard_form_roundtrip(rng: np.random.Generator) -> CriterionResult:
    tol = _tolerances()["standard_form_error"]
    rows, worst, all_sorted = [], 0.0, True
    for index in range(500):
        d = int(rng.integers(2, 5))
        ops = [None] + [_random_hermitian(d, rng) for _ in range(3)]
        H = single_qubit(1.0, [0.0, *rng.normal(size=3)], ops)
        sf = standard_form(H)
        error = float(np.max(np.abs(reconstruct(sf).matrix - site_noise_operator(H).matrix)))
        gram = np.array([[np.trace(Bj.matrix @ Bk.matrix).real for Bk in sf.B] for Bj in sf.B])
        ortho = float(np.max(np.abs(gram - np.eye(3))))
        is_sorted = sf.b[0] >= sf.b[1] >= sf.b[2]
        all_sorted &= is_sorted
        worst = max(worst, error, ortho)
        rows.append({"index": index, "env_dim": d, "reconstruction_error": error, "orthonormality_error": ortho, "sorted": is_sorted})
    return CriterionResult(
        "standard_form_roundtrip", worst <= tol and all_sorted, worst, tol,
        ["index", "env_dim", "reconstruction_error", "orthonormality_error", "sorted"], rows,
    )


def _random_rotation(rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 2] = -q[:, 2]
    return q


def _orthonormal_pair(d: int, rng: np.random.Generator) -> list[np.ndarray]:
    basis: list[np.ndarray] = []
    while len(basis) < 2:
        candidate = _random_hermitian(d, rng).matrix
        for prior in basis:
            candidate = candidate - np.trace(prior @ candidate).real * prior
        norm = math.sqrt(np.trace(candidate @ candidate).real)
        if norm > 1e-6:
            basis.append(candidate / norm)
    return basis


def exact_decoupling(rng: np.random.Generator) -> CriterionResult:
    tol = _tolerances()["decoupling_residual"]
    rows, worst = [], 0.0
    while len(rows) < 200:
        frame = _random_rotation(rng)
        overlap = float(np.cross(frame[:, 0], frame[:, 1])[2])
        if abs(overlap) <= 1e-2:
            continue
        d = int(rng.integers(2, 4))
        b = np.sort(rng.uniform(0.1, 2.0, size=2))[::-1]
        B = _orthonormal_pair(d, rng)
        components = [sum(b[k] * frame[j, k] * B[k] for k in range(2)) for j in range(3)]
        omega = float(rng.uniform(0.5, 2.0))
        H = single_qubit(omega, [0.0, 1.0, 1.0, 1.0], [None, *components])
        direction = decoupling_direction(standard_form(H))
        H_eff = apply_map(projection_map(direction.r), H)
        residual = H_eff.noise_operator().max_norm()
        expected = omega * direction.r3 * np.kron(sigma_n(direction.r).matrix, np.eye(d))
        system_error = float(np.max(np.abs(H_eff.system_operator().matrix - expected)))
        r3_error = abs(direction.r3 - abs(overlap))
        worst = max(worst, residual, system_error, r3_error)
        rows.append({"index": len(rows), "r3": direction.r3, "residual_noise": residual, "system_error": system_error, "r3_error": r3_error})
    return CriterionResult(
        "exact_decoupling", worst <= tol, worst, tol,
        ["index", "r3", "residual_noise", "system_error", "r3_error"], rows,
    )


def trotter_convergence(rng: np.random.Generator) -> CriterionResult:
    window = _tolerances()["trotter_slope_window"]
    ms = [2**k for k in range(4, 11)]
    schedule = projection_schedule(Z_AXIS)
    rows, worst = [], 0.0
    for index in range(20):
        ops = [None] + [_random_hermitian(2, rng) * 0.5 for _ in range(3)]
        H = single_qubit(float(rng.uniform(0.5, 1.5)), [0.0, *rng.normal(0.0, 0.5, size=3)], ops)
        report = convergence_study(H, schedule, 1.0, ms, threads=1)
        slope = report.slope if report.slope is not None else 0.0
        deviation = abs(slope + 1.0)
        worst = max(worst, deviation)
        rows.append({"index": index, "slope": slope, "error_m16": report.points[0][1], "error_m1024": report.points[-1][1]})
    return CriterionResult("trotter_convergence", worst <= window, worst, window, ["index", "slope", "error_m16", "error_m1024"], rows)


def transverse_invariance(rng: np.random.Generator) -> CriterionResult:
    tol = _tolerances()["transverse_invariance"]
    rows, worst = [], 0.0
    for index in range(10):
        ops = [None, _random_hermitian(2, rng), _random_hermitian(2, rng), None]
        H = single_qubit(float(rng.uniform(0.5, 2.0)), [0.0, *rng.normal(size=2), 0.0], ops)
        H_eff = apply_map(projection_map(Z_AXIS), H)
        system_error = float(np.max(np.abs(H_eff.system_operator().matrix - H.system_operator().matrix)))
        residual = H_eff.noise_operator().max_norm()
        r3_error = abs(decoupling_direction(standard_form(H)).r3 - 1.0)
        worst = max(worst, system_error, residual, r3_error)
        rows.append({"index": index, "system_error": system_error, "residual_noise": residual, "r3_error": r3_error})
    return CriterionResult("transverse_invariance", worst <= tol, worst, tol, ["index", "system_error", "residual_noise", "r3_error"], rows)


def ghz_gaussian_constant(rng: np.random.Generator) -> CriterionResult:
    tol = _tolerances()["ghz_constant_rel"]
    rows, worst = [], 0.0
    for n in (1, 2, 4, 8):
        for sigma in (0.5, 1.0, 2.0):
            optimum = optimal_time(n, sigma)
            constant = optimum.rate * sigma / n
            deviation = abs(constant / 0.4289 - 1.0)
            worst = max(worst, deviation)
            rows.append({"N": n, "sigma": sigma, "t_opt": optimum.t_opt, "qfi_rate": optimum.rate, "constant": constant})
    return CriterionResult("ghz_gaussian_constant", worst <= tol, worst, tol, ["N", "sigma", "t_opt", "qfi_rate", "constant"], rows)


def parallel_bound_respected(rng: np.random.Generator) -> CriterionResult:
    tolerances = _tolerances()
    slack, window = tolerances["bound_slack"], tolerances["bound_ratio_window"]
    rows, excess, ratio_error = [], -math.inf, 0.0
    target = math.exp(-0.5) / math.sqrt(2.0)
    for n in range(1, 9):
        for sigma in (0.1, 0.5, 1.0, 2.0):
            bound = parallel_bound(n, NoiseDistribution.gaussian(0.0, sigma))
            for t in np.linspace(0.25, 5.0, 20) / (n * sigma):
                rate = qfi_ghz_gaussian(n, sigma, float(t)).qfi_per_time
                excess = max(excess, rate - bound)
                rows.append({"N": n, "sigma": sigma, "t": float(t), "qfi_rate": rate, "bound": bound})
            ratio_error = max(ratio_error, abs(optimal_time(n, sigma).rate / bound - target))
    passed = excess <= slack and ratio_error <= window
    return CriterionResult("parallel_bound", passed, max(excess, ratio_error), min(slack, window), ["N", "sigma", "t", "qfi_rate", "bound"], rows)


def super_sql_scaling(rng: np.random.Generator) -> CriterionResult:
    tolerances = _tolerances()
    sigma = 1.0
    fit = scaling_sweep([2, 4, 8, 16, 32, 64], ScalingScenario(LOCAL, sigma), threads=1)
    rows, rate_error = [], 0.0
    for n, rate in zip(fit.n_values, fit.rates):
        expected = n**1.5 * RATE_CONSTANT / sigma
        rate_error = max(rate_error, abs(rate / expected - 1.0))
        rows.append({"N": n, "qfi_rate": rate, "expected": expected})
    beta_error = abs(fit.beta - 1.5)
    passed = beta_error <= tolerances["super_sql_exponent_window"] and rate_error <= tolerances["super_sql_rate_rel"]
    return CriterionResult("super_sql_scaling", passed, max(beta_error, rate_error), tolerances["super_sql_rate_rel"], ["N", "qfi_rate", "expected"], rows)


def variance_reduction(rng: np.random.Generator) -> CriterionResult:
    limit = _tolerances()["variance_std_errors"]
    rows, worst = [], 0.0
    for n in (4, 16):
        estimate = fluctuation_monte_carlo(n, 1.0, 10_000, rng)
        worst = max(worst, abs(estimate.z_score))
        rows.append({"N": n, "empirical_std": estimate.empirical_std, "expected_std": estimate.expected_std, "standard_error": estimate.standard_error, "z_score": estimate.z_score})
    return CriterionResult("variance_reduction", worst <= limit, worst, limit, ["N", "empirical_std", "expected_std", "standard_error", "z_score"], rows)


def _parallel_hamiltonian(couplings: Sequence[float], ops: Sequence[DenseOperator]):
    rows = [[0.0, 0.0, 0.0, c] for c in couplings]
    return n_qubit_common(1.0, rows, [[None, None, None, op] for op in ops])


def antisymmetric_elimination(rng: np.random.Generator) -> CriterionResult:
    tolerances = _tolerances()
    A = _random_hermitian(2, rng)
    eliminated = symmetrize(_parallel_hamiltonian([1.0, -1.0], [A, A])).hamiltonian.noise_operator().max_norm()
    rows = [{"N": 2, "check": "antisymmetric", "error": eliminated}]
    oracle = 0.0
    for n in (2, 3, 4):
        H = _parallel_hamiltonian(rng.normal(size=n), [_random_hermitian(2, rng) for _ in range(n)])
        error = float(np.max(np.abs(symmetrize(H).hamiltonian.full_operator().matrix - permutation_average(H).matrix)))
        oracle = max(oracle, error)
        rows.append({"N": n, "check": "permutation_oracle", "error": error})
    passed = eliminated <= tolerances["antisymmetric_residual"] and oracle <= tolerances["permutation_oracle"]
    return CriterionResult("antisymmetric_elimination", passed, max(eliminated, oracle), tolerances["permutation_oracle"], ["N", "check", "error"], rows)


def correlated_noise_scheme(rng: np.random.Generator) -> CriterionResult:
    tol = _tolerances()["correlated_residual"]
    n, t = 6, 1.0
    scheme = correlated_scheme(n, 1)
    channel = scheme.to_map()
    rows, worst = [], 0.0
    for a in range(n - 1):
        label = "".join("Z" if b in (a, a + 1) else "I" for b in range(n))
        residual = channel.apply_operator(pauli_string(label)).max_norm()
        worst = max(worst, residual)
        rows.append({"term": label, "residual": residual})
    qfi = correlated_scheme_qfi(scheme, t).qfi
    expected = (n / 2) ** 2 * t**2
    qfi_error = abs(qfi - expected)
    alpha_error = abs(scheme.alpha - 0.5)
    rows.append({"term": "qfi", "residual": qfi_error})
    worst = max(worst, qfi_error, alpha_error)
    return CriterionResult("correlated_scheme", worst <= tol, worst, tol, ["term", "residual"], rows)


def revival(rng: np.random.Generator) -> CriterionResult:
    tol = _tolerances()["revival_coherence"]
    gap, coupling = 0.7, 1.3
    distribution = NoiseDistribution.equally_gapped(gap, 5, coupling)
    t = 2 * math.pi / (gap * coupling)
    rows, worst = [], 0.0
    for n in (1, 2, 3, 5):
        gamma = abs(ghz_coherence(ParallelNoiseChannel(n, distribution, t)))
        worst = max(worst, abs(gamma - 1.0))
        rows.append({"N": n, "t": t, "coherence": gamma})
    unbounded = classical_fisher(distribution) is Unbounded.UNBOUNDED
    return CriterionResult("revival", worst <= tol and unbounded, worst, tol, ["N", "t", "coherence"], rows)


def qfi_oracle(rng: np.random.Generator) -> CriterionResult:
    tol = _tolerances()["qfi_oracle_rel"]
    rows, worst = [], 0.0
    for index in range(50):
        n = int(rng.integers(1, 5))
        sigma = float(rng.uniform(0.2, 1.5))
        t = float(rng.uniform(0.2, 1.5)) / (n * sigma)
        rho = ghz_state(n)
        distribution = NoiseDistribution.gaussian(0.0, sigma)

        def family(theta: float) -> DenseOperator:
            return channel_output(ParallelNoiseChannel(n, distribution, t, omega=theta), rho)

        numeric = qfi_from_fidelity(family, 0.3)
        closed = qfi_ghz_gaussian(n, sigma, t).qfi
        error = abs(numeric / closed - 1.0)
        worst = max(worst, error)
        rows.append({"N": n, "sigma": sigma, "t": t, "fidelity_qfi": numeric, "closed_form_qfi": closed, "relative_error": error})
    return CriterionResult("qfi_oracle", worst <= tol, worst, tol, ["N", "sigma", "t", "fidelity_qfi", "closed_form_qfi", "relative_error"], rows)


CRITERIA: list[Callable[[np.random.Generator], CriterionResult]] = [
    standard_form_roundtrip,
    exact_decoupling,
    trotter_convergence,
    transverse_invariance,
    ghz_gaussian_constant,
    parallel_bound_respected,
    super_sql_scaling,
    variance_reduction,
    antisymmetric_elimination,
    correlated_noise_scheme,
    revival,
    qfi_oracle,
]
DETERMINISM = 13


def _generators(seed: int) -> list[np.random.Generator]:
    return [np.random.Generator(np.random.Philox(s)) for s in np.random.SeedSequence(seed).spawn(len(CRITERIA))]


def run_criteria(seed: int, selected: Optional[Sequence[int]] = None) -> list[tuple[int, CriterionResult]]:
    """Runs the numbered criteria 1..12; each gets its own stream spawned from ``seed``."""
    selected = [i for i in range(1, len(CRITERIA) + 1) if selected is None or i in selected]
    generators = _generators(seed)
    results = []
    for number in selected:
        started = time.perf_counter()
        result = CRITERIA[number - 1](generators[number - 1])
        result.seconds = time.perf_counter() - started
        verdict = "PASS" if result.passed else "FAIL"
        logger.info(f"[REPRODUCE] {number:2d} {result.key}: {verdict} (metric {result.metric:.3e}, {result.seconds:.2f} s)")
        results.append((number, result))
    return results


def determinism(seed: int, first: list[tuple[int, CriterionResult]]) -> CriterionResult:
    """Reruns the same criteria with the same seed and compares the rendered tables byte for byte."""
    second = run_criteria(seed, [number for number, _ in first])
    rows, mismatches = [], 0
    for (number, a), (_, b) in zip(first, second):
        same = render_table(a.rows, a.columns) == render_table(b.rows, b.columns)
        mismatches += 0 if same else 1
        rows.append({"criterion": number, "identical": same})
    return CriterionResult("determinism", mismatches == 0, float(mismatches), 0.0, ["criterion", "identical"], rows)
