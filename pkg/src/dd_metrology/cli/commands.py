"""The analysis commands. Each one reads a scenario and writes its tables to an OutputSink."""

import logging
import math

from concurrent.futures import ThreadPoolExecutor
from typing import Optional

import numpy as np

from ..config import EngineConfig
from ..decoupling import (
    apply_map,
    decoupling_direction,
    feasibility,
    optimize_direction,
    symmetrize,
)
from ..dynamics import DISCRETE, GAUSSIAN, NoiseDistribution, convergence_study
from ..entities import Scenario
from ..hamiltonian import SEHamiltonian, noise_rank, standard_form
from ..metrology import (
    COLLECTIVE,
    LOCAL,
    NOISELESS,
    ScalingScenario,
    Unbounded,
    fluctuation_monte_carlo,
    optimal_time,
    parallel_bound,
    qfi_ghz,
    scaling_sweep,
)
from ..utils import DecouplingInfeasible, MissingScenarioField, RankTooHigh
from .output import OutputSink
from .scenario import (
    build_correlated_scheme,
    build_distribution,
    build_hamiltonian,
    build_schedule,
    build_strategy_map,
)

logger = logging.getLogger(__name__)

DEFAULT_MS = [2**k for k in range(4, 11)]
DEFAULT_N = [1, 2, 4, 8]

ANALYZE_COLUMNS = [
    "site", "b1", "b2", "b3",
    "n1_x", "n1_y", "n1_z", "n2_x", "n2_y", "n2_z", "n3_x", "n3_y", "n3_z",
    "rank", "feasible", "slowdown", "r_x", "r_y", "r_z", "r3", "merit", "verdict",
]


def _threads() -> int:
    return EngineConfig.get_or_create_instance().threads


def _signal_fraction(H: SEHamiltonian) -> float:
    """Overlap of the signal generator with S3, normalized so S3 itself gives 1."""
    n = H.n_sites
    weights = dict(H.signal)
    total = sum(weights.get("".join("Z" if a == b else "I" for a in range(n)), 0.0) for b in range(n))
    return total / n


def analyze_site(H: SEHamiltonian, site: int, noise_variances) -> dict:
    sf = standard_form(H, site)
    rank = noise_rank(sf).rank
    row = {"site": site, "rank": rank}
    row.update({f"b{k + 1}": sf.b[k] for k in range(3)})
    for k, n in enumerate(sf.frame):
        row.update({f"n{k + 1}_{axis}": c for axis, c in zip("xyz", n.components)})
    report = feasibility(H, site)
    row["feasible"] = report.feasible
    row["slowdown"] = report.slowdown if report.slowdown is not None else 0.0
    row["merit"] = Unbounded.UNBOUNDED
    try:
        direction = decoupling_direction(sf)
        r, r3 = direction.r, direction.r3
        row["verdict"] = "decouple"
    except RankTooHigh:
        optimum = optimize_direction(sf, noise_variances, threads=_threads())
        r, r3 = optimum.r, optimum.r.components[2]
        row["merit"] = optimum.merit if not optimum.unbounded else Unbounded.UNBOUNDED
        row["verdict"] = "reduce to parallel noise"
    except DecouplingInfeasible:
        r, r3 = None, 0.0
        row["verdict"] = "infeasible"
    components = r.components if r is not None else (0.0, 0.0, 0.0)
    row.update({f"r_{axis}": c for axis, c in zip("xyz", components)})
    row["r3"] = r3
    logger.info(f"[CLI: analyze] Site {site}: rank {rank}, verdict '{row['verdict']}'")
    return row


def cmd_analyze(scenario: Scenario, sink: OutputSink):
    H = build_hamiltonian(scenario)
    rows = [analyze_site(H, site, scenario.noise_variances) for site in range(H.n_sites)]
    sink.table("analyze", rows, ANALYZE_COLUMNS)

    kind = scenario.strategy.kind
    if kind == "none":
        return
    columns = ["strategy", "residual_noise", "signal_fraction"]
    if kind == "symmetrize":
        result = symmetrize(H)
        H_eff = result.hamiltonian
        summary = {"c_bar": result.c_bar, "swaps_per_permutation": result.swaps_per_permutation}
        columns += list(summary)
        if result.A_bar is not None:
            sink.json("a_bar", result.A_bar.to_dict())
    else:
        H_eff = apply_map(build_strategy_map(scenario, "analyze"), H)
        summary = {}
        if kind == "correlated":
            sink.json("scheme", build_correlated_scheme(scenario, "analyze").to_dict())
            summary["alpha"] = _signal_fraction(H_eff)
            columns.append("alpha")
    row = {
        "strategy": kind,
        "residual_noise": H_eff.noise_operator().max_norm(),
        "signal_fraction": _signal_fraction(H_eff),
        **summary,
    }
    sink.table("strategy", [row], columns)


def cmd_evolve(scenario: Scenario, sink: OutputSink):
    H = build_hamiltonian(scenario)
    schedule = build_schedule(scenario, "evolve")
    ms = scenario.sweep.m or DEFAULT_MS
    report = convergence_study(H, schedule, scenario.evolution_time, ms, threads=_threads())
    # zero error at every m leaves nothing to fit: convergence is exact
    order = Unbounded.UNBOUNDED if report.fitted_order is None else report.fitted_order
    rows = [{"m": m, "error": error, "fitted_order": order} for m, error in report.points]
    sink.table("convergence", rows, ["m", "error", "fitted_order"])


def _gaussian_row(n: int, sigma: float, model: str) -> dict:
    # symmetrized local fluctuations leave a shared coupling of width sigma / sqrt(N)
    width = sigma / math.sqrt(n) if model == LOCAL else sigma
    optimum = optimal_time(n, width)
    bound = parallel_bound(n, NoiseDistribution.gaussian(0.0, width))
    if isinstance(optimum.rate, Unbounded) or isinstance(bound, Unbounded):
        ratio = Unbounded.UNBOUNDED
    else:
        ratio = optimum.rate / bound
    return {
        "N": n,
        "sigma": sigma,
        "t_opt": optimum.t_opt,
        "qfi_rate": optimum.rate,
        "bound": bound,
        "ratio": ratio,
    }


def _time_grid(scenario: Scenario, n: int, width: float) -> list[float]:
    if scenario.sweep.t:
        return list(scenario.sweep.t)
    scale = 1.0 / (n * width) if width > 0 else scenario.evolution_time
    return list(np.linspace(scale / 50, 5 * scale, 250))


def _general_row(scenario: Scenario, n: int) -> dict:
    distribution = build_distribution(scenario.noise, "qfi")
    times = _time_grid(scenario, n, math.sqrt(distribution.variance()))
    rates = [qfi_ghz(n, distribution, t).qfi_per_time for t in times]
    best = int(np.argmax(rates))
    bound = parallel_bound(n, distribution)
    row = {
        "N": n,
        "sigma": math.sqrt(distribution.variance()),
        "t_opt": times[best],
        "qfi_rate": rates[best],
        "bound": bound,
        "ratio": rates[best] / bound if not isinstance(bound, Unbounded) else Unbounded.UNBOUNDED,
    }
    if scenario.noise.kind == "equally_gapped":
        revival = 2 * math.pi / (scenario.noise.gap * scenario.noise.coupling)
        row["revival_t"] = revival
        row["revival_coherence"] = abs(distribution.characteristic(n * revival))
    return row


def cmd_qfi(scenario: Scenario, sink: OutputSink, seed: Optional[int] = None):
    noise = scenario.noise
    distribution = build_distribution(noise, "qfi")
    n_values = scenario.sweep.N or DEFAULT_N
    columns = ["N", "sigma", "t_opt", "qfi_rate", "bound", "ratio"]
    if distribution.kind == GAUSSIAN:
        sigmas = scenario.sweep.sigma or [noise.sigma]
        grid = [(n, s) for s in sigmas for n in n_values]
        with ThreadPoolExecutor(max_workers=_threads()) as pool:
            rows = list(pool.map(lambda point: _gaussian_row(*point, noise.model), grid))
    else:
        with ThreadPoolExecutor(max_workers=_threads()) as pool:
            rows = list(pool.map(lambda n: _general_row(scenario, n), n_values))
        if noise.kind == "equally_gapped":
            columns += ["revival_t", "revival_coherence"]
        if distribution.kind == DISCRETE:
            logger.info("[CLI: qfi] Discrete spectrum: the parallel-noise bound is trivial")
    sink.table("qfi", rows, columns)

    if "monte_carlo" in scenario.outputs:
        if seed is None:
            raise MissingScenarioField("seed", "qfi")
        rng = np.random.Generator(np.random.Philox(seed))
        sigma = noise.sigma if noise.sigma is not None else math.sqrt(distribution.variance())
        estimates = [fluctuation_monte_carlo(n, sigma, 10_000, rng) for n in n_values]
        sink.table(
            "monte_carlo",
            [
                {
                    "N": e.n_qubits,
                    "draws": e.draws,
                    "empirical_std": e.empirical_std,
                    "expected_std": e.expected_std,
                    "standard_error": e.standard_error,
                    "z_score": e.z_score,
                }
                for e in estimates
            ],
            ["N", "draws", "empirical_std", "expected_std", "standard_error", "z_score"],
        )


def cmd_sweep(scenario: Scenario, sink: OutputSink):
    n_values = scenario.sweep.N
    if not n_values:
        raise MissingScenarioField("sweep.N", "sweep")
    noise = scenario.noise
    t = scenario.sweep.t[0] if scenario.sweep.t else scenario.evolution_time
    if noise is None:
        kind, sigma = NOISELESS, 0.0
    elif noise.kind != GAUSSIAN:
        raise MissingScenarioField("noise.sigma (gaussian noise)", "sweep")
    else:
        kind, sigma = (LOCAL if noise.model == LOCAL else COLLECTIVE), noise.sigma
    fit = scaling_sweep(n_values, ScalingScenario(kind, sigma, t), threads=_threads())
    sink.json("scaling", fit.to_dict())
    sink.table(
        "sweep",
        [{"N": n, "qfi_rate": rate} for n, rate in zip(fit.n_values, fit.rates)],
        ["N", "qfi_rate"],
    )
