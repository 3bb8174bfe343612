"""Scenario files: JSON parsing with located diagnostics and construction of library objects."""

import json
import logging
import math

from pathlib import Path
from typing import Optional, Union

import numpy as np

from pydantic import ValidationError

from ..decoupling import (
    CorrelatedScheme,
    PulseSchedule,
    UnitalMap,
    correlated_scheme,
    local_projection_map,
    local_projection_schedule,
    schedule_to_map,
)
from ..dynamics import NoiseDistribution
from ..entities import MatrixSpec, NoiseSpec, Scenario, ScheduleSpec
from ..hamiltonian import SEHamiltonian, env_preset
from ..operators import DenseOperator, HilbertSpace, UnitVector3, pauli_string
from ..utils import MissingScenarioField, ScenarioParseError

logger = logging.getLogger(__name__)


def _read_json(path: Path) -> dict:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ScenarioParseError(f"{path}: {e.strerror}") from e
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioParseError(f"{path}: line {e.lineno}, column {e.colno}: {e.msg}") from e


def _describe(error: ValidationError) -> str:
    return "; ".join(
        f"{'.'.join(str(part) for part in item['loc']) or '<root>'}: {item['msg']}"
        for item in error.errors()
    )


def load_scenario(path: Union[str, Path]) -> Scenario:
    path = Path(path)
    data = _read_json(path)
    try:
        scenario = Scenario.model_validate(data)
    except ValidationError as e:
        raise ScenarioParseError(f"{path}: {_describe(e)}") from e
    schedule = scenario.strategy.schedule
    if schedule is not None and schedule.file is not None:
        schedule_path = (path.parent / schedule.file).resolve()
        try:
            loaded = ScheduleSpec.model_validate(_read_json(schedule_path))
        except ValidationError as e:
            raise ScenarioParseError(f"{schedule_path}: {_describe(e)}") from e
        scenario.strategy.schedule = loaded
    logger.info(f"[SCENARIO] Loaded '{scenario.name}' from {path}")
    return scenario


def _matrix(spec: MatrixSpec) -> np.ndarray:
    re = np.asarray(spec.re, dtype=float)
    im = np.zeros_like(re) if spec.im is None else np.asarray(spec.im, dtype=float)
    if re.shape != im.shape or re.ndim != 2 or re.shape[0] != re.shape[1]:
        raise ScenarioParseError(f"matrix of shape {re.shape} is not square or re/im shapes differ")
    return re + 1j * im


def build_hamiltonian(scenario: Scenario) -> SEHamiltonian:
    dims = tuple(scenario.env.dims)
    rows = []
    for index, term in enumerate(scenario.terms):
        if term.env_site is not None and term.env_site >= len(dims):
            raise ScenarioParseError(f"terms.{index}.env_site: no environment factor {term.env_site}")
        dim = math.prod(dims) if term.env_site is None else dims[term.env_site]
        op = env_preset(term.env_op, dim) if isinstance(term.env_op, str) else _matrix(term.env_op)
        rows.append((term.c, term.paulis.upper(), op, term.env_site))
    return SEHamiltonian.from_terms(scenario.omega, scenario.sites, scenario.env.model, dims, rows)


def _gate(spec: Union[str, MatrixSpec], n_sites: int) -> DenseOperator:
    if isinstance(spec, str):
        if len(spec) != n_sites:
            raise ScenarioParseError(f"gate label {spec!r} does not cover {n_sites} sites")
        return pauli_string(spec)
    return DenseOperator(HilbertSpace.qubits(n_sites), _matrix(spec))


def _direction(scenario: Scenario, command: str) -> UnitVector3:
    if scenario.strategy.r is None:
        raise MissingScenarioField("strategy.r", command)
    return UnitVector3.normalized(scenario.strategy.r)


def build_schedule(scenario: Scenario, command: str) -> PulseSchedule:
    """Pulse cycle of a ``schedule`` strategy, or the two-pulse cycle of a ``projection``."""
    strategy = scenario.strategy
    if strategy.kind == "projection":
        return local_projection_schedule(_direction(scenario, command), scenario.sites)
    if strategy.kind != "schedule" or strategy.schedule is None:
        raise MissingScenarioField("strategy.schedule", command)
    spec = strategy.schedule
    gates = [_gate(g, scenario.sites) for g in spec.gates]
    fractions = spec.fractions or [1.0] * len(gates)
    return PulseSchedule.from_fractions(gates, fractions)


def build_strategy_map(scenario: Scenario, command: str) -> Optional[UnitalMap]:
    strategy = scenario.strategy
    if strategy.kind == "projection":
        return local_projection_map(_direction(scenario, command), scenario.sites)
    if strategy.kind == "schedule":
        return schedule_to_map(build_schedule(scenario, command))
    if strategy.kind == "correlated":
        return build_correlated_scheme(scenario, command).to_map()
    return None


def build_correlated_scheme(scenario: Scenario, command: str) -> CorrelatedScheme:
    if scenario.strategy.k is None:
        raise MissingScenarioField("strategy.k", command)
    return correlated_scheme(scenario.sites, scenario.strategy.k)


def build_distribution(noise: Optional[NoiseSpec], command: str, sigma: Optional[float] = None) -> NoiseDistribution:
    """The noise distribution, with ``sigma`` replacing the width of a Gaussian when given."""
    if noise is None:
        raise MissingScenarioField("noise", command)
    if noise.kind == "gaussian":
        return NoiseDistribution.gaussian(noise.mean, noise.sigma if sigma is None else sigma)
    if noise.kind == "discrete":
        return NoiseDistribution.discrete(noise.points, noise.weights)
    if noise.kind == "tabulated":
        return NoiseDistribution.tabulated(noise.grid, noise.density)
    return NoiseDistribution.equally_gapped(
        noise.gap, noise.levels, noise.coupling, noise.weights, noise.offset
    )
