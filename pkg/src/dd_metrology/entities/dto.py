from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator


class MatrixSpec(BaseModel):
    """Row-major real and imaginary parts of a square matrix."""

    model_config = ConfigDict(extra="forbid")

    re: list[list[float]]
    im: Optional[list[list[float]]] = None


class EnvSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    model: Literal["independent", "common"] = "independent"
    dims: list[int] = Field([2], min_length=1)

    @model_validator(mode="after")
    def check_dims(self):
        if any(d < 1 for d in self.dims):
            raise ValueError("environment dimensions must be positive")
        return self


class TermSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    c: float
    paulis: str = Field(pattern=r"^[IXYZixyz]+$")
    env_op: Union[str, MatrixSpec]
    env_site: Optional[int] = Field(None, ge=0)


class ScheduleSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    gates: Optional[list[Union[str, MatrixSpec]]] = None
    fractions: Optional[list[float]] = None
    file: Optional[str] = None

    @model_validator(mode="after")
    def check_source(self):
        if self.file is None and not self.gates:
            raise ValueError("a schedule needs either 'gates' or 'file'")
        if self.gates and self.fractions and len(self.fractions) != len(self.gates):
            raise ValueError("'fractions' must have one entry per gate")
        if self.fractions and any(f <= 0 for f in self.fractions):
            raise ValueError("'fractions' must be positive")
        return self


class StrategySpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["none", "projection", "schedule", "symmetrize", "correlated"] = "none"
    r: Optional[list[float]] = Field(None, min_length=3, max_length=3)
    schedule: Optional[ScheduleSpec] = None
    k: Optional[int] = Field(None, ge=0)


class NoiseSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["gaussian", "discrete", "tabulated", "equally_gapped"]
    model: Literal["collective", "local"] = "collective"
    mean: float = 0.0
    sigma: Optional[float] = Field(None, ge=0)
    points: Optional[list[float]] = None
    weights: Optional[list[float]] = None
    grid: Optional[list[float]] = None
    density: Optional[list[float]] = None
    gap: Optional[float] = Field(None, gt=0)
    levels: Optional[int] = Field(None, ge=1)
    coupling: float = 1.0
    offset: float = 0.0

    @model_validator(mode="after")
    def check_parameters(self):
        required = {
            "gaussian": ("sigma",),
            "discrete": ("points", "weights"),
            "tabulated": ("grid", "density"),
            "equally_gapped": ("gap", "levels"),
        }[self.kind]
        missing = [name for name in required if getattr(self, name) is None]
        if missing:
            raise ValueError(f"{self.kind} noise needs {', '.join(missing)}")
        return self


class SweepSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    N: Optional[list[int]] = Field(None, min_length=1)
    sigma: Optional[list[float]] = Field(None, min_length=1)
    t: Optional[list[float]] = Field(None, min_length=1)
    m: Optional[list[int]] = Field(None, min_length=1)


class Scenario(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str = "scenario"
    omega: float = 1.0
    sites: int = Field(1, ge=1)
    env: EnvSpec = EnvSpec()
    terms: list[TermSpec] = []
    strategy: StrategySpec = StrategySpec()
    noise: Optional[NoiseSpec] = None
    sweep: SweepSpec = SweepSpec()
    evolution_time: float = Field(1.0, gt=0)
    seed: Optional[int] = Field(None, ge=0, lt=2**64)
    outputs: list[str] = []
    noise_variances: list[float] = Field([1.0, 1.0, 1.0], min_length=3, max_length=3)

    @model_validator(mode="after")
    def check_consistency(self):
        for term in self.terms:
            if len(term.paulis) != self.sites:
                raise ValueError(f"Pauli label {term.paulis!r} does not cover {self.sites} sites")
        if "monte_carlo" in self.outputs and self.seed is None:
            raise ValueError("'seed' is required when 'monte_carlo' output is requested")
        return self


class RunManifest(BaseModel):
    version: str
    command: str
    scenario_sha256: Optional[str] = None
    seed: Optional[int] = None
    timestamp: str
    outputs: dict[str, str] = {}
