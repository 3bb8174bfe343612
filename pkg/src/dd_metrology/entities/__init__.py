from .dto import (
    EnvSpec,
    MatrixSpec,
    NoiseSpec,
    RunManifest,
    Scenario,
    ScheduleSpec,
    StrategySpec,
    SweepSpec,
    TermSpec,
)


__all__ = [
    "EnvSpec",
    "MatrixSpec",
    "NoiseSpec",
    "RunManifest",
    "Scenario",
    "ScheduleSpec",
    "StrategySpec",
    "SweepSpec",
    "TermSpec",
]
