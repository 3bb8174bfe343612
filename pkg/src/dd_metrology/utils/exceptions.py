class InvalidConfiguration(Exception):
    def __init__(self, message: str):
        self.message = f"[DDM:001] Invalid engine configuration: {message}"
        super().__init__(self.message)


class DimensionCapExceeded(Exception):
    def __init__(self, dim: int, cap: int):
        self.message = (
            f"[DDM:002] Hilbert space dimension {dim} exceeds the configured cap {cap}"
        )
        super().__init__(self.message)


class DimensionMismatch(Exception):
    def __init__(self, message: str):
        self.message = f"[DDM:003] Dimension mismatch: {message}"
        super().__init__(self.message)


class NotHermitian(Exception):
    def __init__(self, deviation: float, what: str = "operator"):
        self.message = f"[DDM:004] {what} is not Hermitian (max|M - M^dag| = {deviation:.3e})"
        super().__init__(self.message)


class NotUnitary(Exception):
    def __init__(self, deviation: float, what: str = "operator"):
        self.message = f"[DDM:005] {what} is not unitary (max|U^dag U - I| = {deviation:.3e})"
        super().__init__(self.message)


class InvalidUnitVector(Exception):
    def __init__(self, norm: float):
        self.message = f"[DDM:006] Direction is not normalized (norm = {norm!r})"
        super().__init__(self.message)


class InvalidDensityMatrix(Exception):
    def __init__(self, message: str):
        self.message = f"[DDM:007] Invalid density matrix: {message}"
        super().__init__(self.message)


class InvalidFactorIndex(Exception):
    def __init__(self, index, n_factors: int):
        self.message = f"[DDM:008] Factor index {index!r} outside 0..{n_factors - 1}"
        super().__init__(self.message)


class InvalidPauliIndex(Exception):
    def __init__(self, index):
        self.message = f"[DDM:009] Pauli index must be one of 0, 1, 2, 3, got {index!r}"
        super().__init__(self.message)


class InvalidSchedule(Exception):
    def __init__(self, message: str):
        self.message = f"[DDM:010] Invalid pulse schedule: {message}"
        super().__init__(self.message)


class SpaceMismatch(Exception):
    def __init__(self, message: str):
        self.message = f"[DDM:011] Space mismatch: {message}"
        super().__init__(self.message)


class RankTooHigh(Exception):
    def __init__(self, b3: float, tol: float):
        self.message = (
            f"[DDM:012] Noise has rank 3 (b3 = {b3:.3e} > {tol:.1e}); "
            "it can only be reduced to parallel noise"
        )
        super().__init__(self.message)


class DecouplingInfeasible(Exception):
    def __init__(self, overlap: float):
        self.message = (
            f"[DDM:013] Decoupling would cancel the signal (|r.z| = {overlap:.3e}); "
            "the noise plane contains the signal axis"
        )
        super().__init__(self.message)


class MixedParallelDirections(Exception):
    def __init__(self, message: str):
        self.message = f"[DDM:014] Sites are not aligned to one parallel direction: {message}"
        super().__init__(self.message)


class InvalidSchemeRange(Exception):
    def __init__(self, k: int, n_sites: int):
        self.message = f"[DDM:015] Noise range k = {k} must be smaller than chain length {n_sites}"
        super().__init__(self.message)


class UnnormalizedDistribution(Exception):
    def __init__(self, total: float):
        self.message = f"[DDM:016] Noise distribution is not normalized (total weight {total!r})"
        super().__init__(self.message)


class UnsupportedDistributionOperation(Exception):
    def __init__(self, message: str):
        self.message = f"[DDM:017] Unsupported distribution operation: {message}"
        super().__init__(self.message)


class InsufficientSweepPoints(Exception):
    def __init__(self, count: int, required: int = 4):
        self.message = f"[DDM:018] Scaling fit needs at least {required} points, got {count}"
        super().__init__(self.message)


class ZeroFisherInformation(Exception):
    def __init__(self):
        self.message = "[DDM:019] Fisher information is zero; no finite precision estimate"
        super().__init__(self.message)


class ScenarioParseError(Exception):
    def __init__(self, message: str):
        self.message = f"[DDM:020] Unable to parse scenario. {message}"
        super().__init__(self.message)


class MissingScenarioField(Exception):
    def __init__(self, field: str, command: str):
        self.message = f"[DDM:021] Scenario field '{field}' is required by '{command}'"
        super().__init__(self.message)


class FidelityComputationError(Exception):
    def __init__(self, message: str):
        self.message = f"[DDM:022] Oops! {message}"
        super().__init__(self.message)
