class Constants:
    SYSTEM = "system"
    ENVIRONMENT = "environment"
    PAULI_LABELS = "IXYZ"
    UNBOUNDED_TOKEN = "unbounded"
    MISSING_TOKEN = "n/a"
    CONVENTION = "generator S3/2: GHZ phase exp(-iN(omega+lambda)t), noiseless QFI N^2 t^2"
    DEFAULT_CONFIG = "config/default.yaml"
    CONFIG_SCHEMA = "config-schema.yaml"
    LOG_CONFIG = "log-config.yaml"
