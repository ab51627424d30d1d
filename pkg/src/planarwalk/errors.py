"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration value or malformed config file."""


class ContractViolationError(ValueError):
    """Caller violated an interface contract (wrong shapes, bad dimensions)."""


class SimulationDivergedError(RuntimeError):
    """Simulator state became non-finite; the episode must terminate."""


class CheckpointError(RuntimeError):
    """Checkpoint file is missing, corrupt, or incompatible."""
