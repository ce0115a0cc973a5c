"""Exception types shared across the engine."""


class ConfigurationError(ValueError):
    """Invalid construction parameters (dimension, cutoff, level, pad...)."""


class ShapeMismatchError(ValueError):
    """Array does not live on the expected basis / grid."""


class StateIntegrityError(ValueError):
    """A state invariant (divergence-free, Hermitian symmetry) is violated."""


class ResourceGuardError(RuntimeError):
    """Operation refused because the problem size exceeds its guard."""


class DivergenceError(RuntimeError):
    """Time integration produced a non-finite state.

    Carries the last finite time and the truncated trajectory so callers
    can record the event instead of losing the run.
    """

    def __init__(self, time, trajectory=None):
        super().__init__(f"state diverged (non-finite) after t={time:.6g}")
        self.time = time
        self.trajectory = trajectory


class SnapshotFormatError(RuntimeError):
    """Snapshot file rejected (bad magic, version, or truncated payload)."""


class ValidationError(ValueError):
    """Config validation failed; collects every error, not just the first."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
