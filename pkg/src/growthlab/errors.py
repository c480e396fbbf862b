"""Shared exception types."""


class GrowthlabError(Exception):
    pass


class DimensionMismatch(GrowthlabError, ValueError):
    pass


class InfeasibleConstraint(GrowthlabError, ValueError):
    pass


class NonConvergence(GrowthlabError, RuntimeError):
    pass


class InvalidSpec(GrowthlabError, ValueError):
    pass


class UnsupportedSignalModel(GrowthlabError, ValueError):
    pass


class DensityFloorHit(GrowthlabError, RuntimeError):
    pass


class QuadratureUnderResolved(GrowthlabError, ValueError):
    pass


class NonNestedPartitions(GrowthlabError, ValueError):
    pass


class ConfigError(GrowthlabError, ValueError):
    pass


class ThresholdFailure(GrowthlabError, RuntimeError):
    pass
