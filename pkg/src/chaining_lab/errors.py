"""Exception hierarchy.

``InputError`` subclasses signal bad inputs (CLI exit code 1); everything else
deriving from ``ChainingLabError`` is a runtime failure (exit code 2).
"""


class ChainingLabError(Exception):
    pass


class InputError(ChainingLabError, ValueError):
    pass


# metric_core
class AsymmetricMatrix(InputError):
    pass


class NegativeDistance(InputError):
    pass


class NonzeroDiagonal(InputError):
    pass


class TriangleViolation(InputError):
    def __init__(self, triple, magnitude, relative):
        self.triple = tuple(int(v) for v in triple)
        self.magnitude = float(magnitude)
        self.relative = float(relative)
        i, j, k = self.triple
        super().__init__(
            f"triangle inequality violated: d[{i}][{k}] exceeds d[{i}][{j}] + d[{j}][{k}] "
            f"by {self.magnitude:.6g} (relative {self.relative:.3g})"
        )


class EmptySubset(InputError):
    pass


# chaining
class PointNotInGround(InputError):
    pass


class NotAdmissible(InputError):
    pass


class TooLarge(InputError):
    pass


class AlphaMismatch(InputError):
    pass


class GroundMismatch(InputError):
    pass


class ConstructionBoundViolated(ChainingLabError):
    """The merged sequence exceeded its own construction bound: an implementation bug."""


# orlicz
class NonFiniteSample(InputError):
    pass


class NegativeSample(InputError):
    pass


class DimensionMismatch(InputError):
    pass


# empirical_process / covariance_app
class OracleMissing(InputError):
    pass


class ConfigInvalid(InputError):
    def __init__(self, message, path=()):
        self.path = tuple(path)
        where = "/".join(str(p) for p in self.path)
        super().__init__(f"{where}: {message}" if where else message)


class InsufficientReplications(InputError):
    pass


class DegenerateGrid(InputError):
    pass


class NotSymmetricClass(InputError):
    pass


class EmptyBatch(InputError):
    pass
