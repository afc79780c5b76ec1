"""Exception types raised by the vrrw package.

Every error a caller can trigger with bad input derives from ``VRRWError``
(itself a ``ValueError``), so the CLI can map them to exit code 2 in one place.
"""


class VRRWError(ValueError):
    """Base class for invalid-input errors."""


class InternalError(RuntimeError):
    """An internal consistency check failed (numerical drift, not bad input)."""


# linalg
class NonSymmetric(VRRWError):
    pass


class NoConvergence(InternalError):
    pass


class Singular(VRRWError):
    pass


class EmptySupport(VRRWError):
    pass


# model
class Asymmetric(VRRWError):
    def __init__(self, i, j, gap):
        self.index = (i, j)
        super().__init__(f"R[{i},{j}] != R[{j},{i}] (difference {gap:.3g})")


class NegativeEntry(VRRWError):
    def __init__(self, i, j, value):
        self.index = (i, j)
        super().__init__(f"R[{i},{j}] = {value!r} is negative")


class ZeroColumn(VRRWError):
    def __init__(self, j):
        self.index = j
        super().__init__(f"column {j} of R sums to zero")


class NotOnSimplex(VRRWError):
    pass


class ZeroH(VRRWError):
    pass


class UndefinedRow(VRRWError):
    def __init__(self, i):
        self.index = i
        super().__init__(f"row {i} of M(v) is undefined: N_{i}(v) = 0")


class EmptyFace(VRRWError):
    pass


# walk
class EmptyList(VRRWError):
    pass


# analysis
class NotInterior(VRRWError):
    pass


class NotSymmetricSet(VRRWError):
    pass


class NotGenerating(VRRWError):
    pass


class SpectralMismatch(InternalError):
    """The two independent interior-stability tests disagreed."""


# flow
class StepRejected(VRRWError):
    pass


class NonMonotone(InternalError):
    pass
