"""Exception hierarchy for isopar."""


class IsoparError(Exception):
    """Base class for all errors raised by isopar."""


class DimensionError(IsoparError, ValueError):
    """A point, vector or frame has the wrong shape for the requested operation."""


class NotOnLatticeError(IsoparError, ValueError):
    """A point expected in the lattice set (integer leaf coordinates) is not."""


class NotOnLeafError(IsoparError, ValueError):
    """A point does not lie on the requested leaf."""


class NotOrthonormalError(IsoparError, ValueError):
    """A frame fails the g-orthonormality test."""


class NumericalError(IsoparError, ArithmeticError):
    """An integration produced non-finite values or otherwise broke down."""


class NonFiniteStateError(NumericalError):
    pass


class RiccatiBlowUp(NumericalError):
    """The shape operator norm exceeded the configured cap.

    ``r`` is the distance at which the cap was hit and ``curve`` holds the
    samples accepted before that.
    """

    def __init__(self, r, cap, curve=None):
        super().__init__(f"shape operator norm exceeded {cap:g} at r={r:.6g}")
        self.r = r
        self.cap = cap
        self.curve = curve


class StencilDegenerateError(NumericalError):
    """Finite-difference tangent vectors are (numerically) linearly dependent."""
