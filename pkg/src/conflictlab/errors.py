"""Exception types shared across the package.

Validation problems subclass ValueError, runtime/iteration failures subclass
RuntimeError, so callers can catch broad categories without importing every
name.
"""


class NegativeConstant(ValueError):
    """A coupling constant (alpha, beta or gamma) is negative."""


class NonpositiveMass(ValueError):
    """m1 <= 0 or m2 < 0."""


class BadTheta(ValueError):
    """The conflict flag is not -1 or +1."""


class TooCoarse(ValueError):
    """Grid resolution below the supported minimum."""


class ZeroDensity(ValueError):
    """A density that must carry mass is identically zero."""


class NegativeDensity(ValueError):
    """A field that must be nonnegative has negative entries."""


class GridMismatch(ValueError):
    """Fields that must share a grid do not."""


class BadRadius(ValueError):
    """Radius outside (0, 1]."""


class Supercritical(ValueError):
    """Requested mass at or above the critical mass 8*pi/alpha."""


class GammaZero(ValueError):
    """minimize_w called with gamma = 0; the caller must handle that case."""


class AtBlowdown(ValueError):
    """Evaluation at or beyond the blow-down time t = ln(1/psi)."""


class HypothesisViolated(ValueError):
    """Standing hypothesis (beta_m - gamma*m2)/2pi - 2 > 0 fails."""


class TooFewPoints(ValueError):
    """Not enough scale points for a slope fit."""


class AsymmetricMatrix(ValueError):
    """Interaction matrix is not symmetric."""


class NoRealRoot(ValueError):
    """Quadratic for the strip mass has no real root."""


class UnsupportedRegime(ValueError):
    """Flow limit-combination (delta1, delta2, epsilon) is not one of the
    three supported limits (1,1,0), (1,0,0), (0,0,1)."""


class ParseError(ValueError):
    """Configuration text could not be parsed; message carries line/key."""


class UnknownKey(ParseError):
    """Configuration contains a key or section that is not recognized."""


class SolverDiverged(RuntimeError):
    """Fixed-point iteration failed to reach the residual tolerance."""


class Oscillation(SolverDiverged):
    """Residual non-monotone over many iterations at minimum damping."""


class NoRoot(RuntimeError):
    """Energy-matching bracket failure."""


class MonotonicityLost(RuntimeError):
    """v_r > 0 detected where the hypothesis regime requires v_r <= 0."""


class StepRejected(RuntimeError):
    """A flow step violated positivity or increased the energy monitor."""


class Stalled(RuntimeError):
    """Adaptive time step underflowed below 1e-14."""


class DegenerateQuadraticForm(Warning):
    """|beta^2 + alpha*gamma*theta| below threshold: the energy monitor for
    the potential flow is disabled, stepping proceeds."""
