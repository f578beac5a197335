"""Closed-form machinery for the second-species profile on a thin annulus.

When the first species is fully concentrated inside radius psi, its potential
on the annulus [psi, 1] is an exact logarithm and the second species obeys a
single radial ODE there,

    (1/r) (r v_r)_r + r^(-beta_m / 2 pi) e^(-gamma v) = 0,   v_r(1) = -m2/2pi.

In the log variable t = -ln r the equation becomes autonomous after a linear
shift, carries a conserved energy, and has an explicit solution that blows
down at t = ln(1/psi).  This module builds that solution, matches its energy
to the wall slope, integrates the original equation directly as an
independent route, and evaluates the Dirichlet-growth ratio

    integral_{sqrt(psi)}^1 r v_r^2 dr / ln(1/sqrt(psi))  ->  (m2/2pi)^2

whose limit the rest of the package uses as an oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .errors import (
    AtBlowdown,
    GammaZero,
    HypothesisViolated,
    MonotonicityLost,
    NegativeConstant,
    NonpositiveMass,
    NoRoot,
    TooCoarse,
)

__all__ = [
    "AnnulusParams",
    "AnnulusSolution",
    "asymptotic_ratio",
    "exact_solution",
    "integrate_annulus",
    "linear_surrogate",
    "match_energy",
]

TWO_PI = 2.0 * math.pi

PSI_FLOOR = 1e-12
"""Smallest supported inner radius; below it ln(1/psi) roundoff dominates."""

_MATCH_TOL = 1e-12
_MONO_SLACK = 1e-12


@dataclass(frozen=True)
class AnnulusParams:
    """Inputs of the annulus problem.

    gamma   self-repulsion of the profile species, > 0
    beta_m  product of the cross-coupling and the concentrated mass
    m2      total mass of the profile species, > 0
    psi     inner radius of the annulus, in [PSI_FLOOR, 1)

    Construction enforces the standing hypothesis
    (beta_m - gamma*m2)/2pi - 2 > 0 under which the profile is monotone
    away from the inner edge.
    """

    gamma: float
    beta_m: float
    m2: float
    psi: float

    def __post_init__(self) -> None:
        if not np.isfinite(self.gamma) or self.gamma < 0:
            raise NegativeConstant(f"gamma = {self.gamma!r} must be finite and >= 0")
        if self.gamma == 0.0:
            raise GammaZero(
                "the annulus reduction needs gamma > 0; "
                "use linear_surrogate for the gamma = 0 run"
            )
        if not np.isfinite(self.m2) or self.m2 <= 0:
            raise NonpositiveMass(f"m2 = {self.m2!r} must be > 0")
        if not np.isfinite(self.beta_m):
            raise ValueError(f"beta_m = {self.beta_m!r} must be finite")
        if not (PSI_FLOOR <= self.psi < 1.0):
            raise ValueError(f"psi = {self.psi!r} must lie in [{PSI_FLOOR:g}, 1)")
        if (self.beta_m - self.gamma * self.m2) / TWO_PI - 2.0 <= 0.0:
            raise HypothesisViolated(
                f"(beta_m - gamma*m2)/2pi - 2 = "
                f"{(self.beta_m - self.gamma * self.m2) / TWO_PI - 2.0:g} <= 0"
            )

    @property
    def log_width(self) -> float:
        """ln(1/psi), the annulus width in the log variable."""
        return -math.log(self.psi)

    @property
    def slope_limit(self) -> float:
        """gamma^-1 [(beta_m - gamma m2)/2pi - 2], the psi -> 0 slope."""
        return ((self.beta_m - self.gamma * self.m2) / TWO_PI - 2.0) / self.gamma


@dataclass(frozen=True, eq=False)
class AnnulusSolution:
    """Profile returned by the direct integration.

    r            nodes ascending in [psi, 1]; the innermost node sits one
                 mesh cell above psi because the profile diverges
                 logarithmically at the blow-down radius itself
    v            profile values at r
    rv_r         r * v_r at the nodes (the mass coordinate, times -2pi)
    energy       matched conserved energy (nan for the gamma = 0 surrogate)
    energy_drift max energy defect along the trajectory over the outer
                 window r >= sqrt(psi) (nan for the surrogate)
    params       the inputs, None for the surrogate
    """

    r: np.ndarray
    v: np.ndarray
    rv_r: np.ndarray
    energy: float
    energy_drift: float
    params: AnnulusParams | None = None


def exact_solution(e: float, gamma: float, psi: float, t) -> np.ndarray | float:
    """Closed-form shifted profile at log-times t.

    Returns vbar(t) = -ln(4 e gamma)/gamma - sqrt(2e) (t + ln psi)
    + (2/gamma) ln(1 - exp(sqrt(2e) gamma (t + ln psi))), the solution of
    vbar_tt + exp(-gamma vbar) = 0 with conserved energy
    |vbar_t|^2 / 2 - exp(-gamma vbar)/gamma = e that blows down at
    t = ln(1/psi).

    Parameters
    ----------
    e : conserved energy, > 0.
    gamma : repulsion constant, > 0.
    psi : inner radius, in (0, 1).
    t : scalar or array of log-times, each strictly below ln(1/psi).

    Raises
    ------
    AtBlowdown
        If any t reaches ln(1/psi), where the profile is -infinity.
    ValueError
        For out-of-range e, gamma or psi.
    """
    if not (np.isfinite(e) and e > 0):
        raise ValueError(f"energy e = {e!r} must be finite and > 0")
    if not (np.isfinite(gamma) and gamma > 0):
        raise ValueError(f"gamma = {gamma!r} must be finite and > 0")
    if not (0.0 < psi < 1.0):
        raise ValueError(f"psi = {psi!r} must lie in (0, 1)")
    t_arr = np.asarray(t, dtype=float)
    width = -math.log(psi)
    if np.any(t_arr >= width):
        raise AtBlowdown(f"t >= ln(1/psi) = {width:g}; the profile blows down there")
    s = math.sqrt(2.0 * e)
    x = t_arr - width
    out = (
        -math.log(4.0 * e * gamma) / gamma
        - s * x
        + (2.0 / gamma) * np.log(-np.expm1(s * gamma * x))
    )
    return out if out.ndim else float(out)


def match_energy(lp: AnnulusParams) -> float:
    """Energy of the blow-down profile matching the wall slope.

    Bisects sqrt(2e) coth(sqrt(e/2) gamma ln(1/psi)) = slope_limit on
    e in (0, 2 slope_limit^2]; the left side is strictly increasing, so the
    root is unique whenever it exists.  Raises NoRoot when slope_limit is
    at or below the e -> 0 limit 2/(gamma ln(1/psi)), which happens for psi
    too close to 1.
    """
    r_target = lp.slope_limit
    width = lp.log_width

    def relation(e: float) -> float:
        s = math.sqrt(2.0 * e)
        return s / math.tanh(0.5 * s * lp.gamma * width) - r_target

    hi = 2.0 * r_target * r_target
    if r_target <= 2.0 / (lp.gamma * width) or relation(hi) < 0.0:
        raise NoRoot(
            f"no energy matches slope {r_target:g} at psi = {lp.psi:g}; "
            "the annulus is too thin"
        )
    lo = 0.0
    for _ in range(500):
        mid = 0.5 * (lo + hi)
        gap = relation(mid)
        if abs(gap) <= _MATCH_TOL:
            return mid
        if gap < 0.0:
            lo = mid
        else:
            hi = mid
    raise NoRoot(f"bisection stalled at |gap| = {abs(gap):g}")


def _rk4(b: float, gamma: float, v0: float, vt0: float, t: np.ndarray):
    """Classical RK4 for v_tt + exp((b-2) t - gamma v) = 0 on the given nodes."""

    def rhs(tau, y):
        return np.array([y[1], -math.exp((b - 2.0) * tau - gamma * y[0])])

    n = t.size
    vhat = np.empty(n)
    vt = np.empty(n)
    y = np.array([v0, vt0])
    vhat[0], vt[0] = y
    for j in range(1, n):
        tau = t[j - 1]
        dt = t[j] - tau
        k1 = rhs(tau, y)
        k2 = rhs(tau + 0.5 * dt, y + (0.5 * dt) * k1)
        k3 = rhs(tau + 0.5 * dt, y + (0.5 * dt) * k2)
        k4 = rhs(tau + dt, y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        vhat[j], vt[j] = y
    return vhat, vt


def _check_monotone(t: np.ndarray, vt: np.ndarray, width: float, label: str) -> None:
    window = t <= 0.5 * width
    if np.any(vt[window] < -_MONO_SLACK):
        where = t[window][np.argmin(vt[window])]
        raise MonotonicityLost(
            f"{label}: v_r > 0 at r = {math.exp(-where):.3e} "
            "inside the outer window [sqrt(psi), 1]"
        )


def integrate_annulus(lp: AnnulusParams, n: int = 4096) -> AnnulusSolution:
    """Direct integration of the annulus ODE, inward from the wall.

    Matches the energy, reconstructs the wall data from the closed form,
    and runs fourth-order steps in t = -ln r on a uniform log grid of n
    nodes covering [0, ln(1/psi)) one cell short of the blow-down.  The
    profile slope is checked a posteriori on the outer window
    r >= sqrt(psi), where the monotone regime lives; the matched solution
    necessarily turns around within O(psi) of the inner edge, so a full
    interval check would reject the exact profile itself.

    Raises TooCoarse for n < 1000 and MonotonicityLost when the slope
    check fails.
    """
    if n < 1000:
        raise TooCoarse(f"n = {n} < 1000")
    e = match_energy(lp)
    width = lp.log_width
    b = lp.beta_m / TWO_PI
    t = np.arange(n) * (width / n)
    vhat, vt = _rk4(b, lp.gamma, exact_solution(e, lp.gamma, lp.psi, 0.0),
                    lp.m2 / TWO_PI, t)
    _check_monotone(t, vt, width, "integrate_annulus")

    shift = (b - 2.0) / lp.gamma
    vbar = vhat - shift * t
    vbar_t = vt - shift
    traj_e = 0.5 * vbar_t**2 - np.exp(-lp.gamma * vbar) / lp.gamma
    drift = float(np.max(np.abs(traj_e[t <= 0.5 * width] - e)))

    order = slice(None, None, -1)
    return AnnulusSolution(
        r=np.exp(-t)[order],
        v=vhat[order],
        rv_r=-vt[order],
        energy=e,
        energy_drift=drift,
        params=lp,
    )


def linear_surrogate(beta_m: float, m2: float, psi: float, n: int = 4096) -> AnnulusSolution:
    """The gamma = 0 run: same equation with the saturation switched off.

    Kept as a negative control; without the e^(-gamma v) damping the
    profile's turnaround radius is O(1) rather than O(psi), so for small
    psi the slope check fails inside the outer window and the run raises
    MonotonicityLost.
    """
    if not np.isfinite(m2) or m2 <= 0:
        raise NonpositiveMass(f"m2 = {m2!r} must be > 0")
    if beta_m / TWO_PI - 2.0 <= 0.0:
        raise HypothesisViolated(f"beta_m = {beta_m!r} must exceed 4 pi")
    if not (PSI_FLOOR <= psi < 1.0):
        raise ValueError(f"psi = {psi!r} must lie in [{PSI_FLOOR:g}, 1)")
    if n < 1000:
        raise TooCoarse(f"n = {n} < 1000")
    width = -math.log(psi)
    t = np.arange(n) * (width / n)
    vhat, vt = _rk4(beta_m / TWO_PI, 0.0, 0.0, m2 / TWO_PI, t)
    _check_monotone(t, vt, width, "linear_surrogate")
    order = slice(None, None, -1)
    return AnnulusSolution(
        r=np.exp(-t)[order],
        v=vhat[order],
        rv_r=-vt[order],
        energy=math.nan,
        energy_drift=math.nan,
        params=None,
    )


def asymptotic_ratio(lp: AnnulusParams, n: int = 4096) -> float:
    """Dirichlet-growth ratio of the integrated profile.

    Returns integral_{sqrt(psi)}^1 r v_r^2 dr / ln(1/sqrt(psi)), which
    converges to (m2/2pi)^2 from below as psi -> 0.  n is rounded up to a
    multiple of four so the window edge lands on a node.
    """
    n = 4 * ((n + 3) // 4)
    sol = integrate_annulus(lp, n)
    # ascending-r index of the t = ln(1/psi)/2 node
    edge = (n - 1) - n // 2
    integrand = sol.rv_r[edge:][::-1] ** 2
    half_width = 0.5 * lp.log_width
    return float(simpson(integrand, dx=lp.log_width / n) / half_width)
