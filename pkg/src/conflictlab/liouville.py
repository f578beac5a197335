"""Damped Picard solvers for the radial Liouville equation and system.

The single-species equation is ``laplacian(u) + m e^{alpha u}/Z = 0`` with
``Z`` the disk integral of ``e^{alpha u}`` and ``u = 0`` on the boundary.
The two-species system couples the exponents ``alpha u1 - beta u2`` and
``-gamma u2 - theta beta u1``.

All iterations are fixed points on potentials: form the normalized density
from the current potentials, invert the Laplacian, and mix with a damping
factor.  The damping adapts geometrically (growth on sustained residual
decrease, reduction on growth), and a dominant-mode extrapolation kicks in
once the undamped iteration is stable, which removes the critical slowing
near ``m = 8 pi / alpha``.  Residuals are measured in flux form: each
iterate carries the face fluxes that generated it, so the defect between
those fluxes and the face masses of the current density is the exact
finite-volume residual of the iterate, free of re-differencing noise.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .calculus import face_masses, inv_laplacian
from .errors import (
    GammaZero,
    NonpositiveMass,
    Oscillation,
    SolverDiverged,
    Supercritical,
)
from .model import RadialField, validate_params

logger = logging.getLogger(__name__)

_MIN_DAMPING = 1.0 / 64.0
_GROW_STREAK = 5
_GROW_FACTOR = 1.4
_BAD_LIMIT = 3
_OSCILLATION_WINDOW = 50
_ACCEL_COOLDOWN = 10


@dataclass(frozen=True)
class SolveOptions:
    """Iteration controls shared by all solvers in this module."""

    tol: float = 1e-10
    max_iter: int = 500
    damping: float = 0.5
    continuation_steps: int = 1

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if not 0 < self.damping <= 1:
            raise ValueError(f"damping must lie in (0, 1], got {self.damping}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be at least 1, got {self.max_iter}")
        if self.continuation_steps < 1:
            raise ValueError(
                f"continuation_steps must be at least 1, got {self.continuation_steps}"
            )


@dataclass(frozen=True, eq=False)
class Solution:
    """Converged pair of potentials with solver diagnostics.

    ``multipliers`` holds the normalization constants: the equation solved
    is ``laplacian(u_i) + lambda_i e^{g_i} = 0`` with
    ``lambda_i = m_i / integral(e^{g_i})``.
    """

    u1: RadialField
    u2: RadialField
    residual: float
    iterations: int
    multipliers: tuple[float, float]
    _flux1: np.ndarray | None = field(default=None, repr=False)
    _flux2: np.ndarray | None = field(default=None, repr=False)


class _DampingController:
    """Geometric damping adaptation driven by the residual history.

    Grows the damping after ``_GROW_STREAK`` consecutive decreases, halves
    it on a sharp increase or repeated stagnation, and raises Oscillation
    when the residual stays non-monotone for ``_OSCILLATION_WINDOW``
    iterations at the minimum damping.
    """

    def __init__(self, damping):
        self.d = damping
        self._streak = 0
        self._bad = 0
        self._stuck = 0
        self._best = math.inf
        self._prev = math.inf

    def update(self, res):
        if res < self._best:
            self._best = res
            self._stuck = 0
        elif self.d <= _MIN_DAMPING:
            self._stuck += 1
            if self._stuck >= _OSCILLATION_WINDOW:
                raise Oscillation(
                    f"no residual improvement over {_OSCILLATION_WINDOW} "
                    f"iterations at minimum damping (residual {res:.3e})"
                )
        if res < self._prev:
            self._streak += 1
            self._bad = 0
            if self._streak >= _GROW_STREAK:
                self.d = min(1.0, self.d * _GROW_FACTOR)
                self._streak = 0
        else:
            self._streak = 0
            self._bad += 1
            if res > 1.5 * self._prev or self._bad >= _BAD_LIMIT:
                self.d = max(_MIN_DAMPING, self.d * 0.5)
                self._bad = 0
        self._prev = res

    def poke(self):
        # an extrapolation jump invalidates the monotonicity history
        self._prev = math.inf
        self._streak = 0
        self._bad = 0


def _flux_defect(grid, delta_flux):
    """Sup-norm of the finite-volume defect given a face-flux difference."""
    n = grid.n
    div = np.empty(n)
    div[0] = delta_flux[0] / grid.volumes[0]
    div[1:] = (delta_flux[1:] - delta_flux[:-1]) / grid.volumes[1:n]
    return float(np.max(np.abs(div)))


def _normalized_density(grid, g, m):
    """Density m e^g / integral(e^g) and its multiplier, overflow-safe."""
    top = float(np.max(g))
    e = np.exp(g - top)
    z = float(np.dot(grid.weights, e))
    lam = m * math.exp(-top) / z
    return (m / z) * e, lam


def _picard_loop(grid, masses, exponents, state, opts, iter_budget):
    """Core damped fixed-point iteration shared by all solvers.

    ``exponents(us)`` maps the current tuple of potential arrays to the
    tuple of exponent arrays, one per species; species with zero mass are
    carried along at zero cost.  ``state`` is ``(us, cs)`` with ``cs`` the
    face fluxes that generated ``us``; mixing both with the same damping
    keeps them consistent, which is what makes the flux-form residual the
    exact finite-volume defect of the iterate.
    """
    us, cs = state
    ctrl = _DampingController(opts.damping)
    nsp = len(masses)
    du_prev = None
    cool = 0
    res = math.inf
    lams = [0.0] * nsp
    for it in range(iter_budget):
        new_us = []
        new_cs = []
        res = 0.0
        gs = exponents(us)
        for s in range(nsp):
            if masses[s] == 0.0:
                new_us.append(np.zeros_like(us[s]))
                new_cs.append(np.zeros(grid.n))
                lams[s] = 0.0
                res = max(res, _flux_defect(grid, -cs[s]))
                continue
            rho_vals, lam = _normalized_density(grid, gs[s], masses[s])
            u_new, c_new = inv_laplacian(RadialField(grid, rho_vals), with_flux=True)
            new_us.append(u_new.values)
            new_cs.append(c_new)
            lams[s] = lam
            res = max(res, _flux_defect(grid, c_new - cs[s]))
        if res <= opts.tol:
            return us, cs, res, it, tuple(lams)
        ctrl.update(res)
        d = ctrl.d
        du = [d * (new_us[s] - us[s]) for s in range(nsp)]
        dc = [d * (new_cs[s] - cs[s]) for s in range(nsp)]
        us = [us[s] + du[s] for s in range(nsp)]
        cs = [cs[s] + dc[s] for s in range(nsp)]
        cool += 1
        if du_prev is not None and d == 1.0 and cool >= _ACCEL_COOLDOWN:
            flat = np.concatenate(du)
            flat_prev = np.concatenate(du_prev)
            nrm = float(np.dot(flat_prev, flat_prev))
            if nrm > 0.0:
                lam_est = float(np.dot(flat, flat_prev)) / nrm
                if 0.5 < lam_est < 0.9999:
                    boost = lam_est / (1.0 - lam_est)
                    us = [us[s] + boost * du[s] for s in range(nsp)]
                    cs = [cs[s] + boost * dc[s] for s in range(nsp)]
                    cool = 0
                    ctrl.poke()
        du_prev = du
    raise SolverDiverged(
        f"residual {res:.3e} above tol {opts.tol:.1e} "
        f"after {iter_budget} iterations"
    )


def bubble(alpha, delta, grid):
    """Analytic steady profile (2/alpha) ln((1+delta)/(1+delta r^2)).

    Solves the single-species equation exactly with mass
    ``8 pi delta / (alpha (1 + delta))``.
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if delta < 0:
        raise ValueError(f"delta must be nonnegative, got {delta}")
    vals = (2.0 / alpha) * np.log1p(delta * (1.0 - grid.r**2) / (1.0 + delta * grid.r**2))
    vals[-1] = 0.0
    return RadialField.potential(grid, vals)


def bubble_mass(alpha, delta):
    """Disk mass of the bubble profile with the given parameters."""
    return 8.0 * math.pi * delta / (alpha * (1.0 + delta))


def solve_single(m, alpha, grid, opts=None):
    """Solve the single-species equation at mass ``m`` and coupling ``alpha``.

    Refuses masses at or above the critical value ``8 pi / alpha``.  The
    iteration warm-starts from the analytic bubble at the target mass, so
    only the discretization gap remains to be contracted.
    """
    opts = opts or SolveOptions()
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if m <= 0:
        raise NonpositiveMass(f"mass must be positive, got {m}")
    m_crit = 8.0 * math.pi / alpha
    if m >= m_crit:
        raise Supercritical(
            f"mass {m:.6g} at or above the critical value {m_crit:.6g} "
            f"for alpha={alpha:.6g}"
        )

    def run(mass, state):
        return _picard_loop(
            grid,
            (mass,),
            lambda us: (alpha * us[0],),
            state,
            opts,
            opts.max_iter,
        )

    ladder = [m / 2.0**j for j in range(opts.continuation_steps - 1, -1, -1)]
    state = _warm_state(grid, ladder[0], alpha)
    us = cs = None
    total_iters = 0
    for mass in ladder:
        if us is not None:
            state = ([us[0]], [cs[0]])
        us, cs, res, it, lams = run(mass, state)
        total_iters += it
    zero = np.zeros_like(grid.r)
    return Solution(
        u1=RadialField.potential(grid, us[0]),
        u2=RadialField.potential(grid, zero),
        residual=res,
        iterations=total_iters,
        multipliers=(lams[0], 0.0),
        _flux1=cs[0],
        _flux2=np.zeros(grid.n),
    )


def _warm_state(grid, m, alpha):
    """Bubble-generated initial potentials and fluxes at mass ``m``."""
    delta = m * alpha / (8.0 * math.pi - m * alpha)
    u0 = bubble(alpha, delta, grid)
    rho_vals, _ = _normalized_density(grid, alpha * u0.values, m)
    u, c = inv_laplacian(RadialField(grid, rho_vals), with_flux=True)
    return [u.values], [c]


def solve_pair(p, grid, opts=None):
    """Solve the coupled two-species system for validated parameters.

    Direct damped iteration from rest; when it diverges or oscillates and
    ``opts.continuation_steps > 1``, retries along a mass ladder
    ``(m1, m2)/2^j`` with warm starts between rungs.
    """
    opts = opts or SolveOptions()
    p = validate_params(p)

    def exponents(us):
        return (
            p.alpha * us[0] - p.beta * us[1],
            -p.gamma * us[1] - p.theta * p.beta * us[0],
        )

    def run_at(scale, state):
        return _picard_loop(
            grid,
            (p.m1 * scale, p.m2 * scale),
            exponents,
            state,
            opts,
            opts.max_iter,
        )

    zeros = lambda: (
        [np.zeros_like(grid.r), np.zeros_like(grid.r)],
        [np.zeros(grid.n), np.zeros(grid.n)],
    )
    try:
        us, cs, res, it, lams = run_at(1.0, zeros())
        total = it
    except (SolverDiverged, Oscillation):
        if opts.continuation_steps <= 1:
            raise
        logger.info("direct iteration stalled, entering mass continuation")
        state = zeros()
        total = 0
        for j in range(opts.continuation_steps - 1, -1, -1):
            us, cs, res, it, lams = run_at(2.0**-j, state)
            state = (us, cs)
            total += it
    return Solution(
        u1=RadialField.potential(grid, us[0]),
        u2=RadialField.potential(grid, us[1]),
        residual=res,
        iterations=total,
        multipliers=(lams[0], lams[1]),
        _flux1=cs[0],
        _flux2=cs[1],
    )


def minimize_w(rho, p, grid, opts=None, w0=None):
    """Minimizer of the chemical energy at fixed density ``rho``.

    Damped fixed point on ``w -> inv_laplacian(m2 e^g / integral(e^g))``
    with exponent ``g = -gamma w - theta beta u`` and ``u`` the potential
    of ``rho``.  Requires ``gamma > 0``; the ``gamma = 0`` case has the
    closed-form minimizer ``w = 0`` and is handled by the caller.  An
    optional ``w0`` warm-starts the iteration (one fixed-point application
    of ``w0`` seeds the loop), which time steppers use to re-solve for
    ``w`` cheaply after a small change in ``rho``.
    """
    opts = opts or SolveOptions()
    p = validate_params(p)
    if p.gamma == 0.0:
        raise GammaZero("gamma=0 has minimizer w=0; handle in the caller")
    if not rho.grid.same_as(grid):
        from .errors import GridMismatch

        raise GridMismatch("rho lives on a different grid")
    if p.m2 == 0.0:
        return RadialField.potential(grid, np.zeros_like(grid.r))
    u = inv_laplacian(rho).values
    drive = -p.theta * p.beta * u

    if w0 is None:
        state = ([np.zeros_like(grid.r)], [np.zeros(grid.n)])
    else:
        if not w0.grid.same_as(grid):
            from .errors import GridMismatch

            raise GridMismatch("w0 lives on a different grid")
        seed_vals, _ = _normalized_density(grid, -p.gamma * w0.values + drive, p.m2)
        seed_u, seed_c = inv_laplacian(RadialField(grid, seed_vals), with_flux=True)
        state = ([seed_u.values], [seed_c])

    us, cs, res, it, lams = _picard_loop(
        grid,
        (p.m2,),
        lambda ws: (-p.gamma * ws[0] + drive,),
        state,
        opts,
        opts.max_iter,
    )
    w = us[0]
    if np.all(np.diff(rho.values) <= 1e-12) and np.any(np.diff(w) > 1e-10):
        logger.warning("w-minimizer not radially nonincreasing for nonincreasing rho")
    return RadialField.potential(grid, w)


def _central_laplacian(grid, u):
    """Standard radial stencil (1/r)(r u_r)_r with 2 u_rr(0) at the axis."""
    n = grid.n
    lap = np.empty(n)
    flux = grid.faces * np.diff(u) / grid.h
    lap[0] = 4.0 * (u[1] - u[0]) / grid.r[1] ** 2
    lap[1:] = np.diff(flux) / grid.volumes[1:n]
    return lap


def residual(sol, p):
    """Sup-norm PDE residuals of both equations for a candidate solution.

    Solutions produced by the solvers in this module carry their
    generating face fluxes, and the defect is then the exact
    finite-volume residual of the iterate.  Hand-built solutions fall
    back to the central difference stencil, whose residual on smooth
    fields decreases as O(n^-2).
    """
    p = validate_params(p)
    grid = sol.u1.grid
    u1 = sol.u1.values
    u2 = sol.u2.values
    g1 = p.alpha * u1 - p.beta * u2
    g2 = -p.gamma * u2 - p.theta * p.beta * u1
    out = []
    for u, g, m, flux in ((u1, g1, p.m1, sol._flux1), (u2, g2, p.m2, sol._flux2)):
        if m == 0.0:
            rho_vals = np.zeros_like(grid.r)
        else:
            rho_vals, _ = _normalized_density(grid, g, m)
        if flux is not None:
            c_new = face_masses(RadialField(grid, rho_vals))
            out.append(_flux_defect(grid, c_new - flux))
        else:
            lap = _central_laplacian(grid, u)
            out.append(float(np.max(np.abs(lap + rho_vals[: grid.n]))))
    return out[0], out[1]
