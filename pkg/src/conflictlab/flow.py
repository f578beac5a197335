"""Time integration of the three parabolic limit regimes.

Density equations advance by a semi-implicit finite-volume step: the
drift-diffusion flux through each cell face uses exponential fitting in
the same logarithmic face metric the Green operator integrates, and the
density solve is a single tridiagonal system per species.  That choice
makes three structural facts exact rather than approximate: cell masses
telescope (conservation to roundoff), the step matrix is an M-matrix
(positivity for any dt), and the zero-flux stationary profile is the
discrete Boltzmann density of the frozen potential, so flow fixed points
satisfy the same discrete steady equations the elliptic solvers produce.

Potential equations advance by implicit diffusion with the normalized
exponential source recomputed each step; the wall value stays exactly
zero.  Each accepted step appends to the state's energy, mass and
supremum traces; the monitored energy is enforced only in the regimes
where the underlying system is a gradient flow for it.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .calculus import face_flux, integrate_disk, inv_laplacian
from .errors import DegenerateQuadraticForm, Stalled, StepRejected
from .functionals import (
    joint_free_energy,
    two_species_energy_rho,
    two_species_energy_u,
)
from .liouville import Solution, minimize_w
from .model import FlowConfig, Params, RadialField, RadialGrid, validate_params

__all__ = [
    "FlowState",
    "initial_state",
    "run_flow",
    "steady_solution",
    "step_potentials",
    "step_single_density",
    "step_two_densities",
    "trace_rows",
]

logger = logging.getLogger(__name__)

_ENERGY_SLACK = 1e-10
_STEADY_TOL = 1e-10
_DT_FLOOR = 1e-14
_GROWTH = 1.2
_DEGENERATE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class FlowState:
    """Immutable snapshot of a flow, with its accumulated traces.

    ``energy_trace`` rows are (t, monitored energy), ``mass_trace`` rows
    are (t, m1, m2) and ``sup_trace`` rows are (t, sup rho1).  The
    command line layer reports all three side by side.
    """

    t: float
    rho1: RadialField
    u1: RadialField
    u2: RadialField
    rho2: RadialField | None = None
    energy_trace: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))
    mass_trace: np.ndarray = field(default_factory=lambda: np.empty((0, 3)))
    sup_trace: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))

    def __post_init__(self) -> None:
        if self.rho1.kind != "density":
            raise ValueError("rho1 must be density-tagged")
        if self.u1.kind != "potential" or self.u2.kind != "potential":
            raise ValueError("u1 and u2 must be potential-tagged")
        grid = self.rho1.grid
        others = [self.u1, self.u2] + ([self.rho2] if self.rho2 is not None else [])
        for f in others:
            if not f.grid.same_as(grid):
                raise ValueError("all state fields must share one grid")


def _bernoulli(x: np.ndarray) -> np.ndarray:
    """x / (e^x - 1), stably through 0 and into both exponential tails."""
    out = np.empty_like(x)
    small = np.abs(x) < 1e-5
    xs = x[small]
    out[small] = 1.0 - 0.5 * xs + xs * xs / 12.0
    with np.errstate(over="ignore"):
        out[~small] = x[~small] / np.expm1(x[~small])
    return out


def _transmissibilities(grid: RadialGrid) -> np.ndarray:
    t = np.empty(grid.n)
    t[0] = 0.5
    t[1:] = 1.0 / grid.log_ratio[1:]
    return t


def _sg_step(rho_vals, phi_vals, grid, dt):
    """Implicit exponential-fitting step for rho_t = div(grad rho + rho grad phi)."""
    pe = phi_vals[1:] - phi_vals[:-1]
    t = _transmissibilities(grid)
    bp = t * _bernoulli(pe)
    bm = t * _bernoulli(-pe)
    k = grid.n + 1
    ab = np.zeros((3, k))
    ab[1] = grid.volumes / dt
    ab[1][:-1] += bp
    ab[1][1:] += bm
    ab[0][1:] = -bm
    ab[2][:-1] = -bp
    new = solve_banded((1, 1), ab, grid.volumes * rho_vals / dt)
    floor = -1e-13 * max(float(np.max(new)), 1.0)
    if np.any(new < floor):
        raise StepRejected("positivity lost in the density solve")
    return np.clip(new, 0.0, None)


def _heat_step(u_vals, source_vals, grid, dt):
    """Implicit diffusion with explicit source; the wall value stays zero."""
    t = _transmissibilities(grid)
    k = grid.n + 1
    ab = np.zeros((3, k))
    ab[1] = grid.volumes / dt
    ab[1][:-1] += t
    ab[1][1:] += t
    ab[0][1:] = -t
    ab[2][:-1] = -t
    rhs = grid.volumes * (u_vals / dt + source_vals)
    ab[0][-1] = 0.0
    ab[1][-1] = 1.0
    ab[2][-2] = 0.0
    rhs[-1] = 0.0
    new = solve_banded((1, 1), ab, rhs)
    new[-1] = 0.0
    return new


def _boltzmann(grid, g, m):
    """Density m e^g / integral(e^g) with its multiplier, overflow-safe."""
    top = float(np.max(g))
    e = np.exp(g - top)
    z = float(np.dot(grid.weights, e))
    return (m / z) * e, m * math.exp(-top) / z


def _induced_density(grid, g, m):
    if m == 0.0:
        return RadialField.density(grid, np.zeros_like(grid.r))
    vals, _ = _boltzmann(grid, g, m)
    return RadialField.density(grid, vals)


def _slaved_density(u1, u2, p):
    g = -p.gamma * u2.values - p.theta * p.beta * u1.values
    return _induced_density(u1.grid, g, p.m2)


def _energy_single(rho, w, p):
    """F of the density-plus-chemical system, with the sign of the w-block
    flipped in the cooperative case (the functional module fixes theta=-1)."""
    rep = joint_free_energy(rho, w, p)
    return rep.entropy1 + rep.interaction - p.theta * (rep.dirichlet + rep.log_terms)


def _check_energy(e_new, e_old, enforced):
    if enforced and e_new - e_old > _ENERGY_SLACK * max(1.0, abs(e_old)):
        raise StepRejected(
            f"monitored energy rose from {e_old:.12g} to {e_new:.12g}"
        )


def _advanced(s, dt, rho1, u1, u2, rho2, energy):
    t = s.t + dt
    m1 = integrate_disk(rho1)
    m2 = integrate_disk(rho2) if rho2 is not None else 0.0
    return FlowState(
        t=t,
        rho1=rho1,
        u1=u1,
        u2=u2,
        rho2=rho2,
        energy_trace=np.vstack([s.energy_trace, (t, energy)]),
        mass_trace=np.vstack([s.mass_trace, (t, m1, m2)]),
        sup_trace=np.vstack([s.sup_trace, (t, float(np.max(rho1.values)))]),
    )


def step_single_density(s: FlowState, p: Params, dt: float) -> FlowState:
    """One step of the single-density regime (species 2 instantaneous).

    The density advances under the frozen drift potential beta*u2 -
    alpha*u1, then both potentials are re-solved: u1 from the new density
    and u2 by the chemical-energy minimizer warm-started from the previous
    one.  The monitored free energy is enforced: a rise beyond the 1e-10
    relative slack raises StepRejected so the driver can halve dt.
    """
    p = validate_params(p)
    grid = s.rho1.grid
    phi = p.beta * s.u2.values - p.alpha * s.u1.values
    new_vals = _sg_step(s.rho1.values, phi, grid, dt)
    rho = RadialField.density(grid, new_vals)
    u1 = inv_laplacian(rho)
    if p.gamma == 0.0 or p.m2 == 0.0:
        w = RadialField.potential(grid, np.zeros_like(grid.r))
    else:
        w = minimize_w(rho, p, grid, w0=s.u2)
    energy = _energy_single(rho, w, p)
    _check_energy(energy, float(s.energy_trace[-1, 1]), enforced=True)
    return _advanced(s, dt, rho, u1, w, _slaved_density(u1, w, p), energy)


def step_two_densities(s: FlowState, p: Params, dt: float) -> FlowState:
    """One step of the two-density regime; both species use the same scheme."""
    p = validate_params(p)
    if s.rho2 is None:
        raise ValueError("the two-density regime needs rho2 in the state")
    grid = s.rho1.grid
    phi1 = p.beta * s.u2.values - p.alpha * s.u1.values
    phi2 = p.theta * p.beta * s.u1.values + p.gamma * s.u2.values
    rho1 = RadialField.density(grid, _sg_step(s.rho1.values, phi1, grid, dt))
    rho2 = RadialField.density(grid, _sg_step(s.rho2.values, phi2, grid, dt))
    u1 = inv_laplacian(rho1)
    u2 = inv_laplacian(rho2)
    energy = two_species_energy_rho(rho1, rho2, p).total
    enforced = p.theta == 1 and p.alpha * p.gamma >= p.beta**2
    _check_energy(energy, float(s.energy_trace[-1, 1]), enforced)
    return _advanced(s, dt, rho1, u1, u2, rho2, energy)


def step_potentials(s: FlowState, p: Params, dt: float) -> FlowState:
    """One step of the potential-relaxation regime.

    Implicit diffusion, explicit normalized exponential sources, Dirichlet
    wall values preserved exactly.  The two-potential energy is enforced
    only in the conflict case with a definite quadratic form; at the
    degenerate threshold a DegenerateQuadraticForm warning fires and the
    step proceeds unmonitored.
    """
    p = validate_params(p)
    grid = s.u1.grid
    g1 = p.alpha * s.u1.values - p.beta * s.u2.values
    g2 = -p.gamma * s.u2.values - p.theta * p.beta * s.u1.values
    s1, _ = _boltzmann(grid, g1, p.m1) if p.m1 > 0 else (np.zeros_like(grid.r), 0.0)
    s2, _ = _boltzmann(grid, g2, p.m2) if p.m2 > 0 else (np.zeros_like(grid.r), 0.0)
    u1 = RadialField.potential(grid, _heat_step(s.u1.values, s1, grid, dt))
    u2 = RadialField.potential(grid, _heat_step(s.u2.values, s2, grid, dt))
    enforced = False
    if p.theta == -1:
        disc = p.alpha * p.gamma - p.beta**2
        if abs(disc) <= _DEGENERATE_TOL:
            warnings.warn(
                DegenerateQuadraticForm(
                    "alpha*gamma - beta^2 is at the degenerate threshold; "
                    "energy monitoring disabled for this step"
                ),
                stacklevel=2,
            )
        else:
            enforced = disc > 0
    energy = two_species_energy_u(u1, u2, p).total
    _check_energy(energy, float(s.energy_trace[-1, 1]), enforced)
    rho1 = _induced_density(grid, p.alpha * u1.values - p.beta * u2.values, p.m1)
    rho2 = _slaved_density(u1, u2, p)
    return _advanced(s, dt, rho1, u1, u2, rho2, energy)


_STEPPERS = {
    (1.0, 0.0, 0.0): step_single_density,
    (1.0, 1.0, 0.0): step_two_densities,
    (0.0, 0.0, 1.0): step_potentials,
}


def initial_state(
    p: Params,
    cfg: FlowConfig,
    rho1: RadialField | None = None,
    rho2: RadialField | None = None,
    u1: RadialField | None = None,
    u2: RadialField | None = None,
) -> FlowState:
    """Assemble a consistent FlowState for the regime cfg selects.

    The density regimes take their densities and derive the potentials;
    the potential regime takes u1, u2 and derives the induced densities.
    Traces are seeded with the t = 0 row.
    """
    p = validate_params(p)
    regime = (cfg.delta1, cfg.delta2, cfg.epsilon)
    if regime == (1.0, 0.0, 0.0):
        if rho1 is None or rho2 is not None or u1 is not None or u2 is not None:
            raise ValueError("the single-density regime takes exactly rho1")
        grid = rho1.grid
        u1 = inv_laplacian(rho1)
        if p.gamma == 0.0 or p.m2 == 0.0:
            u2 = RadialField.potential(grid, np.zeros_like(grid.r))
        else:
            u2 = minimize_w(rho1, p, grid)
        rho2 = _slaved_density(u1, u2, p)
        energy = _energy_single(rho1, u2, p)
    elif regime == (1.0, 1.0, 0.0):
        if rho1 is None or rho2 is None or u1 is not None or u2 is not None:
            raise ValueError("the two-density regime takes exactly rho1 and rho2")
        u1 = inv_laplacian(rho1)
        u2 = inv_laplacian(rho2)
        energy = two_species_energy_rho(rho1, rho2, p).total
    else:
        if u1 is None or u2 is None or rho1 is not None or rho2 is not None:
            raise ValueError("the potential regime takes exactly u1 and u2")
        grid = u1.grid
        rho1 = _induced_density(grid, p.alpha * u1.values - p.beta * u2.values, p.m1)
        rho2 = _slaved_density(u1, u2, p)
        energy = two_species_energy_u(u1, u2, p).total
    m1 = integrate_disk(rho1)
    m2 = integrate_disk(rho2) if rho2 is not None else 0.0
    return FlowState(
        t=0.0,
        rho1=rho1,
        u1=u1,
        u2=u2,
        rho2=rho2,
        energy_trace=np.array([(0.0, energy)]),
        mass_trace=np.array([(0.0, m1, m2)]),
        sup_trace=np.array([(0.0, float(np.max(rho1.values)))]),
    )


def _state_change(old: FlowState, new: FlowState) -> float:
    pairs = [(old.rho1, new.rho1), (old.u1, new.u1), (old.u2, new.u2)]
    if old.rho2 is not None and new.rho2 is not None:
        pairs.append((old.rho2, new.rho2))
    out = 0.0
    for a, b in pairs:
        scale = max(1.0, float(np.max(np.abs(a.values))))
        out = max(out, float(np.max(np.abs(b.values - a.values))) / scale)
    return out


def run_flow(initial: FlowState, p: Params, cfg: FlowConfig) -> FlowState:
    """Integrate to cfg.t_end or to a steady state, whichever comes first.

    dt halves on every StepRejected and regrows geometrically after
    accepted steps (when cfg.adapt is set).  The run stops early once the
    relative state change per unit time falls below 1e-10.  Raises Stalled
    when rejection pushes dt under 1e-14.
    """
    p = validate_params(p)
    stepper = _STEPPERS[(cfg.delta1, cfg.delta2, cfg.epsilon)]
    state = initial
    dt = cfg.dt
    while state.t < cfg.t_end * (1.0 - 1e-12):
        step_dt = min(dt, cfg.t_end - state.t)
        try:
            new = stepper(state, p, step_dt)
        except StepRejected as err:
            if not cfg.adapt:
                raise
            dt *= 0.5
            if dt < _DT_FLOOR:
                raise Stalled(f"dt underflow at t = {state.t:.6g}: {err}") from err
            continue
        change = _state_change(state, new) / step_dt
        state = new
        if change < _STEADY_TOL:
            logger.info("steady state at t = %.6g (change %.3e)", state.t, change)
            break
        if cfg.adapt:
            dt *= _GROWTH
    return state


def steady_solution(s: FlowState, p: Params) -> Solution:
    """Package the state's potentials as a steady-state candidate.

    The attached face fluxes are the ones whose Green reconstruction is
    the state's own potentials, so the solver module's residual() returns
    the exact finite-volume defect of the state as a solution of the
    elliptic pair.  Away from a fixed point that defect is honestly large.
    """
    p = validate_params(p)
    grid = s.rho1.grid
    _, lam1 = _boltzmann(grid, p.alpha * s.u1.values - p.beta * s.u2.values, p.m1)
    _, lam2 = (
        _boltzmann(grid, -p.gamma * s.u2.values - p.theta * p.beta * s.u1.values, p.m2)
        if p.m2 > 0
        else (None, 0.0)
    )
    return Solution(
        u1=s.u1,
        u2=s.u2,
        residual=float("nan"),
        iterations=0,
        multipliers=(lam1 if p.m1 > 0 else 0.0, lam2),
        _flux1=face_flux(s.u1),
        _flux2=face_flux(s.u2),
    )


def trace_rows(s: FlowState) -> np.ndarray:
    """Rows (t, m1, m2, energy, sup rho1) for reporting layers."""
    return np.column_stack(
        [
            s.energy_trace[:, 0],
            s.mass_trace[:, 1],
            s.mass_trace[:, 2],
            s.energy_trace[:, 1],
            s.sup_trace[:, 1],
        ]
    )
