"""Core value types: model parameters, radial grids and nodal fields.

Everything downstream works on the closed unit disk with radially symmetric
data. A grid is a strictly increasing set of node radii 0 = r_0 < ... <
r_n = 1; scalar fields are nodal samples understood as piecewise linear
between nodes. Around each node sits a finite-volume cell bounded by the
midpoints of neighboring nodes (half cells at the center and the wall), and
the cell r-volumes V_i drive every quadrature in the package, so that mass
accounting, the Green operator and the Dirichlet form all agree exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    BadTheta,
    NegativeConstant,
    NegativeDensity,
    NonpositiveMass,
    TooCoarse,
    UnsupportedRegime,
    ZeroDensity,
)

__all__ = [
    "FlowConfig",
    "Params",
    "RadialField",
    "RadialGrid",
    "make_grid",
    "project_density",
    "validate_params",
]


@dataclass(frozen=True)
class Params:
    """Physical constants and masses of one model instance.

    alpha: self-attraction of species 1, >= 0
    beta:  cross-coupling strength, >= 0
    gamma: self-repulsion of species 2, >= 0
    theta: conflict flag, -1 (conflict) or +1 (conflict-free)
    m1:    total mass of species 1, > 0
    m2:    total mass of species 2, >= 0
    """

    alpha: float
    beta: float
    gamma: float
    theta: int
    m1: float
    m2: float


def validate_params(p: Params) -> Params:
    """Check the admissible-parameter invariants and normalize theta to +-1.

    Raises NegativeConstant, NonpositiveMass or BadTheta.
    """
    for name in ("alpha", "beta", "gamma"):
        v = getattr(p, name)
        if not np.isfinite(v) or v < 0:
            raise NegativeConstant(f"{name} = {v!r} must be finite and >= 0")
    if not np.isfinite(p.m1) or p.m1 <= 0:
        raise NonpositiveMass(f"m1 = {p.m1!r} must be > 0")
    if not np.isfinite(p.m2) or p.m2 < 0:
        raise NonpositiveMass(f"m2 = {p.m2!r} must be >= 0")
    if p.theta not in (-1, 1):
        raise BadTheta(f"theta = {p.theta!r} must be -1 or +1")
    return replace(p, theta=int(p.theta))


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Node radii plus the derived finite-volume geometry.

    Stored at construction (all length conventions relative to n cells):

    r          n+1 node radii, r[0] = 0, r[n] = 1
    h          n node spacings
    faces      n-1 interior cell faces (midpoints of adjacent nodes)
    volumes    n+1 cell r-volumes V_i = integral of r dr over cell i;
               sum(V) = 1/2 exactly
    weights    disk quadrature weights 2*pi*V_i; sum = pi exactly
    log_ratio  ln(r_{j+1}/r_j) per cell j = 0..n-1; entry 0 is NaN (the
               center cell is handled by the axis regularity rule instead)
    """

    r: np.ndarray
    h: np.ndarray = field(init=False, repr=False)
    faces: np.ndarray = field(init=False, repr=False)
    volumes: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)
    log_ratio: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        r = np.asarray(self.r, dtype=float)
        if r.ndim != 1 or r.size < 2:
            raise ValueError("grid needs a 1-d array of at least two radii")
        if r[0] != 0.0 or r[-1] != 1.0:
            raise ValueError("grid must span [0, 1] with exact endpoints")
        if np.any(np.diff(r) <= 0):
            raise ValueError("grid nodes must be strictly increasing")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "h", np.diff(r))
        faces = 0.5 * (r[1:] + r[:-1])
        object.__setattr__(self, "faces", faces)
        edges = np.concatenate(([0.0], faces, [1.0]))
        object.__setattr__(self, "volumes", 0.5 * np.diff(edges**2))
        object.__setattr__(self, "weights", 2.0 * np.pi * self.volumes)
        lr = np.empty(r.size - 1)
        lr[0] = np.nan
        np.log(r[2:] / r[1:-1], out=lr[1:])
        object.__setattr__(self, "log_ratio", lr)

    @property
    def n(self) -> int:
        """Number of cells (nodes minus one)."""
        return self.r.size - 1

    def same_as(self, other: "RadialGrid") -> bool:
        return self is other or np.array_equal(self.r, other.r)


def make_grid(n: int, kind: str = "uniform") -> RadialGrid:
    """Build an n-cell grid, 'uniform' (r_i = i/n) or 'graded' (r_i = (i/n)^2,
    clustering near the center for concentration experiments).

    Raises TooCoarse for n < 8.
    """
    if n < 8:
        raise TooCoarse(f"n = {n} < 8")
    x = np.linspace(0.0, 1.0, n + 1)
    if kind == "uniform":
        return RadialGrid(x)
    if kind == "graded":
        return RadialGrid(x * x)
    raise ValueError(f"unknown grid kind {kind!r}")


@dataclass(frozen=True, eq=False)
class RadialField:
    """Nodal samples of a radial scalar on a grid, optionally tagged.

    kind 'density' asserts nonnegativity; kind 'potential' asserts the
    homogeneous Dirichlet value at the wall (values[-1] == 0).
    """

    grid: RadialGrid
    values: np.ndarray
    kind: str | None = None

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.r.shape:
            raise ValueError(
                f"field has {v.size} samples for {self.grid.r.size} nodes"
            )
        object.__setattr__(self, "values", v)
        if self.kind == "density":
            if np.any(v < 0):
                raise NegativeDensity("density tag requires values >= 0")
        elif self.kind == "potential":
            if v[-1] != 0.0:
                raise ValueError("potential tag requires an exact zero at r = 1")
        elif self.kind is not None:
            raise ValueError(f"unknown field kind {self.kind!r}")

    @classmethod
    def density(cls, grid: RadialGrid, values: np.ndarray) -> "RadialField":
        return cls(grid, values, kind="density")

    @classmethod
    def potential(cls, grid: RadialGrid, values: np.ndarray) -> "RadialField":
        return cls(grid, values, kind="potential")

    @classmethod
    def from_function(cls, grid: RadialGrid, fn, kind: str | None = None) -> "RadialField":
        """Sample fn(r) (vectorized over the node array) onto the grid."""
        return cls(grid, np.asarray(fn(grid.r), dtype=float), kind=kind)

    def with_values(self, values: np.ndarray) -> "RadialField":
        return RadialField(self.grid, values, self.kind)


@dataclass(frozen=True)
class FlowConfig:
    """Time-integration configuration for the three limit systems.

    (delta1, delta2, epsilon) selects the limit: (1,1,0) both densities
    parabolic, (1,0,0) species 2 instantaneous, (0,0,1) potential relaxation.
    """

    delta1: float
    delta2: float
    epsilon: float
    dt: float
    t_end: float
    adapt: bool = True

    def __post_init__(self) -> None:
        if (self.delta1, self.delta2, self.epsilon) not in _SUPPORTED_LIMITS:
            raise UnsupportedRegime(
                f"(delta1, delta2, epsilon) = "
                f"{(self.delta1, self.delta2, self.epsilon)} is not one of "
                f"{sorted(_SUPPORTED_LIMITS)}"
            )
        if not (self.dt > 0 and self.t_end > 0):
            raise ValueError("dt and t_end must be positive")


_SUPPORTED_LIMITS = {(1.0, 1.0, 0.0), (1.0, 0.0, 0.0), (0.0, 0.0, 1.0)}


def project_density(f: RadialField, m: float) -> RadialField:
    """Rescale a nonnegative field so its disk integral equals m.

    Raises ZeroDensity when f carries no mass.
    """
    from .calculus import integrate_disk

    if m <= 0:
        raise NonpositiveMass(f"target mass {m!r} must be > 0")
    total = integrate_disk(f)
    if total == 0.0:
        raise ZeroDensity("cannot normalize a field with zero disk integral")
    return RadialField.density(f.grid, (m / total) * f.values)
