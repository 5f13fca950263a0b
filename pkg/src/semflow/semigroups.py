"""Concrete C0-semigroup engines: matrix exponentials, shift semigroups, blocks.

Shift semigroups are evaluated only at grid-commensurate times so that all
translation arithmetic is exact; one grid point of "mass" enters or leaves per
step, and the left-endpoint L1 norm commutes with the shift.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Grid, L1Space, ProductSpace, Space, StateVector, SupSpace, matexp
from .errors import DimensionError, DomainError, GridAlignmentError


class Semigroup:
    """Base class; subclasses provide `space` and `apply_coords`."""

    space: Space

    def apply_coords(self, t: float, coords: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def stepper(self, h: float):
        """Return a callable advancing coordinates by one step of size h."""
        raise NotImplementedError


@dataclass(frozen=True)
class MatrixSemigroup(Semigroup):
    """T(t) = exp(t*A) for a square generator matrix A."""

    a: np.ndarray
    space: Space = None  # type: ignore[assignment]

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.a, dtype=float))
        if a.shape[0] != a.shape[1]:
            raise DimensionError(f"generator must be square, got shape {a.shape}")
        object.__setattr__(self, "a", a)
        if self.space is None:
            object.__setattr__(self, "space", SupSpace(a.shape[0]))

    def apply_coords(self, t, coords):
        if t < 0.0:
            raise DomainError(f"semigroup evaluated at negative time t={t}")
        if t == 0.0:
            return np.array(coords, dtype=float)
        return matexp(self.a, t) @ coords

    def stepper(self, h):
        e = matexp(self.a, h)
        return lambda c: e @ c


def _shift_coords(values: np.ndarray, m: int) -> np.ndarray:
    """Shift grid samples left by m points; indices past the right end read zero.

    The convention f(s+t) for s+t < 0 (strictly) keeps the shift family an
    exact semigroup on samples and makes the nilpotent variant vanish
    identically at t >= 1.
    """
    if m == 0:
        return values.copy()
    out = np.zeros_like(values)
    n = values.shape[0] - 1
    if m < n:
        out[: n - m] = values[m:n]
    return out


@dataclass(frozen=True)
class NilpotentShift(Semigroup):
    """Left translation on L1(-1, 0; R^d); annihilates everything at t >= 1."""

    grid: Grid
    point_dim: int = 1
    space: Space = field(init=False)

    def __post_init__(self):
        if abs(self.grid.start + 1.0) > 1e-9 or abs(self.grid.end) > 1e-9:
            raise DomainError("nilpotent shift grid must cover exactly [-1, 0]")
        object.__setattr__(self, "space", L1Space(self.grid, self.point_dim))

    def shift_count(self, t) -> int:
        if t < 0.0:
            raise DomainError(f"semigroup evaluated at negative time t={t}")
        r = t / self.grid.step
        m = int(round(r))
        if abs(r - m) > 1e-6:
            raise GridAlignmentError(
                f"t={t} is not a multiple of the shift grid step {self.grid.step}")
        return m

    def apply_coords(self, t, coords):
        m = self.shift_count(t)
        vals = self.space.values(coords)
        return _shift_coords(vals, m).ravel()

    def stepper(self, h):
        m = self.shift_count(h)
        npts = self.grid.count + 1

        def step(c):
            return _shift_coords(c.reshape(npts, self.point_dim), m).ravel()

        return step


@dataclass(frozen=True)
class LeftTranslation(Semigroup):
    """Left translation on L1(R_-) truncated to [-L, 0].

    Functions supported in [-L, 0] evolve exactly; initial mass below -L was
    never representable (the truncation is a setup-time restriction).
    """

    grid: Grid
    point_dim: int = 1
    space: Space = field(init=False)

    def __post_init__(self):
        if abs(self.grid.end) > 1e-9:
            raise DomainError("translation grid must end at 0")
        if -self.grid.start < 1.0:
            raise DomainError("translation horizon L must be at least 1")
        object.__setattr__(self, "space", L1Space(self.grid, self.point_dim))

    @property
    def horizon(self) -> float:
        return -self.grid.start

    shift_count = NilpotentShift.shift_count
    apply_coords = NilpotentShift.apply_coords
    stepper = NilpotentShift.stepper


@dataclass(frozen=True)
class BlockDiag(Semigroup):
    """Diagonal composition diag(T_1(t), ..., T_m(t))."""

    parts: tuple
    space: Space = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        object.__setattr__(self, "space", ProductSpace(tuple(p.space for p in self.parts)))

    def apply_coords(self, t, coords):
        pieces = self.space.split(coords)
        return np.concatenate([p.apply_coords(t, c) for p, c in zip(self.parts, pieces)])

    def stepper(self, h):
        steps = [p.stepper(h) for p in self.parts]
        offs = self.space.offsets()

        def step(c):
            return np.concatenate(
                [s(c[offs[i]:offs[i + 1]]) for i, s in enumerate(steps)])

        return step


@dataclass(frozen=True)
class OrbitSeries:
    """Sampled orbit t_k -> T(t_k)x with its norm track."""

    grid: Grid
    states: np.ndarray  # (count+1, dim)
    norms: np.ndarray
    space: Space

    def __post_init__(self):
        if self.states.shape != (self.grid.count + 1, self.space.dim):
            raise DimensionError("orbit states do not match grid/space")
        if self.norms.shape[0] != self.grid.count + 1:
            raise DimensionError("orbit norms do not match grid")

    def state(self, k: int) -> StateVector:
        return StateVector(self.states[k], self.space)

    def initial_norm(self) -> float:
        return float(self.norms[0])


def orbit_from_states(grid: Grid, states: np.ndarray, space: Space) -> OrbitSeries:
    states = np.asarray(states, dtype=float)
    return OrbitSeries(grid, states, space.rows_norm(states), space)


def apply(sg: Semigroup, t: float, x: StateVector) -> StateVector:
    """Evaluate T(t)x."""
    if x.space != sg.space:
        raise DimensionError("state does not live in the semigroup's space")
    return StateVector(sg.apply_coords(t, x.coords), sg.space)


def orbit(sg: Semigroup, x: StateVector, grid: Grid) -> OrbitSeries:
    """Sampled orbit on ``grid`` (must start at 0), by stepwise composition."""
    if abs(grid.start) > 1e-12:
        raise DomainError("orbit grids must start at t = 0")
    if x.space != sg.space:
        raise DimensionError("state does not live in the semigroup's space")
    step = sg.stepper(grid.step)
    states = np.empty((grid.count + 1, sg.space.dim))
    c = np.array(x.coords, dtype=float)
    states[0] = c
    for k in range(grid.count):
        c = step(c)
        states[k + 1] = c
    return orbit_from_states(grid, states, sg.space)
