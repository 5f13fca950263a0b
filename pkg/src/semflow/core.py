"""Grids, norms, sampled states/signals and dense linear-algebra primitives.

Conventions used throughout the package:

* space-like grid functions (states on ``[-1, 0]`` or ``[-L, 0]``) carry the
  left-endpoint L1 norm ``step * sum(|f_i|, i < count)`` -- it commutes exactly
  with grid shifts;
* time-like signals carry the trapezoid L1 norm (matching :func:`quad`);
* all arrays are float64.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import DimensionError, DomainError, GridAlignmentError

#: relative slack (in units of the step) for grid alignment checks
ALIGN_RTOL = 1e-6


@dataclass(frozen=True)
class Grid:
    """Uniform grid ``start + k*step`` for ``k = 0..count``."""

    start: float
    step: float
    count: int

    def __post_init__(self):
        if not self.step > 0.0:
            raise DomainError(f"grid step must be positive, got {self.step}")
        if int(self.count) != self.count or self.count < 1:
            raise DomainError(f"grid count must be a positive integer, got {self.count}")
        object.__setattr__(self, "count", int(self.count))

    @property
    def end(self) -> float:
        return self.start + self.count * self.step

    def points(self) -> np.ndarray:
        return self.start + self.step * np.arange(self.count + 1)

    def trapezoid_weights(self) -> np.ndarray:
        w = np.full(self.count + 1, self.step)
        w[0] *= 0.5
        w[-1] *= 0.5
        return w

    def left_weights(self) -> np.ndarray:
        w = np.full(self.count + 1, self.step)
        w[-1] = 0.0
        return w

    def index_of(self, t: float) -> int:
        """Grid index of ``t``; raises if ``t`` is off-grid or out of range."""
        r = (t - self.start) / self.step
        k = int(round(r))
        if abs(r - k) > ALIGN_RTOL:
            raise GridAlignmentError(
                f"t={t} is not aligned with grid step {self.step} (offset {r - k:+.3e} steps)")
        if k < 0 or k > self.count:
            raise GridAlignmentError(f"t={t} lies outside the grid [{self.start}, {self.end}]")
        return k

    def refine(self, factor: int) -> "Grid":
        return Grid(self.start, self.step / factor, self.count * factor)


def time_grid(horizon: float, step: float) -> Grid:
    """Grid on ``[0, horizon]`` with the given step (horizon must be commensurate)."""
    n = int(round(horizon / step))
    if abs(horizon - n * step) > ALIGN_RTOL * step or n < 1:
        raise GridAlignmentError(f"horizon {horizon} is not a positive multiple of step {step}")
    return Grid(0.0, step, n)


# ---------------------------------------------------------------------------
# norms / spaces
# ---------------------------------------------------------------------------

class Space:
    """Describes the norm carried by a coordinate vector."""

    dim: int

    def norm(self, coords: np.ndarray) -> float:
        raise NotImplementedError

    def rows_norm(self, rows: np.ndarray) -> np.ndarray:
        """Norm of every row of a (k, dim) array."""
        return np.array([self.norm(r) for r in rows])

    def check(self, coords: np.ndarray) -> np.ndarray:
        coords = np.asarray(coords, dtype=float).ravel()
        if coords.shape[0] != self.dim:
            raise DimensionError(f"expected {self.dim} coordinates, got {coords.shape[0]}")
        return coords


@dataclass(frozen=True)
class SupSpace(Space):
    """R^d with the sup norm."""

    dim: int

    def norm(self, coords):
        coords = self.check(coords)
        return float(np.max(np.abs(coords))) if self.dim else 0.0

    def rows_norm(self, rows):
        return np.max(np.abs(rows), axis=1)


@dataclass(frozen=True)
class L1Space(Space):
    """Grid functions on ``grid`` with values in R^point_dim, left-endpoint L1 norm.

    Coordinates are stored row-major as ``(count+1, point_dim)`` flattened; the
    pointwise norm is the sup norm (``point_norm="sup"``) or the Euclidean norm
    (``"euclid"``, used for real embeddings of complex values).
    """

    grid: Grid
    point_dim: int = 1
    point_norm: str = "sup"

    @property
    def dim(self):  # type: ignore[override]
        return (self.grid.count + 1) * self.point_dim

    def values(self, coords) -> np.ndarray:
        coords = self.check(coords)
        return coords.reshape(self.grid.count + 1, self.point_dim)

    def point_norms(self, coords) -> np.ndarray:
        vals = self.values(coords)
        if self.point_norm == "euclid":
            return np.sqrt(np.sum(vals * vals, axis=1))
        return np.max(np.abs(vals), axis=1)

    def norm(self, coords):
        return float(self.grid.step * np.sum(self.point_norms(coords)[:-1]))

    def rows_norm(self, rows):
        vals = rows.reshape(rows.shape[0], self.grid.count + 1, self.point_dim)
        if self.point_norm == "euclid":
            pn = np.sqrt(np.sum(vals * vals, axis=2))
        else:
            pn = np.max(np.abs(vals), axis=2)
        return self.grid.step * np.sum(pn[:, :-1], axis=1)


@dataclass(frozen=True)
class ProductSpace(Space):
    """Direct sum of spaces; the norm is the sum of the component norms."""

    parts: tuple

    @property
    def dim(self):  # type: ignore[override]
        return sum(p.dim for p in self.parts)

    def offsets(self):
        offs = [0]
        for p in self.parts:
            offs.append(offs[-1] + p.dim)
        return offs

    def split(self, coords):
        coords = self.check(coords)
        offs = self.offsets()
        return [coords[offs[i]:offs[i + 1]] for i in range(len(self.parts))]

    def norm(self, coords):
        return float(sum(p.norm(c) for p, c in zip(self.parts, self.split(coords))))

    def rows_norm(self, rows):
        offs = self.offsets()
        return sum(p.rows_norm(rows[:, offs[i]:offs[i + 1]])
                   for i, p in enumerate(self.parts))


@dataclass(frozen=True)
class StateVector:
    """A point of a discretized state space together with its norm."""

    coords: np.ndarray
    space: Space

    def __post_init__(self):
        object.__setattr__(self, "coords", self.space.check(self.coords))

    def norm(self) -> float:
        return self.space.norm(self.coords)

    @staticmethod
    def sup(coords) -> "StateVector":
        coords = np.asarray(coords, dtype=float).ravel()
        return StateVector(coords, SupSpace(coords.shape[0]))

    @staticmethod
    def grid_function(values, grid: Grid, point_norm: str = "sup") -> "StateVector":
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.shape[0] != grid.count + 1:
            raise DimensionError(
                f"expected {grid.count + 1} samples on the grid, got {values.shape[0]}")
        space = L1Space(grid, point_dim=values.shape[1], point_norm=point_norm)
        return StateVector(values.ravel(), space)


@dataclass(frozen=True)
class InputSignal:
    """A U-valued signal sampled on a time grid; trapezoid L1 norm."""

    grid: Grid
    values: np.ndarray  # (count+1, u_dim)
    point_space: Space

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        if vals.shape != (self.grid.count + 1, self.point_space.dim):
            raise DimensionError(
                f"signal values must have shape ({self.grid.count + 1}, {self.point_space.dim}), "
                f"got {vals.shape}")
        object.__setattr__(self, "values", vals)

    def point_norms(self) -> np.ndarray:
        return self.point_space.rows_norm(self.values)

    def l1_norm(self) -> float:
        return float(self.grid.trapezoid_weights() @ self.point_norms())

    def running_l1(self) -> np.ndarray:
        """Trapezoid L1 norms of the restrictions to ``[0, t_k]`` for every k."""
        p = self.point_norms()
        h = self.grid.step
        out = np.empty_like(p)
        out[0] = 0.0
        np.cumsum(0.5 * h * (p[1:] + p[:-1]), out=out[1:])
        return out

    def restrict(self, k: int) -> "InputSignal":
        return InputSignal(Grid(self.grid.start, self.grid.step, k),
                           self.values[:k + 1], self.point_space)

    @staticmethod
    def scalar(grid: Grid, values) -> "InputSignal":
        return InputSignal(grid, np.asarray(values, dtype=float).reshape(-1, 1), SupSpace(1))


# ---------------------------------------------------------------------------
# dense primitives
# ---------------------------------------------------------------------------

def matexp(a: np.ndarray, t: float = 1.0) -> np.ndarray:
    """Matrix exponential ``exp(t*a)`` by scaling-and-squaring with a Taylor core.

    The scaled matrix has norm <= 1/2, where an order-18 Taylor polynomial is
    accurate to well below 1e-15.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"matexp needs a square matrix, got shape {a.shape}")
    if t < 0.0:
        raise DomainError(f"matexp is only evaluated for t >= 0, got t={t}")
    n = a.shape[0]
    m = t * a
    nrm = float(np.max(np.sum(np.abs(m), axis=1))) if n else 0.0
    if nrm == 0.0:
        return np.eye(n)
    s = max(0, int(math.ceil(math.log2(nrm / 0.5))))
    x = m / (2.0 ** s)
    eye = np.eye(n)
    r = eye.copy()
    for j in range(18, 0, -1):
        r = eye + (x @ r) / j
    for _ in range(s):
        r = r @ r
    return r


def quad(grid: Grid, samples: Union[np.ndarray, Sequence[StateVector]]):
    """Composite-trapezoid integral of samples over the grid (exact on affine data).

    Accepts a ``(count+1, d)`` array (returns an array) or a list of
    StateVectors sharing one space (returns a StateVector).
    """
    if len(samples) != grid.count + 1:
        raise DimensionError(
            f"quad needs {grid.count + 1} samples, got {len(samples)}")
    w = grid.trapezoid_weights()
    if isinstance(samples, np.ndarray):
        return np.tensordot(w, samples, axes=(0, 0))
    space = samples[0].space
    stacked = np.stack([s.coords for s in samples])
    return StateVector(np.tensordot(w, stacked, axes=(0, 0)), space)


def opnorm_sup(a: np.ndarray) -> float:
    """Operator norm induced by the sup norm (max absolute row sum)."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    return float(np.max(np.sum(np.abs(a), axis=1)))
