"""External potentials sampled on a periodic grid."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from hosf.grid import Field, GridSpec

POTENTIAL_KINDS = ("none", "well", "linear", "coulomb")


@dataclass(frozen=True)
class PotentialSpec:
    """Description of an external potential.

    ``epsilon=None`` on a Coulomb potential means one grid cell (the
    smallest spacing). ``cut_radius`` is the ball radius used by
    :func:`split_coulomb`.
    """

    kind: str = "none"
    depth: float = 0.0
    radius: float = 0.0
    gradient: tuple[float, ...] = ()
    alpha: float = 0.0
    epsilon: float | None = None
    center: tuple[float, ...] | None = None
    cut_radius: float = 1.0

    def __post_init__(self):
        if self.kind not in POTENTIAL_KINDS:
            raise ValueError(f"unknown potential kind {self.kind!r}; expected one of {POTENTIAL_KINDS}")
        if self.kind == "coulomb":
            if self.alpha < 0:
                raise ValueError("coulomb alpha must be >= 0")
            if self.epsilon is not None and self.epsilon < 0:
                raise ValueError("coulomb epsilon must be >= 0")
        if self.kind == "well" and (self.depth < 0 or self.radius <= 0):
            raise ValueError("well needs depth >= 0 and radius > 0")
        if self.cut_radius <= 0:
            raise ValueError("cut_radius must be positive")

    def sample(self, grid: GridSpec) -> Field:
        if self.kind == "none":
            return Field(grid, np.zeros(grid.shape))
        if self.kind == "well":
            return sample_well(self.depth, self.radius, grid, self.center)
        if self.kind == "linear":
            return sample_linear(self.gradient, grid)
        return sample_coulomb(self.alpha, self.epsilon, grid, self.center)


def _center(grid: GridSpec, center) -> np.ndarray:
    return np.zeros(grid.dim) if center is None else np.asarray(center, dtype=float)


def sample_coulomb(
    alpha: float,
    epsilon: float | None,
    grid: GridSpec,
    center: Sequence[float] | None = None,
) -> Field:
    """Soft-core Coulomb ``alpha / sqrt(|x - x0|^2 + epsilon^2)``.

    Distances use the minimum-image convention. With ``epsilon=0`` the
    exact singular potential is sampled, which requires the center to miss
    every grid node.
    """
    if epsilon is None:
        epsilon = min(grid.spacing)
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    r = grid.distance(_center(grid, center))
    if epsilon == 0:
        if np.any(r == 0):
            raise ValueError(
                "a grid node sits on the Coulomb center; use epsilon > 0 or offset the center"
            )
        return Field(grid, alpha / r)
    return Field(grid, alpha / np.sqrt(r**2 + epsilon**2))


def split_coulomb(spec: PotentialSpec, grid: GridSpec) -> tuple[Field, Field]:
    """Split a Coulomb potential into a compactly supported singular part
    ``V1 = V 1_{r < R}`` and a bounded remainder ``V2 = V 1_{r >= R}``.
    """
    if spec.kind != "coulomb":
        raise ValueError(f"split_coulomb needs a coulomb potential, got {spec.kind!r}")
    v = spec.sample(grid).values
    r = grid.distance(_center(grid, spec.center))
    inside = r < spec.cut_radius
    v1 = np.where(inside, v, 0.0)
    v2 = np.where(inside, 0.0, v)
    return Field(grid, v1), Field(grid, v2)


def sample_well(
    depth: float,
    radius: float,
    grid: GridSpec,
    center: Sequence[float] | None = None,
) -> Field:
    """``-depth`` inside the ball of given radius, 0 outside."""
    if radius >= 0.5 * min(grid.box_length):
        raise ValueError("well radius must be smaller than half the box")
    r = grid.distance(_center(grid, center))
    return Field(grid, np.where(r < radius, -float(depth), 0.0))


def sample_linear(gradient: Sequence[float], grid: GridSpec) -> Field:
    """``g . x`` on the centered domain; jumps at the box edge by ``|g| L``."""
    g = np.asarray(gradient, dtype=float)
    if g.shape != (grid.dim,):
        raise ValueError("gradient needs one component per axis")
    v = sum(gi * x for gi, x in zip(g, grid.coords))
    return Field(grid, np.asarray(v, dtype=float) + np.zeros(grid.shape))
