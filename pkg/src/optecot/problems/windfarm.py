"""Simplified wind-farm layout problem with Monte-Carlo rotor averaging.

Wind blows along +x with unit free-stream speed.  Each upstream turbine casts
a Gaussian velocity deficit whose width grows linearly downstream; deficits
combine as a root sum of squares.  A turbine's power is the rotor-disc average
of the cubed local speed, estimated from ``theta`` seeded points on the disc.
"""
from __future__ import annotations

import numpy as np

from ..cost import CostIndexedProblem, ParameterMap


def unit_disc_points(theta: int, seed: int) -> np.ndarray:
    """First ``theta`` points of a seeded uniform stream on the unit disc."""
    rng = np.random.default_rng([int(seed), 0x57F])
    u = rng.random((int(theta), 2))
    r = np.sqrt(u[:, 0])
    ang = 2 * np.pi * u[:, 1]
    return np.column_stack([r * np.cos(ang), r * np.sin(ang)])


class WindFarm(CostIndexedProblem):
    """Total power of ``n_turbines`` in a ``side`` x ``side`` square.

    The layout is a flat vector ``(x1, y1, x2, y2, ...)`` in rotor diameters.
    Pairs closer than one diameter are penalized by ``overlap_penalty`` each.
    Elapsed time is ``theta * n_turbines`` point evaluations.
    """

    representation = "real_vector"
    time_unit = "points"

    def __init__(
        self,
        n_turbines: int = 8,
        side: float = 8.0,
        thrust: float = 0.8,
        expansion: float = 0.05,
        initial_width: float = 0.35,
        nominal_power: float = 1.0,
        overlap_penalty: float = 10.0,
        theta0: int = 1,
        theta1: int = 1000,
    ) -> None:
        self.name = "windfarm"
        self.n_turbines = n_turbines
        self.dimension = 2 * n_turbines
        self.bounds = (0.0, float(side))
        self.thrust = thrust
        self.expansion = expansion
        self.initial_width = initial_width
        self.nominal_power = nominal_power
        self.overlap_penalty = overlap_penalty
        self.parameter_map = ParameterMap(theta0, theta1, integer_valued=True)

    def sample(self, rng):
        return rng.uniform(self.bounds[0], self.bounds[1], size=self.dimension)

    def deficit(self, dx: np.ndarray, r2: np.ndarray) -> np.ndarray:
        """Velocity deficit at downstream distance ``dx`` and squared radial offset ``r2``."""
        sigma = self.expansion * dx + self.initial_width
        peak = 1.0 - np.sqrt(np.maximum(0.0, 1.0 - self.thrust / (8.0 * sigma**2)))
        return np.where(dx > 0, peak * np.exp(-r2 / (2.0 * sigma**2)), 0.0)

    def turbine_powers(self, layout, disc: np.ndarray) -> np.ndarray:
        """Power of each turbine averaged over rotor points ``disc`` (unit-disc coordinates)."""
        xy = np.clip(np.asarray(layout, dtype=float), *self.bounds).reshape(-1, 2)
        pts = 0.5 * disc
        powers = np.empty(len(xy))
        for j, (xj, yj) in enumerate(xy):
            dx = xj - xy[:, 0]
            upstream = dx > 0
            if not upstream.any():
                powers[j] = self.nominal_power
                continue
            dy = (yj - xy[upstream, 1])[:, None] + pts[None, :, 0]
            r2 = dy**2 + pts[None, :, 1] ** 2
            d = self.deficit(dx[upstream][:, None], r2)
            total = np.minimum(1.0, np.sqrt(np.sum(d**2, axis=0)))
            powers[j] = self.nominal_power * float(np.mean((1.0 - total) ** 3))
        return powers

    def penalty(self, layout) -> float:
        xy = np.clip(np.asarray(layout, dtype=float), *self.bounds).reshape(-1, 2)
        diff = xy[:, None, :] - xy[None, :, :]
        dist = np.sqrt(np.sum(diff**2, axis=-1))
        iu = np.triu_indices(len(xy), k=1)
        return self.overlap_penalty * float(np.sum(dist[iu] < 1.0))

    def evaluate(self, layout, theta, seed=0):
        theta = int(theta)
        if theta < 1:
            raise ValueError("theta must be >= 1")
        disc = unit_disc_points(theta, seed)
        score = float(self.turbine_powers(layout, disc).sum()) - self.penalty(layout)
        return score, float(theta * self.n_turbines)

    def params(self):
        return {"n_turbines": self.n_turbines, "side": self.bounds[1]}
