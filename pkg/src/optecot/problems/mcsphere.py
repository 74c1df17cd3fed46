"""Noisy Monte-Carlo sphere with an exact, uncharged oracle."""
from __future__ import annotations

import hashlib
import math

import numpy as np

from ..cost import CostIndexedProblem, ParameterMap


_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MASK = (1 << 64) - 1
_SCALAR_LIMIT = 32


def _solution_key(x: np.ndarray, seed: int) -> int:
    h = hashlib.blake2b(np.ascontiguousarray(x, dtype=float).tobytes(), digest_size=8, key=int(seed).to_bytes(8, "little", signed=True))
    return int.from_bytes(h.digest(), "little")


def _splitmix_scalar(key: int, n: int) -> list[float]:
    out = []
    for i in range(1, n + 1):
        z = (key + i * 0x9E3779B97F4A7C15) & _MASK
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        z ^= z >> 31
        out.append((z >> 11) * (1.0 / 2**53))
    return out


def splitmix_uniform(key: int, n: int) -> np.ndarray:
    """First ``n`` values of the splitmix64 stream started at ``key``, mapped to [0, 1)."""
    if n <= _SCALAR_LIMIT:
        return np.array(_splitmix_scalar(int(key), n))
    z = np.uint64(key) + (np.arange(1, n + 1, dtype=np.uint64) * _GOLDEN)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    z = z ^ (z >> np.uint64(31))
    return (z >> np.uint64(11)).astype(np.float64) * (1.0 / 2**53)


class McSphere(CostIndexedProblem):
    """Score is the mean of ``theta`` noisy probes of ``-||x - center||^2``.

    Probe noise is uniform on ``[-noise_scale, noise_scale]`` and read from a
    splitmix64 stream keyed by a hash of ``(seed, x)``, so a smaller ``theta`` uses a prefix of the
    probes of a larger one.  Elapsed time is ``theta`` probe units.
    """

    representation = "real_vector"
    time_unit = "probes"

    def __init__(
        self,
        dim: int = 6,
        noise_scale: float = 5.0,
        center: np.ndarray | None = None,
        box: float = 5.0,
        theta0: int = 1,
        theta1: int = 1000,
    ) -> None:
        self.name = "mcsphere"
        self.dimension = dim
        self.noise_scale = float(noise_scale)
        self.center = np.full(dim, 1.0) if center is None else np.asarray(center, dtype=float)
        self.bounds = (-float(box), float(box))
        self.parameter_map = ParameterMap(theta0, theta1, integer_valued=True)

    def sample(self, rng):
        return rng.uniform(self.bounds[0], self.bounds[1], size=self.dimension)

    def true_value(self, x) -> float:
        d = np.asarray(x, dtype=float) - self.center
        return -float(d @ d)

    def probes(self, x, theta: int, seed: int) -> np.ndarray:
        u = splitmix_uniform(_solution_key(np.asarray(x, dtype=float), seed), int(theta))
        return self.noise_scale * (2.0 * u - 1.0)

    def evaluate(self, x, theta, seed=0):
        theta = int(theta)
        if theta < 1:
            raise ValueError("theta must be >= 1")
        f = self.true_value(x)
        if self.noise_scale == 0.0:
            return f, float(theta)
        if theta <= _SCALAR_LIMIT:
            u = _splitmix_scalar(_solution_key(np.asarray(x, dtype=float), seed), theta)
            return f + self.noise_scale * (2.0 * math.fsum(u) / theta - 1.0), float(theta)
        return f + float(self.probes(x, theta, seed).mean()), float(theta)

    def params(self):
        return {"dim": self.dimension, "noise_scale": self.noise_scale, "box": self.bounds[1]}
