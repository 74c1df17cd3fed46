"""Rank-based CMA-ES with an ask/tell interface."""
from __future__ import annotations

import hashlib
import json
import math
from typing import Sequence

import numpy as np

from ..ranking import argsort_scores


class CMAES:
    """(mu/mu_w, lambda)-CMA-ES with the usual default learning rates.

    ``tell`` receives fitness values where higher is better; only their
    ordering enters the update.  Candidates are clipped to ``bounds`` when
    given, while the update uses the unclipped samples.
    """

    def __init__(
        self,
        dim: int,
        pop_size: int,
        seed: int = 0,
        mean: Sequence[float] | None = None,
        sigma: float | None = None,
        bounds: tuple[float, float] | None = None,
    ) -> None:
        if dim < 1 or pop_size < 2:
            raise ValueError("need dim >= 1 and pop_size >= 2")
        self.dim = n = dim
        self.pop_size = lam = pop_size
        self.bounds = bounds
        self.rng = np.random.default_rng(seed)
        if mean is None:
            mean = (
                self.rng.uniform(bounds[0], bounds[1], size=n) if bounds is not None else np.zeros(n)
            )
        self.mean = np.asarray(mean, dtype=float).copy()
        if sigma is None:
            sigma = 0.3 * (bounds[1] - bounds[0]) if bounds is not None else 1.0
        self.sigma = float(sigma)

        self.mu = mu = lam // 2
        w = math.log(mu + 0.5) - np.log(np.arange(1, mu + 1))
        self.weights = w / w.sum()
        self.mueff = 1.0 / float(np.sum(self.weights**2))
        me = self.mueff
        self.cc = (4 + me / n) / (n + 4 + 2 * me / n)
        self.cs = (me + 2) / (n + me + 5)
        self.c1 = 2 / ((n + 1.3) ** 2 + me)
        self.cmu = min(1 - self.c1, 2 * (me - 2 + 1 / me) / ((n + 2) ** 2 + me))
        self.damps = 1 + 2 * max(0.0, math.sqrt((me - 1) / (n + 1)) - 1) + self.cs
        self.chi_n = math.sqrt(n) * (1 - 1 / (4 * n) + 1 / (21 * n * n))

        self.pc = np.zeros(n)
        self.ps = np.zeros(n)
        self.C = np.eye(n)
        self.B = np.eye(n)
        self.D = np.ones(n)
        self.generation = 0
        self._y: np.ndarray | None = None

    def ask(self) -> list[np.ndarray]:
        z = self.rng.standard_normal((self.pop_size, self.dim))
        self._y = (z * self.D) @ self.B.T
        x = self.mean + self.sigma * self._y
        if self.bounds is not None:
            x = np.clip(x, self.bounds[0], self.bounds[1])
        return [row.copy() for row in x]

    def tell(self, scores: Sequence[float]) -> None:
        if self._y is None:
            raise RuntimeError("tell called before ask")
        if len(scores) != self.pop_size:
            raise ValueError(f"expected {self.pop_size} scores, got {len(scores)}")
        order = argsort_scores(scores, "maximize")
        y_sel = self._y[list(order[: self.mu])]
        y_w = self.weights @ y_sel
        n = self.dim

        self.mean = self.mean + self.sigma * y_w
        inv_sqrt_c = (self.B / self.D) @ self.B.T
        self.ps = (1 - self.cs) * self.ps + math.sqrt(self.cs * (2 - self.cs) * self.mueff) * (inv_sqrt_c @ y_w)
        norm_ps = float(np.linalg.norm(self.ps))
        gen = self.generation + 1
        hsig = norm_ps / math.sqrt(1 - (1 - self.cs) ** (2 * gen)) / self.chi_n < 1.4 + 2 / (n + 1)
        self.pc = (1 - self.cc) * self.pc + hsig * math.sqrt(self.cc * (2 - self.cc) * self.mueff) * y_w

        rank_mu = (y_sel.T * self.weights) @ y_sel
        delta_h = (1 - hsig) * self.cc * (2 - self.cc)
        self.C = (
            (1 - self.c1 - self.cmu) * self.C
            + self.c1 * (np.outer(self.pc, self.pc) + delta_h * self.C)
            + self.cmu * rank_mu
        )
        self.sigma *= math.exp((self.cs / self.damps) * (norm_ps / self.chi_n - 1))
        self.generation = gen
        self._y = None
        self._decompose()

    def _decompose(self) -> None:
        self.C = (self.C + self.C.T) / 2
        evals, evecs = np.linalg.eigh(self.C)
        floor = max(float(evals.max()), 1e-300) * 1e-14
        if evals.min() < floor:
            evals = np.maximum(evals, floor)
            self.C = (evecs * evals) @ evecs.T
            self.C = (self.C + self.C.T) / 2
        self.B = evecs
        self.D = np.sqrt(evals)

    def digest(self) -> str:
        h = hashlib.sha256()
        for arr in (self.mean, self.C, self.pc, self.ps, np.array([self.sigma, self.generation], dtype=float)):
            h.update(np.ascontiguousarray(arr, dtype=float).tobytes())
        h.update(json.dumps(self.rng.bit_generator.state, sort_keys=True, default=str).encode())
        return h.hexdigest()
