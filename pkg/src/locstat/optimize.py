"""Box-constrained global minimization by differential evolution.

DE/rand/1/bin with reflection at the box walls and a Latin-hypercube
initial population.  All random numbers for a generation are drawn up
front in a fixed order, so a given seed yields a bit-identical
trajectory no matter how candidate evaluations are scheduled.
Objectives may return +inf to mark infeasible points.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError, OptimizationError

__all__ = ["DeConfig", "DeResult", "de_minimize"]


@dataclass(frozen=True)
class DeConfig:
    population: Optional[int] = None  # default 15 * dimension
    F: float = 0.8
    CR: float = 0.9
    max_gens: int = 300
    tol: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.population is not None and self.population < 4:
            raise ConfigurationError("population must be at least 4")
        if not (0.0 < self.F <= 2.0):
            raise ConfigurationError("F must lie in (0, 2]")
        if not (0.0 <= self.CR <= 1.0):
            raise ConfigurationError("CR must lie in [0, 1]")
        if self.max_gens < 1:
            raise ConfigurationError("max_gens must be positive")


@dataclass
class DeResult:
    theta: np.ndarray
    value: float
    generations: int
    n_evals: int
    n_infeasible: int
    trace: np.ndarray  # best objective value after each generation


def _reflect(v: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    # triangular fold with period 2*(hi-lo); lands inside [lo, hi]
    width = hi - lo
    t = np.mod(v - lo, 2.0 * width)
    return lo + np.minimum(t, 2.0 * width - t)


def de_minimize(objective: Callable[[np.ndarray], float], box,
                config: Optional[DeConfig] = None) -> DeResult:
    """Minimize ``objective`` over a box; returns the best point found.

    Parameters
    ----------
    objective : callable
        Maps a parameter vector inside the box to a float; +inf marks
        infeasible points and steers the search away.
    box : (lo, hi)
        Componentwise bounds, lo < hi.
    config : DeConfig
        Hyperparameters; the default population is 15 per dimension.

    Raises
    ------
    OptimizationError
        If every evaluated point returned a non-finite objective.
    """
    config = config or DeConfig()
    lo = np.asarray(box[0], dtype=float)
    hi = np.asarray(box[1], dtype=float)
    if lo.shape != hi.shape or lo.ndim != 1 or np.any(lo >= hi):
        raise ConfigurationError("box must satisfy lo < hi componentwise")
    d = lo.size
    npop = config.population or 15 * d
    rng = np.random.default_rng(config.seed)

    # Latin hypercube: one stratified uniform per cell and dimension
    u = (rng.permuted(np.tile(np.arange(npop), (d, 1)), axis=1).T
         + rng.uniform(size=(npop, d))) / npop
    pop = lo + u * (hi - lo)
    vals = np.array([float(objective(pop[i])) for i in range(npop)])
    n_evals = npop
    n_inf = int(np.sum(~np.isfinite(vals)))

    trace = []
    gen = 0
    for gen in range(1, config.max_gens + 1):
        # fixed consumption order: indices, crossover mask, forced dims
        r = np.empty((npop, 3), dtype=int)
        for i in range(npop):
            r[i] = rng.choice(npop - 1, size=3, replace=False)
        r[r >= np.arange(npop)[:, None]] += 1
        cross = rng.uniform(size=(npop, d)) < config.CR
        jrand = rng.integers(0, d, size=npop)
        cross[np.arange(npop), jrand] = True

        mutant = pop[r[:, 0]] + config.F * (pop[r[:, 1]] - pop[r[:, 2]])
        mutant = _reflect(mutant, lo, hi)
        trial = np.where(cross, mutant, pop)
        for i in range(npop):
            v = float(objective(trial[i]))
            n_evals += 1
            if not np.isfinite(v):
                n_inf += 1
            if v <= vals[i]:
                vals[i] = v
                pop[i] = trial[i]
        trace.append(vals.min())
        finite = np.isfinite(vals)
        if np.all(finite) and vals.max() - vals.min() < config.tol:
            break

    best = int(np.argmin(vals))
    if not np.isfinite(vals[best]):
        raise OptimizationError(
            "objective returned a non-finite value at every point sampled")
    return DeResult(theta=pop[best].copy(), value=float(vals[best]),
                    generations=gen, n_evals=n_evals, n_infeasible=n_inf,
                    trace=np.asarray(trace))
