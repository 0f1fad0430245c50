"""Centered driving-noise increments: Gaussian and normal-inverse Gaussian.

Both families are specified through the law of the unit increment and
sampled by exact methods, so increments over any time step carry the
closed-form mean and variance returned by :func:`levy_moments`.  The NIG
sampler uses the normal variance-mean mixture representation with an
inverse-Gaussian mixing variable drawn by the Michael-Schucany-Haas
transform; no density inversion is involved.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "RngStream",
    "GaussianLevy",
    "NIGLevy",
    "LevySpec",
    "nig_centered",
    "levy_moments",
    "sample_increment",
    "sample_increments",
]


class RngStream:
    """Counter-based pseudo-random stream with a 64-bit seed.

    Streams are indexed: ``RngStream(seed, k)`` and ``RngStream(seed, j)``
    are statistically independent for ``k != j``, so each Monte Carlo
    replication can own the stream whose index equals the replication
    index.  A single stream must not be shared across threads; distinct
    streams may be used concurrently.
    """

    def __init__(self, seed: int, stream: int = 0):
        if not (0 <= int(seed) < 2 ** 64):
            raise ValueError("seed must fit in 64 bits")
        if int(stream) < 0:
            raise ValueError("stream index must be nonnegative")
        self.seed = int(seed)
        self.stream = int(stream)
        key = np.array([self.seed, self.stream], dtype=np.uint64)
        self.generator = np.random.Generator(np.random.Philox(key=key))

    def substream(self, index: int) -> "RngStream":
        """Derive an independent stream; used for per-replication RNGs."""
        return RngStream(self.seed, self.stream * 1_000_003 + index + 1)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream={self.stream})"


@dataclass(frozen=True)
class GaussianLevy:
    """Centered Brownian driver; ``sigma2`` is the variance of L(1)."""

    sigma2: float

    def __post_init__(self):
        if not (self.sigma2 > 0 and np.isfinite(self.sigma2)):
            raise ValueError("sigma2 must be a positive finite number")


@dataclass(frozen=True)
class NIGLevy:
    """Normal-inverse Gaussian driver with parameters (alpha, beta, delta_nig, mu).

    Admissibility requires ``alpha**2 > beta**2`` and ``delta_nig > 0``.
    The process must be centered: ``mu + delta_nig * beta / kappa == 0``
    with ``kappa = sqrt(alpha**2 - beta**2)``; use :func:`nig_centered` to
    construct a spec with the centering location built in.
    """

    alpha: float
    beta: float
    delta_nig: float
    mu: float

    def __post_init__(self):
        if not (self.alpha >= 0 and np.isfinite(self.alpha)):
            raise ValueError("alpha must be nonnegative and finite")
        if self.alpha ** 2 <= self.beta ** 2:
            raise ValueError("NIG requires alpha**2 > beta**2")
        if not (self.delta_nig > 0 and np.isfinite(self.delta_nig)):
            raise ValueError("NIG requires delta_nig > 0")
        mean = self.mu + self.delta_nig * self.beta / self.kappa
        scale = max(1.0, abs(self.mu))
        if abs(mean) > 1e-12 * scale:
            raise ValueError(
                f"NIG spec is not centered: mean of L(1) is {mean!r}; "
                "set mu = -delta_nig*beta/sqrt(alpha**2-beta**2)")

    @property
    def kappa(self) -> float:
        return float(np.sqrt(self.alpha ** 2 - self.beta ** 2))


LevySpec = Union[GaussianLevy, NIGLevy]


def nig_centered(alpha: float, beta: float, delta_nig: float) -> NIGLevy:
    """NIG spec with the location chosen so that E[L(1)] = 0."""
    kappa = np.sqrt(alpha ** 2 - beta ** 2)
    return NIGLevy(alpha, beta, delta_nig, -delta_nig * beta / kappa)


def levy_moments(spec: LevySpec) -> tuple[float, float]:
    """Mean and variance of L(1) in closed form.

    Returns
    -------
    (mean, variance) : tuple of floats
        ``mean`` is 0 for every admissible spec; ``variance`` is sigma2
        for the Gaussian driver and ``delta_nig * alpha**2 / kappa**3``
        for the NIG driver.
    """
    if isinstance(spec, GaussianLevy):
        return 0.0, float(spec.sigma2)
    if isinstance(spec, NIGLevy):
        kappa = spec.kappa
        mean = spec.mu + spec.delta_nig * spec.beta / kappa
        var = spec.delta_nig * spec.alpha ** 2 / kappa ** 3
        return float(mean), float(var)
    raise TypeError(f"not a LevySpec: {spec!r}")


def nig_fourth_cumulant(spec: NIGLevy) -> float:
    """Fourth cumulant of L(1): 3*delta*alpha**2*(alpha**2+4*beta**2)/kappa**7."""
    kappa = spec.kappa
    return float(3.0 * spec.delta_nig * spec.alpha ** 2
                 * (spec.alpha ** 2 + 4.0 * spec.beta ** 2) / kappa ** 7)


def _inverse_gaussian(mean: float, shape: float, n: int,
                      rng: RngStream) -> np.ndarray:
    # Michael-Schucany-Haas transform; exact for IG(mean, shape).
    gen = rng.generator
    nu = gen.standard_normal(n)
    my = mean * (nu * nu)
    x = mean + (my - np.sqrt(my * (4.0 * shape + my))) \
        * (mean / (2.0 * shape))
    u = gen.uniform(size=n)
    take_x = u * (mean + x) <= mean
    return np.where(take_x, x, mean * mean / x)


def sample_increments(spec: LevySpec, dt: float, n: int,
                      rng: RngStream) -> np.ndarray:
    """Draw ``n`` independent increments of L over a time step ``dt``.

    Each increment has mean 0 and variance ``levy_moments(spec)[1] * dt``.
    Increments over dt are exact: Gaussian(0, sigma2*dt), or
    NIG(alpha, beta, delta_nig*dt, mu*dt) by infinite divisibility.
    """
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    if n < 0:
        raise ValueError("n must be nonnegative")
    if dt == 0.0:
        return np.zeros(n)
    gen = rng.generator
    if isinstance(spec, GaussianLevy):
        return gen.standard_normal(n) * np.sqrt(spec.sigma2 * dt)
    if isinstance(spec, NIGLevy):
        delta_t = spec.delta_nig * dt
        z = _inverse_gaussian(delta_t / spec.kappa, delta_t ** 2, n, rng)
        w = gen.standard_normal(n)
        return spec.mu * dt + spec.beta * z + np.sqrt(z) * w
    raise TypeError(f"not a LevySpec: {spec!r}")


def sample_increment(spec: LevySpec, dt: float, rng: RngStream) -> float:
    """One random increment of L over ``dt``; see :func:`sample_increments`."""
    return float(sample_increments(spec, dt, 1, rng)[0])
