"""Euler-Maruyama simulation of time-varying OU and state-space paths.

Paths are generated on a fine grid of step ``delta_N / sim_ratio`` and
stored at observation resolution ``delta_N`` (every ``sim_ratio``-th fine
point; no interpolation), matching the 1:sim_ratio protocol between
sampled and simulated points.  The fine-grid recursion is evaluated in
vectorized blocks of one observation interval each, which is exact for
the Euler scheme and keeps long paths affordable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import ConfigurationError
from .levy import LevySpec, RngStream, sample_increments

__all__ = [
    "SamplingGrid",
    "paper_grid",
    "o2_grid",
    "Window",
    "Path",
    "PiecewiseLinearCurve",
    "ConstantCurve",
    "curve_by_name",
    "CURVES",
    "simulate_tv_ou",
    "simulate_tv_statespace",
    "extract_window",
]

# ---------------------------------------------------------------------------
# Coefficient curves


def a1(t):
    """Coefficient curve 1/10 + |cos(t/500)|/2."""
    t = np.asarray(t, dtype=float)
    return 0.1 + 0.5 * np.abs(np.cos(t / 500.0))


def a2(t):
    """Coefficient curve 1 + sin(t/150)/10."""
    t = np.asarray(t, dtype=float)
    return 1.0 + 0.1 * np.sin(t / 150.0)


def a3(t):
    """Coefficient curve 1/2 - t/5000."""
    t = np.asarray(t, dtype=float)
    return 0.5 - t / 5000.0


def theta1(t):
    """State-space drift curve -1/2 + 0.1*|sin(t/500)|."""
    t = np.asarray(t, dtype=float)
    return -0.5 + 0.1 * np.abs(np.sin(t / 500.0))


def theta2(t):
    """State-space drift curve -3 - 0.2*|cos(t/500)|."""
    t = np.asarray(t, dtype=float)
    return -3.0 - 0.2 * np.abs(np.cos(t / 500.0))


CURVES: dict[str, Callable] = {
    "a1": a1, "a2": a2, "a3": a3, "theta1": theta1, "theta2": theta2,
}


def curve_by_name(name: str) -> Callable:
    try:
        return CURVES[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown coefficient curve {name!r}; "
            f"choose from {sorted(CURVES)}") from None


@dataclass(frozen=True)
class PiecewiseLinearCurve:
    """Piecewise-linear curve through (t, value) knots; flat outside."""

    knots_t: tuple
    knots_v: tuple

    def __post_init__(self):
        t = np.asarray(self.knots_t, dtype=float)
        if t.size < 2 or np.any(np.diff(t) <= 0):
            raise ConfigurationError(
                "piecewise-linear knots must be strictly increasing in t")
        if len(self.knots_t) != len(self.knots_v):
            raise ConfigurationError("knot times and values differ in length")

    def __call__(self, t):
        return np.interp(np.asarray(t, dtype=float),
                         self.knots_t, self.knots_v)


@dataclass(frozen=True)
class ConstantCurve:
    value: float

    def __call__(self, t):
        return np.full_like(np.asarray(t, dtype=float), self.value)


def theta_star_curve(sigma_l: float) -> Callable:
    """True parameter triple (theta1(t), theta2(t), sigma_l) as one map."""
    def curve(t):
        t = np.asarray(t, dtype=float)
        return np.stack(
            [theta1(t), theta2(t), np.full_like(t, sigma_l)], axis=-1)
    return curve


def constant_theta(theta: Sequence[float]) -> Callable:
    theta = np.asarray(theta, dtype=float)

    def curve(t):
        t = np.asarray(t, dtype=float)
        return np.broadcast_to(theta, t.shape + theta.shape).copy()
    return curve


# ---------------------------------------------------------------------------
# Sampling grids and observation windows


@dataclass(frozen=True)
class SamplingGrid:
    """Equidistant observation grid around a fixed estimation time u.

    Observation times are tau_i = u + i*delta_N for i = -m_N..m_N with
    m_N = floor(b_N/delta_N).  Under scheme O1 the products N*delta_N
    stay fixed at Delta; under O2 they grow with N.
    """

    N: int
    delta_N: float
    b_N: float
    u: float
    Delta: float
    scheme: str = "O1"

    def __post_init__(self):
        if self.N < 1:
            raise ConfigurationError("N must be a positive integer")
        if not (self.delta_N > 0 and self.b_N > 0 and self.u > 0
                and self.Delta > 0):
            raise ConfigurationError("delta_N, b_N, u and Delta must be > 0")
        if self.scheme not in ("O1", "O2"):
            raise ConfigurationError("scheme must be 'O1' or 'O2'")
        if self.scheme == "O1":
            if abs(self.N * self.delta_N - self.Delta) > 1e-12 * self.Delta:
                raise ConfigurationError(
                    "scheme O1 requires N*delta_N == Delta exactly")
        if self.m_N < 1:
            raise ConfigurationError("grid too coarse: m_N = "
                                     "floor(b_N/delta_N) must be >= 1")

    @property
    def m_N(self) -> int:
        # guard against 99.999... artifacts when b_N/delta_N is integral
        return int(np.floor(self.b_N / self.delta_N + 1e-9))

    def times(self) -> np.ndarray:
        """Observation times tau_i, i = -m_N..m_N."""
        i = np.arange(-self.m_N, self.m_N + 1, dtype=float)
        return self.u + i * self.delta_N

    @property
    def n_obs(self) -> int:
        return 2 * self.m_N + 1


def paper_grid(N: int, u: float, Delta: float = 1.0,
               bandwidth_scale: float = 400.0) -> SamplingGrid:
    """O1 grid with delta_N = Delta/N and b_N = bandwidth_scale/sqrt(N)."""
    return SamplingGrid(N=N, delta_N=Delta / N,
                        b_N=bandwidth_scale / np.sqrt(N),
                        u=u, Delta=Delta, scheme="O1")


def o2_grid(N: int, u: float, Delta: float = 1.0,
            bandwidth_scale: float = 400.0) -> SamplingGrid:
    """O2 grid with delta_N = N**(-1/2) (so N*delta_N grows like sqrt(N))."""
    return SamplingGrid(N=N, delta_N=N ** -0.5,
                        b_N=bandwidth_scale / N ** 0.25,
                        u=u, Delta=Delta, scheme="O2")


@dataclass
class Window:
    """Observations y_{-m_N}..y_{m_N} on a sampling grid."""

    grid: SamplingGrid
    values: np.ndarray
    left_history: Optional[np.ndarray] = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n_obs,):
            raise ConfigurationError(
                f"window must hold exactly 2*m_N+1 = {self.grid.n_obs} "
                f"values, got {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ConfigurationError("window values must be finite")


# ---------------------------------------------------------------------------
# Paths


@dataclass
class Path:
    """Uniformly spaced path values; ``states`` holds the latent vector."""

    t0: float
    dt: float
    values: np.ndarray
    states: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def time(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self.values))

    @property
    def t_end(self) -> float:
        return self.t0 + self.dt * (len(self.values) - 1)


def _normalize_horizon(horizon) -> float:
    if np.isscalar(horizon):
        t1 = float(horizon)
    else:
        t0, t1 = (float(h) for h in horizon)
        if t0 != 0.0:
            raise ConfigurationError("simulation must start at t = 0")
    if t1 <= 0:
        raise ConfigurationError("horizon end must be positive")
    return t1


def _as_stream(seed: Union[int, RngStream]) -> RngStream:
    return seed if isinstance(seed, RngStream) else RngStream(int(seed))


# Observation blocks are grouped into chunks of this many blocks so the
# fine-grid work runs through numpy in large batches.
_CHUNK_BLOCKS = 1024


def _scalar_blocks(coefs: np.ndarray, forcing: np.ndarray) -> tuple:
    """One-step transfer G and aggregated noise H per observation block.

    ``coefs`` holds per-fine-step multipliers alpha in (0, 1], ``forcing``
    the per-step additive noise, both shaped (blocks, steps).  Within a
    block the exact Euler solution is y_end = G*y_start + H with
    G = prod(alpha) and H = G * sum(forcing/cumprod(alpha)).
    """
    logs = np.log(coefs)
    cum = np.cumsum(logs, axis=1)
    g = np.exp(cum[:, -1])
    h = g * np.sum(forcing * np.exp(-cum), axis=1)
    return g, h


def simulate_tv_ou(a: Callable, noise: LevySpec, N: int, horizon,
                   sim_ratio: int = 1000, seed: Union[int, RngStream] = 0,
                   delta_N: Optional[float] = None) -> Path:
    """Simulate dY(t) = -N*a(t)*Y(t)dt + dL(Nt) from Y(0) = 0.

    The Euler step on the fine grid (step h = delta_N/sim_ratio) is
    y <- y*(1 - N*a(t)*h) + dL with dL an exact driving-noise increment
    over N*h.  The returned path is stored at observation resolution
    delta_N.

    Raises
    ------
    ConfigurationError
        If a(t) is not strictly positive on the horizon or the Euler
        step is unstable (N*a*h >= 1); increase ``sim_ratio``.
    """
    if sim_ratio < 1:
        raise ConfigurationError("sim_ratio must be >= 1")
    t1 = _normalize_horizon(horizon)
    if delta_N is None:
        delta_N = 1.0 / N
    h = delta_N / sim_ratio
    n_obs = int(round(t1 / delta_N))
    rng = _as_stream(seed)

    out = np.empty(n_obs + 1)
    out[0] = 0.0
    y = 0.0
    block = sim_ratio
    pos = 0  # completed observation intervals
    while pos < n_obs:
        nb = min(_CHUNK_BLOCKS, n_obs - pos)
        n = nb * block
        ts = (pos * block + np.arange(n)) * h
        avals = np.asarray(a(ts), dtype=float)
        if np.any(avals <= 0):
            bad = ts[np.argmax(avals <= 0)]
            raise ConfigurationError(
                f"OU coefficient must be strictly positive; a({bad}) <= 0")
        c = (N * h) * avals
        if np.any(c >= 1.0):
            raise ConfigurationError(
                "unstable Euler step: N*a(t)*h >= 1; increase sim_ratio")
        dl = sample_increments(noise, N * h, n, rng)
        g, agg = _scalar_blocks((1.0 - c).reshape(nb, block),
                                dl.reshape(nb, block))
        for i in range(nb):
            y = g[i] * y + agg[i]
            out[pos + i + 1] = y
        pos += nb
    return Path(t0=0.0, dt=delta_N, values=out,
                meta={"N": N, "sim_ratio": sim_ratio, "model": "ou"})


def simulate_tv_statespace(family, theta_curve: Callable, noise: LevySpec,
                           N: int, horizon, sim_ratio: int = 1000,
                           seed: Union[int, RngStream] = 0,
                           delta_N: Optional[float] = None) -> Path:
    """Simulate Y(t) = B(t)'X(t), dX(t) = N*A(t)X(t)dt + C(t)dL(Nt).

    ``theta_curve`` maps times to parameter vectors; the family turns
    each parameter into (A, B, C).  X starts at 0.  Requires every
    eigenvalue of A along the curve to have strictly negative real part
    (checked on the fine grid for diagonal families, on a coarse grid
    otherwise).
    """
    if sim_ratio < 1:
        raise ConfigurationError("sim_ratio must be >= 1")
    t1 = _normalize_horizon(horizon)
    if delta_N is None:
        delta_N = 1.0 / N
    h = delta_N / sim_ratio
    n_obs = int(round(t1 / delta_N))
    rng = _as_stream(seed)
    p = family.p

    if family.diag_drift is None:
        return _simulate_statespace_dense(
            family, theta_curve, noise, N, t1, h, n_obs, sim_ratio,
            delta_N, rng)

    states = np.zeros((n_obs + 1, p))
    x = np.zeros(p)
    block = sim_ratio
    pos = 0
    while pos < n_obs:
        nb = min(_CHUNK_BLOCKS, n_obs - pos)
        n = nb * block
        ts = (pos * block + np.arange(n)) * h
        thetas = np.asarray(theta_curve(ts), dtype=float)
        lam = np.asarray(family.diag_drift(thetas), dtype=float)  # (n, p)
        if np.any(lam >= 0):
            flat = np.argmax(np.any(lam >= 0, axis=1))
            raise ConfigurationError(
                "drift eigenvalue with nonnegative real part at "
                f"t = {ts[flat]}")
        c = (N * h) * lam
        if np.any(c <= -1.0):
            raise ConfigurationError(
                "unstable Euler step: N*|eig(A)|*h >= 1; increase sim_ratio")
        cvec = np.asarray(family.drive_vec(thetas), dtype=float)  # (n, p)
        dl = sample_increments(noise, N * h, n, rng)
        for k in range(p):
            g, agg = _scalar_blocks(
                (1.0 + c[:, k]).reshape(nb, block),
                (cvec[:, k] * dl).reshape(nb, block))
            xk = x[k]
            for i in range(nb):
                xk = g[i] * xk + agg[i]
                states[pos + i + 1, k] = xk
            x[k] = xk
        pos += nb

    t_obs = delta_N * np.arange(n_obs + 1)
    bvec = np.asarray(family.out_vec(
        np.asarray(theta_curve(t_obs), dtype=float)), dtype=float)
    values = np.einsum("ij,ij->i", bvec, states)
    return Path(t0=0.0, dt=delta_N, values=values, states=states,
                meta={"N": N, "sim_ratio": sim_ratio, "model": "statespace"})


def _simulate_statespace_dense(family, theta_curve, noise, N, t1, h,
                               n_obs, sim_ratio, delta_N, rng) -> Path:
    # Fallback stepper for families without a diagonal drift; plain loop,
    # meant for short diagnostic runs.
    p = family.p
    check_t = np.linspace(0.0, t1, 257)
    for t in check_t:
        A, _, _, _ = family.matrices(np.atleast_1d(theta_curve(t)))
        eig = np.linalg.eigvals(A)
        if np.any(eig.real >= 0):
            raise ConfigurationError(
                f"drift eigenvalue with nonnegative real part at t = {t}")
        if np.max(np.abs(eig)) * N * h >= 1.0:
            raise ConfigurationError(
                "unstable Euler step: N*|eig(A)|*h >= 1; increase sim_ratio")
    n_fine = n_obs * sim_ratio
    dl = sample_increments(noise, N * h, n_fine, rng)
    x = np.zeros(p)
    states = np.zeros((n_obs + 1, p))
    for k in range(n_fine):
        t = k * h
        A, _, C, _ = family.matrices(np.atleast_1d(theta_curve(t)))
        x = x + (N * h) * (A @ x) + C * dl[k]
        if (k + 1) % sim_ratio == 0:
            states[(k + 1) // sim_ratio] = x
    t_obs = delta_N * np.arange(n_obs + 1)
    bvec = np.stack([family.matrices(np.atleast_1d(theta_curve(t)))[1]
                     for t in t_obs])
    values = np.einsum("ij,ij->i", bvec, states)
    return Path(t0=0.0, dt=delta_N, values=values, states=states,
                meta={"N": N, "sim_ratio": sim_ratio, "model": "statespace"})


def extract_window(path: Path, grid: SamplingGrid,
                   n_left_history: int = 0) -> Window:
    """Read the observations y(tau_i), i = -m_N..m_N, off a stored path.

    Observation times must align exactly with stored path points; there
    is no interpolation.  ``n_left_history`` additionally collects the
    values at tau_{-m_N-1}, ..., tau_{-m_N-n} (oldest first).
    """
    taus = grid.times()
    lo = taus[0] - n_left_history * grid.delta_N
    if lo < path.t0 - 1e-9 or taus[-1] > path.t_end + 1e-9:
        raise ConfigurationError(
            f"window [{lo}, {taus[-1]}] exceeds the simulated horizon "
            f"[{path.t0}, {path.t_end}]")
    step = grid.delta_N / path.dt
    if abs(step - round(step)) > 1e-9 or round(step) < 1:
        raise ConfigurationError(
            "grid spacing delta_N is not a multiple of the path resolution")
    start = (grid.u - grid.m_N * grid.delta_N - path.t0) / path.dt
    if abs(start - round(start)) > 1e-6:
        raise ConfigurationError(
            "estimation point u does not align with stored path points")
    step = int(round(step))
    start = int(round(start))
    idx = start + step * np.arange(grid.n_obs)
    values = path.values[idx]
    hist = None
    if n_left_history > 0:
        hidx = start - step * np.arange(n_left_history, 0, -1)
        hist = path.values[hidx]
    return Window(grid=grid, values=values, left_history=hist)
