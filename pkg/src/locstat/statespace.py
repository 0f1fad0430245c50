"""Parametric state-space algebra for the two-dimensional benchmark family.

Holds the parameter-to-matrices map, the matrix exponential, the sampled
model (one-step transition and exact noise covariance over a sampling
interval), spectral densities of the continuous and sampled processes,
and the battery of model-admissibility checks used before estimation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import expm, solve_continuous_lyapunov

from .errors import ConfigurationError, NumericError

__all__ = [
    "ModelFamily",
    "SampledModel",
    "example_family",
    "example2d_family",
    "matrix_exp",
    "sampled_noise_cov",
    "sampled_model",
    "spectral_density_sampled",
    "sampled_density_grid",
    "spectral_density_continuous",
    "stationary_state_cov",
    "sampled_autocovariance",
    "check_assumptions",
    "AssumptionReport",
]


@dataclass(frozen=True)
class ModelFamily:
    """Map from a parameter box into (A, B, C, Sigma) state-space tuples.

    ``matrices`` takes a parameter vector and returns the p x p drift A,
    the p-vectors B (observation) and C (noise loading), and the driving
    noise variance Sigma > 0.  The optional vectorized builders
    ``diag_drift``, ``drive_vec`` and ``out_vec`` map an (n, d) array of
    parameters to (n, p) arrays and unlock the fast simulation path for
    families whose drift is diagonal.
    """

    name: str
    p: int
    dim: int
    box_lo: np.ndarray
    box_hi: np.ndarray
    matrices: Callable[[np.ndarray], tuple]
    diag_drift: Optional[Callable] = None
    drive_vec: Optional[Callable] = None
    out_vec: Optional[Callable] = None

    def contains(self, theta) -> bool:
        theta = np.asarray(theta, dtype=float)
        return bool(np.all(theta >= self.box_lo - 1e-12)
                    and np.all(theta <= self.box_hi + 1e-12))

    def box_grid(self, density: int) -> np.ndarray:
        """All corners of a per-dimension linspace over the box."""
        axes = [np.linspace(lo, hi, density) if density > 1
                else np.array([(lo + hi) / 2.0])
                for lo, hi in zip(self.box_lo, self.box_hi)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)


def example_family(theta) -> tuple:
    """Matrices of the two-dimensional benchmark family.

    A = diag(theta1, theta2), B = (1, -1)'/(theta2 - theta1),
    C = (-theta1*(1 + theta2), -theta2*(1 + theta1))', Sigma = theta3.

    Requires theta1, theta2 < 0, theta1 != theta2, theta1, theta2 != -1
    and theta3 > 0; violations raise ConfigurationError naming the
    broken restriction.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (3,):
        raise ConfigurationError("this family takes a 3-vector parameter")
    t1, t2, t3 = theta
    if not (t1 < 0 and t2 < 0):
        raise ConfigurationError("drift parameters theta1, theta2 must be "
                                 "strictly negative")
    if abs(t1 - t2) < 1e-12:
        raise ConfigurationError("theta1 == theta2 leaves B undefined")
    if abs(1.0 + t1) < 1e-12 or abs(1.0 + t2) < 1e-12:
        raise ConfigurationError("theta1, theta2 == -1 zeroes a noise "
                                 "loading and breaks controllability")
    if not t3 > 0:
        raise ConfigurationError("noise variance theta3 must be positive")
    A = np.diag([t1, t2])
    B = np.array([1.0, -1.0]) / (t2 - t1)
    C = np.array([-t1 * (1.0 + t2), -t2 * (1.0 + t1)])
    return A, B, C, float(t3)


def _example_diag_drift(thetas: np.ndarray) -> np.ndarray:
    return thetas[:, :2]


def _example_drive_vec(thetas: np.ndarray) -> np.ndarray:
    t1, t2 = thetas[:, 0], thetas[:, 1]
    return np.stack([-t1 * (1.0 + t2), -t2 * (1.0 + t1)], axis=-1)


def _example_out_vec(thetas: np.ndarray) -> np.ndarray:
    d = thetas[:, 1] - thetas[:, 0]
    return np.stack([1.0 / d, -1.0 / d], axis=-1)


_EXAMPLE_BOX = (np.array([-0.7, -3.5, 0.05]), np.array([-0.3, -2.5, 1.0]))


def example2d_family(box_lo=None, box_hi=None) -> ModelFamily:
    """The benchmark family over its default compact parameter box.

    The default box theta1 in [-0.7, -0.3], theta2 in [-3.5, -2.5],
    theta3 in [0.05, 1] keeps theta1 > theta2, avoids -1 and fixes the
    labeling of the two drift rates.
    """
    lo = np.asarray(box_lo if box_lo is not None else _EXAMPLE_BOX[0],
                    dtype=float)
    hi = np.asarray(box_hi if box_hi is not None else _EXAMPLE_BOX[1],
                    dtype=float)
    if lo.shape != (3,) or hi.shape != (3,) or np.any(lo >= hi):
        raise ConfigurationError("parameter box must satisfy lo < hi "
                                 "componentwise")
    return ModelFamily(
        name="example2d", p=2, dim=3, box_lo=lo, box_hi=hi,
        matrices=example_family, diag_drift=_example_diag_drift,
        drive_vec=_example_drive_vec, out_vec=_example_out_vec)


def matrix_exp(M: np.ndarray, t: float = 1.0) -> np.ndarray:
    """e^{M t} by scaling-and-squaring with Pade approximation."""
    M = np.asarray(M, dtype=float)
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix entries must be finite")
    return expm(M * t)


def _sampled_pair(A, C, Sigma, Delta) -> tuple:
    # One block exponential yields both the transition Phi = e^{A Delta}
    # and the noise covariance integral.
    p = A.shape[0]
    F = np.zeros((2 * p, 2 * p))
    F[:p, :p] = A
    F[:p, p:] = Sigma * np.outer(C, C)
    F[p:, p:] = -A.T
    E = expm(F * Delta)
    Phi = E[:p, :p]
    Qn = E[:p, p:] @ Phi.T
    return Phi, 0.5 * (Qn + Qn.T)


def sampled_noise_cov(A, C, Sigma: float, Delta: float) -> np.ndarray:
    """Covariance Sigma * int_0^Delta e^{As} CC' e^{A's} ds.

    Computed with the block-matrix-exponential method: exponentiate
    [[A, Sigma*CC'], [0, -A']] * Delta and combine blocks.  The result
    is symmetrized and positive semidefinite.
    """
    A = np.asarray(A, dtype=float)
    C = np.asarray(C, dtype=float).reshape(-1)
    if Delta < 0:
        raise ValueError("Delta must be nonnegative")
    _, Qn = _sampled_pair(A, C, Sigma, Delta)
    return Qn


@dataclass(frozen=True)
class SampledModel:
    """One-step representation of the process observed every Delta."""

    Phi: np.ndarray
    Qn: np.ndarray
    B: np.ndarray
    Delta: float

    @property
    def p(self) -> int:
        return self.Phi.shape[0]


def sampled_model(family: ModelFamily, theta, Delta: float) -> SampledModel:
    """Build (Phi, Qn, B) for a parameter; validates stability and PSD."""
    theta = np.asarray(theta, dtype=float)
    A, B, C, Sigma = family.matrices(theta)
    Phi, Qn = _sampled_pair(np.asarray(A, float), np.asarray(C, float),
                            Sigma, Delta)
    eig = np.linalg.eigvals(Phi)
    if np.max(np.abs(eig)) >= 1.0:
        raise ConfigurationError(
            f"sampled transition is not stable at theta = {theta.tolist()}")
    w = np.linalg.eigvalsh(Qn)
    if w.min() < -1e-10 * max(1.0, w.max()):
        raise NumericError("sampled noise covariance is not PSD")
    return SampledModel(Phi=Phi, Qn=Qn, B=np.asarray(B, dtype=float),
                        Delta=float(Delta))


def _resolvent_vectors(Phi: np.ndarray, B: np.ndarray,
                       z: np.ndarray) -> np.ndarray:
    """r(z) = (conj(z) I - Phi')^{-1} B for each z on the unit circle."""
    lam = np.linalg.eigvals(Phi)
    gap = np.abs(z[:, None] - lam[None, :])
    if gap.min() < 1e-12:
        raise NumericError("resolvent nearly singular: a transition "
                           "eigenvalue sits on the evaluation circle")
    PhiT = Phi.T
    try:
        w, V = np.linalg.eig(PhiT)
        if np.linalg.cond(V) < 1e12:
            coef = np.linalg.solve(V, B.astype(complex))
            denom = np.conj(z)[:, None] - w[None, :]
            return (coef[None, :] / denom) @ V.T
    except np.linalg.LinAlgError:
        pass
    # defective transition matrix: fall back to batched direct solves
    p = Phi.shape[0]
    M = np.conj(z)[:, None, None] * np.eye(p) - PhiT[None, :, :]
    rhs = np.broadcast_to(B.astype(complex), (len(z), p))[..., None]
    return np.linalg.solve(M, rhs)[..., 0]


def density_at_circle(sm: SampledModel, z: np.ndarray) -> np.ndarray:
    """Sampled spectral density at precomputed points z = e^{i omega}."""
    r = _resolvent_vectors(sm.Phi, sm.B, z)
    q = r @ sm.Qn
    return np.sum(np.conj(r) * q, axis=1).real / (2.0 * np.pi)


def sampled_density_grid(sm: SampledModel, omega) -> np.ndarray:
    """Spectral density of the sampled process at frequencies ``omega``.

    f(w) = (1/2pi) B'(e^{iw}I - Phi)^{-1} Qn (e^{-iw}I - Phi')^{-1} B,
    real, nonnegative and even in w.
    """
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    return density_at_circle(sm, np.exp(1j * omega))


def spectral_density_sampled(family: ModelFamily, theta, omega,
                             Delta: float):
    """Sampled-process spectral density; scalar in, scalar out."""
    sm = sampled_model(family, theta, Delta)
    f = sampled_density_grid(sm, omega)
    return float(f[0]) if np.isscalar(omega) else f


def spectral_density_continuous(family: ModelFamily, theta, omega):
    """Spectral density of the stationary continuous-time process.

    f(w) = (Sigma/2pi) |H(iw)|^2 with transfer function
    H(x) = B'(xI - A)^{-1} C.
    """
    theta = np.asarray(theta, dtype=float)
    A, B, C, Sigma = family.matrices(theta)
    A = np.asarray(A, dtype=float)
    omegas = np.atleast_1d(np.asarray(omega, dtype=float))
    eig = np.linalg.eigvals(A)
    if np.min(np.abs(1j * omegas[:, None] - eig[None, :])) < 1e-12:
        raise NumericError("i*omega hits a drift eigenvalue")
    p = A.shape[0]
    M = 1j * omegas[:, None, None] * np.eye(p) - A[None, :, :]
    sol = np.linalg.solve(M, np.broadcast_to(
        np.asarray(C, complex), (len(omegas), p))[..., None])[..., 0]
    H = sol @ np.asarray(B, dtype=float)
    f = Sigma * (H * np.conj(H)).real / (2.0 * np.pi)
    return float(f[0]) if np.isscalar(omega) else f


def stationary_state_cov(A, C, Sigma: float) -> np.ndarray:
    """Solve A P + P A' + Sigma CC' = 0 for the stationary state covariance."""
    A = np.asarray(A, dtype=float)
    C = np.asarray(C, dtype=float).reshape(-1)
    P = solve_continuous_lyapunov(A, -Sigma * np.outer(C, C))
    return 0.5 * (P + P.T)


def sampled_autocovariance(family: ModelFamily, theta, Delta: float,
                           max_lag: int) -> np.ndarray:
    """Autocovariances B' e^{A Delta h} P B of the sampled process, h=0..max_lag."""
    A, B, C, Sigma = family.matrices(np.asarray(theta, dtype=float))
    P = stationary_state_cov(A, C, Sigma)
    Phi = expm(np.asarray(A, float) * Delta)
    B = np.asarray(B, dtype=float)
    out = np.empty(max_lag + 1)
    M = P
    for h in range(max_lag + 1):
        out[h] = B @ M @ B
        M = Phi @ M
    return out


# ---------------------------------------------------------------------------
# Admissibility checks


@dataclass
class AssumptionCheck:
    name: str
    passed: bool
    worst_theta: Optional[np.ndarray]
    detail: str


@dataclass
class AssumptionReport:
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list:
        return [c for c in self.checks if not c.passed]

    def __str__(self) -> str:
        lines = []
        for c in self.checks:
            status = "pass" if c.passed else "FAIL"
            lines.append(f"{c.name}: {status} ({c.detail})")
        return "\n".join(lines)


def _rank_deficient(M: np.ndarray) -> bool:
    s = np.linalg.svd(M, compute_uv=False)
    p = M.shape[0]
    return s.min() <= p * np.finfo(float).eps * s.max()


def check_assumptions(family: ModelFamily, Delta: float = 1.0,
                      grid_density: int = 4,
                      n_frequencies: int = 32) -> AssumptionReport:
    """Evaluate the model admissibility conditions over the parameter box.

    Checks, each on a ``grid_density``-per-dimension grid of parameters:
    positive noise variance, strictly stable drift, continuity of the
    coefficient maps (finite-difference spot check) with B != 0, joint
    controllability and observability, pairwise distinct spectral
    densities, and the drift spectrum confined to |Im| < pi/Delta.
    Report-only; nothing raises.
    """
    grid = family.box_grid(grid_density)
    checks = []

    def run(name, fn, detail_pass):
        worst = None
        detail = detail_pass
        ok = True
        for theta in grid:
            good, info = fn(theta)
            if not good:
                ok = False
                worst = theta
                detail = info
                break
        checks.append(AssumptionCheck(name, ok, worst, detail))

    def has_matrices(theta):
        try:
            return True, family.matrices(theta)
        except (ConfigurationError, ValueError) as exc:
            return False, str(exc)

    def chk_sigma(theta):
        good, res = has_matrices(theta)
        if not good:
            return False, res
        return (res[3] > 0), "noise variance must be positive"
    run("noise-variance", chk_sigma, "Sigma > 0 on the grid")

    worst_re = -np.inf
    worst_theta = None
    ok = True
    for theta in grid:
        good, res = has_matrices(theta)
        if not good:
            ok = False
            worst_theta = theta
            break
        re = np.linalg.eigvals(np.asarray(res[0], float)).real.max()
        if re > worst_re:
            worst_re, worst_theta = re, theta
        if re >= 0:
            ok = False
            break
    checks.append(AssumptionCheck(
        "stable-drift", ok, worst_theta,
        f"max Re(eig) over grid = {worst_re:.6g}"))

    def chk_smooth(theta):
        good, res = has_matrices(theta)
        if not good:
            return False, res
        A, B, C, Sigma = res
        if np.linalg.norm(B) == 0.0:
            return False, "B vanished"
        eps = 1e-6
        for i in range(family.dim):
            shifted = np.array(theta, dtype=float)
            shifted[i] += eps
            if not family.contains(shifted):
                shifted[i] -= 2 * eps
            try:
                A2, B2, C2, S2 = family.matrices(shifted)
            except (ConfigurationError, ValueError) as exc:
                return False, str(exc)
            step = (np.linalg.norm(np.asarray(A2) - A)
                    + np.linalg.norm(np.asarray(B2) - B)
                    + np.linalg.norm(np.asarray(C2) - C) + abs(S2 - Sigma))
            if not np.isfinite(step) or step > 1e6 * eps:
                return False, f"coefficient jump along component {i}"
        return True, ""
    run("smooth-maps", chk_smooth, "finite differences bounded, B != 0")

    def chk_minimal(theta):
        good, res = has_matrices(theta)
        if not good:
            return False, res
        A, B, C, _ = res
        A = np.asarray(A, float)
        p = family.p
        ctrl = np.column_stack([np.linalg.matrix_power(A, k) @ C
                                for k in range(p)])
        obs = np.column_stack([np.linalg.matrix_power(A.T, k) @ B
                               for k in range(p)])
        if _rank_deficient(ctrl):
            return False, "controllability matrix rank deficient"
        if _rank_deficient(obs):
            return False, "observability matrix rank deficient"
        return True, ""
    run("minimal", chk_minimal, "controllable and observable on the grid")

    # pairwise distinct spectral densities on a coarse grid
    coarse = family.box_grid(min(grid_density, 3))
    freqs = np.linspace(0.0, 8.0, n_frequencies)
    ok = True
    worst = None
    detail = "pairwise max density gap > 0"
    dens = []
    for theta in coarse:
        try:
            dens.append(spectral_density_continuous(family, theta, freqs))
        except (ConfigurationError, ValueError, NumericError):
            dens.append(None)
    for i in range(len(coarse)):
        for j in range(i + 1, len(coarse)):
            if dens[i] is None or dens[j] is None:
                continue
            if np.max(np.abs(dens[i] - dens[j])) < 1e-10:
                ok = False
                worst = coarse[i]
                detail = (f"densities coincide at theta = "
                          f"{coarse[i].tolist()} and {coarse[j].tolist()}")
                break
        if not ok:
            break
    checks.append(AssumptionCheck("identifiable-spectrum", ok, worst, detail))

    def chk_spectrum_strip(theta):
        good, res = has_matrices(theta)
        if not good:
            return False, res
        eig = np.linalg.eigvals(np.asarray(res[0], float))
        if np.max(np.abs(eig.imag)) >= np.pi / Delta:
            return False, "drift eigenvalue outside the sampling strip"
        return True, ""
    run("sampling-strip", chk_spectrum_strip,
        "|Im(eig)| < pi/Delta on the grid")

    return AssumptionReport(checks)
