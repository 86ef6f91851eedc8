"""Closed-form and root-finding approximations to the mean extinction time.

Every exponentially large quantity is computed in log form first; the
linear-scale value is materialized on demand (it overflows a double near
N ~ 1.7e4 at R0 = 1.5).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import linalg
from scipy.optimize import brentq

from .errors import NotApplicableError, NumericalFailureError, OutOfDomainError
from .model import ModelParams

#: Euler's constant (appears in the KL asymptotic formula)
EULER_GAMMA = float(np.euler_gamma)


class Method(str, Enum):
    DET = "Det"
    LIN = "Lin"
    DSS = "DSS"
    KL = "KL"
    AD = "AD"
    OU = "OU"
    FPE = "FPE"
    BBN = "BBN"
    HAMILTONIAN = "HamiltonianAction"
    DIFF = "Diff"
    EXACT = "Exact"
    MC = "MC"


@dataclass(frozen=True)
class ExtinctionEstimate:
    """A labeled extinction-time estimate (times in units of 1/gamma).

    For action methods ``value`` is the dimensionless exponent.  ``log_value``
    is set for methods computed in log space.  KL is the only method allowed
    to produce negative values.
    """

    method: Method
    value: float
    log_value: float | None = None
    std_error: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not math.isfinite(self.value) and self.log_value is None:
            raise ValueError(f"non-finite estimate for {self.method}")


def _require_subcritical(params: ModelParams, what: str):
    if params.r0() >= 1:
        raise NotApplicableError(f"{what} requires R0 < 1, got {params.r0()}")


def _require_supercritical(params: ModelParams, what: str):
    if params.r0() <= 1:
        raise NotApplicableError(f"{what} requires R0 > 1, got {params.r0()}")


# ---------------------------------------------------------------------------
# deterministic model
# ---------------------------------------------------------------------------

def det_solution(params: ModelParams, y0: float, t: float) -> float:
    """Explicit solution of the deterministic SIS equation (k = 1), valid
    for beta != gamma."""
    beta, gamma = params.beta, params.gamma
    if beta == gamma:
        raise NotApplicableError(
            "the explicit deterministic solution requires beta != gamma"
        )
    if not 0.0 <= y0 <= 1.0:
        raise OutOfDomainError(f"y0 must be in [0, 1], got {y0}")
    e = math.exp((beta - gamma) * t)
    y = (gamma - beta) * y0 * e / (gamma - beta + beta * (1.0 - e) * y0)
    return min(max(y, 0.0), 1.0)


def tau_det(params: ModelParams, y: float) -> float:
    """Deterministic hitting time of the 0.5-individual level, from an
    initial count of ``y`` individuals.  Below threshold only."""
    _require_subcritical(params, "the deterministic approximation")
    n = params.n_pop
    if not 0.5 <= y <= n:
        raise OutOfDomainError(f"y must be in [0.5, {n}], got {y}")
    r0, gamma = params.r0(), params.gamma
    return (1.0 / gamma) / (1.0 - r0) * (
        math.log(2.0 * y)
        + math.log((1.0 - r0 * (1.0 - 0.5 / n)) / (1.0 - r0 * (1.0 - y / n)))
    )


# ---------------------------------------------------------------------------
# linear birth-death / published asymptotics
# ---------------------------------------------------------------------------

def tau_lin(params: ModelParams, i: int) -> float:
    """Mean extinction time of the approximating linear birth-death process
    started from ``i`` individuals (independent of N)."""
    _require_subcritical(params, "the linear birth-death approximation")
    if i < 1:
        raise OutOfDomainError(f"i must be >= 1, got {i}")
    r0, gamma = params.r0(), params.gamma
    s = (1.0 - r0 ** (-i)) * math.log(1.0 - r0)
    s += sum((1.0 - r0 ** (m - i)) / m for m in range(1, i))
    return s / (gamma * (1.0 - r0))


def tau_dss(params: ModelParams, y: float) -> float:
    """Leading-order asymptotic for a macroscopic initial count ``y``."""
    _require_subcritical(params, "the DSS asymptotic")
    if y < 1:
        raise OutOfDomainError(f"y must be >= 1, got {y}")
    return math.log(y) / (params.gamma * (1.0 - params.r0()))


def tau_kl(params: ModelParams, y: float) -> float:
    """Alternative asymptotic; may legitimately return negative values for
    small ``y`` and is not monotone in ``y``."""
    _require_subcritical(params, "the KL asymptotic")
    r0, gamma, n = params.r0(), params.gamma, params.n_pop
    denom = 1.0 - r0 * (1.0 - y / n)
    if denom <= 0 or y <= 0:
        raise OutOfDomainError(
            f"log argument must be positive (y={y}, denom={denom})"
        )
    return (math.log(y) + math.log(denom) + EULER_GAMMA) / (gamma * denom)


def action_closed_form(params: ModelParams) -> float:
    """Large-deviations action A = 1/R0 - 1 + ln R0 (independent of the
    number of stages k)."""
    _require_supercritical(params, "the extinction action")
    r0 = params.r0()
    return 1.0 / r0 - 1.0 + math.log(r0)


def log_tau_h(params: ModelParams) -> float:
    """ln of the Hamiltonian leading-order estimate exp(N * A)."""
    return params.n_pop * action_closed_form(params)


def tau_h(params: ModelParams) -> float:
    return math.exp(log_tau_h(params))


def log_tau_ad(params: ModelParams) -> float:
    """ln of the rigorous k=1 asymptotic for extinction from
    quasi-stationarity."""
    _require_supercritical(params, "the AD asymptotic")
    r0, gamma, n = params.r0(), params.gamma, params.n_pop
    return (
        -math.log(gamma)
        + 0.5 * math.log(2.0 * math.pi / n)
        + math.log(r0) - 2.0 * math.log(r0 - 1.0)
        + n * action_closed_form(params)
    )


def tau_ad(params: ModelParams) -> float:
    return math.exp(log_tau_ad(params))


# ---------------------------------------------------------------------------
# Ornstein-Uhlenbeck tier
# ---------------------------------------------------------------------------

def log_tau_ou(params: ModelParams) -> float:
    """ln of the Ornstein-Uhlenbeck estimate (same expression for all k)."""
    _require_supercritical(params, "the OU approximation")
    r0, gamma, n = params.r0(), params.gamma, params.n_pop
    return (
        -math.log(gamma)
        + 0.5 * math.log(2.0 * math.pi * n / r0)
        + n * (r0 - 1.0) ** 2 / (2.0 * r0)
    )


def tau_ou(params: ModelParams) -> float:
    return math.exp(log_tau_ou(params))


def ou_validity(params: ModelParams) -> bool:
    """Rule of thumb: the Gaussian quasi-stationary approximation needs a
    coefficient of variation of at most 1/3, i.e. N > 9 R0 / (R0 - 1)^2."""
    _require_supercritical(params, "the OU validity rule")
    r0 = params.r0()
    return params.n_pop > 9.0 * r0 / (r0 - 1.0) ** 2


def ou_drift_and_noise(params: ModelParams):
    """Drift matrix J and local variance matrix B of the multivariate OU
    approximation around the endemic equilibrium."""
    _require_supercritical(params, "the OU linearization")
    beta, gamma, n, k = params.beta, params.gamma, params.n_pop, params.k_stages
    kg = k * gamma
    j = np.zeros((k, k))
    j[0, :] = 2.0 * gamma - beta
    j[0, 0] -= kg
    for i in range(1, k):
        j[i, i - 1] = kg
        j[i, i] = -kg
    b = np.zeros((k, k))
    np.fill_diagonal(b, 2.0)
    for i in range(1, k):
        b[i, i - 1] = b[i - 1, i] = -1.0
    b *= n * gamma * (1.0 - 1.0 / params.r0())
    return j, b


def ou_variance_closed_form(params: ModelParams) -> np.ndarray:
    """Stationary variance matrix of the OU approximation,
    V = (N/k)(1 - 1/R0) I + (N/k^2)(2/R0 - 1) * ones."""
    _require_supercritical(params, "the OU stationary variance")
    n, k, r0 = params.n_pop, params.k_stages, params.r0()
    return ((n / k) * (1.0 - 1.0 / r0) * np.eye(k)
            + (n / k ** 2) * (2.0 / r0 - 1.0) * np.ones((k, k)))


def ou_stationary_variance(params: ModelParams) -> np.ndarray:
    """Solve the stationary Lyapunov equation J V + V J^T = -B.

    Cross-checked against the closed form to 1e-10 relative; symmetric
    positive definite.
    """
    j, b = ou_drift_and_noise(params)
    v = linalg.solve_continuous_lyapunov(j, -b)
    v = 0.5 * (v + v.T)
    closed = ou_variance_closed_form(params)
    scale = np.max(np.abs(closed))
    if np.max(np.abs(v - closed)) > 1e-10 * scale:
        raise NumericalFailureError(
            "Lyapunov solve disagrees with the closed-form variance",
            max_abs_diff=float(np.max(np.abs(v - closed))),
        )
    eigvals = np.linalg.eigvalsh(v)
    if eigvals.min() <= 0:
        raise NumericalFailureError(
            "stationary variance is not positive definite",
            min_eigenvalue=float(eigvals.min()),
        )
    return v


# ---------------------------------------------------------------------------
# diffusion asymptotic (k = 1)
# ---------------------------------------------------------------------------

def fpe_exponent(r0: float) -> float:
    """Exponential constant of the diffusion asymptotic,
    2(R0-1)/R0 + (4/R0) ln(2/(R0+1)).  Vanishes at R0 = 1 and stays below
    the true action A for R0 > 1."""
    return 2.0 * (r0 - 1.0) / r0 + (4.0 / r0) * math.log(2.0 / (r0 + 1.0))


def log_tau_fpe(params: ModelParams) -> float:
    _require_supercritical(params, "the diffusion asymptotic")
    if params.k_stages != 1:
        raise OutOfDomainError("the diffusion asymptotic applies to k == 1")
    r0, gamma, n = params.r0(), params.gamma, params.n_pop
    return (
        -math.log(gamma)
        + 0.5 * math.log(2.0 * math.pi / n)
        + math.log(r0 * (r0 + 1.0) / (2.0 * (r0 - 1.0) ** 2 * math.sqrt(r0)))
        + n * fpe_exponent(r0)
    )


def tau_fpe_asymptotic(params: ModelParams) -> float:
    return math.exp(log_tau_fpe(params))


# ---------------------------------------------------------------------------
# branching-process prefactor (general infectious period)
# ---------------------------------------------------------------------------

def p_minor_outbreak(params: ModelParams) -> float:
    """Probability that a single infective causes only a minor outbreak:
    the unique root in [0, 1) of p (1 + R0 (1 - p)/k)^k = 1."""
    _require_supercritical(params, "the minor outbreak probability")
    r0, k = params.r0(), params.k_stages
    if k == 1:
        return 1.0 / r0

    def f(p):
        return p * (1.0 + r0 * (1.0 - p) / k) ** k - 1.0

    # f(0) = -1 < 0 and f -> 0- at p -> 1-; bracket below the trivial root
    hi = 1.0 - 1e-14
    lo = 1e-14
    # the non-trivial root lies below the minimum of f on (0,1); walk down
    # from just under 1 until f > 0 to bracket it
    probe = 1.0 - (1.0 - 1.0 / r0) / k  # heuristic interior point
    while f(probe) <= 0.0:
        probe = 0.5 * (probe + 1.0)
        if 1.0 - probe < 1e-12:
            raise NotApplicableError(
                "minor outbreak root not bracketed (R0 too close to 1?)"
            )
    p = brentq(f, lo, probe, xtol=1e-15, rtol=8.9e-16)
    resid = abs(f(p))
    if resid >= 1e-12:
        raise NumericalFailureError("root residual exceeds 1e-12",
                                    residual=resid)
    return float(p)


def log_tau_bbn(params: ModelParams) -> float:
    """ln of the branching-process-corrected asymptotic with Erlang
    infectious periods (mean 1/gamma)."""
    _require_supercritical(params, "the BBN asymptotic")
    r0, gamma, n = params.r0(), params.gamma, params.n_pop
    p_q = p_minor_outbreak(params)
    return (
        -math.log(gamma)
        + 0.5 * math.log(2.0 * math.pi / n)
        - math.log((r0 - 1.0) * (1.0 - p_q))
        + n * action_closed_form(params)
    )


def tau_bbn(params: ModelParams) -> float:
    return math.exp(log_tau_bbn(params))


# ---------------------------------------------------------------------------
# Hamiltonian closed forms
# ---------------------------------------------------------------------------

def theta_star(params: ModelParams) -> np.ndarray:
    """Momentum coordinates of the non-classical disease-free equilibrium:
    (k, k-1, ..., 1) * ln z*, where z* > 0 solves sum_{m<=k} z^m = k/R0."""
    r0, k = params.r0(), params.k_stages
    if r0 <= 0:
        raise OutOfDomainError("R0 must be positive")
    target = k / r0

    def f(z):
        return sum(z ** m for m in range(1, k + 1)) - target

    hi = max(1.0, target)
    while f(hi) < 0:
        hi *= 2.0
    z = brentq(f, 0.0, hi, xtol=1e-16, rtol=8.9e-16)
    if abs(f(z)) >= 1e-14 * max(1.0, target):
        raise NumericalFailureError("z* residual exceeds tolerance",
                                    residual=abs(f(z)))
    log_z = math.log(z)
    return log_z * np.arange(k, 0, -1, dtype=float)


def hamiltonian_value(params: ModelParams, y, theta) -> float:
    """The k-stage Hamiltonian H_k(y, theta) (y in fraction units)."""
    y = np.asarray(y, dtype=float)
    theta = np.asarray(theta, dtype=float)
    beta, gamma, k = params.beta, params.gamma, params.k_stages
    kg = k * gamma
    tot = y.sum()
    h = beta * tot * (1.0 - tot) * (math.expm1(theta[0]))
    for m in range(k - 1):
        h += kg * y[m] * math.expm1(-theta[m] + theta[m + 1])
    h += kg * y[k - 1] * math.expm1(-theta[k - 1])
    return float(h)


def s_k(params: ModelParams, theta) -> float:
    """Quasi-potential guess S_k(theta); S_k(0) = 0 exactly and
    S_k(theta*) = -A."""
    theta = np.asarray(theta, dtype=float)
    k = params.k_stages
    if theta.shape != (k,):
        raise OutOfDomainError(f"theta must have length {k}")
    e_sum = float(np.exp(theta).sum())
    return math.log(e_sum / k) - (params.gamma / params.beta) * (1.0 - k / e_sum)


def s_k_gradient(params: ModelParams, theta) -> np.ndarray:
    """Analytic gradient of S_k with respect to theta."""
    theta = np.asarray(theta, dtype=float)
    k = params.k_stages
    e = np.exp(theta)
    e_sum = float(e.sum())
    coeff = 1.0 / e_sum - (params.gamma / params.beta) * k / e_sum ** 2
    return e * coeff


def hj_residual(params: ModelParams, theta) -> float:
    """Residual of the stationary Hamilton-Jacobi equation
    H_k(dS_k/dtheta, theta) at the given momentum point."""
    grad = s_k_gradient(params, theta)
    return hamiltonian_value(params, grad, theta)
