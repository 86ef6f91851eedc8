"""Exact answers from the Markov chain: mean extinction times, the Norden
closed form (k = 1), and the quasi-stationary distribution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NumericalFailureError, OutOfDomainError
from .model import ModelParams, StateSpace, TransitionSchema

#: guard against accidentally assembling an intractably large system
MAX_NONZEROS = 5_000_000


def build_rate_matrix(params: ModelParams, space: StateSpace | None = None,
                      dtype=np.float64):
    """Assemble the transition rate matrix restricted to the transient
    states (CSR).  Row sums equal minus the exit rate to the absorbing
    all-zero state (zero for rows with no direct absorption).

    With ``dtype=np.longdouble`` the rates themselves are computed in
    extended precision, which iterative refinement needs: a matrix rounded
    to double has an exact solution that already differs from the model's
    by O(cond * eps).
    """
    if space is None:
        space = StateSpace(params.n_pop, params.k_stages)
    if dtype == np.float64:
        schema = TransitionSchema(params)
    else:
        schema = TransitionSchema(ModelParams(
            beta=dtype(params.beta), gamma=dtype(params.gamma),
            n_pop=params.n_pop, k_stages=params.k_stages,
        ))
    n_events = len(schema.events)
    if space.size * (n_events + 1) > MAX_NONZEROS:
        raise NumericalFailureError(
            f"state space too large: {space.size} states x {n_events + 1} "
            f"entries exceeds the {MAX_NONZEROS} nonzero guard"
        )
    states = space.states
    rows, cols, vals = [], [], []
    diag = np.zeros(space.size, dtype=dtype)
    for ev in schema.events:
        rates = np.array([ev.rate(s) for s in states], dtype=dtype)
        active = rates > 0
        targets = states[active] + np.asarray(ev.delta, dtype=np.int64)
        idx = np.nonzero(active)[0]
        diag[idx] -= rates[idx]
        for j, t in zip(idx, targets):
            if t.any():  # transition within the transient class
                rows.append(j)
                cols.append(space.rank(t))
                vals.append(rates[j])
            # else: exit to the absorbing state, diagonal only
    rows.extend(range(space.size))
    cols.extend(range(space.size))
    vals.extend(diag)
    q = sp.coo_matrix((vals, (rows, cols)), shape=(space.size, space.size))
    return q.tocsr(), space


def mean_extinction_times(params: ModelParams,
                          space: StateSpace | None = None) -> np.ndarray:
    """Solve the linear system for the mean extinction time from every
    transient state (sparse direct solve with one refinement step; normwise
    backward error < 1e-12)."""
    q, space = build_rate_matrix(params, space)
    rhs = -np.ones(space.size)
    lu = spla.splu(q.tocsc())
    tau = lu.solve(rhs)
    # iterative refinement with extended-precision residuals: the system is
    # ill-conditioned when times grow like exp(N A), and a plain solve only
    # reaches ~1e-9 relative accuracy there
    q_ld, _ = build_rate_matrix(params, space, dtype=np.longdouble)
    rhs_ld = rhs.astype(np.longdouble)
    for _ in range(10):
        r = rhs_ld - q_ld @ tau.astype(np.longdouble)
        corr = lu.solve(np.asarray(r, dtype=np.float64))
        tau = tau + corr
        if np.max(np.abs(corr)) <= 1e-14 * np.max(np.abs(tau)):
            break
    # normwise backward error; the raw residual scales with max(tau)
    r = q @ tau - rhs
    scale = (sp.linalg.norm(q, np.inf) * np.linalg.norm(tau, np.inf)
             + np.linalg.norm(rhs, np.inf))
    resid = float(np.linalg.norm(r, np.inf) / scale)
    if not np.isfinite(tau).all() or resid > 1e-12:
        raise NumericalFailureError(
            "mean extinction time solve did not meet the residual contract",
            residual=resid,
        )
    return tau


def norden_tau(params: ModelParams, i: int) -> float:
    """Closed-form mean extinction time for the classic SIS model starting
    from ``i`` infectives.

    The inner sum is accumulated with a running term ratio, never through
    factorial ratios, so it does not overflow for N <= 2000, R0 <= 2.
    """
    return float(norden_all(params, i)[i - 1])


def norden_all(params: ModelParams, i_max: int | None = None) -> np.ndarray:
    """Vector of closed-form mean extinction times for i = 1..i_max."""
    if params.k_stages != 1:
        raise OutOfDomainError("the closed form applies to k_stages == 1")
    n = params.n_pop
    if i_max is None:
        i_max = n
    if not 1 <= i_max <= n:
        raise OutOfDomainError(f"initial infectives must be in [1, {n}]")
    r0 = params.r0()
    x = r0 / n
    tau = np.empty(i_max)
    acc = 0.0
    for m in range(1, i_max + 1):
        term = 1.0 / m
        inner = term
        for j in range(m, n):
            term *= x * (n - j) * j / (j + 1.0)
            inner += term
        if not np.isfinite(inner):
            raise NumericalFailureError(
                "inner sum overflowed; log-space accumulation needed",
                m=m,
            )
        acc += inner
        tau[m - 1] = acc / params.gamma
    return tau


@dataclass(frozen=True)
class QsdResult:
    """Quasi-stationary distribution with its decay rate and the mean
    extinction time from quasi-stationarity."""

    q: np.ndarray
    lam: float
    space: StateSpace

    @property
    def tau_q(self) -> float:
        return 1.0 / self.lam

    def q_at(self, state) -> float:
        return float(self.q[self.space.rank(state)])

    def q_single_last_stage(self) -> float:
        """Probability of the state with one individual in the final stage
        (the only state with a direct transition to extinction)."""
        e_k = [0] * self.space.k_stages
        e_k[-1] = 1
        return self.q_at(e_k)


def quasi_stationary(params: ModelParams,
                     space: StateSpace | None = None,
                     start: np.ndarray | None = None,
                     tol: float = 1e-12,
                     max_iter: int = 500) -> QsdResult:
    """Quasi-stationary distribution via inverse power iteration.

    ``q`` is the left eigenvector of the transient rate matrix for the
    eigenvalue of largest real part (smallest magnitude), so plain inverse
    iteration (shift 0) on the transpose converges to it.
    """
    q_mat, space = build_rate_matrix(params, space)
    lu = spla.splu(q_mat.T.tocsc())
    if start is None:
        x = np.full(space.size, 1.0 / space.size)
    else:
        x = np.asarray(start, dtype=float).copy()
        if x.shape != (space.size,):
            raise OutOfDomainError("start vector has wrong length")
    prev = None
    for it in range(max_iter):
        y = lu.solve(x)
        y /= np.sum(np.abs(y))
        if y.sum() < 0:
            y = -y
        if prev is not None and np.max(np.abs(y - prev)) < tol:
            x = y
            break
        prev = y
        x = y
    else:
        raise NumericalFailureError(
            "inverse power iteration did not converge",
            iterations=max_iter,
            last_change=float(np.max(np.abs(x - prev))),
        )
    q = x / x.sum()
    qQ = q_mat.T @ q
    lam = -float(q @ qQ) / float(q @ q)
    # above threshold lam ~ exp(-N A); once it drops to rounding noise of
    # the Rayleigh quotient the computed value (and even its sign) is
    # meaningless, so refuse rather than return garbage
    noise_floor = 1e-13 * sp.linalg.norm(q_mat, np.inf)
    if lam < noise_floor:
        raise NumericalFailureError(
            "decay rate is below double-precision resolvability",
            lam=lam, noise_floor=float(noise_floor),
        )
    resid = np.max(np.abs(qQ + lam * q))
    if resid > 1e-10:
        raise NumericalFailureError(
            "QSD eigenpair residual exceeds 1e-10",
            residual=float(resid), iterations=it + 1,
        )
    return QsdResult(q=q, lam=lam, space=space)
