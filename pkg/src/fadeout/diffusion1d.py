"""Mean exit time of the 1-D diffusion approximation (k = 1).

Two independent numerical routes to the same continuous problem: nested
adaptive Gauss-Legendre quadrature of the explicit double integral, and a
centered finite-difference solve of the backward ODE.  The process starts
at ``y`` individuals and is stopped at the 0.5-individual level, with a
reflecting boundary at N.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .errors import NumericalFailureError, OutOfDomainError
from .model import ModelParams

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


@dataclass(frozen=True)
class QuadratureConfig:
    """Quadrature controls.  The absorbing level is in individuals
    (0.5 by default, i.e. 1/2N in fraction units)."""

    rel_tol: float = 1e-9
    max_depth: int = 48
    min_panels: int = 64
    absorbing_level: float = 0.5

    def __post_init__(self):
        if self.min_panels < 64:
            raise OutOfDomainError("panel counts must be >= 64")


def _check_args(params: ModelParams, y: float, absorbing: float):
    if params.k_stages != 1:
        raise OutOfDomainError("the 1-D diffusion applies to k_stages == 1")
    if not 0.0 < absorbing < params.n_pop:
        raise OutOfDomainError("absorbing level must lie in (0, N)")
    if not absorbing <= y <= params.n_pop:
        raise OutOfDomainError(
            f"y must be in [{absorbing}, {params.n_pop}], got {y}"
        )


def _panel(f, a, b):
    x = 0.5 * (b - a) * _GL_NODES + 0.5 * (a + b)
    return 0.5 * (b - a) * float(np.dot(_GL_WEIGHTS, f(x)))


def _adaptive(f, a, b, rel_tol, max_depth, breakpoints=()):
    """Adaptive Gauss-Legendre quadrature with panel bisection."""
    if b <= a:
        return 0.0
    edges = sorted({a, b, *(p for p in breakpoints if a < p < b)})
    # seed with at least 4 panels per segment so narrow peaks are seen
    seeds = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        pts = np.linspace(lo, hi, 5)
        seeds.extend((pts[i], pts[i + 1]) for i in range(4))
    total = sum(_panel(f, lo, hi) for lo, hi in seeds)
    stack = [(lo, hi, _panel(f, lo, hi), 0) for lo, hi in seeds]
    result = 0.0
    while stack:
        lo, hi, whole, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        left = _panel(f, lo, mid)
        right = _panel(f, mid, hi)
        refined = left + right
        err = abs(refined - whole)
        if err <= rel_tol * max(abs(total), abs(refined)) or depth >= max_depth:
            if depth >= max_depth and err > 1e-6 * max(abs(total), 1.0):
                raise NumericalFailureError(
                    "adaptive quadrature failed to converge",
                    interval=(lo, hi), error=err,
                )
            result += refined
            total += refined - whole
        else:
            stack.append((lo, mid, left, depth + 1))
            stack.append((mid, hi, right, depth + 1))
            total += refined - whole
    return result


def _log_inner_integrand(z, u, n, r0):
    """Log of the inner integrand: the ratio power and the exponential are
    combined into a single exponent before exponentiation (raw factors
    overflow already at N ~ 1000)."""
    return ((4.0 * n / r0)
            * (np.log1p(r0 * (1.0 - z)) - np.log1p(r0 * (1.0 - u)))
            + 2.0 * n * (z - u)
            - np.log(z) - np.log1p(r0 * (1.0 - z)))


def _inner_integral(u, params: ModelParams, cfg: QuadratureConfig):
    n, r0 = params.n_pop, params.r0()

    def f(z):
        return np.exp(_log_inner_integrand(z, u, n, r0))

    breaks = []
    if r0 > 1:
        y_star = 1.0 - 1.0 / r0
        if u < y_star < 1.0:
            breaks.append(y_star)  # interior maximum of the exponent
    val = _adaptive(f, u, 1.0, cfg.rel_tol, cfg.max_depth, breaks)
    if not np.isfinite(val):
        raise NumericalFailureError("inner integral overflowed", u=u)
    return val


def tau_diff_integral(params: ModelParams, y: float,
                      cfg: QuadratureConfig | None = None) -> float:
    """Mean exit time via the explicit double integral."""
    cfg = cfg or QuadratureConfig()
    _check_args(params, y, cfg.absorbing_level)
    return tau_diff_profile(params, [y], cfg)[0]


def tau_diff_profile(params: ModelParams, y_values,
                     cfg: QuadratureConfig | None = None) -> np.ndarray:
    """Mean exit times at several initial counts, reusing the cumulative
    outer integral between consecutive query points."""
    cfg = cfg or QuadratureConfig()
    y_values = np.asarray(y_values, dtype=float)
    for y in y_values:
        _check_args(params, y, cfg.absorbing_level)
    n, gamma = params.n_pop, params.gamma
    order = np.argsort(y_values)
    out = np.empty_like(y_values)

    def outer(u_arr):
        return np.array([_inner_integral(u, params, cfg) for u in
                         np.atleast_1d(u_arr)])

    lo = cfg.absorbing_level / n
    acc = 0.0
    for idx in order:
        hi = y_values[idx] / n
        acc += _adaptive(outer, lo, hi, cfg.rel_tol, cfg.max_depth)
        out[idx] = 2.0 * n / gamma * acc
        lo = hi
    if not np.all(np.isfinite(out)):
        raise NumericalFailureError("outer integral overflowed")
    return out


def _ode_grid_solve(params: ModelParams, n_nodes: int, absorbing: float):
    """Finite-difference solve of the backward ODE on [absorbing, N]:
    Dirichlet at the absorbing level, reflecting (zero derivative) at N."""
    beta, gamma, n = params.beta, params.gamma, params.n_pop
    grid = np.linspace(absorbing, n, n_nodes)
    h = grid[1] - grid[0]
    yv = grid[1:]  # unknowns; grid[0] is the Dirichlet node
    a = (beta / n) * yv * (n - yv) - gamma * yv
    b = (beta / n) * yv * (n - yv) + gamma * yv
    m = len(yv)
    lower = np.zeros(m)
    diag = np.zeros(m)
    upper = np.zeros(m)
    rhs = np.full(m, -1.0)
    # interior: centered second order
    lower[:-1] = 0.5 * b[:-1] / h ** 2 - 0.5 * a[:-1] / h
    diag[:-1] = -b[:-1] / h ** 2
    upper[:-1] = 0.5 * b[:-1] / h ** 2 + 0.5 * a[:-1] / h
    # reflecting node at N: ghost point with tau[m] = tau[m-2]
    diag[-1] = -b[-1] / h ** 2
    lower[-1] = b[-1] / h ** 2
    ab = np.zeros((3, m))
    ab[0, 1:] = upper[:-1]
    ab[1, :] = diag
    ab[2, :-1] = lower[1:]
    tau = solve_banded((1, 1), ab, rhs)
    return grid, np.concatenate(([0.0], tau))


def tau_diff_ode(params: ModelParams, y: float, n_nodes: int = 4000,
                 absorbing: float = 0.5, check: bool = True) -> float:
    """Mean exit time via the finite-difference route.  With ``check`` the
    grid is halved in step once and the Richardson error estimate must stay
    below 1%."""
    _check_args(params, y, absorbing)
    grid, tau = _ode_grid_solve(params, n_nodes, absorbing)
    val = float(np.interp(y, grid, tau))
    if check:
        grid2, tau2 = _ode_grid_solve(params, 2 * n_nodes - 1, absorbing)
        val2 = float(np.interp(y, grid2, tau2))
        err = abs(val2 - val) / max(abs(val2), 1e-300)
        if err > 0.01:
            raise NumericalFailureError(
                "finite-difference grid too coarse",
                richardson_estimate=err, n_nodes=n_nodes,
            )
        val = val2  # the finer answer is the better one
    return val
