"""Heteroclinic extinction paths of the 2k-dimensional Hamiltonian flow.

The optimal extinction path leaves the endemic equilibrium (y*, 0) along
its unstable subspace and lands on the momentum-space disease-free point
(0, theta*).  It is found by shooting: launch a small offset along the
unstable subspace, integrate with a high-order adaptive scheme, and (for
k >= 2) optimize the launch direction to minimize the closest approach to
the target.  The large-deviations action is the path integral of
sum_m theta_m dy_m.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import minimize_scalar

from .errors import BvpFailureError, NumericalFailureError, OutOfDomainError
from .formulas import hamiltonian_value, s_k_gradient, theta_star
from .model import ModelParams


def equations_of_motion(params: ModelParams, y, theta):
    """Right-hand sides (dy/dt, dtheta/dt) of the staged Hamiltonian flow.

    At theta = 0 the y-equations reduce to the deterministic staged SIS
    system.  Conventions: y_0 = theta_0 = theta_{k+1} = 0.
    """
    y = np.asarray(y, dtype=float)
    theta = np.asarray(theta, dtype=float)
    beta, gamma, k = params.beta, params.gamma, params.k_stages
    kg = k * gamma
    tot = y.sum()
    th_pad = np.concatenate(([0.0], theta, [0.0]))  # theta_0 .. theta_{k+1}
    y_pad = np.concatenate(([0.0], y))              # y_0 .. y_k
    dy = np.empty(k)
    dth = np.empty(k)
    infect = beta * tot * (1.0 - tot)
    for i in range(1, k + 1):
        dy[i - 1] = kg * (y_pad[i - 1] * math.exp(-th_pad[i - 1] + th_pad[i])
                          - y_pad[i] * math.exp(-th_pad[i] + th_pad[i + 1]))
        if i == 1:
            dy[0] += infect * math.exp(th_pad[1])
        dth[i - 1] = (-beta * (1.0 - 2.0 * tot) * math.expm1(th_pad[1])
                      - kg * math.expm1(-th_pad[i] + th_pad[i + 1]))
    return dy, dth


@dataclass
class PhaseTrajectory:
    """A discretized extinction path with energy diagnostics."""

    params: ModelParams
    t: np.ndarray
    y: np.ndarray       # (n, k) fractions
    theta: np.ndarray   # (n, k)
    energy: np.ndarray  # H along the path
    head_correction: float = 0.0
    tail_correction: float = 0.0

    @property
    def max_energy(self) -> float:
        return float(np.max(np.abs(self.energy)))

    def to_csv(self, path):
        k = self.params.k_stages
        header = (["t"] + [f"y{m + 1}" for m in range(k)]
                  + [f"theta{m + 1}" for m in range(k)] + ["H"])
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for i in range(len(self.t)):
                writer.writerow(
                    [f"{self.t[i]:.12e}"]
                    + [f"{v:.12e}" for v in self.y[i]]
                    + [f"{v:.12e}" for v in self.theta[i]]
                    + [f"{self.energy[i]:.12e}"]
                )


def _rhs(params: ModelParams):
    k = params.k_stages

    def f(_t, x):
        dy, dth = equations_of_motion(params, x[:k], x[k:])
        return np.concatenate([dy, dth])

    return f


def _jacobian_fd(params: ModelParams, x, h=1e-7):
    f = _rhs(params)
    n = len(x)
    jac = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = h * max(1.0, abs(x[j]))
        jac[:, j] = (f(0.0, x + e) - f(0.0, x - e)) / (2.0 * e[j])
    return jac


def _unstable_basis(params: ModelParams, x_eq):
    jac = _jacobian_fd(params, x_eq)
    vals, vecs = np.linalg.eig(jac)
    basis = []
    seen = set()
    for i, lam in enumerate(vals):
        if lam.real <= 1e-9 or i in seen:
            continue
        v = vecs[:, i]
        if abs(lam.imag) < 1e-12:
            basis.append(np.real(v))
        else:
            # complex pair: real/imaginary parts span the plane; mark the
            # conjugate as consumed
            basis.append(np.real(v))
            basis.append(np.imag(v))
            for j, mu in enumerate(vals):
                if j != i and abs(mu - lam.conjugate()) < 1e-9:
                    seen.add(j)
        seen.add(i)
    basis = [b / np.linalg.norm(b) for b in basis]
    return np.array(basis)


def _integrate(params: ModelParams, x0, target, eta, t_max):
    f = _rhs(params)
    scale = max(1.0, float(np.linalg.norm(target)))

    def reached(_t, x):
        return np.linalg.norm(x - target) - eta

    reached.terminal = True

    def escaped(_t, x):
        k = params.k_stages
        return 5.0 - max(abs(x[:k].sum()), np.abs(x[k:]).max() / scale / 10.0)

    escaped.terminal = True

    return solve_ivp(f, (0.0, t_max), x0, method="DOP853",
                     rtol=1e-10, atol=1e-12, dense_output=True,
                     events=(reached, escaped))


def _closest_approach(sol, target, n_probe=20001):
    ts = np.linspace(sol.t[0], sol.t[-1], n_probe)
    xs = sol.sol(ts)
    d = np.linalg.norm(xs.T - target, axis=1)
    i = int(np.argmin(d))
    lo = ts[max(i - 1, 0)]
    hi = ts[min(i + 1, n_probe - 1)]
    res = minimize_scalar(lambda t: np.linalg.norm(sol.sol(t) - target),
                          bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12})
    return float(res.x), float(res.fun)


def _shoot_k1(params: ModelParams, delta, eta, t_max, n_samples):
    """Pure shooting along the 1-D unstable manifold of (y*, 0)."""
    k = params.k_stages
    y_star = params.endemic_fraction_vector()
    x_eq = np.concatenate([y_star, np.zeros(k)])
    target = np.concatenate([np.zeros(k), theta_star(params)])
    basis = _unstable_basis(params, x_eq)
    if len(basis) != 1:
        raise BvpFailureError(
            f"expected a 1-D unstable subspace, found {len(basis)}-D"
        )

    def shoot(direction):
        x0 = x_eq + delta * direction
        sol = _integrate(params, x0, target, eta, t_max)
        t_best, d_best = _closest_approach(sol, target)
        return sol, t_best, d_best

    candidates = [basis[0], -basis[0]]
    best = min((shoot(u) + (u,) for u in candidates), key=lambda r: r[2])
    sol, t_best, d_best, direction = best
    if d_best > eta * 1.001:  # slack for dense-output interpolation error
        raise BvpFailureError(
            "shooting failed to approach the disease-free point",
            closest_approach=d_best, tolerance=eta,
        )
    ts = np.linspace(0.0, t_best, n_samples)
    xs = sol.sol(ts).T
    head = 0.5 * delta ** 2 * float(direction[k:] @ direction[:k])
    return ts, xs[:, :k], xs[:, k:], head


def reduced_flow(params: ModelParams):
    """Momentum-space vector field on the invariant manifold
    y = dS_k/dtheta, which contains both end points of the extinction
    path (S_k solves the stationary Hamilton-Jacobi equation)."""

    def f(_t, theta):
        y = s_k_gradient(params, theta)
        _, dth = equations_of_motion(params, y, theta)
        return dth

    return f


def _reduced_jacobian(params, f, theta_pt, h=1e-7):
    k = params.k_stages
    jac = np.empty((k, k))
    for j in range(k):
        e = np.zeros(k)
        e[j] = h * max(1.0, abs(theta_pt[j]))
        jac[:, j] = (f(0.0, theta_pt + e) - f(0.0, theta_pt - e)) / (2 * e[j])
    return jac


def _manifold_path(params: ModelParams, delta, eta, t_max, n_samples):
    """k >= 2 path via the invariant-manifold reduction.

    Direct shooting in the full phase space is hopeless here: transversal
    instability amplifies the launch offset by exp(integral of the largest
    unstable rate), many orders beyond double precision.  On the manifold
    the target's stable direction is 1-D, so integrating the reduced flow
    in reverse time from theta* is unconditionally stable (the origin
    attracts everything in reverse time); no shooting parameter remains.
    """
    k = params.k_stages
    th_star = theta_star(params)
    f = reduced_flow(params)
    jac = _reduced_jacobian(params, f, th_star)
    vals, vecs = np.linalg.eig(jac)
    stable = [i for i in range(k) if vals[i].real < -1e-9]
    if len(stable) != 1 or abs(vals[stable[0]].imag) > 1e-12:
        raise BvpFailureError(
            "the disease-free momentum point does not have a 1-D real "
            "stable direction on the manifold",
            eigenvalues=vals.tolist(),
        )
    v = np.real(vecs[:, stable[0]])
    v /= np.linalg.norm(v)

    def back(t, theta):
        return -f(t, theta)

    def reached(_t, theta):
        return float(np.linalg.norm(theta)) - delta

    reached.terminal = True

    def escaped(_t, theta):
        return 10.0 * float(np.linalg.norm(th_star)) - float(
            np.linalg.norm(theta))

    escaped.terminal = True

    best = None
    for sgn in (1.0, -1.0):
        th0 = th_star + sgn * eta * v
        sol = solve_ivp(back, (0.0, t_max), th0, method="DOP853",
                        rtol=1e-10, atol=1e-12, dense_output=True,
                        events=(reached, escaped))
        if sol.status == 1 and len(sol.t_events[0]) > 0:
            best = sol
            break
    if best is None:
        raise BvpFailureError(
            "reverse integration from theta* did not reach the origin"
        )
    span = best.t[-1]
    ts = np.linspace(0.0, span, n_samples)
    theta = best.sol(span - ts).T            # forward time order
    y = np.array([s_k_gradient(params, th) for th in theta])
    y_star = params.endemic_fraction_vector()
    head = 0.5 * float(theta[0] @ (y[0] - y_star))
    return ts, y, theta, head


def extinction_path(params: ModelParams, delta: float = 1e-6,
                    eta: float = 1e-5, t_max: float = 2000.0,
                    n_samples: int = 32769) -> PhaseTrajectory:
    """The heteroclinic trajectory from (y*, 0) to (0, theta*).

    ``delta`` is the launch offset from the endemic point and ``eta`` the
    accepted terminal distance; both enter the action only at second
    order, through the analytic end corrections.
    """
    if params.r0() <= 1:
        raise OutOfDomainError("the extinction path requires R0 > 1")
    k = params.k_stages
    target = np.concatenate([np.zeros(k), theta_star(params)])
    if k == 1:
        ts, y, theta, head = _shoot_k1(params, delta, eta, t_max, n_samples)
    else:
        ts, y, theta, head = _manifold_path(params, delta, eta, t_max,
                                            n_samples)
    energy = np.array([hamiltonian_value(params, y[i], theta[i])
                       for i in range(n_samples)])
    tail = float(target[k:] @ (0.0 - y[-1]))
    traj = PhaseTrajectory(params=params, t=ts, y=y, theta=theta,
                           energy=energy,
                           head_correction=head, tail_correction=tail)
    if traj.max_energy > 1e-8:
        raise NumericalFailureError(
            "energy conservation violated along the trajectory",
            max_energy=traj.max_energy,
        )
    end = np.concatenate([y[-1], theta[-1]])
    end_err = float(np.linalg.norm(end - target))
    if end_err > 2.0 * eta:
        raise BvpFailureError("trajectory endpoint misses the target",
                              endpoint_error=end_err)
    return traj


def action(trajectory: PhaseTrajectory, tol: float = 1e-4):
    """Path action: Richardson-extrapolated trapezoid quadrature of
    sum_m theta_m dy_m over the stored grid, plus the analytic endpoint
    corrections (both O(offset^2)).  Returns (value, error_estimate)."""
    params = trajectory.params
    n = len(trajectory.t)
    f = np.empty(n)
    for i in range(n):
        dy, _ = equations_of_motion(params, trajectory.y[i],
                                    trajectory.theta[i])
        f[i] = float(trajectory.theta[i] @ dy)
    full = np.trapezoid(f, trajectory.t)
    half = np.trapezoid(f[::2], trajectory.t[::2])
    value = full + (full - half) / 3.0  # step-halving extrapolation
    err = abs(full - half) / 3.0
    value += trajectory.head_correction + trajectory.tail_correction
    if err > tol:
        raise NumericalFailureError(
            "action quadrature error estimate exceeds tolerance",
            error_estimate=err,
        )
    return value, err


def action_k1_integral(params: ModelParams) -> float:
    """Independent k = 1 action: direct quadrature of ln(R0 (1 - y)) over
    [0, y*]."""
    if params.k_stages != 1:
        raise OutOfDomainError("direct action integral applies to k == 1")
    r0 = params.r0()
    y_star = params.endemic_fraction()
    val, _ = quad(lambda y: math.log(r0 * (1.0 - y)), 0.0, y_star,
                  epsabs=1e-13, epsrel=1e-13)
    return val
