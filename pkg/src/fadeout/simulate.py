"""Monte Carlo oracles: exact Gillespie simulation of the jump chain and
Euler-Maruyama simulation of the diffusion approximations.

Randomness comes from per-path splitmix64 streams derived from
(seed, path index), so growing the path count never reshuffles the draws
of earlier paths and results are bitwise reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import NumericalFailureError, OutOfDomainError
from .model import ModelParams

_INC = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_PHI = np.uint64(0xA24BAED4963EE407)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0  # 2^-53


@njit(cache=True)
def _sm64(state):
    state = state + _INC
    z = state
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return state, z ^ (z >> _S31)


@njit(cache=True)
def _stream(seed, path):
    s = np.uint64(seed) ^ ((np.uint64(path) + np.uint64(1)) * _PHI)
    s, _ = _sm64(s)
    s, _ = _sm64(s)
    return s


@njit(cache=True)
def _u01(z):
    # uniform in [0, 1); 53 random bits
    return float(z >> _S11) * _INV53


@njit(cache=True)
def _gillespie_kernel(beta, gamma, n, k, starts, seed, time_cap):
    npaths = starts.shape[0]
    times = np.empty(npaths)
    censored = np.zeros(npaths, np.bool_)
    kg = k * gamma
    state = np.empty(k, np.int64)
    for p in range(npaths):
        s = _stream(seed, p)
        for m in range(k):
            state[m] = starts[p, m]
        t = 0.0
        while True:
            tot = 0
            for m in range(k):
                tot += state[m]
            if tot == 0:
                break
            r_inf = beta / n * tot * (n - tot)
            total = r_inf
            for m in range(k):
                total += kg * state[m]
            s, z = _sm64(s)
            t += -np.log1p(-_u01(z)) / total
            if t > time_cap:
                censored[p] = True
                t = time_cap
                break
            s, z = _sm64(s)
            u = _u01(z) * total
            if u < r_inf:
                state[0] += 1
            else:
                acc = r_inf
                for m in range(k):
                    acc += kg * state[m]
                    if u < acc:
                        state[m] -= 1
                        if m + 1 < k:
                            state[m + 1] += 1
                        break
        times[p] = t
    return times, censored


@njit(cache=True)
def _linear_bd_kernel(beta, gamma, i0, npaths, seed, time_cap):
    """Linear birth-death chain (birth rate beta*i, death rate gamma*i)."""
    times = np.empty(npaths)
    censored = np.zeros(npaths, np.bool_)
    for p in range(npaths):
        s = _stream(seed, p)
        i = i0
        t = 0.0
        while i > 0:
            total = (beta + gamma) * i
            s, z = _sm64(s)
            t += -np.log1p(-_u01(z)) / total
            if t > time_cap:
                censored[p] = True
                t = time_cap
                break
            s, z = _sm64(s)
            if _u01(z) * (beta + gamma) < beta:
                i += 1
            else:
                i -= 1
        times[p] = t
    return times, censored


@njit(cache=True)
def _em_kernel(beta, gamma, n, k, y0, npaths, seed, dt, time_cap,
               noise_scale, absorbing):
    times = np.empty(npaths)
    censored = np.zeros(npaths, np.bool_)
    n_clamped = 0
    n_beyond = 0
    n_reflected = 0
    kg = k * gamma
    sqdt = np.sqrt(dt)
    y = np.empty(k)
    dy = np.empty(k)
    w = np.empty(k + 1)
    for p in range(npaths):
        s = _stream(seed, p)
        for m in range(k):
            y[m] = y0[m]
        t = 0.0
        while True:
            mx = y[0]
            for m in range(1, k):
                if y[m] > mx:
                    mx = y[m]
            if mx <= absorbing:
                break
            if t >= time_cap:
                censored[p] = True
                break
            tot = 0.0
            for m in range(k):
                tot += y[m]
            if tot > n:
                n_beyond += 1
            f = beta / n * tot * (n - tot)
            # normals via Box-Muller, two at a time
            i = 0
            while i <= k:
                s, z1 = _sm64(s)
                s, z2 = _sm64(s)
                u1 = _u01(z1)
                u2 = _u01(z2)
                r = np.sqrt(-2.0 * np.log(1.0 - u1))
                w[i] = r * np.cos(2.0 * np.pi * u2)
                if i + 1 <= k:
                    w[i + 1] = r * np.sin(2.0 * np.pi * u2)
                i += 2
            f_pos = f
            if f_pos < 0.0:
                f_pos = 0.0
                n_clamped += 1
            prev = f_pos  # variance feeding stage 1 is the infection flux
            dy[0] = (f - kg * y[0]) * dt
            for m in range(k):
                out_rate = kg * y[m]
                if out_rate < 0.0:
                    out_rate = 0.0
                    n_clamped += 1
                if m > 0:
                    dy[m] = kg * (y[m - 1] - y[m]) * dt
                dy[m] += noise_scale * sqdt * (np.sqrt(prev) * w[m]
                                               - np.sqrt(out_rate) * w[m + 1])
                prev = out_rate
            for m in range(k):
                y[m] += dy[m]
            # reflecting boundary at each zero hyperplane: mirror along the
            # co-normal of the local variance matrix, which is the stage
            # transfer direction e_m - e_{m-1} for m >= 1 and the plain
            # normal for the first stage
            for m in range(k - 1, 0, -1):
                if y[m] < 0.0:
                    a = -y[m]
                    y[m] = a
                    y[m - 1] -= 2.0 * a
                    n_reflected += 1
            if y[0] < 0.0:
                y[0] = -y[0]
                n_reflected += 1
            t += dt
        times[p] = t
    return times, censored, n_clamped, n_beyond, n_reflected


@dataclass(frozen=True)
class SimConfig:
    """Simulation controls.  Identical config (seed included) always gives
    bitwise-identical results."""

    seed: int
    n_paths: int
    initial_state: tuple | None = None   # one state, or None with `starts`
    time_cap: float = 1e7

    def __post_init__(self):
        if self.n_paths < 1:
            raise OutOfDomainError("n_paths must be >= 1")


@dataclass(frozen=True)
class McEstimate:
    """Monte Carlo mean with standard error; censored paths (those hitting
    the time cap) are counted, never silently dropped."""

    mean: float
    std_error: float
    n_paths: int
    n_censored: int
    meta: dict = field(default_factory=dict)


def _summarize(times, censored, meta=None) -> McEstimate:
    n_cens = int(censored.sum())
    if n_cens == len(times):
        raise NumericalFailureError(
            "all paths hit the time cap; increase it",
            n_censored=n_cens,
        )
    ok = times[~censored]
    mean = float(ok.mean())
    se = float(ok.std(ddof=1) / np.sqrt(len(ok))) if len(ok) > 1 else np.inf
    return McEstimate(mean=mean, std_error=se, n_paths=len(times),
                      n_censored=n_cens, meta=meta or {})


def simulate_extinction_time(params: ModelParams, config: SimConfig,
                             starts=None) -> McEstimate:
    """Gillespie mean time to absorption at the all-zero state.

    ``starts`` (n_paths, k) overrides the single initial state in the
    config, e.g. for starts drawn from the quasi-stationary distribution.
    """
    k = params.k_stages
    if starts is None:
        if config.initial_state is None:
            raise OutOfDomainError("no initial state given")
        init = np.asarray(config.initial_state, dtype=np.int64).reshape(k)
        if init.sum() > params.n_pop or (init < 0).any() or init.sum() == 0:
            raise OutOfDomainError(f"initial state {tuple(init)} invalid")
        starts = np.tile(init, (config.n_paths, 1))
    else:
        starts = np.asarray(starts, dtype=np.int64).reshape(config.n_paths, k)
    times, censored = _gillespie_kernel(
        params.beta, params.gamma, float(params.n_pop), k,
        starts, np.uint64(config.seed), config.time_cap)
    return _summarize(times, censored)


def simulate_linear_bd(beta: float, gamma: float, i0: int,
                       config: SimConfig) -> McEstimate:
    """Mean extinction time of the approximating linear birth-death chain."""
    times, censored = _linear_bd_kernel(beta, gamma, i0, config.n_paths,
                                        np.uint64(config.seed),
                                        config.time_cap)
    return _summarize(times, censored)


def sample_qsd_starts(qsd, n_paths: int, seed: int) -> np.ndarray:
    """Draw initial states from a quasi-stationary distribution (counter
    based Philox generator keyed by the seed)."""
    rng = np.random.Generator(np.random.Philox(seed))
    idx = rng.choice(len(qsd.q), size=n_paths, p=qsd.q)
    return qsd.space.states[idx]


def simulate_sde_exit(params: ModelParams, config: SimConfig, step: float,
                      absorbing: float = 0.5, zero_noise: bool = False,
                      check_step: bool = False) -> McEstimate:
    """Euler-Maruyama mean first time at which every stage count is at or
    below the absorbing level.

    Square-root diffusion coefficients as printed; negative arguments are
    clamped to zero inside square roots only and counted.  The zero
    hyperplanes are reflecting, each along its co-normal direction, which
    matches the no-flux condition of the backward equation.  Excursions
    beyond total population N are flagged but not reflected (paths
    essentially never reach that boundary at the parameters of interest).
    With ``check_step`` the run is repeated at half the step and the means
    must agree within 2%.
    """
    k = params.k_stages
    if config.initial_state is None:
        raise OutOfDomainError("no initial state given")
    y0 = np.asarray(config.initial_state, dtype=float).reshape(k)
    times, censored, n_clamped, n_beyond, n_reflected = _em_kernel(
        params.beta, params.gamma, float(params.n_pop), k, y0,
        config.n_paths, np.uint64(config.seed), step, config.time_cap,
        0.0 if zero_noise else 1.0, absorbing)
    est = _summarize(times, censored,
                     meta={"n_clamped": n_clamped, "n_beyond_n": n_beyond,
                           "n_reflected": n_reflected, "step": step})
    if check_step:
        half = simulate_sde_exit(params, config, 0.5 * step,
                                 absorbing=absorbing, zero_noise=zero_noise)
        rel = abs(half.mean - est.mean) / max(abs(half.mean), 1e-300)
        if rel > 0.02:
            raise NumericalFailureError(
                "Euler-Maruyama step too coarse",
                relative_change=rel, step=step,
            )
    return est
