"""Model parameters, transition events and the combinatorial state space.

The model is a closed population of ``n_pop`` individuals in which each
infected individual passes through ``k_stages`` infectious stages (stage
dwell times exponential with rate ``k_stages * gamma``) before returning to
susceptibility.  ``k_stages == 1`` is the classic SIS model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import NotApplicableError, OutOfDomainError


@dataclass(frozen=True)
class ModelParams:
    """Immutable parameter set: infection rate, recovery rate, population
    size and number of infectious stages."""

    beta: float
    gamma: float
    n_pop: int
    k_stages: int = 1

    def __post_init__(self):
        if not self.beta > 0:
            raise OutOfDomainError(f"beta must be positive, got {self.beta}")
        if not self.gamma > 0:
            raise OutOfDomainError(f"gamma must be positive, got {self.gamma}")
        if self.n_pop < 1:
            raise OutOfDomainError(f"n_pop must be >= 1, got {self.n_pop}")
        if self.k_stages < 1:
            raise OutOfDomainError(f"k_stages must be >= 1, got {self.k_stages}")

    def r0(self) -> float:
        return self.beta / self.gamma

    def endemic_fraction(self) -> float:
        """Stable endemic prevalence 1 - 1/R0 (total infected fraction).

        Only defined above threshold.
        """
        r0 = self.r0()
        if r0 <= 1:
            raise NotApplicableError(
                f"no endemic equilibrium: R0 = {r0} <= 1"
            )
        return 1.0 - 1.0 / r0

    def endemic_fraction_vector(self) -> np.ndarray:
        """Endemic equilibrium split equally over the k stages."""
        k = self.k_stages
        return np.full(k, self.endemic_fraction() / k)


def r0_and_equilibria(params: ModelParams):
    """Return (R0, endemic fraction vector).

    The vector is ``None`` at or below threshold (R0 <= 1), where the only
    stable equilibrium is extinction.
    """
    r0 = params.r0()
    if r0 > 1:
        return r0, params.endemic_fraction_vector()
    return r0, None


@dataclass(frozen=True)
class Event:
    """One transition: state change vector and its rate as a function of
    the state vector."""

    delta: tuple
    rate: Callable[[np.ndarray], float]
    name: str = ""


@dataclass(frozen=True)
class TransitionSchema:
    """The k+1 events of the staged SIS model (2 events when k == 1)."""

    params: ModelParams
    events: tuple = field(init=False)

    def __post_init__(self):
        p = self.params
        beta, gamma, n, k = p.beta, p.gamma, p.n_pop, p.k_stages
        kg = k * gamma
        events = []

        def infection_rate(state, beta=beta, n=n):
            tot = int(np.sum(state))
            return (beta / n) * tot * (n - tot)

        d = [0] * k
        d[0] = 1
        events.append(Event(tuple(d), infection_rate, "infection"))
        for m in range(2, k + 1):  # stage m-1 -> m (1-based stages)
            d = [0] * k
            d[m - 2] = -1
            d[m - 1] = 1
            events.append(
                Event(tuple(d),
                      lambda state, kg=kg, j=m - 2: kg * state[j],
                      f"stage_{m - 1}_to_{m}")
            )
        d = [0] * k
        d[k - 1] = -1
        events.append(Event(tuple(d),
                            lambda state, kg=kg, j=k - 1: kg * state[j],
                            "recovery"))
        object.__setattr__(self, "events", tuple(events))


class StateSpace:
    """Bijective indexer over {i in Z_+^k : sum(i) <= N} \\ {0}.

    Ordering is colexicographic: states are enumerated with the first
    coordinate varying fastest (i_k slowest), the all-zero state dropped.
    For k == 1 this is simply 1, 2, ..., N.  The ordering is stable: golden
    CSVs and cached eigenvectors index by it.
    """

    def __init__(self, n_pop: int, k_stages: int):
        if n_pop < 1 or k_stages < 1:
            raise OutOfDomainError("n_pop and k_stages must be >= 1")
        self.n_pop = n_pop
        self.k_stages = k_stages
        self.size = math.comb(n_pop + k_stages, k_stages) - 1
        self._states = self._enumerate()
        self._index = {tuple(s): j for j, s in enumerate(self._states)}

    def _enumerate(self) -> np.ndarray:
        n, k = self.n_pop, self.k_stages
        out = np.empty((self.size, k), dtype=np.int64)
        row = 0

        def rec(pos, remaining, prefix):
            nonlocal row
            if pos < 0:
                if any(prefix):
                    out[row] = prefix
                    row += 1
                return
            for v in range(remaining + 1):
                prefix[pos] = v
                rec(pos - 1, remaining - v, prefix)
            prefix[pos] = 0

        # i_k is the slowest index, i_1 the fastest (colex order)
        rec(k - 1, n, [0] * k)
        assert row == self.size
        return out

    @property
    def states(self) -> np.ndarray:
        """All transient states, shape (size, k), in index order."""
        return self._states

    def rank(self, state) -> int:
        key = tuple(int(v) for v in state)
        try:
            return self._index[key]
        except KeyError:
            raise OutOfDomainError(f"state {key} not in state space") from None

    def unrank(self, index: int) -> tuple:
        if not 0 <= index < self.size:
            raise OutOfDomainError(
                f"index {index} out of range [0, {self.size})"
            )
        return tuple(int(v) for v in self._states[index])

    def __len__(self) -> int:
        return self.size
