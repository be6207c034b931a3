"""Comparison policies: 802.11ad exhaustive sweep, UCB, HOO and UBA."""
from __future__ import annotations

import math

import numpy as np

from .bandit import Observation, Policy
from .hba import HooPolicy


class ExhaustivePolicy(Policy):
    """Sweep every beam once, then commit to the best single observation."""

    name = "exhaustive"

    def __init__(self, n_beams: int):
        super().__init__(n_beams)
        self.rewards = np.full(n_beams, -np.inf)
        self.seen = 0

    def select(self, t: int) -> int:
        return exhaustive_select(t, self.n_beams)

    def update(self, obs: Observation) -> None:
        if self.seen < self.n_beams:
            self.rewards[obs.beam - 1] = obs.reward
            self.seen += 1

    def finished(self) -> int | None:
        if self.seen < self.n_beams:
            return None
        return int(np.argmax(self.rewards)) + 1


def exhaustive_select(t: int, n_beams: int) -> int:
    return (t - 1) % n_beams + 1


class UcbPolicy(Policy):
    name = "ucb"

    def __init__(self, n_beams: int, rng: np.random.Generator, eta: float = 0.2):
        super().__init__(n_beams)
        self.rng = rng
        self.eta = eta
        self.counts = np.zeros(n_beams, dtype=np.int64)
        self.means = np.zeros(n_beams)

    def indices(self, t: int) -> np.ndarray:
        return self.means + self.eta * np.sqrt(2.0 * math.log(t) / self.counts)

    def select(self, t: int) -> int:
        if t <= self.n_beams:
            return t
        idx = self.indices(t)
        best = np.flatnonzero(idx == idx.max())
        return int(self.rng.choice(best)) + 1

    def update(self, obs: Observation) -> None:
        i = obs.beam - 1
        self.counts[i] += 1
        self.means[i] += (obs.reward - self.means[i]) / self.counts[i]


class UbaPolicy(Policy):
    """Hill climbing on the cyclic beam graph.

    Each slot plays the UCB-best of the leader and its two neighbours (the
    leader wins ties); the leader moves to the played beam once its
    empirical mean beats the leader's.
    """

    name = "uba"

    def __init__(self, n_beams: int, rng: np.random.Generator, eta: float = 0.2):
        super().__init__(n_beams)
        self.rng = rng
        self.eta = eta
        self.counts = np.zeros(n_beams, dtype=np.int64)
        self.means = np.zeros(n_beams)
        self.leader = int(rng.integers(1, n_beams + 1))
        self.leaders = [self.leader]

    def neighbourhood(self) -> list[int]:
        n, b = self.n_beams, self.leader
        return [(b - 2) % n + 1, b, b % n + 1]

    def select(self, t: int) -> int:
        cands = self.neighbourhood()
        best, best_idx = [], -np.inf
        for b in cands:
            c = self.counts[b - 1]
            idx = np.inf if c == 0 else self.means[b - 1] + self.eta * math.sqrt(2.0 * math.log(t) / c)
            if idx > best_idx:
                best, best_idx = [b], idx
            elif idx == best_idx:
                best.append(b)
        if self.leader in best:
            return self.leader
        return best[0] if len(best) == 1 else int(self.rng.choice(best))

    def update(self, obs: Observation) -> None:
        i = obs.beam - 1
        self.counts[i] += 1
        self.means[i] += (obs.reward - self.means[i]) / self.counts[i]
        lead = self.leader - 1
        if obs.beam != self.leader and self.counts[lead] > 0 and self.means[i] > self.means[lead]:
            self.leader = obs.beam
        self.leaders.append(self.leader)

    def best_guess(self) -> int:
        return self.leader


def hoo_policy(n_beams: int, rng: np.random.Generator, eta: float = 0.1, rho1: float = 3.0, **kw) -> HooPolicy:
    return HooPolicy(n_beams, rng, eta=eta, rho1=rho1, **kw)
