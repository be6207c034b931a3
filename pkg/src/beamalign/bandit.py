"""Episode loop and regret accounting shared by every beam-selection policy."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import RssModel, normalize_reward
from .errors import ConfigurationError, ProtocolViolation


@dataclass(frozen=True)
class Observation:
    t: int
    beam: int
    reward: float
    rss_dbm: float


class Policy:
    """Sequential beam-selection policy over beams ``1..n_beams``.

    Subclasses implement :meth:`select` and :meth:`update`. A policy that
    decides on its own returns the beam from :meth:`finished`; otherwise the
    episode falls back to :meth:`best_guess`, then to the most-played beam.
    """

    name = "policy"

    def __init__(self, n_beams: int):
        self.n_beams = n_beams

    def select(self, t: int) -> int:
        raise NotImplementedError

    def update(self, obs: Observation) -> None:
        raise NotImplementedError

    def finished(self) -> int | None:
        return None

    def best_guess(self) -> int | None:
        return None


@dataclass
class RunTrace:
    observations: list[Observation] = field(default_factory=list)
    terminated_at: int | None = None
    final_beam: int = 0

    @property
    def beams(self) -> np.ndarray:
        return np.array([o.beam for o in self.observations], dtype=int)

    @property
    def rewards(self) -> np.ndarray:
        return np.array([o.reward for o in self.observations])

    @property
    def n_measurements(self) -> int:
        return len(self.observations)


def most_selected_beam(beams, n_beams: int) -> int:
    counts = np.bincount(np.asarray(beams, dtype=int), minlength=n_beams + 1)
    return int(np.argmax(counts[1:])) + 1


def run_episode(env: RssModel, policy: Policy, horizon: int, rng: np.random.Generator) -> RunTrace:
    """Play ``policy`` against ``env`` for up to ``horizon`` slots.

    ``rng`` drives only the reward fluctuation; the policy owns its own stream.
    """
    if horizon < 1:
        raise ConfigurationError("must be >= 1", "horizon")
    trace = RunTrace()
    for t in range(1, horizon + 1):
        beam = policy.select(t)
        if not 1 <= beam <= env.n_beams:
            raise ProtocolViolation(f"{policy.name} selected beam {beam} outside 1..{env.n_beams}")
        rss = env.sample(beam, rng)
        obs = Observation(t, beam, normalize_reward(rss, env.signal_floor_dbm, env.signal_ceil_dbm), rss)
        trace.observations.append(obs)
        policy.update(obs)
        done = policy.finished()
        if done is not None:
            trace.terminated_at = t
            trace.final_beam = done
            return trace
    guess = policy.best_guess()
    trace.final_beam = guess if guess is not None else most_selected_beam(trace.beams, env.n_beams)
    return trace


def cumulative_regret(trace: RunTrace, mean_rewards, horizon: int | None = None) -> np.ndarray:
    """Cumulative expected regret per slot.

    With ``horizon`` set, a trace that stopped early is padded by committing
    to its final beam for the remaining slots.
    """
    mean_rewards = np.asarray(mean_rewards, dtype=float)
    beams = trace.beams
    if beams.size == 0:
        raise ValueError("empty trace")
    if beams.min() < 1 or beams.max() > mean_rewards.size:
        raise IndexError("trace beam outside the reward list")
    gaps = mean_rewards.max() - mean_rewards
    per_slot = gaps[beams - 1]
    if horizon is not None and horizon > beams.size:
        per_slot = np.concatenate([per_slot, np.full(horizon - beams.size, gaps[trace.final_beam - 1])])
    return np.cumsum(per_slot)
