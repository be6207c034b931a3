"""Beam-alignment latency under the 802.11ad A-BFT / beacon-interval structure.

Frames are packed into the A-BFT of successive beacon intervals; a frame
that does not fit waits for the next interval, costing a whole BI.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigurationError

DEFAULT_FRAMES_PER_BI = 256


@dataclass(frozen=True)
class AbftConfig:
    abft_slots_per_bi: int = 8
    ssw_frames_per_slot: int = 16
    t_ssw_us: float = 15.8
    t_bi_ms: float = 100.0
    t_feedback_us: float = 1.0
    frames_per_bi_override: int | None = None

    def __post_init__(self):
        for name in ("abft_slots_per_bi", "ssw_frames_per_slot", "t_ssw_us", "t_bi_ms"):
            if getattr(self, name) <= 0:
                raise ConfigurationError("must be positive", name)
        if self.t_feedback_us < 0:
            raise ConfigurationError("must be non-negative", "t_feedback_us")
        if self.frames_per_bi_override is not None and self.frames_per_bi_override < 1:
            raise ConfigurationError("must be >= 1", "frames_per_bi_override")

    @property
    def capacity(self) -> int:
        """Frames that fit in one beacon interval's A-BFT."""
        if self.frames_per_bi_override is not None:
            return self.frames_per_bi_override
        return DEFAULT_FRAMES_PER_BI

    @property
    def nominal_capacity(self) -> int:
        return self.abft_slots_per_bi * self.ssw_frames_per_slot


@dataclass(frozen=True)
class LatencyResult:
    total_ms: float
    bi_spans: int
    frames_scheduled: float


def schedule(frames: float, frame_us: float, config: AbftConfig) -> LatencyResult:
    """Elapsed time until the last of ``frames`` back-to-back frames completes."""
    cap = config.capacity
    bi_index = max(1, math.ceil(frames / cap))
    in_last = frames - (bi_index - 1) * cap
    total = (bi_index - 1) * config.t_bi_ms + in_last * frame_us / 1000.0
    return LatencyResult(total, bi_index, frames)


def exhaustive_latency(n_beams: int, n_users: int = 1, config: AbftConfig | None = None) -> LatencyResult:
    """Receiver sweep then transmitter sweep (2N SSW frames) per user, users in turn."""
    if n_beams < 2:
        raise ConfigurationError("must be >= 2", "n_beams")
    if n_users < 1:
        raise ConfigurationError("must be >= 1", "n_users")
    config = config or AbftConfig()
    return schedule(2 * n_beams * n_users, config.t_ssw_us, config)


def learning_latency(n_measurements: float, n_users: int = 1, config: AbftConfig | None = None) -> LatencyResult:
    """One SSW frame plus one RSS feedback frame per measurement.

    ``n_measurements`` may be fractional when it is a Monte-Carlo mean.
    """
    if n_measurements < 1:
        raise ConfigurationError("must be >= 1", "n_measurements")
    if n_users < 1:
        raise ConfigurationError("must be >= 1", "n_users")
    config = config or AbftConfig()
    return schedule(n_measurements * n_users, config.t_ssw_us + config.t_feedback_us, config)
