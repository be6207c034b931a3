"""Sparse multipath mmWave channel and per-beam received signal strength.

Beams are 1-indexed throughout (beam ``i`` has spatial angle ``(2i - N)/N``).
Mean RSS is the incoherent per-path sum of directivity lobes plus thermal
noise; per-slot fluctuation is added in the dB domain.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

SIGNAL_FLOOR_DBM = -80.0
SIGNAL_CEIL_DBM = -20.0
MAX_PATHS = 5
NLOS_EXTRA_LOSS_DB = (7.0, 13.0)
UNIMODAL_TOL = 1e-12


@dataclass(frozen=True)
class ArrayConfig:
    n_antennas: int = 128
    element_spacing_ratio: float = 0.5
    carrier_freq_ghz: float = 60.0
    bandwidth_ghz: float = 2.16
    noise_density_dbm_hz: float = -174.0
    eirp_dbm: float = 50.0

    def __post_init__(self):
        if int(self.n_antennas) != self.n_antennas or self.n_antennas < 2:
            raise ConfigurationError("must be an integer >= 2", "n_antennas")
        if self.element_spacing_ratio <= 0:
            raise ConfigurationError("must be positive", "element_spacing_ratio")
        if self.bandwidth_ghz <= 0:
            raise ConfigurationError("must be positive", "bandwidth_ghz")
        if self.carrier_freq_ghz <= 0:
            raise ConfigurationError("must be positive", "carrier_freq_ghz")

    @property
    def tx_power_dbm(self) -> float:
        # EIRP split across the array gain
        return self.eirp_dbm - 10.0 * math.log10(self.n_antennas)

    @property
    def noise_power_dbm(self) -> float:
        return self.noise_density_dbm_hz + 10.0 * math.log10(self.bandwidth_ghz * 1e9)


@dataclass(frozen=True)
class PathComponent:
    spatial_angle: float
    gain_linear: float
    is_los: bool = False

    def __post_init__(self):
        if not -1.0 <= self.spatial_angle <= 1.0:
            raise ConfigurationError("must lie in [-1, 1]", "spatial_angle")
        if self.gain_linear < 0:
            raise ConfigurationError("must be non-negative", "gain_linear")


@dataclass(frozen=True)
class MultipathChannel:
    paths: tuple[PathComponent, ...]

    def __post_init__(self):
        if not 1 <= len(self.paths) <= MAX_PATHS:
            raise ConfigurationError(f"must be in [1, {MAX_PATHS}]", "n_paths")
        if not self.paths[0].is_los or any(p.is_los for p in self.paths[1:]):
            raise ConfigurationError("exactly one LOS path, listed first", "paths")

    @property
    def n_paths(self) -> int:
        return len(self.paths)

    @property
    def los(self) -> PathComponent:
        return self.paths[0]


@dataclass(frozen=True)
class FluctuationModel:
    """Zero-mean dB-domain fluctuation with standard deviation ``sigma_db``.

    The uniform and Rayleigh kinds are shifted and scaled so that their
    mean is zero and their variance is ``sigma_db**2``.
    """

    kind: str = "gaussian"
    sigma_db: float = 2.0

    KINDS = ("gaussian", "uniform", "rayleigh")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ConfigurationError(f"unknown kind {self.kind!r}", "fluctuation")
        if self.sigma_db < 0:
            raise ConfigurationError("must be non-negative", "sigma_db")

    def sample(self, rng: np.random.Generator, size=None):
        s = self.sigma_db
        if self.kind == "gaussian":
            return rng.normal(0.0, s, size)
        if self.kind == "uniform":
            half = s * math.sqrt(3.0)
            return rng.uniform(-half, half, size)
        scale = s / math.sqrt((4.0 - math.pi) / 2.0)
        return rng.rayleigh(scale, size) - scale * math.sqrt(math.pi / 2.0)


@dataclass(frozen=True, eq=False)
class RssModel:
    mean_rss_dbm: np.ndarray
    fluctuation: FluctuationModel = field(default_factory=FluctuationModel)
    signal_floor_dbm: float = SIGNAL_FLOOR_DBM
    signal_ceil_dbm: float = SIGNAL_CEIL_DBM

    def __post_init__(self):
        if self.signal_floor_dbm >= self.signal_ceil_dbm:
            raise ConfigurationError("floor must be below ceiling", "signal_floor_dbm")
        arr = np.asarray(self.mean_rss_dbm, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "mean_rss_dbm", arr)

    @property
    def n_beams(self) -> int:
        return len(self.mean_rss_dbm)

    @property
    def mean_rewards(self) -> np.ndarray:
        return normalize_reward(self.mean_rss_dbm, self.signal_floor_dbm, self.signal_ceil_dbm)

    @property
    def optimal_beam(self) -> int:
        return int(np.argmax(self.mean_rss_dbm)) + 1

    def sample(self, beam: int, rng: np.random.Generator) -> float:
        return sample_rss_dbm(self, beam, rng)


def spatial_angles(n_beams: int) -> np.ndarray:
    if n_beams < 2:
        raise ConfigurationError("need at least 2 beams", "n_beams")
    i = np.arange(1, n_beams + 1)
    return (2 * i - n_beams) / n_beams


def directivity(x, n_antennas: int, spacing_ratio: float = 0.5):
    """Array factor sin^2(N pi s x) / sin^2(pi s x), with the N^2 limit at the poles."""
    x = np.asarray(x, dtype=float)
    num = np.sin(n_antennas * np.pi * spacing_ratio * x) ** 2
    den = np.sin(np.pi * spacing_ratio * x) ** 2
    singular = den < 1e-24
    out = np.divide(num, den, out=np.full_like(num, float(n_antennas) ** 2), where=~singular)
    return out if out.ndim else float(out)


def path_loss_db(freq_ghz: float, distance_m: float, exponent: float = 1.74, shadow_db: float = 0.0) -> float:
    if freq_ghz <= 0:
        raise ConfigurationError("must be positive", "carrier_freq_ghz")
    if distance_m <= 0:
        raise ConfigurationError("must be positive", "distance_m")
    return 32.5 + 20.0 * math.log10(freq_ghz) + 10.0 * exponent * math.log10(distance_m) + shadow_db


def sample_channel(
    array: ArrayConfig,
    n_paths: int,
    distance_m: float,
    rng: np.random.Generator,
    path_loss_exponent: float = 1.74,
) -> MultipathChannel:
    if not 1 <= n_paths <= MAX_PATHS:
        raise ConfigurationError(f"must be in [1, {MAX_PATHS}]", "n_paths")
    pl = path_loss_db(array.carrier_freq_ghz, distance_m, path_loss_exponent)
    g0_sq = 10.0 ** (-pl / 10.0)
    paths = [PathComponent(float(rng.uniform(-1.0, 1.0)), math.sqrt(g0_sq), True)]
    for _ in range(n_paths - 1):
        angle = float(rng.uniform(-1.0, 1.0))
        extra = float(rng.uniform(*NLOS_EXTRA_LOSS_DB))
        paths.append(PathComponent(angle, math.sqrt(g0_sq * 10.0 ** (-extra / 10.0))))
    return MultipathChannel(tuple(paths))


def mean_rss_profile(channel: MultipathChannel, array: ArrayConfig) -> np.ndarray:
    """Mean RSS in dBm for every beam of the DFT codebook (index 0 is beam 1)."""
    n = array.n_antennas
    omega = spatial_angles(n)
    p_lin = 10.0 ** (array.tx_power_dbm / 10.0)
    power = np.full(n, 10.0 ** (array.noise_power_dbm / 10.0))
    for path in channel.paths:
        lobe = directivity(omega - path.spatial_angle, n, array.element_spacing_ratio)
        power += p_lin * path.gain_linear**2 / n * lobe
    return 10.0 * np.log10(power)


def mean_rss_dbm(channel: MultipathChannel, array: ArrayConfig, beam_index: int) -> float:
    if not 1 <= beam_index <= array.n_antennas:
        raise IndexError(f"beam {beam_index} outside 1..{array.n_antennas}")
    return float(mean_rss_profile(channel, array)[beam_index - 1])


def build_rss_model(
    channel: MultipathChannel,
    array: ArrayConfig,
    fluctuation: FluctuationModel | None = None,
) -> RssModel:
    return RssModel(mean_rss_profile(channel, array), fluctuation or FluctuationModel())


def sample_rss_dbm(model: RssModel, beam_index: int, rng: np.random.Generator) -> float:
    if not 1 <= beam_index <= model.n_beams:
        raise IndexError(f"beam {beam_index} outside 1..{model.n_beams}")
    mean = float(model.mean_rss_dbm[beam_index - 1])
    if model.fluctuation.sigma_db == 0:
        return mean
    return mean + float(model.fluctuation.sample(rng))


def normalize_reward(rss_dbm, floor_dbm: float = SIGNAL_FLOOR_DBM, ceil_dbm: float = SIGNAL_CEIL_DBM):
    """Affine map of [floor, ceil] dBm onto [0, 1], clamped."""
    r = np.clip((np.asarray(rss_dbm, dtype=float) - floor_dbm) / (ceil_dbm - floor_dbm), 0.0, 1.0)
    return r if r.ndim else float(r)


def nearest_beam(spatial_angle: float, n_beams: int) -> int:
    """Beam whose spatial angle is cyclically closest (angles wrap with period 2)."""
    i = int(round((spatial_angle + 1.0) * n_beams / 2.0)) % n_beams
    return n_beams if i == 0 else i


def _cyclic_signs(values, tol):
    v = np.asarray(values, dtype=float)
    d = np.roll(v, -1) - v
    return np.where(d > tol, 1, np.where(d < -tol, -1, 0))


def check_unimodal_cyclic(values, tol: float = UNIMODAL_TOL) -> bool:
    """True iff the cyclic sequence has exactly one peak, plateaus within ``tol`` allowed."""
    if len(values) < 3:
        raise ValueError("need at least 3 values")
    signs = _cyclic_signs(values, tol)
    signs = signs[signs != 0]
    if signs.size == 0:
        return True
    # count rise->fall transitions around the cycle
    falls = np.count_nonzero((signs == 1) & (np.roll(signs, -1) == -1))
    return falls <= 1


def local_maxima_cyclic(values) -> np.ndarray:
    """1-based indices of strict local maxima on the cyclic beam graph."""
    v = np.asarray(values, dtype=float)
    mask = (v > np.roll(v, 1)) & (v > np.roll(v, -1))
    return np.flatnonzero(mask) + 1
