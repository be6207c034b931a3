"""Experiment configuration and its INI file form.

Sections mirror the library modules::

    [experiment]  n_beams, n_paths, distance_m, horizon, n_runs, algorithms, ...
    [array]       element_spacing_ratio, carrier_freq_ghz, bandwidth_ghz, ...
    [hba]         rho1, gamma, zeta, terminate
    [baselines]   ucb_eta, hoo_eta, uba_eta
    [protocol]    t_ssw_us, t_bi_ms, t_feedback_us, frames_per_bi_override, ...

Unknown sections or keys are rejected.
"""
from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field, fields

from .channel import MAX_PATHS, ArrayConfig, FluctuationModel
from .errors import ConfigurationError
from .latency import AbftConfig

ALGORITHMS = ("hba", "hoo", "ucb", "uba", "exhaustive")
DISTANCE_RANGE_M = (5.0, 50.0)


@dataclass(frozen=True)
class ExperimentConfig:
    n_beams: int = 128
    n_paths: int = 2
    distance_m: float = 20.0
    random_distance: bool = False
    horizon: int = 1000
    n_runs: int = 1000
    algorithms: tuple[str, ...] = ALGORITHMS
    fluctuation: str = "gaussian"
    sigma_db: float = 2.0
    prior_ratio: float = 1.0
    n_users: int = 1
    seed: int = 0
    threads: int = 1
    path_loss_exponent: float = 1.74
    # [hba]
    rho1: float = 3.0
    gamma: float = 0.5
    zeta: float = 0.1
    terminate: bool = True
    # [baselines]
    ucb_eta: float = 0.2
    hoo_eta: float = 0.1
    uba_eta: float = 0.2
    array: ArrayConfig = field(default_factory=ArrayConfig)
    protocol: AbftConfig = field(default_factory=AbftConfig)

    def __post_init__(self):
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        if self.n_beams < 2:
            raise ConfigurationError("must be >= 2", "n_beams")
        if not 1 <= self.n_paths <= MAX_PATHS:
            raise ConfigurationError(f"must be in [1, {MAX_PATHS}]", "n_paths")
        if self.distance_m <= 0:
            raise ConfigurationError("must be positive", "distance_m")
        if self.horizon < 1:
            raise ConfigurationError("must be >= 1", "horizon")
        if self.n_runs < 1:
            raise ConfigurationError("must be >= 1", "n_runs")
        unknown = [a for a in self.algorithms if a not in ALGORITHMS]
        if unknown:
            raise ConfigurationError(f"unknown algorithm(s) {unknown}", "algorithms")
        if len(set(self.algorithms)) != len(self.algorithms):
            raise ConfigurationError("duplicate algorithm", "algorithms")
        FluctuationModel(self.fluctuation, self.sigma_db)
        if self.prior_ratio <= 0:
            raise ConfigurationError("must be positive", "prior_ratio")
        if self.n_users < 1:
            raise ConfigurationError("must be >= 1", "n_users")
        if self.threads < 1:
            raise ConfigurationError("must be >= 1", "threads")
        if self.seed < 0:
            raise ConfigurationError("must be non-negative", "seed")
        if self.array.n_antennas != self.n_beams:
            object.__setattr__(self, "array", dataclasses.replace(self.array, n_antennas=self.n_beams))

    @property
    def fluctuation_model(self) -> FluctuationModel:
        return FluctuationModel(self.fluctuation, self.sigma_db)

    @property
    def prior_sigma_sq(self) -> float:
        """HBA's reward-domain variance prior: ratio times the true (sigma_dB / 60)^2."""
        span = 60.0
        return self.prior_ratio * (self.sigma_db / span) ** 2

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["algorithms"] = list(self.algorithms)
        return d


_SECTIONS = {
    "experiment": [
        "n_beams", "n_paths", "distance_m", "random_distance", "horizon", "n_runs",
        "algorithms", "fluctuation", "sigma_db", "prior_ratio", "n_users", "seed",
        "threads", "path_loss_exponent",
    ],
    "hba": ["rho1", "gamma", "zeta", "terminate"],
    "baselines": ["ucb_eta", "hoo_eta", "uba_eta"],
}


def _convert(raw: str, typ, name: str):
    typ = str(typ)
    try:
        if "bool" in typ:
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if "tuple" in typ:
            return tuple(x.strip() for x in raw.replace(",", " ").split() if x.strip())
        if "int" in typ and "float" not in typ:
            if raw.strip().lower() in ("", "none"):
                return None
            return int(raw)
        if "float" in typ:
            return float(raw)
        return raw.strip()
    except ValueError:
        raise ConfigurationError(f"cannot parse {raw!r}", name) from None


def _section_values(parser, section, cls, allowed=None):
    types = {f.name: f.type for f in fields(cls)}
    allowed = allowed or [k for k in types if k != "n_antennas"]
    out = {}
    for key, raw in parser.items(section):
        if key not in allowed:
            raise ConfigurationError(f"unknown key in [{section}]", key)
        out[key] = _convert(raw, types[key], key)
    return out


def parse_config(text: str, **overrides) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(str(exc).splitlines()[0], "config") from None
    top, array, protocol = {}, {}, {}
    for section in parser.sections():
        if section in _SECTIONS:
            top.update(_section_values(parser, section, ExperimentConfig, _SECTIONS[section]))
        elif section == "array":
            array.update(_section_values(parser, section, ArrayConfig))
        elif section == "protocol":
            protocol.update(_section_values(parser, section, AbftConfig))
        else:
            raise ConfigurationError("unknown section", section)
    top.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(
        **top,
        array=ArrayConfig(n_antennas=max(2, int(top.get("n_beams", 128))), **array),
        protocol=AbftConfig(**protocol),
    )


def load_config(path, **overrides) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read(), **overrides)
