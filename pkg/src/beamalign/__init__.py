"""Fast mmWave beam alignment via correlated bandit learning."""
from .bandit import Observation, Policy, RunTrace, cumulative_regret, run_episode
from .baselines import ExhaustivePolicy, UbaPolicy, UcbPolicy, hoo_policy
from .channel import (
    ArrayConfig,
    FluctuationModel,
    MultipathChannel,
    PathComponent,
    RssModel,
    build_rss_model,
    check_unimodal_cyclic,
    directivity,
    mean_rss_dbm,
    normalize_reward,
    path_loss_db,
    sample_channel,
    sample_rss_dbm,
    spatial_angles,
)
from .config import ExperimentConfig, load_config
from .errors import ConfigurationError, ProtocolViolation
from .hba import HbaConfig, HbaPolicy, node_to_beam
from .harness import MetricsSummary, emit_results, run_monte_carlo, run_prior_sweep, validate
from .latency import AbftConfig, LatencyResult, exhaustive_latency, learning_latency

__version__ = "0.1.0"
