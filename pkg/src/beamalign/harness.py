"""Monte-Carlo experiment runner, metric aggregation and result files."""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import channel as ch
from .bandit import cumulative_regret, run_episode
from .baselines import ExhaustivePolicy, UbaPolicy, UcbPolicy, hoo_policy
from .config import ALGORITHMS, DISTANCE_RANGE_M, ExperimentConfig
from .hba import HbaConfig, HbaPolicy, reference_q_values
from .latency import exhaustive_latency, learning_latency

# stable per-algorithm stream ids, independent of which algorithms run
STREAM_ID = {name: k + 1 for k, name in enumerate(ALGORITHMS)}
CSV_COLUMNS = ("algorithm", "metric", "index", "value", "p05", "p95")


def _rng(*key) -> np.random.Generator:
    return np.random.default_rng([int(k) for k in key])


def hba_config(config: ExperimentConfig) -> HbaConfig:
    return HbaConfig(
        n_beams=config.n_beams, rho1=config.rho1, gamma=config.gamma, zeta=config.zeta,
        sigma_sq=config.prior_sigma_sq, terminate=config.terminate,
    )


def make_policy(name: str, config: ExperimentConfig, rng: np.random.Generator):
    n = config.n_beams
    if name == "hba":
        return HbaPolicy(hba_config(config), rng)
    if name == "hoo":
        return hoo_policy(n, rng, eta=config.hoo_eta, rho1=config.rho1, gamma=config.gamma, zeta=config.zeta)
    if name == "ucb":
        return UcbPolicy(n, rng, eta=config.ucb_eta)
    if name == "uba":
        return UbaPolicy(n, rng, eta=config.uba_eta)
    if name == "exhaustive":
        return ExhaustivePolicy(n)
    raise KeyError(name)


def draw_environment(config: ExperimentConfig, run: int) -> tuple[ch.MultipathChannel, ch.RssModel]:
    rng = _rng(config.seed, run, 0)
    distance = config.distance_m
    if config.random_distance:
        distance = float(rng.uniform(*DISTANCE_RANGE_M))
    channel = ch.sample_channel(config.array, config.n_paths, distance, rng, config.path_loss_exponent)
    return channel, ch.build_rss_model(channel, config.array, config.fluctuation_model)


@dataclass
class RunRecord:
    regret: np.ndarray
    measurements: int
    correct: bool
    latency_ms: float
    final_beam: int


def simulate_run(config: ExperimentConfig, run: int) -> dict[str, RunRecord]:
    """One Monte-Carlo draw: every algorithm on the same channel realization."""
    _, model = draw_environment(config, run)
    rewards = model.mean_rewards
    best = model.optimal_beam
    out = {}
    for name in config.algorithms:
        sid = STREAM_ID[name]
        policy = make_policy(name, config, _rng(config.seed, run, sid, 1))
        trace = run_episode(model, policy, config.horizon, _rng(config.seed, run, sid, 0))
        m = trace.n_measurements
        if name == "exhaustive":
            lat = exhaustive_latency(config.n_beams, config.n_users, config.protocol).total_ms
        else:
            lat = learning_latency(m, config.n_users, config.protocol).total_ms
        out[name] = RunRecord(
            cumulative_regret(trace, rewards, config.horizon), m, trace.final_beam == best, lat, trace.final_beam,
        )
    return out


@dataclass
class AlgorithmSummary:
    regret_mean: list[float]
    regret_p05: list[float]
    regret_p95: list[float]
    measurements_mean: float
    measurements_p05: float
    measurements_p95: float
    accuracy: float
    latency_ms_mean: float
    latency_ms_p05: float
    latency_ms_p95: float
    n_runs: int


@dataclass
class MetricsSummary:
    algorithms: dict[str, AlgorithmSummary]
    n_runs: int
    seed: int
    horizon: int
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsSummary":
        algs = {k: AlgorithmSummary(**v) for k, v in d["algorithms"].items()}
        return cls(algs, d["n_runs"], d["seed"], d["horizon"], d.get("config", {}))


def summarize(records: list[RunRecord]) -> AlgorithmSummary:
    regret = np.stack([r.regret for r in records])
    meas = np.array([r.measurements for r in records], dtype=float)
    lat = np.array([r.latency_ms for r in records])
    p = lambda a, q, axis=None: np.percentile(a, q, axis=axis)
    return AlgorithmSummary(
        regret.mean(axis=0).tolist(), p(regret, 5, 0).tolist(), p(regret, 95, 0).tolist(),
        float(meas.mean()), float(p(meas, 5)), float(p(meas, 95)),
        float(np.mean([r.correct for r in records])),
        float(lat.mean()), float(p(lat, 5)), float(p(lat, 95)),
        len(records),
    )


def _run_chunk(args):
    config, runs = args
    return [(run, simulate_run(config, run)) for run in runs]


def collect_runs(config: ExperimentConfig) -> list[dict[str, RunRecord]]:
    """All run records ordered by run index, whatever the worker scheduling."""
    runs = range(config.n_runs)
    if config.threads == 1:
        pairs = _run_chunk((config, runs))
    else:
        chunks = [(config, runs[k::config.threads]) for k in range(config.threads)]
        with ProcessPoolExecutor(config.threads) as pool:
            pairs = [p for part in pool.map(_run_chunk, chunks) for p in part]
    pairs.sort(key=lambda p: p[0])
    return [rec for _, rec in pairs]


def run_monte_carlo(config: ExperimentConfig) -> MetricsSummary:
    per_run = collect_runs(config)
    algs = {name: summarize([r[name] for r in per_run]) for name in config.algorithms}
    return MetricsSummary(algs, config.n_runs, config.seed, config.horizon, config.to_dict())


def run_prior_sweep(config: ExperimentConfig, ratios) -> list[MetricsSummary]:
    """Re-run with HBA's variance prior scaled by each ratio; the environment is unchanged."""
    for eta in ratios:
        if not 0.25 <= eta <= 4:
            raise ValueError(f"prior ratio {eta} outside [0.25, 4]")
    return [run_monte_carlo(config.replace(prior_ratio=float(eta))) for eta in ratios]


def emit_results(summary: MetricsSummary, fmt: str, path) -> None:
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown format {fmt!r}")
    try:
        with open(path, "w", newline="") as fh:
            if fmt == "json":
                json.dump(summary.to_dict(), fh, indent=1, sort_keys=True)
                fh.write("\n")
            else:
                write_csv(summary, fh)
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc.strerror or exc}") from exc


def csv_rows(summary: MetricsSummary):
    for name, s in summary.algorithms.items():
        for i, (v, lo, hi) in enumerate(zip(s.regret_mean, s.regret_p05, s.regret_p95), start=1):
            yield (name, "regret", i, v, lo, hi)
        yield (name, "measurements", 0, s.measurements_mean, s.measurements_p05, s.measurements_p95)
        yield (name, "accuracy", 0, s.accuracy, "", "")
        yield (name, "latency_ms", 0, s.latency_ms_mean, s.latency_ms_p05, s.latency_ms_p95)


def write_csv(summary: MetricsSummary, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in csv_rows(summary):
        w.writerow([repr(x) if isinstance(x, float) else x for x in row])


# --- property suites -------------------------------------------------------


@dataclass
class PropertyResult:
    name: str
    checked: int
    failures: int
    counterexample_seeds: list[int]

    @property
    def passed(self) -> bool:
        return self.failures == 0


@dataclass
class ValidationReport:
    results: list[PropertyResult]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def lines(self) -> list[str]:
        out = []
        for r in self.results:
            status = "PASS" if r.passed else "FAIL"
            line = f"{status} {r.name}: {r.checked - r.failures}/{r.checked}"
            if r.counterexample_seeds:
                line += f" counterexample seeds {r.counterexample_seeds[:10]}"
            out.append(line)
        return out


UNIMODAL_SIZES = (8, 16, 32, 64, 128, 256, 512)


def _check(name, seeds, predicate) -> PropertyResult:
    bad = [s for s in seeds if not predicate(s)]
    return PropertyResult(name, len(seeds), len(bad), bad)


def single_path_unimodal(seed: int, array: ch.ArrayConfig, distance_m: float = 20.0) -> bool:
    n = UNIMODAL_SIZES[seed % len(UNIMODAL_SIZES)]
    arr = ch.ArrayConfig(**{**asdict(array), "n_antennas": n})
    chan = ch.sample_channel(arr, 1, distance_m, _rng(seed, 11))
    return ch.check_unimodal_cyclic(ch.mean_rss_profile(chan, arr))


def los_main_lobe_argmax(seed: int, array: ch.ArrayConfig, n_paths: int = 2, distance_m: float = 20.0) -> bool:
    """The strongest beam is one of the two beams bracketing the LOS angle."""
    chan = ch.sample_channel(array, n_paths, distance_m, _rng(seed, 12))
    n = array.n_antennas
    best = int(np.argmax(ch.mean_rss_profile(chan, array))) + 1
    omega = ch.spatial_angles(n)[best - 1]
    offset = (omega - chan.los.spatial_angle + 1.0) % 2.0 - 1.0
    return abs(offset) < 2.0 / n


def tree_invariants(policy: HbaPolicy, reward_hook=None) -> bool:
    """Structural and statistical invariants of a finished HBA episode's tree."""
    tree, config = policy.tree, policy.config
    t = len(policy.history)
    if tree.size != t + 1 or tree.visits[0] != t:
        return False
    # replay: every node's mean equals the mean of rewards of slots through it
    sums = np.zeros(tree.size)
    counts = np.zeros(tree.size, dtype=int)
    for k, (path, reward) in enumerate(policy.history):
        if reward_hook is not None:
            reward = reward_hook(k, reward)
        for i in path:
            sums[i] += reward
            counts[i] += 1
    visited = counts[: tree.size] > 0
    if not np.array_equal(counts, tree.visits[: tree.size]):
        return False
    if not np.allclose(sums[visited] / counts[visited], tree.mean[: tree.size][visited], rtol=0, atol=1e-12):
        return False
    ref = reference_q_values(tree, t, config)
    for i in range(tree.size):
        node = tree.node(i)
        lo, hi = node.region
        if not math.isclose(hi - lo, 2.0 ** -node.depth, rel_tol=0, abs_tol=1e-15):
            return False
        if node.q_value > node.e_value:
            return False
        if abs(ref[(node.depth, node.index)] - node.q_value) > 1e-12:
            return False
        for side, k in enumerate(node.children or ()):
            if k >= 0:
                clo, chi = tree.node(k).region
                mid = lo + (hi - lo) / 2
                if (clo, chi) != ((lo, mid) if side == 0 else (mid, hi)):
                    return False
    return True


def random_episode(seed: int, config: ExperimentConfig, horizon: int = 200) -> HbaPolicy:
    n = UNIMODAL_SIZES[seed % len(UNIMODAL_SIZES)]
    cfg = config.replace(n_beams=n)
    chan = ch.sample_channel(cfg.array, 1 + seed % 3, cfg.distance_m, _rng(seed, 21))
    model = ch.build_rss_model(chan, cfg.array, cfg.fluctuation_model)
    policy = HbaPolicy(hba_config(cfg), _rng(seed, 22))
    run_episode(model, policy, horizon, _rng(seed, 23))
    return policy


def validate(config: ExperimentConfig, n_channels: int = 100, n_episodes: int = 20, inject_fault: bool = False) -> ValidationReport:
    """Run the channel-structure and tree-invariant suites.

    With ``inject_fault`` the replay of the first episode sees one reward
    with its sign flipped, which must surface as a reported failure.
    """
    base = config.seed * 100_003
    seeds = [base + k for k in range(n_channels)]
    arr = config.array
    results = [
        _check("single_path_unimodal", seeds, lambda s: single_path_unimodal(s, arr, config.distance_m)),
        _check("two_path_los_dominant", seeds, lambda s: los_main_lobe_argmax(s, arr, 2, config.distance_m)),
        _check(
            "directivity_even",
            seeds[:10],
            lambda s: np.allclose(
                ch.directivity(x := _rng(s, 31).uniform(-2, 2, 64), arr.n_antennas, arr.element_spacing_ratio),
                ch.directivity(-x, arr.n_antennas, arr.element_spacing_ratio),
            ),
        ),
    ]
    ep_seeds = [base + k for k in range(n_episodes)]
    flip = (lambda k, r: -r if k == 0 else r) if inject_fault else None

    def episode_ok(s):
        hook = flip if (inject_fault and s == ep_seeds[0]) else None
        return tree_invariants(random_episode(s, config), hook)

    results.append(_check("hba_tree_invariants", ep_seeds, episode_ok))
    return ValidationReport(results)


# --- visit-count check against the logarithmic bound -------------------------


@dataclass
class NodeVisitBound:
    depth: int
    index: int
    suboptimality: float
    mean_visits: float
    bound: float

    @property
    def ok(self) -> bool:
        return self.mean_visits <= self.bound


def region_best_reward(lo: float, hi: float, rewards: np.ndarray) -> float:
    """Best mean reward over beams whose steering position i/N lies in ``[lo, hi]``.

    Falls back to the beam nearest the centre when no beam position is inside.
    """
    n = len(rewards)
    first, last = math.ceil(lo * n - 1e-12), math.floor(hi * n + 1e-12)
    idx = [(i - 1) % n for i in range(first, last + 1)] or [(round((lo + hi) / 2 * n) - 1) % n]
    return float(rewards[idx].max())


def node_visit_check(config: ExperimentConfig, channel_seed: int, n_runs: int, horizon: int,
                     max_depth: int = 4, slack: float = 3.0, additive: float = 10.0) -> list[NodeVisitBound]:
    """Mean visits of clearly suboptimal shallow nodes versus the log bound.

    The channel is fixed (drawn from ``channel_seed``) and HBA runs without
    termination for ``horizon`` slots in each of ``n_runs`` noise draws. A
    node at depth h with suboptimality eps > rho1 * gamma**h must satisfy
    mean visits <= slack * (8 sigma^2 ln T / (eps - rho1 gamma^h)^2 + additive).
    """
    cfg = config.replace(terminate=False)
    chan = ch.sample_channel(cfg.array, cfg.n_paths, cfg.distance_m, _rng(channel_seed, 41))
    model = ch.build_rss_model(chan, cfg.array, cfg.fluctuation_model)
    rewards = model.mean_rewards
    f_star = rewards.max()
    hcfg = hba_config(cfg)
    visits = {}
    for run in range(n_runs):
        policy = HbaPolicy(hcfg, _rng(channel_seed, run, 42))
        run_episode(model, policy, horizon, _rng(channel_seed, run, 43))
        tree = policy.tree
        for i in range(tree.size):
            h = int(tree.depth[i])
            if h <= max_depth:
                key = (h, int(tree.index[i]))
                visits[key] = visits.get(key, 0) + int(tree.visits[i])
    out = []
    for h in range(max_depth + 1):
        width = 2.0**-h
        smooth = hcfg.rho1 * hcfg.gamma**h
        for j in range(1, 2**h + 1):
            eps = f_star - region_best_reward((j - 1) * width, j * width, rewards)
            if eps <= smooth:
                continue
            bound = slack * (8 * hcfg.sigma_sq * math.log(horizon) / (eps - smooth) ** 2 + additive)
            out.append(NodeVisitBound(h, j, eps, visits.get((h, j), 0) / n_runs, bound))
    return out
