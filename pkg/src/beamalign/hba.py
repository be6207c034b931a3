"""Hierarchical beam alignment: an incrementally grown binary search tree
over the normalized beam space ``[0, 1]``.

Each slot descends from the root along the child with the larger Q-value,
adds the first node not yet in the tree, measures the beam at the centre of
its region and refreshes the statistics of every node. The search stops when
the region reached by the descent is narrower than ``zeta / N``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .bandit import Observation, Policy
from .errors import ConfigurationError, ProtocolViolation

INF = math.inf


@dataclass(frozen=True)
class HbaConfig:
    n_beams: int = 128
    rho1: float = 3.0
    gamma: float = 0.5
    zeta: float = 0.1
    sigma_sq: float = (2.0 / 60.0) ** 2
    # disabling termination turns the policy into an anytime tree search
    terminate: bool = True

    def __post_init__(self):
        if self.n_beams < 2:
            raise ConfigurationError("must be >= 2", "n_beams")
        if self.rho1 <= 0:
            raise ConfigurationError("must be positive", "rho1")
        if not 0 < self.gamma < 1:
            raise ConfigurationError("must lie in (0, 1)", "gamma")
        if not 0 < self.zeta < 1:
            raise ConfigurationError("must lie in (0, 1)", "zeta")
        if self.sigma_sq < 0:
            raise ConfigurationError("must be non-negative", "sigma_sq")

    @property
    def stop_width(self) -> float:
        return self.zeta / self.n_beams


@dataclass(frozen=True)
class TreeNode:
    """Read-only snapshot of one tree node."""

    depth: int
    index: int
    region: tuple[float, float]
    n_visits: int
    mean_reward: float
    e_value: float
    q_value: float
    children: tuple[int, int] | None


@numba.njit(cache=True)
def _refresh_values(size, depth, visits, mean, left, right, log_t, sigma_sq, rho1, gamma, e, q):
    # node ids are assigned in creation order, so descending ids visit
    # every child before its parent
    for i in range(size - 1, -1, -1):
        if visits[i] > 0:
            e[i] = mean[i] + math.sqrt(2.0 * sigma_sq * log_t / visits[i]) + rho1 * gamma ** depth[i]
        else:
            e[i] = np.inf
        lq = q[left[i]] if left[i] >= 0 else np.inf
        rq = q[right[i]] if right[i] >= 0 else np.inf
        if visits[i] > 0:
            q[i] = min(e[i], max(lq, rq))
        else:
            q[i] = np.inf


def node_to_beam(lo: float, hi: float, n_beams: int) -> int:
    """Beam whose steering angle is nearest the centre of ``[lo, hi]``.

    Position ``x`` in the normalized space is spatial angle ``2x - 1``, so
    beam ``i`` sits at ``x = i/N``; ``x = 0`` is the same direction as beam N.
    """
    c = (lo + hi) / 2.0
    i = math.floor(c * n_beams + 0.5) % n_beams
    return n_beams if i == 0 else i


class HbaTree:
    """Binary tree stored as parallel arrays; node 0 is the root ``(0, 1)``."""

    def __init__(self, capacity: int = 64):
        self.size = 0
        self._alloc(capacity)
        self._add(-1, 0, 1, 0.0, 1.0)

    def _alloc(self, cap):
        old = self.size
        def grow(arr, fill, dtype):
            new = np.full(cap, fill, dtype=dtype)
            if arr is not None:
                new[:old] = arr[:old]
            return new
        g = lambda name: getattr(self, name, None)
        self.depth = grow(g("depth"), 0, np.int64)
        self.index = grow(g("index"), 0, np.int64)
        self.lo = grow(g("lo"), 0.0, float)
        self.hi = grow(g("hi"), 0.0, float)
        self.visits = grow(g("visits"), 0, np.int64)
        self.mean = grow(g("mean"), 0.0, float)
        self.e = grow(g("e"), INF, float)
        self.q = grow(g("q"), INF, float)
        self.left = grow(g("left"), -1, np.int64)
        self.right = grow(g("right"), -1, np.int64)
        self.parent = grow(g("parent"), -1, np.int64)

    def _add(self, parent, depth, index, lo, hi) -> int:
        if self.size == len(self.depth):
            self._alloc(2 * len(self.depth))
        i = self.size
        self.size += 1
        self.depth[i], self.index[i], self.lo[i], self.hi[i] = depth, index, lo, hi
        self.parent[i] = parent
        return i

    def add_child(self, node: int, right: bool) -> int:
        """Create the left or right child of ``node`` and return its id."""
        lo, hi = self.lo[node], self.hi[node]
        mid = lo + (hi - lo) / 2.0
        h, j = int(self.depth[node]) + 1, int(self.index[node])
        if right:
            child = self._add(node, h, 2 * j, mid, hi)
            self.right[node] = child
        else:
            child = self._add(node, h, 2 * j - 1, lo, mid)
            self.left[node] = child
        return child

    def child_q(self, node: int) -> tuple[float, float]:
        left, right = self.left[node], self.right[node]
        return (self.q[left] if left >= 0 else INF, self.q[right] if right >= 0 else INF)

    def update_stats(self, path, reward: float) -> None:
        for i in path:
            self.visits[i] += 1
            n = self.visits[i]
            self.mean[i] = ((n - 1) * self.mean[i] + reward) / n

    def refresh(self, t: int, config: HbaConfig) -> None:
        """Recompute every E-value, then every Q-value from the leaves up."""
        _refresh_values(
            self.size, self.depth, self.visits, self.mean, self.left, self.right,
            math.log(t), config.sigma_sq, config.rho1, config.gamma, self.e, self.q,
        )

    def node(self, i: int) -> TreeNode:
        kids = None
        if self.left[i] >= 0 or self.right[i] >= 0:
            kids = (int(self.left[i]), int(self.right[i]))
        return TreeNode(
            int(self.depth[i]), int(self.index[i]), (float(self.lo[i]), float(self.hi[i])),
            int(self.visits[i]), float(self.mean[i]), float(self.e[i]), float(self.q[i]), kids,
        )

    def find(self, depth: int, index: int) -> int | None:
        """Node id of ``(depth, index)`` if it is in the tree."""
        node = 0
        for level in range(depth - 1, -1, -1):
            bit = ((index - 1) >> level) & 1
            node = self.right[node] if bit else self.left[node]
            if node < 0:
                return None
        return int(node)


class HbaPolicy(Policy):
    name = "hba"

    def __init__(self, config: HbaConfig, rng: np.random.Generator):
        super().__init__(config.n_beams)
        self.config = config
        self.rng = rng
        self.tree = HbaTree()
        self.bounds = (0.0, 1.0)
        self.t = 0
        self.terminated = False
        self.final_beam: int | None = None
        self._path: list[int] = []
        self.history: list[tuple[list[int], float]] = []

    def select_node(self) -> tuple[int, list[int]]:
        """Descend by strict Q comparison (fair coin on ties) to a new node."""
        if self.terminated:
            raise ProtocolViolation("node selection after termination")
        tree = self.tree
        node, path = 0, [0]
        while True:
            lq, rq = tree.child_q(node)
            if lq > rq:
                go_right = False
            elif lq < rq:
                go_right = True
            else:
                go_right = self.rng.integers(2) == 0
            child = tree.right[node] if go_right else tree.left[node]
            if child < 0:
                child = tree.add_child(node, go_right)
                path.append(child)
                break
            node = int(child)
            path.append(node)
        # the search region is the region of the node the descent reached
        self.bounds = (float(tree.lo[child]), float(tree.hi[child]))
        return int(child), path

    def select(self, t: int) -> int:
        self.t = t
        node, self._path = self.select_node()
        return node_to_beam(self.tree.lo[node], self.tree.hi[node], self.n_beams)

    def update(self, obs: Observation) -> None:
        reward = min(max(obs.reward, 0.0), 1.0)
        self.tree.update_stats(self._path, reward)
        self.history.append((self._path, reward))
        self.tree.refresh(self.t, self.config)
        self.check_termination()

    def check_termination(self) -> int | None:
        if self.terminated:
            return self.final_beam
        lo, hi = self.bounds
        if self.config.terminate and hi - lo < self.config.stop_width:
            self.terminated = True
            self.final_beam = node_to_beam(lo, hi, self.n_beams)
        return self.final_beam

    def finished(self) -> int | None:
        return self.final_beam

    def best_guess(self) -> int:
        """Beam of the deepest node reached by following the most-visited child."""
        tree, node = self.tree, 0
        while True:
            kids = [k for k in (tree.left[node], tree.right[node]) if k >= 0]
            if not kids:
                break
            node = max(kids, key=lambda k: (tree.visits[k], tree.mean[k]))
        return node_to_beam(tree.lo[node], tree.hi[node], self.n_beams)


def hoo_config(n_beams: int, eta: float = 0.1, rho1: float = 3.0, gamma: float = 0.5, zeta: float = 0.1) -> HbaConfig:
    """HOO shares the tree; its margin eta*sqrt(2 ln t / N) equals HBA's with sigma^2 = eta^2."""
    return HbaConfig(n_beams=n_beams, rho1=rho1, gamma=gamma, zeta=zeta, sigma_sq=eta**2)


class HooPolicy(HbaPolicy):
    name = "hoo"

    def __init__(self, n_beams: int, rng: np.random.Generator, eta: float = 0.1, rho1: float = 3.0, **kw):
        super().__init__(hoo_config(n_beams, eta, rho1, **kw), rng)
        self.eta = eta


def reference_q_values(tree: HbaTree, t: int, config: HbaConfig) -> dict[tuple[int, int], float]:
    """Q-values for every node, recomputed from scratch by recursion over ``(h, j)``.

    Deliberately independent of :meth:`HbaTree.refresh`: children are looked
    up by label rather than by stored pointers.
    """
    stats = {
        (int(tree.depth[i]), int(tree.index[i])): (int(tree.visits[i]), float(tree.mean[i]))
        for i in range(tree.size)
    }
    log_t = math.log(t)

    def e_value(h, n, r):
        if n == 0:
            return INF
        return r + math.sqrt(2.0 * config.sigma_sq * log_t / n) + config.rho1 * config.gamma**h

    out = {}

    def q(h, j):
        if (h, j) not in stats:
            return INF
        n, r = stats[(h, j)]
        val = INF if n == 0 else min(e_value(h, n, r), max(q(h + 1, 2 * j - 1), q(h + 1, 2 * j)))
        out[(h, j)] = val
        return val

    q(0, 1)
    return out
