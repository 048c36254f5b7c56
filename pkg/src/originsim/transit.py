"""Per-individual transit through the trade network.

Each simulated individual is routed by a Markov decision process on the
network: movement along an edge costs distance scaled up by the conflict
crossed, entering an absorbing node pays that node's terminal reward, and
an attempted move succeeds with probability 0.98 (else the caravan stays
put for a step, at no cost). With discount 1 and costs charged only on
successful moves, the expected values coincide with the deterministic
chain, so policy iteration runs on that equivalent.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .ingest import TradeNetwork, _id_sort_key
from .surface import CapturePoint, ConflictDensity

__all__ = [
    "MdpInstance",
    "Policy",
    "RewardDistribution",
    "TransitTrace",
    "ImproperPolicyError",
    "nearest_node",
    "nearest_nodes",
    "edge_conflict",
    "edge_cost",
    "draw_terminal_rewards",
    "build_mdp",
    "policy_iteration",
    "simulate_trajectory",
    "port_path_costs",
]

MOVE_SUCCESS = 0.98


class ImproperPolicyError(RuntimeError):
    """A policy (or instance) fails to route some state to an absorbing node."""


@dataclass(frozen=True)
class RewardDistribution:
    """Terminal rewards R ~ N(mean, variance·I) over absorbing nodes."""

    mean: np.ndarray
    variance: float

    def __post_init__(self):
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=float).ravel())
        if self.variance < 0:
            raise ValueError("reward variance must be >= 0")

    @classmethod
    def equal(cls, n_absorbing: int, mean: float = 10.0, variance: float = 0.1):
        return cls(np.full(n_absorbing, mean), variance)


def draw_terminal_rewards(dist: RewardDistribution, rng: np.random.Generator) -> np.ndarray:
    """One terminal-reward vector; exactly the mean when variance is zero."""
    z = rng.standard_normal(len(dist.mean))
    return dist.mean + math.sqrt(dist.variance) * z


@dataclass(frozen=True)
class MdpInstance:
    """A solved-ready instance: per-node successor lists with edge costs,
    terminal rewards on absorbing nodes, fixed discount 1."""

    network: TradeNetwork
    neighbors: tuple  # per node: int array of successor indices, id-sorted
    costs: tuple  # per node: float array aligned with neighbors
    terminal_rewards: np.ndarray  # per absorbing node, in node-list order
    conflict_max: float
    lam: float
    cost_form: str = "literal"
    move_success: float = MOVE_SUCCESS
    discount: float = 1.0

    def node_values(self) -> np.ndarray:
        """Full-length value array seeded with terminal rewards."""
        v = np.full(self.network.n, np.nan)
        v[self.network.absorbing_mask()] = self.terminal_rewards
        return v

    def with_rewards(self, terminal_rewards: np.ndarray) -> "MdpInstance":
        terminal_rewards = np.asarray(terminal_rewards, dtype=float)
        if len(terminal_rewards) != len(self.terminal_rewards):
            raise ValueError("terminal reward vector length mismatch")
        return replace(self, terminal_rewards=terminal_rewards)


@dataclass(frozen=True)
class Policy:
    """Successor choice per non-absorbing node (index -1 on absorbing)."""

    network: TradeNetwork
    actions: np.ndarray

    def successor(self, node_id: str) -> str:
        idx = self.network.index_of(node_id)
        a = int(self.actions[idx])
        if a < 0:
            raise ValueError(f"{node_id!r} is absorbing; no action")
        return self.network.nodes[a].id

    def exit_from(self, node_id: str) -> str:
        """Absorbing node reached by following the policy."""
        idx = self.network.index_of(node_id)
        absorbing = self.network.absorbing_mask()
        seen = 0
        while not absorbing[idx]:
            idx = int(self.actions[idx])
            seen += 1
            if seen > self.network.n:
                raise ImproperPolicyError("policy cycles without absorbing")
        return self.network.nodes[idx].id


@dataclass(frozen=True)
class TransitTrace:
    year: int
    capture: Optional[CapturePoint]
    start_node: str
    path: tuple[str, ...]
    dwell: tuple[int, ...]
    exit_node: str


# ---------------------------------------------------------------------------
# Geometry and costs
# ---------------------------------------------------------------------------


def nearest_node(point, network: TradeNetwork) -> str:
    """Closest non-absorbing node by Euclidean degree distance; ties break
    toward the lowest node id."""
    order = _nonabsorbing_by_id(network)
    coords = network.coords()[order]
    d2 = ((coords - np.asarray(point, dtype=float)) ** 2).sum(axis=1)
    return network.nodes[order[int(np.argmin(d2))]].id


def nearest_nodes(points: np.ndarray, network: TradeNetwork) -> list[str]:
    """Batch nearest_node with identical tie-break semantics."""
    order = _nonabsorbing_by_id(network)
    coords = network.coords()[order]
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    out = []
    step = max(1, 2_000_000 // max(1, len(order)))
    for lo in range(0, len(pts), step):
        block = pts[lo : lo + step]
        d2 = ((block[:, None, :] - coords[None, :, :]) ** 2).sum(axis=2)
        for k in np.argmin(d2, axis=1):
            out.append(network.nodes[order[int(k)]].id)
    return out


def _nonabsorbing_by_id(network: TradeNetwork) -> list[int]:
    free = [i for i, nd in enumerate(network.nodes) if not nd.is_absorbing]
    if not free:
        raise ValueError("network has no non-absorbing nodes")
    return sorted(free, key=lambda i: _id_sort_key(network.nodes[i].id))


def edge_conflict(p_from, p_to, density: ConflictDensity) -> float:
    """Maximum conflict density along the segment between two cities,
    sampled at steps of one grid resolution (nearest-cell lookups)."""
    grid = density.grid
    for p in (p_from, p_to):
        if not grid.contains(p[0], p[1]):
            raise ValueError(f"edge endpoint {p} outside grid bounding box")
    a = np.asarray(p_from, dtype=float)
    b = np.asarray(p_to, dtype=float)
    length = float(np.hypot(*(b - a)))
    n_steps = max(1, math.ceil(length / grid.resolution))
    ts = np.linspace(0.0, 1.0, n_steps + 1)
    pts = a[None, :] + ts[:, None] * (b - a)[None, :]
    return float(np.max(density.value_at(pts[:, 0], pts[:, 1])))


def edge_cost(D: float, C: float, C_max: float, lam: float, cost_form: str = "literal") -> float:
    """Movement cost for one edge.

    ``literal`` follows the displayed per-step cost D(1 + λC)/C_max;
    ``ratio`` reads the normalization as applying to the conflict term
    only, D(1 + λC/C_max). Both are exposed because the two readings
    rescale costs differently relative to the terminal-reward noise.
    """
    if D <= 0:
        raise ValueError("edge length must be positive")
    if C_max <= 0:
        raise ValueError("C_max must be positive")
    if lam < 0:
        raise ValueError("conflict scaling factor must be >= 0")
    if cost_form == "literal":
        return D * (1.0 + lam * C) / C_max
    if cost_form == "ratio":
        return D * (1.0 + lam * C / C_max)
    raise ValueError(f"unknown cost_form {cost_form!r}")


def build_mdp(
    network: TradeNetwork,
    density: ConflictDensity,
    lam: float,
    terminal_rewards: np.ndarray,
    cost_form: str = "literal",
    move_success: float = MOVE_SUCCESS,
) -> MdpInstance:
    """Assemble the routing instance: per-edge costs from the conflict
    density, terminal rewards on absorbing nodes, 0.98/0.02 move split."""
    terminal_rewards = np.asarray(terminal_rewards, dtype=float).ravel()
    n_abs = int(network.absorbing_mask().sum())
    if len(terminal_rewards) != n_abs:
        raise ValueError(f"need {n_abs} terminal rewards, got {len(terminal_rewards)}")
    coords = network.coords()
    c_max = density.max_value
    pair_cost: dict[tuple[int, int], float] = {}
    for i, j in network.undirected_edges():
        d = float(np.hypot(*(coords[i] - coords[j])))
        if d <= 0:
            raise ValueError(
                f"coincident connected nodes {network.nodes[i].id!r} and "
                f"{network.nodes[j].id!r} give a zero-length edge"
            )
        c = edge_conflict(coords[i], coords[j], density)
        pair_cost[(i, j)] = edge_cost(d, c, c_max, lam, cost_form)
    neighbors = []
    costs = []
    for i in range(network.n):
        nbrs = network.neighbors(i) if not network.nodes[i].is_absorbing else np.array([], dtype=int)
        neighbors.append(nbrs)
        costs.append(
            np.array([pair_cost[(min(i, int(j)), max(i, int(j)))] for j in nbrs], dtype=float)
        )
    return MdpInstance(
        network=network,
        neighbors=tuple(neighbors),
        costs=tuple(costs),
        terminal_rewards=terminal_rewards,
        conflict_max=c_max,
        lam=lam,
        cost_form=cost_form,
        move_success=move_success,
    )


# ---------------------------------------------------------------------------
# Solving
# ---------------------------------------------------------------------------


def shortest_hop_policy(mdp: MdpInstance) -> Policy:
    """Initial proper policy: step toward an absorbing node in the fewest
    hops (ties toward the lowest node id)."""
    net = mdp.network
    absorbing = net.absorbing_mask()
    hops = np.full(net.n, -1, dtype=int)
    hops[absorbing] = 0
    frontier = list(np.nonzero(absorbing)[0])
    incoming = [np.nonzero(net.adjacency[:, j])[0] for j in range(net.n)]
    while frontier:
        nxt = []
        for j in frontier:
            for i in incoming[j]:
                i = int(i)
                if hops[i] < 0 and not absorbing[i]:
                    hops[i] = hops[j] + 1
                    nxt.append(i)
        frontier = nxt
    actions = np.full(net.n, -1, dtype=int)
    for s in range(net.n):
        if absorbing[s]:
            continue
        if hops[s] < 0:
            raise ImproperPolicyError(f"node {net.nodes[s].id!r} cannot reach absorbing")
        for t in mdp.neighbors[s]:  # id-sorted, so first hit is the tie-break
            if hops[t] == hops[s] - 1:
                actions[s] = int(t)
                break
    return Policy(net, actions)


def _evaluate(mdp: MdpInstance, actions: np.ndarray) -> np.ndarray:
    """Exact policy value: terminal reward at the exit minus path cost.

    For a deterministic proper policy the evaluation linear system is
    triangular along successor chains, so back-substitution solves it.
    """
    net = mdp.network
    absorbing = net.absorbing_mask()
    v = mdp.node_values()
    action_cost = np.zeros(net.n)
    for s in range(net.n):
        if not absorbing[s]:
            a = int(actions[s])
            k = int(np.nonzero(mdp.neighbors[s] == a)[0][0])
            action_cost[s] = mdp.costs[s][k]
    for s in range(net.n):
        if not np.isnan(v[s]):
            continue
        chain = []
        cur = s
        while np.isnan(v[cur]):
            chain.append(cur)
            cur = int(actions[cur])
            if len(chain) > net.n:
                raise ImproperPolicyError("policy cycles without absorbing")
        for node in reversed(chain):
            v[node] = v[int(actions[node])] - action_cost[node]
    return v


def policy_iteration(mdp: MdpInstance, init_policy: Policy | None = None) -> Policy:
    """Howard policy iteration on the deterministic equivalent.

    Alternates exact evaluation with greedy improvement (ties toward the
    lowest successor id) until the policy is stable. Any proper initial
    policy keeps values finite under discount 1; the default is the
    shortest-hop policy.
    """
    net = mdp.network
    absorbing = net.absorbing_mask()
    free = np.nonzero(~absorbing)[0]
    actions = (init_policy or shortest_hop_policy(mdp)).actions.copy()
    max_degree = max((len(mdp.neighbors[int(s)]) for s in free), default=1)
    cap = len(free) * max_degree + 2
    for _ in range(cap):
        v = _evaluate(mdp, actions)
        new_actions = actions.copy()
        for s in free:
            s = int(s)
            q = v[mdp.neighbors[s]] - mdp.costs[s]
            new_actions[s] = int(mdp.neighbors[s][int(np.argmax(q))])
        if np.array_equal(new_actions, actions):
            return Policy(net, actions)
        actions = new_actions
    raise ImproperPolicyError("policy iteration failed to stabilize (improper instance?)")


def simulate_trajectory(
    policy: Policy,
    start_node: str,
    mdp: MdpInstance,
    rng: np.random.Generator,
    capture: Optional[CapturePoint] = None,
    year: int = 0,
) -> TransitTrace:
    """Follow the policy to an absorbing node, recording the distinct-node
    path and per-step dwell counts (failed move attempts)."""
    net = mdp.network
    absorbing = net.absorbing_mask()
    idx = net.index_of(start_node)
    if absorbing[idx]:
        raise ValueError(f"start node {start_node!r} is absorbing")
    path = [start_node]
    dwell = []
    moves = 0
    while not absorbing[idx]:
        target = int(policy.actions[idx])
        fails = 0
        while rng.random() >= mdp.move_success:
            fails += 1
            if fails > 10_000_000:
                raise RuntimeError("move attempts exhausted; move_success too small")
        dwell.append(fails)
        idx = target
        path.append(net.nodes[idx].id)
        moves += 1
        if moves > net.n:
            raise ImproperPolicyError("trajectory exceeded step cap (policy cycle?)")
    return TransitTrace(
        year=year,
        capture=capture,
        start_node=start_node,
        path=tuple(path),
        dwell=tuple(dwell),
        exit_node=path[-1],
    )


def port_path_costs(mdp: MdpInstance) -> tuple[np.ndarray, list[int]]:
    """Minimum path cost from every node to each absorbing node.

    Returns (D, ports) where D[s, k] is the cheapest movement cost from
    node s to absorbing node ports[k] (inf if unreachable). Costs are
    symmetric, so one Dijkstra per port over reversed edges suffices.
    The optimal exit for rewards R is then argmax_k R[k] - D[s, k],
    which matches the policy-iteration exit (equal values aside).
    """
    net = mdp.network
    ports = [i for i, nd in enumerate(net.nodes) if nd.is_absorbing]
    n = net.n
    # Reverse adjacency with costs: edges into `j` from non-absorbing `i`.
    rev: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    for i in range(n):
        for k, j in enumerate(mdp.neighbors[i]):
            rev[int(j)].append((i, float(mdp.costs[i][k])))
    D = np.full((n, len(ports)), np.inf)
    for col, port in enumerate(ports):
        dist = np.full(n, np.inf)
        dist[port] = 0.0
        heap = [(0.0, port)]
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist[u]:
                continue
            for v, w in rev[u]:
                nd = d + w
                if nd < dist[v]:
                    dist[v] = nd
                    heapq.heappush(heap, (nd, v))
        D[:, col] = dist
    return D, ports
