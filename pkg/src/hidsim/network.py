"""Clustered sensor-network substrate.

Static topology with greedy farthest-point cluster heads, IDS budget from
N = round(1.6 r^2 d), greedy max-coverage IDS placement, a byte-level
energy ledger, and the energy-threshold re-election rule. Single-threaded;
all node state is owned by the simulator that drives it.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import TopologyError

E_TX_PER_BYTE = 50e-6   # joules
E_RX_PER_BYTE = 25e-6
INSTRUCTIONS_PER_BIT = 900  # midpoint of the 800-1000 instructions/bit range


class Role(enum.Enum):
    ORDINARY = "ordinary"
    IDS_AGENT = "ids"
    CLUSTER_HEAD = "head"


@dataclass
class SensorNode:
    node_id: int
    x: float
    y: float
    role: Role = Role.ORDINARY
    cluster_id: int = -1
    initial_energy: float = 2.0
    energy_spent: float = 0.0
    isolated: bool = False
    alive: bool = True

    @property
    def energy(self) -> float:
        return self.initial_energy - self.energy_spent

    def distance_to(self, other: "SensorNode") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass
class Cluster:
    cluster_id: int
    head_id: int
    member_ids: list[int]


@dataclass
class Topology:
    nodes: dict[int, SensorNode]
    clusters: dict[int, Cluster]
    comm_range: float
    area: float

    @property
    def density(self) -> float:
        return len(self.nodes) / self.area

    def node(self, node_id: int) -> SensorNode:
        return self.nodes[node_id]

    def ids_agents(self, cluster_id=None):
        out = [n for n in self.nodes.values() if n.role is Role.IDS_AGENT]
        if cluster_id is not None:
            out = [n for n in out if n.cluster_id == cluster_id]
        return sorted(out, key=lambda n: n.node_id)

    def heads(self):
        return sorted(
            (n for n in self.nodes.values() if n.role is Role.CLUSTER_HEAD),
            key=lambda n: n.node_id,
        )

    def in_range(self, a: int, b: int) -> bool:
        return self.nodes[a].distance_to(self.nodes[b]) <= self.comm_range

    def links(self):
        ids = sorted(self.nodes)
        return [
            (a, b)
            for i, a in enumerate(ids)
            for b in ids[i + 1:]
            if self.in_range(a, b)
        ]


def ids_count(r: float, d: float) -> int:
    """IDS budget from communication range and node density, with a floor
    of one monitor whenever there is anything to monitor."""
    if r < 0 or d < 0:
        raise ValueError(f"range and density must be non-negative, got r={r}, d={d}")
    n = round(1.6 * r * r * d)
    if r > 0 and d > 0:
        n = max(1, n)
    return int(n)


def build_topology(n_nodes: int, area: float, comm_range: float,
                   n_clusters: int, seed: int,
                   node_energy: float = 2.0,
                   head_energy: float = 10.0) -> Topology:
    """Uniform random node placement, heads by greedy farthest-point
    selection, members joining the nearest head. Heads carry strictly more
    initial energy than ordinary nodes."""
    if area <= 0:
        raise ValueError("area must be positive")
    if n_clusters < 1 or n_clusters > n_nodes:
        raise ValueError(f"n_clusters must be in [1, {n_nodes}], got {n_clusters}")
    if head_energy <= node_energy:
        raise ValueError("cluster heads must start with more energy than ordinary nodes")
    rng = np.random.default_rng(seed)
    side = math.sqrt(area)
    xs = rng.uniform(0, side, n_nodes)
    ys = rng.uniform(0, side, n_nodes)
    nodes = {
        i: SensorNode(i, float(xs[i]), float(ys[i]), initial_energy=node_energy)
        for i in range(n_nodes)
    }

    # first head: farthest from the area centre; then maximize min-distance
    cx = cy = side / 2
    first = max(nodes.values(), key=lambda n: (math.hypot(n.x - cx, n.y - cy), -n.node_id))
    head_ids = [first.node_id]
    while len(head_ids) < n_clusters:
        best = max(
            (n for n in nodes.values() if n.node_id not in head_ids),
            key=lambda n: (min(n.distance_to(nodes[h]) for h in head_ids), -n.node_id),
        )
        head_ids.append(best.node_id)

    clusters = {}
    for cid, hid in enumerate(sorted(head_ids)):
        nodes[hid].role = Role.CLUSTER_HEAD
        nodes[hid].cluster_id = cid
        nodes[hid].initial_energy = head_energy
        clusters[cid] = Cluster(cid, hid, [])
    for n in nodes.values():
        if n.role is Role.CLUSTER_HEAD:
            continue
        cid = min(
            clusters,
            key=lambda c: (n.distance_to(nodes[clusters[c].head_id]), c),
        )
        n.cluster_id = cid
        clusters[cid].member_ids.append(n.node_id)

    topo = Topology(nodes, clusters, comm_range, area)
    _check_reachability(topo)
    return topo


def _check_reachability(topo: Topology):
    """Every node must reach its cluster head over the radio graph."""
    adjacency = {i: [] for i in topo.nodes}
    for a, b in topo.links():
        adjacency[a].append(b)
        adjacency[b].append(a)
    for cluster in topo.clusters.values():
        seen = {cluster.head_id}
        frontier = [cluster.head_id]
        while frontier:
            cur = frontier.pop()
            for nxt in adjacency[cur]:
                if nxt not in seen:
                    seen.add(nxt)
                    frontier.append(nxt)
        missing = [m for m in cluster.member_ids if m not in seen]
        if missing:
            raise TopologyError(
                f"nodes {missing} cannot reach head {cluster.head_id} of cluster "
                f"{cluster.cluster_id} within radio range"
            )


def _coverage_sets(topo: Topology, candidates):
    links = topo.links()
    cover = {}
    for node in candidates:
        cover[node.node_id] = {
            (a, b)
            for a, b in links
            if node.distance_to(topo.nodes[a]) <= topo.comm_range
            and node.distance_to(topo.nodes[b]) <= topo.comm_range
        }
    return cover


def place_ids(topo: Topology, n_ids: int) -> Topology:
    """Promote n_ids ordinary nodes to IDS agents by greedy link coverage.
    When the budget allows, every cluster gets at least one agent first;
    coverage ties promote the lower node id."""
    candidates = [n for n in topo.nodes.values() if n.role is Role.ORDINARY]
    if n_ids < 1:
        raise ValueError(f"n_ids must be at least 1, got {n_ids}")
    if n_ids > len(candidates):
        raise ValueError(f"n_ids={n_ids} exceeds {len(candidates)} candidate nodes")
    cover = _coverage_sets(topo, candidates)
    uncovered = set(topo.links())
    chosen = []

    def promote(node):
        node.role = Role.IDS_AGENT
        chosen.append(node.node_id)
        uncovered.difference_update(cover[node.node_id])

    if n_ids >= len(topo.clusters):
        for cid in sorted(topo.clusters):
            pool = [n for n in candidates if n.cluster_id == cid and n.node_id not in chosen]
            if not pool:
                raise ValueError(f"cluster {cid} has no candidate nodes for IDS placement")
            promote(max(pool, key=lambda n: (len(cover[n.node_id] & uncovered), -n.node_id)))
    while len(chosen) < n_ids:
        pool = [n for n in candidates if n.node_id not in chosen]
        promote(max(pool, key=lambda n: (len(cover[n.node_id] & uncovered), -n.node_id)))
    return topo


@dataclass
class ChargeRecord:
    event_index: int
    node_id: int
    n_bytes: int
    direction: str
    joules: float
    died: bool = False


@dataclass
class EnergyLedger:
    e_tx: float = E_TX_PER_BYTE
    e_rx: float = E_RX_PER_BYTE
    records: list[ChargeRecord] = field(default_factory=list)
    bytes_sent: dict = field(default_factory=dict)
    bytes_received: dict = field(default_factory=dict)
    joules_spent: dict = field(default_factory=dict)

    def charge(self, node: SensorNode, n_bytes: int, direction: str):
        """Deduct transmit or receive cost. A node whose remaining energy
        cannot cover the charge pays what it has and dies."""
        if direction not in ("tx", "rx"):
            raise ValueError(f"direction must be 'tx' or 'rx', got {direction!r}")
        if node.isolated:
            raise ValueError(f"node {node.node_id} is isolated and cannot communicate")
        if not node.alive:
            raise ValueError(f"node {node.node_id} is dead")
        if n_bytes == 0:
            return 0.0
        rate = self.e_tx if direction == "tx" else self.e_rx
        cost = n_bytes * rate
        died = False
        if cost > node.energy:
            cost = node.energy
            node.alive = False
            died = True
        node.energy_spent += cost
        rec = ChargeRecord(len(self.records), node.node_id, n_bytes, direction, cost, died)
        self.records.append(rec)
        if direction == "tx":
            self.bytes_sent[node.node_id] = self.bytes_sent.get(node.node_id, 0) + n_bytes
        else:
            self.bytes_received[node.node_id] = self.bytes_received.get(node.node_id, 0) + n_bytes
        self.joules_spent[node.node_id] = self.joules_spent.get(node.node_id, 0.0) + cost
        return cost


def instruction_equivalent(n_bytes: int) -> int:
    """Radio cost expressed as CPU instructions (900 instructions per bit)."""
    return n_bytes * 8 * INSTRUCTIONS_PER_BIT


@dataclass
class ReelectionEvent:
    cluster_id: int
    demoted: list[int]
    promoted: list[int]


@dataclass
class DegradedEvent:
    cluster_id: int
    reason: str


def reelection_due(energies, initials) -> bool:
    """True when at least ceil(3/4 of the agents) have burned over half
    their starting energy."""
    n = len(energies)
    if n == 0:
        raise ValueError("cluster has no IDS agents")
    depleted = sum(1 for e, e0 in zip(energies, initials) if e < 0.5 * e0)
    return depleted >= math.ceil(0.75 * n)


def reelect_check(topo: Topology, cluster_id: int):
    """Fire the rotation rule for one cluster.

    Returns None when the threshold is not met, a DegradedEvent when there
    are not enough candidates at >= 50% energy (old agents retained), or a
    ReelectionEvent after demoting the old agents and promoting
    replacements chosen by coverage, then residual energy, then id.
    """
    agents = topo.ids_agents(cluster_id)
    if not agents:
        raise ValueError(f"cluster {cluster_id} has no IDS agents")
    if not reelection_due([a.energy for a in agents], [a.initial_energy for a in agents]):
        return None

    need = len(agents)
    eligible = [
        n for n in topo.nodes.values()
        if n.role is Role.ORDINARY and n.cluster_id == cluster_id
        and n.alive and not n.isolated and n.energy >= 0.5 * n.initial_energy
    ]
    if len(eligible) < need:
        return DegradedEvent(cluster_id, f"only {len(eligible)} eligible replacements for {need} slots")

    cover = _coverage_sets(topo, eligible)
    uncovered = set(topo.links())
    promoted = []
    pool = list(eligible)
    for _ in range(need):
        best = max(pool, key=lambda n: (len(cover[n.node_id] & uncovered), n.energy, -n.node_id))
        promoted.append(best.node_id)
        uncovered.difference_update(cover[best.node_id])
        pool.remove(best)

    demoted = [a.node_id for a in agents]
    for a in agents:
        a.role = Role.ORDINARY
    for nid in promoted:
        topo.nodes[nid].role = Role.IDS_AGENT
    return ReelectionEvent(cluster_id, demoted, sorted(promoted))


def nodes_csv(topo: Topology, ledger: EnergyLedger | None = None) -> str:
    """Per-node table: id, role, cluster, position, energy and traffic."""
    lines = ["node_id,role,cluster_id,x,y,initial_energy,energy,bytes_sent,bytes_received,joules_spent,instruction_equivalents"]
    for nid in sorted(topo.nodes):
        n = topo.nodes[nid]
        sent = ledger.bytes_sent.get(nid, 0) if ledger else 0
        recv = ledger.bytes_received.get(nid, 0) if ledger else 0
        spent = ledger.joules_spent.get(nid, 0.0) if ledger else 0.0
        lines.append(
            f"{nid},{n.role.value},{n.cluster_id},{n.x},{n.y},"
            f"{n.initial_energy},{n.energy},{sent},{recv},{spent},"
            f"{instruction_equivalent(sent + recv)}"
        )
    return "\n".join(lines) + "\n"


def charges_csv(ledger: EnergyLedger) -> str:
    """Per-event charge log."""
    lines = ["event_index,node_id,bytes,direction,joules,died"]
    for r in ledger.records:
        lines.append(f"{r.event_index},{r.node_id},{r.n_bytes},{r.direction},{r.joules},{int(r.died)}")
    return "\n".join(lines) + "\n"
