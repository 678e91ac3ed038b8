"""Distributed SVM training by support-vector exchange.

Agents train locally, then take turns in ring order airing the support
vectors their cluster peers have not seen (promiscuous radio: one send
reaches the whole cluster, the head relaying to out-of-range members).
Receivers retrain on the union of what they hold and what arrived, and
passes repeat until one moves nothing - at that point every agent holds
the same set. Cluster representatives then upload their sets to the
cluster heads, heads exchange all-to-all, compute the support vectors of
the union and redistribute them; every agent retrains on that same set
with the same deterministic solver, so all finished models are
bit-identical.

Byte accounting uses a fixed wire encoding per transmitted sample so
distributed cost can be compared against shipping raw training data.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ProtocolError
from .svm import KernelParams, Sample, SvmModel, support_vector_set, train

DEFAULT_MAX_PASSES = 20


@dataclass
class WireFormat:
    """Bytes on the air per transmitted sample and per message."""

    feature_bytes: int = 4
    label_bytes: int = 1
    header_bytes: int = 8

    def sample_bytes(self, dim: int) -> int:
        return self.feature_bytes * dim + self.label_bytes

    def message_bytes(self, n_vectors: int, dim: int) -> int:
        return self.header_bytes + n_vectors * self.sample_bytes(dim)


@dataclass
class ProtocolConfig:
    c_param: float = 10.0
    kernel: KernelParams = field(default_factory=KernelParams)
    wire: WireFormat = field(default_factory=WireFormat)
    max_passes: int = DEFAULT_MAX_PASSES


@dataclass
class SupportVectorSet:
    vectors: list[Sample]

    def __post_init__(self):
        uids = [v.uid for v in self.vectors]
        if any(u is None for u in uids):
            raise ValueError("exchange requires samples with identities")
        if len(set(uids)) != len(uids):
            raise ValueError("duplicate sample identities in support vector set")

    @property
    def uids(self) -> set:
        return {v.uid for v in self.vectors}

    def __len__(self):
        return len(self.vectors)


def _sorted_union(*sample_lists) -> list[Sample]:
    by_uid = {}
    for samples in sample_lists:
        for s in samples:
            by_uid.setdefault(s.uid, s)
    return [by_uid[u] for u in sorted(by_uid)]


@dataclass
class ExchangeAgent:
    agent_id: int
    data: list[Sample]
    energy: float = 0.0
    model: SvmModel | None = None
    sv_set: SupportVectorSet | None = None
    sent_uids: set = field(default_factory=set)
    # accumulated support-vector knowledge: own SVs plus everything
    # received; vectors never leave the pool even when retraining drops
    # them from the current SV set
    pool: dict = field(default_factory=dict)

    def pool_set(self) -> SupportVectorSet:
        return SupportVectorSet([self.pool[u] for u in sorted(self.pool)])


BROADCAST = -1


@dataclass
class TrainingSession:
    cluster_id: int
    head_id: int
    agents: list[ExchangeAgent]
    rounds: int = 0
    substantive_rounds: int = 0
    link_bytes: dict = field(default_factory=dict)
    converged: bool = False
    # optional hook(src_id, dst_id, n_bytes) for energy charging; dst is
    # BROADCAST for promiscuous sends heard by the whole cluster
    transport: object = None

    def __post_init__(self):
        self.agents = sorted(self.agents, key=lambda a: a.agent_id)

    def record(self, src: int, dst: int, n_bytes: int):
        self.link_bytes[(src, dst)] = self.link_bytes.get((src, dst), 0) + n_bytes
        if self.transport is not None:
            self.transport(src, dst, n_bytes)

    def total_bytes(self) -> int:
        return sum(self.link_bytes.values())


def local_train(agent_data: list[Sample], cfg: ProtocolConfig) -> tuple[SvmModel, SupportVectorSet]:
    """First training stage: fit on the agent's own draw, keep the SVs."""
    model = train(_sorted_union(agent_data), c_param=cfg.c_param, kernel=cfg.kernel)
    return model, SupportVectorSet(support_vector_set(model))


def merge_and_retrain(own: SupportVectorSet, received: SupportVectorSet,
                      cfg: ProtocolConfig) -> tuple[SvmModel, SupportVectorSet]:
    """Retrain on the deduplicated union of own and received vectors.
    Inputs are canonically ordered by identity, so the result depends only
    on the union as a set."""
    union = _sorted_union(own.vectors, received.vectors)
    model = train(union, c_param=cfg.c_param, kernel=cfg.kernel)
    return model, SupportVectorSet(support_vector_set(model))


def delta_payload(agent: ExchangeAgent, new_svs: SupportVectorSet) -> list[Sample]:
    """Vectors this agent has not transmitted before; marks them sent."""
    payload = [v for v in new_svs.vectors if v.uid not in agent.sent_uids]
    agent.sent_uids.update(v.uid for v in payload)
    return payload


def cluster_pass(session: TrainingSession, cfg: ProtocolConfig) -> TrainingSession:
    """Run exchange passes until one full pass transmits zero novel vectors.

    Agents take turns in ring order. A turn transmits the agent's delta
    (pool entries it has never sent and some peer still lacks); cluster
    radios run promiscuously, so one transmission reaches every peer,
    with the cluster head relaying to members out of direct range. Each
    receiver that learns new vectors retrains on the union of its pool
    and the payload. Pools only grow and each vector is aired at most
    once per agent, so the pass that moves nothing is a true fixed point,
    and at that point every pool contains every other, i.e. all agents
    hold equal support-vector sets.
    """
    agents = session.agents
    for a in agents:
        if a.sv_set is None:
            raise ProtocolError(f"agent {a.agent_id} has not trained locally")
        if not a.pool:
            a.pool = {v.uid: v for v in a.sv_set.vectors}
    if len(agents) <= 1:
        session.converged = True
        return session

    dim = agents[0].data[0].dim
    while True:
        if session.rounds >= cfg.max_passes:
            raise ProtocolError(
                f"cluster {session.cluster_id} not converged after {session.rounds} passes"
            )
        novel = 0
        for agent in agents:
            others = [p for p in agents if p.agent_id != agent.agent_id]
            payload = [
                v for u, v in sorted(agent.pool.items())
                if u not in agent.sent_uids
                and any(u not in p.pool for p in others)
            ]
            if not payload:
                continue
            novel += len(payload)
            agent.sent_uids.update(v.uid for v in payload)
            session.record(agent.agent_id, BROADCAST,
                           cfg.wire.message_bytes(len(payload), dim))
            for peer in others:
                gained = [v for v in payload if v.uid not in peer.pool]
                if not gained:
                    continue
                peer.model, peer.sv_set = merge_and_retrain(
                    peer.pool_set(), SupportVectorSet(gained), cfg
                )
                peer.pool.update((v.uid, v) for v in gained)
        session.rounds += 1
        if novel == 0:
            break
        session.substantive_rounds += 1
    session.converged = True
    return session


def elect_representative(session: TrainingSession) -> ExchangeAgent:
    """Highest residual energy wins; ties go to the lowest agent id."""
    return max(session.agents, key=lambda a: (a.energy, -a.agent_id))


@dataclass
class GlobalExchange:
    models: dict
    global_svs: list[Sample]
    link_bytes: dict = field(default_factory=dict)

    def total_bytes(self) -> int:
        return sum(self.link_bytes.values())


def global_exchange(sessions: list[TrainingSession], cfg: ProtocolConfig,
                    transport=None) -> GlobalExchange:
    """Head-level agreement: per-cluster representatives upload their sets,
    heads exchange all-to-all and compute the support vectors of the union,
    and every agent retrains on that same set."""
    for s in sessions:
        if not s.converged:
            raise ProtocolError(f"cluster {s.cluster_id} session not converged")
    result = GlobalExchange(models={}, global_svs=[])

    def record(src, dst, n_bytes):
        result.link_bytes[(src, dst)] = result.link_bytes.get((src, dst), 0) + n_bytes
        if transport is not None:
            transport(src, dst, n_bytes)

    all_agents = [a for s in sessions for a in s.agents]
    if len(all_agents) == 1:
        # degenerate single-agent network: nothing to exchange
        agent = all_agents[0]
        result.models[agent.agent_id] = agent.model
        result.global_svs = list(agent.sv_set.vectors)
        return result

    dim = all_agents[0].data[0].dim
    cluster_sets = {}
    for s in sessions:
        rep = elect_representative(s)
        cluster_sets[s.cluster_id] = rep.sv_set
        record(rep.agent_id, s.head_id, cfg.wire.message_bytes(len(rep.sv_set), dim))
    for s_from in sessions:
        for s_to in sessions:
            if s_from.cluster_id == s_to.cluster_id:
                continue
            record(s_from.head_id, s_to.head_id,
                   cfg.wire.message_bytes(len(cluster_sets[s_from.cluster_id]), dim))

    union = _sorted_union(*(cs.vectors for cs in cluster_sets.values()))
    global_model = train(union, c_param=cfg.c_param, kernel=cfg.kernel)
    global_svs = support_vector_set(global_model)
    result.global_svs = global_svs

    for s in sessions:
        for agent in s.agents:
            known = agent.pool if agent.pool else agent.sv_set.uids
            missing = [v for v in global_svs if v.uid not in known]
            if missing:
                record(s.head_id, agent.agent_id,
                       cfg.wire.message_bytes(len(missing), dim))
            agent.model = train(global_svs, c_param=cfg.c_param, kernel=cfg.kernel)
            agent.sv_set = SupportVectorSet(support_vector_set(agent.model))
            agent.pool.update((v.uid, v) for v in global_svs)
            result.models[agent.agent_id] = agent.model
    return result


@dataclass
class CommunicationReport:
    link_bytes: dict
    distributed_bytes: int
    centralized_bytes: int

    @property
    def ratio(self) -> float:
        if self.centralized_bytes == 0:
            return 0.0
        return self.distributed_bytes / self.centralized_bytes


def communication_report(sessions: list[TrainingSession],
                         global_result: GlobalExchange | None = None,
                         wire: WireFormat | None = None) -> CommunicationReport:
    """Totals for the run, against the centralized equivalent of shipping
    every agent's raw training set (same wire encoding, one message each)."""
    wire = wire or WireFormat()
    links = {}
    for s in sessions:
        for k, v in s.link_bytes.items():
            links[k] = links.get(k, 0) + v
    if global_result is not None:
        for k, v in global_result.link_bytes.items():
            links[k] = links.get(k, 0) + v
    distributed = sum(links.values())
    centralized = 0
    for s in sessions:
        for a in s.agents:
            centralized += wire.message_bytes(len(a.data), a.data[0].dim)
    return CommunicationReport(links, distributed, centralized)
