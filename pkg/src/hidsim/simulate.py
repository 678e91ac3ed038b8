"""Deterministic event-loop simulator.

One Simulator instance owns a topology, the per-node state (signature
databases, local isolation views, last observations) and the energy ledger.
A run has three phases: setup (topology, placement, data plan, predefined
signatures), train (distributed SV exchange to network-wide consensus) and
replay (traffic ticks driving the detection pipeline and the IDS rotation
rule). All message passing happens inside the loop; nothing is concurrent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import detection, distributed, network
from .config import ExperimentConfig
from .errors import AgentNotReadyError, ProtocolError
from .kdd import CorpusPlan, LabeledDataset, apply_normalization, compute_stats
from .svm import KernelParams, Sample, decide


@dataclass
class SimEvent:
    index: int
    etype: str
    actor: int
    suspect: int
    verdict: str
    db_version: int


@dataclass
class Emission:
    tick: int
    source: int
    raw: Sample


class Simulator:
    def __init__(self, cfg: ExperimentConfig, dataset: LabeledDataset, seed: int):
        self.cfg = cfg
        self.raw_ds = dataset  # unnormalized projection of the corpus
        self.seed = seed

        self.kernel = KernelParams(cfg.sigma, cfg.squared_norm)
        self.wire = distributed.WireFormat(cfg.wire_feature_bytes,
                                           cfg.wire_label_bytes,
                                           cfg.wire_header_bytes)
        self.pcfg = distributed.ProtocolConfig(cfg.c_param, self.kernel,
                                               self.wire, cfg.max_passes)
        self.ledger = network.EnergyLedger(cfg.e_tx, cfg.e_rx)
        self.events: list[SimEvent] = []
        self.models: dict[int, object] = {}
        self.views: dict[int, detection.NodeView] = {}
        self.last_obs: dict[int, dict[int, np.ndarray]] = {}
        self.head_reports: dict[int, dict[int, list]] = {}
        self.sessions: list[distributed.TrainingSession] = []
        self.global_result = None
        self.extra_session_bytes = 0
        self.relay_bytes = 0
        self.norm_stats = None
        self.test_samples: list[Sample] = []
        self.emitted: set[int] = set()
        self.learned_signatures: list = []
        self.isolation_order: list[int] = []
        self.traffic_outcomes: list[tuple[int, int]] = []
        self.reelections = 0
        self.degraded_events = 0
        self._voted: set[tuple[int, int]] = set()
        self._next_sig_id = 0
        self._tick = 0

    # -- event log ---------------------------------------------------------

    def log(self, etype, actor=-1, suspect=-1, verdict="", db_version=-1):
        self.events.append(SimEvent(len(self.events), etype, actor, suspect,
                                    verdict, db_version))

    # -- setup -------------------------------------------------------------

    def setup(self) -> "Simulator":
        cfg = self.cfg
        self.topo = network.build_topology(
            cfg.n_nodes, cfg.area, cfg.comm_range, cfg.n_clusters, self.seed,
            node_energy=cfg.node_energy, head_energy=cfg.head_energy,
        )
        if cfg.n_ids == "auto":
            self.n_ids = network.ids_count(cfg.comm_range, self.topo.density)
        else:
            self.n_ids = cfg.n_ids
        network.place_ids(self.topo, self.n_ids)
        agents = self.topo.ids_agents()

        self.plan = CorpusPlan(self.raw_ds, self.seed, n_agents=len(agents),
                               train_normal=cfg.train_normal,
                               train_anom=cfg.train_anom)
        raw_draws = [self.plan.agent_training(k) for k in range(len(agents))]
        pooled = [s for draw in raw_draws for s in draw]
        self.norm_stats = compute_stats(pooled)
        self.agent_draws = {
            agent.node_id: apply_normalization(draw, self.norm_stats)
            for agent, draw in zip(agents, raw_draws)
        }
        self.pooled_training = apply_normalization(pooled, self.norm_stats)
        self.test_samples = apply_normalization(self.plan.test_set(), self.norm_stats)

        base_db = detection.SignatureDb()
        if cfg.seed_signatures:
            slices = {
                cat: apply_normalization(
                    self.plan.heldout(cat, cfg.signature_samples), self.norm_stats
                )
                for cat in ("dos", "probe")
            }
            for sig in detection.build_predefined_signatures(slices):
                base_db.signatures.append(sig)
            self._next_sig_id = len(base_db.signatures)
        # every node stores the predefined rules, not only the IDS agents
        for nid in self.topo.nodes:
            self.views[nid] = detection.NodeView(nid, base_db.clone())
        for agent in agents:
            self.last_obs[agent.node_id] = {}
        for head in self.topo.heads():
            self.head_reports[head.node_id] = {}
        return self

    # -- radio helpers -----------------------------------------------------

    def _charge_path(self, src: int, dst: int, n_bytes: int):
        """Direct hop when in range, otherwise relayed by the source's
        cluster head. Heads are assumed reachable by their members."""
        nodes = self.topo.nodes
        src_node, dst_node = nodes[src], nodes[dst]
        if not (src_node.alive and not src_node.isolated):
            return
        head_roles = network.Role.CLUSTER_HEAD
        if (self.topo.in_range(src, dst)
                or src_node.role is head_roles or dst_node.role is head_roles):
            hops = [(src, dst)]
        else:
            head = self.topo.clusters[src_node.cluster_id].head_id
            hops = [(src, head), (head, dst)]
            self.relay_bytes += n_bytes
        for a, b in hops:
            na, nb = nodes[a], nodes[b]
            if na.alive and not na.isolated:
                self.ledger.charge(na, n_bytes, "tx")
            if nb.alive and not nb.isolated:
                self.ledger.charge(nb, n_bytes, "rx")

    def _session_transport(self, cluster_id: int):
        def transport(src, dst, n_bytes):
            if dst == distributed.BROADCAST:
                self._charge_broadcast(src, cluster_id, n_bytes)
            else:
                self._charge_path(src, dst, n_bytes)
        return transport

    def _charge_broadcast(self, src: int, cluster_id: int, n_bytes: int):
        """Promiscuous cluster send: one transmission reaches every peer in
        range; the head relays once for anyone out of range."""
        nodes = self.topo.nodes
        sender = nodes[src]
        if not (sender.alive and not sender.isolated):
            return
        self.ledger.charge(sender, n_bytes, "tx")
        peers = [a for a in self.topo.ids_agents(cluster_id)
                 if a.node_id != src and a.alive and not a.isolated]
        out_of_range = []
        for peer in peers:
            if self.topo.in_range(src, peer.node_id):
                self.ledger.charge(peer, n_bytes, "rx")
            else:
                out_of_range.append(peer)
        head = nodes[self.topo.clusters[cluster_id].head_id]
        if out_of_range and head.alive and not head.isolated:
            self.ledger.charge(head, n_bytes, "rx")
            self.ledger.charge(head, n_bytes, "tx")
            self.relay_bytes += n_bytes
            for peer in out_of_range:
                self.ledger.charge(peer, n_bytes, "rx")

    def _msg_bytes(self, kind: str, sig: detection.Signature | None = None) -> int:
        d = self.raw_ds.dim
        h = self.wire.header_bytes
        fb = self.wire.feature_bytes
        if kind == "traffic":
            return h + fb * d
        if kind == "report":
            return h + 4 + fb * d + 4
        if kind == "poll":
            return h + 4
        if kind == "vote":
            return h + 1
        if kind == "alarm":
            return h + 4
        if kind == "alert":
            n = h + 4
            if sig is not None:
                n += 4 + fb * d + 4
            return n
        raise ValueError(kind)

    # -- distributed training ----------------------------------------------

    def train(self) -> "Simulator":
        agents = self.topo.ids_agents()
        if not agents:
            raise ProtocolError("no IDS agents placed")
        self.sessions = []
        for cid in sorted(self.topo.clusters):
            members = [a for a in agents if a.cluster_id == cid]
            if not members:
                continue
            ex_agents = [
                distributed.ExchangeAgent(a.node_id, self.agent_draws[a.node_id],
                                          energy=a.energy)
                for a in members
            ]
            session = distributed.TrainingSession(
                cid, self.topo.clusters[cid].head_id, ex_agents,
                transport=self._session_transport(cid),
            )
            for ex in session.agents:
                ex.model, ex.sv_set = distributed.local_train(ex.data, self.pcfg)
            distributed.cluster_pass(session, self.pcfg)
            self.sessions.append(session)
        for session in self.sessions:
            for ex in session.agents:
                ex.energy = self.topo.nodes[ex.agent_id].energy
        self.global_result = distributed.global_exchange(
            self.sessions, self.pcfg, transport=self._charge_path
        )
        self.models.update(self.global_result.models)
        return self

    # -- detection pipeline --------------------------------------------------

    def observers_of(self, source: int) -> list[int]:
        """Live IDS agents with the emitter inside their radio range."""
        out = []
        for agent in self.topo.ids_agents():
            if agent.node_id == source or not agent.alive or agent.isolated:
                continue
            if self.topo.in_range(agent.node_id, source):
                out.append(agent.node_id)
        return out

    def collect(self, agent_id: int, emissions: list[Emission]):
        """Normalized feature vectors for every in-range, non-isolated
        emission visible to one agent."""
        agent = self.topo.nodes[agent_id]
        out = []
        for em in emissions:
            src = self.topo.nodes[em.source]
            if src.isolated or not src.alive or em.source == agent_id:
                continue
            if agent.distance_to(src) <= self.topo.comm_range:
                x = apply_normalization([em.raw], self.norm_stats)[0].x
                out.append((em.source, x))
        return out

    def anomaly_check(self, agent_id: int, x: np.ndarray):
        model = self.models.get(agent_id)
        if model is None:
            raise AgentNotReadyError(f"agent {agent_id} holds no converged model")
        return decide(model, x)

    def _isolate(self, suspect: int, head_id: int, signature=None):
        node = self.topo.nodes[suspect]
        node.isolated = True
        self.isolation_order.append(suspect)
        alert = detection.Alert(suspect, head_id, signature)
        self.log("isolate", actor=head_id, suspect=suspect,
                 verdict="signature" if signature else "match")
        self._broadcast_alert(alert)

    def _broadcast_alert(self, alert: detection.Alert):
        issuing = alert.issuing_head
        heads = [h for h in self.topo.heads() if h.alive]
        for head in heads:
            if head.node_id != issuing:
                self._charge_path(issuing, head.node_id,
                                  self._msg_bytes("alert", alert.new_signature))
            view = self.views[head.node_id]
            if detection.apply_alert(view, alert):
                self.log("alert", actor=head.node_id, suspect=alert.malicious,
                         verdict="relayed", db_version=view.db.version)
            for agent in self.topo.ids_agents(head.cluster_id):
                if not agent.alive:
                    continue
                self._charge_path(head.node_id, agent.node_id,
                                  self._msg_bytes("alert", alert.new_signature))
                aview = self.views[agent.node_id]
                if detection.apply_alert(aview, alert):
                    self.log("alert", actor=agent.node_id, suspect=alert.malicious,
                             verdict="applied", db_version=aview.db.version)

    def _head_for(self, node_id: int) -> int:
        return self.topo.clusters[self.topo.nodes[node_id].cluster_id].head_id

    def _handle_report(self, report: detection.IntrusionReport):
        reporter_view = self.views[report.reporter]
        head_id = self._head_for(report.reporter)
        head = self.topo.nodes[head_id]
        suspect = report.suspect

        matched = detection.misuse_check(reporter_view.db, report)
        if matched is not None:
            self.log("match", actor=report.reporter, suspect=suspect,
                     verdict=f"sig={matched}", db_version=reporter_view.db.version)
            self._charge_path(report.reporter, head_id, self._msg_bytes("alarm"))
            if not head.alive:
                self.log("undeliverable", actor=report.reporter, suspect=suspect)
                return
            if self.topo.nodes[suspect].isolated:
                return
            self._isolate(suspect, head_id)
            return

        self._charge_path(report.reporter, head_id, self._msg_bytes("report"))
        if not head.alive:
            self.log("undeliverable", actor=report.reporter, suspect=suspect)
            return
        self.head_reports[head_id].setdefault(suspect, []).append(report)
        if self.topo.nodes[suspect].isolated:
            return
        if (suspect, self._tick) in self._voted:
            return
        self._voted.add((suspect, self._tick))
        self._cooperate(head_id, report)

    def _cooperate(self, head_id: int, report: detection.IntrusionReport):
        """Cluster-head vote over every active IDS agent; each agent judges
        its own most recent observation of the suspect."""
        head = self.topo.nodes[head_id]
        cluster_id = head.cluster_id
        suspect = report.suspect
        voters = [a for a in self.topo.ids_agents(cluster_id)
                  if a.alive and not a.isolated and a.node_id in self.models]
        if not voters:
            raise ProtocolError(f"cluster {cluster_id} has no active IDS agents to poll")
        votes_for = 0
        for agent in voters:
            self._charge_path(head_id, agent.node_id, self._msg_bytes("poll"))
            seen = self.last_obs[agent.node_id].get(suspect)
            if seen is None:
                outcome = "abstain"
            else:
                label, _ = self.anomaly_check(agent.node_id, seen)
                outcome = "intruder" if label == -1 else "benign"
                if label == -1:
                    votes_for += 1
            self._charge_path(agent.node_id, head_id, self._msg_bytes("vote"))
            self.log("vote", actor=agent.node_id, suspect=suspect, verdict=outcome)
        guilty = detection.majority_verdict(votes_for, len(voters))
        self.log("verdict", actor=head_id, suspect=suspect,
                 verdict="intruder" if guilty else "benign")
        if guilty:
            contributing = list(self.head_reports[head_id][suspect])
            sig = detection.derive_signature(contributing, self._next_sig_id)
            self._next_sig_id += 1
            self.learned_signatures.append((sig, contributing))
            self._isolate(suspect, head_id, sig)
        else:
            self.log("discard", actor=head_id, suspect=suspect, verdict="benign")

    # -- traffic replay ------------------------------------------------------

    def _traffic_pools(self):
        cfg = self.cfg
        rng = np.random.default_rng([self.seed, 1])
        ordinary = [n.node_id for n in self.topo.nodes.values()
                    if n.role is network.Role.ORDINARY]
        n_compromised = round(cfg.attack_fraction * cfg.n_nodes)
        if n_compromised > len(ordinary):
            raise ProtocolError(
                f"cannot compromise {n_compromised} nodes with only "
                f"{len(ordinary)} ordinary nodes"
            )
        self.compromised = set(
            int(i) for i in rng.choice(ordinary, size=n_compromised, replace=False)
        ) if n_compromised else set()

        pools = {}
        cats = list(cfg.attack_categories)
        for nid in sorted(self.topo.nodes):
            # heads aggregate; they originate no sensor traffic of their own
            if self.topo.nodes[nid].role is network.Role.CLUSTER_HEAD:
                continue
            if nid in self.compromised:
                per = cfg.ticks // len(cats) + (cfg.ticks % len(cats) > 0)
                mix = []
                for cat in cats:
                    mix.append(self.plan.traffic_pool(cat, per))
                pool = [s for group in zip(*mix) for s in group][:cfg.ticks]
            else:
                pool = self.plan.traffic_pool("normal", cfg.ticks)
            pools[nid] = pool
        return pools

    def replay(self) -> "Simulator":
        cfg = self.cfg
        pools = self._traffic_pools()
        for tick in range(cfg.ticks):
            self._tick = tick
            emissions = []
            for nid in sorted(self.topo.nodes):
                node = self.topo.nodes[nid]
                if nid not in pools or not node.alive or node.isolated:
                    continue
                emissions.append(Emission(tick, nid, pools[nid][tick]))

            for em in emissions:
                self._process_emission(em)
            self._run_reelections()
        return self

    def _process_emission(self, em: Emission):
        source = self.topo.nodes[em.source]
        if not source.alive or source.isolated:
            return
        self.emitted.add(em.source)
        self.ledger.charge(source, self._msg_bytes("traffic"), "tx")
        head = self.topo.nodes[self._head_for(em.source)]
        if head.alive and not head.isolated:
            self.ledger.charge(head, self._msg_bytes("traffic"), "rx")

        observers = self.observers_of(em.source)
        x = apply_normalization([em.raw], self.norm_stats)[0].x
        flagged = None
        for agent_id in observers:
            agent = self.topo.nodes[agent_id]
            if not agent.alive or agent.isolated:
                continue
            if em.source in self.views[agent_id].isolated_peers:
                continue
            self.ledger.charge(agent, self._msg_bytes("traffic"), "rx")
            if not agent.alive:
                continue
            self.last_obs[agent_id][em.source] = x
            label, value = self.anomaly_check(agent_id, x)
            if flagged is None:
                flagged = label
            if label == -1:
                report = detection.IntrusionReport(agent_id, em.source, x, value, em.tick)
                self.log("report", actor=agent_id, suspect=em.source,
                         verdict=f"{value:.4f}")
                self._handle_report(report)
                if self.topo.nodes[em.source].isolated:
                    break
        if flagged is not None:
            self.traffic_outcomes.append((em.raw.y, flagged))

    # -- rotation ------------------------------------------------------------

    def _run_reelections(self):
        for cid in sorted(self.topo.clusters):
            if not self.topo.ids_agents(cid):
                continue
            event = network.reelect_check(self.topo, cid)
            if event is None:
                continue
            if isinstance(event, network.DegradedEvent):
                self.degraded_events += 1
                self.log("degraded", actor=self.topo.clusters[cid].head_id,
                         verdict=event.reason)
                continue
            self.reelections += 1
            head_id = self.topo.clusters[cid].head_id
            head_view = self.views[head_id]
            out_ids = "|".join(str(i) for i in event.demoted)
            in_ids = "|".join(str(i) for i in event.promoted)
            self.log("reelect", actor=head_id, verdict=f"out={out_ids};in={in_ids}")
            sig_bytes = self.wire.header_bytes + len(head_view.db.signatures) * (
                4 + self.wire.feature_bytes * self.raw_ds.dim + 4
            )
            for nid in event.promoted:
                self.views[nid] = detection.NodeView(
                    nid, head_view.db.clone(),
                    isolated_peers=set(head_view.isolated_peers),
                    applied_alerts=set(head_view.applied_alerts),
                )
                self.last_obs[nid] = {}
                self._charge_path(head_id, nid, sig_bytes)
                self.log("handover", actor=nid,
                         db_version=self.views[nid].db.version)
                draw = apply_normalization(self.plan.extra_agent_training(),
                                           self.norm_stats)
                self.agent_draws[nid] = draw
            for nid in event.demoted:
                self.models.pop(nid, None)
            self._retrain_after_rotation(cid)

    def _retrain_after_rotation(self, cluster_id: int):
        """Fresh cluster session for the rotated cluster, then a global
        exchange so every agent returns to consensus. Untouched clusters
        contribute their current (consensus) support-vector sets."""
        sessions = []
        for cid in sorted(self.topo.clusters):
            members = [a for a in self.topo.ids_agents(cid) if a.alive]
            if not members:
                continue
            ex_agents = [
                distributed.ExchangeAgent(a.node_id, self.agent_draws[a.node_id],
                                          energy=a.energy)
                for a in members
            ]
            session = distributed.TrainingSession(
                cid, self.topo.clusters[cid].head_id, ex_agents,
                transport=self._session_transport(cid),
            )
            if cid == cluster_id:
                for ex in session.agents:
                    ex.model, ex.sv_set = distributed.local_train(ex.data, self.pcfg)
                distributed.cluster_pass(session, self.pcfg)
            else:
                for ex in session.agents:
                    model = self.models[ex.agent_id]
                    ex.model = model
                    ex.sv_set = distributed.SupportVectorSet(list(model.support_vectors))
                session.converged = True
            sessions.append(session)
        for session in sessions:
            for ex in session.agents:
                ex.energy = self.topo.nodes[ex.agent_id].energy
        result = distributed.global_exchange(sessions, self.pcfg,
                                             transport=self._charge_path)
        self.models = dict(result.models)
        self.extra_session_bytes += sum(s.total_bytes() for s in sessions)
        self.extra_session_bytes += result.total_bytes()

    # -- outputs ---------------------------------------------------------------

    def evaluate_test_set(self):
        """Label the shared test set at the lowest-id IDS agent (all agents
        agree by consensus)."""
        agents = sorted(self.models)
        if not agents:
            raise AgentNotReadyError("no trained agents")
        model = self.models[agents[0]]
        xs = np.array([s.x for s in self.test_samples])
        values = model.decision_values(xs)
        preds = np.where(values >= 0, 1, -1)
        return [(s.y, int(p)) for s, p in zip(self.test_samples, preds)]

    def communication(self) -> distributed.CommunicationReport:
        report = distributed.communication_report(self.sessions,
                                                  self.global_result, self.wire)
        report.distributed_bytes += self.extra_session_bytes + self.relay_bytes
        return report

    def signatures_learned(self) -> int:
        base = 2 if self.cfg.seed_signatures else 0
        return self._next_sig_id - base

    def events_csv(self) -> str:
        lines = ["event_index,type,actor,suspect,verdict,db_version"]
        for e in self.events:
            lines.append(f"{e.index},{e.etype},{e.actor},{e.suspect},{e.verdict},{e.db_version}")
        return "\n".join(lines) + "\n"
