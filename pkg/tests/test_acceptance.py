"""Acceptance suite: one test per shipping criterion, each printing a
PASS line with the measured values when it holds. Run with `pytest -s
tests/test_acceptance.py -v` to see every line.
"""

import math
import time

import numpy as np
import pytest
from scipy.stats import spearmanr

from dual_oracle import maximize_dual, objective, random_two_class
from hidsim.config import ExperimentConfig
from hidsim.detection import majority_verdict
from hidsim.distributed import (
    ExchangeAgent,
    ProtocolConfig,
    TrainingSession,
    cluster_pass,
    global_exchange,
    local_train,
)
from hidsim.experiments import (
    dataset_from_records,
    run_compare,
    run_simulate,
    run_train_eval,
)
from hidsim.kdd import CorpusPlan, normalize, select_features, load_category_map
from hidsim.network import (
    ReelectionEvent,
    Role,
    build_topology,
    place_ids,
    reelect_check,
    reelection_due,
)
from hidsim.simulate import Simulator
from hidsim.svm import KernelParams, Sample, train

N_VALUES = (4, 8, 12, 16, 18)
SEEDS = (1, 2, 3, 4, 5)


def report(criterion, detail):
    print(f"\n[criterion {criterion}] PASS - {detail}")


@pytest.fixture(scope="module")
def default_cfg():
    return ExperimentConfig(seeds=SEEDS)


@pytest.fixture(scope="module")
def train_eval_result(default_cfg, corpus_records):
    start = time.monotonic()
    result = run_train_eval(default_cfg, corpus_records)
    result.elapsed = time.monotonic() - start
    return result


@pytest.fixture(scope="module")
def compare_rows(default_cfg, corpus_records):
    start = time.monotonic()
    rows = run_compare(default_cfg, corpus_records, n_values=N_VALUES)
    elapsed = time.monotonic() - start
    return rows, elapsed


def test_criterion_01_svm_oracle_equivalence():
    start = time.monotonic()
    worst = 0.0
    for seed in range(20):
        rng = np.random.default_rng(1000 + seed)
        n = int(rng.integers(4, 13))
        dim = int(rng.integers(2, 4))
        xs, ys = random_two_class(rng, n, dim)
        _, l_oracle = maximize_dual(xs, ys, c=10.0, sigma=1.0)
        data = [Sample(x, int(y), uid=i) for i, (x, y) in enumerate(zip(xs, ys))]
        model = train(data, c_param=10.0, kernel=KernelParams(1.0))
        full = np.zeros(n)
        for a, s in zip(model.alphas, model.support_vectors):
            full[s.uid] = a
        gap = abs(objective(xs, ys, full, 1.0) - l_oracle)
        worst = max(worst, gap)
        assert gap <= 1e-4
        assert np.all(model.alphas > 0)
        assert np.all(model.alphas <= 10.0 + 1e-12)
        sv_y = np.array([s.y for s in model.support_vectors])
        assert abs(float(np.sum(model.alphas * sv_y))) <= 1e-6
    elapsed = time.monotonic() - start
    assert elapsed < 10.0
    report(1, f"worst |L_smo - L_oracle| = {worst:.2e} over 20 seeds, "
              f"KKT invariants hold, {elapsed:.1f}s")


def test_criterion_02_distributed_consensus(corpus_records):
    start = time.monotonic()
    cmap = load_category_map()
    ds = normalize(select_features(corpus_records, cmap))
    plan = CorpusPlan(ds, seed=42, n_agents=18)
    pcfg = ProtocolConfig(c_param=100.0, kernel=KernelParams(0.2))

    sessions = []
    aid = 0
    for cluster in range(3):
        agents = []
        for _ in range(6):
            agents.append(ExchangeAgent(aid, plan.agent_training(aid)))
            aid += 1
        session = TrainingSession(cluster, 1000 + cluster, agents)
        for agent in session.agents:
            agent.model, agent.sv_set = local_train(agent.data, pcfg)
        cluster_pass(session, pcfg)
        sessions.append(session)
    result = global_exchange(sessions, pcfg)
    assert len(result.models) == 18

    rng = np.random.default_rng(7)
    probes = rng.uniform(0, 1, size=(1000, 4))
    values = [m.decision_values(probes) for m in result.models.values()]
    labels = [np.where(v >= 0, 1, -1) for v in values]
    worst = 0.0
    for lab, val in zip(labels[1:], values[1:]):
        assert np.array_equal(labels[0], lab)
        worst = max(worst, float(np.max(np.abs(values[0] - val))))
        assert worst <= 1e-6
    elapsed = time.monotonic() - start
    assert elapsed < 60.0
    report(2, f"18 agents agree on 1000 probe labels, max decision-value "
              f"spread {worst:.1e}, {elapsed:.1f}s")


def test_criterion_03_centralized_proximity(compare_rows):
    rows, elapsed = compare_rows
    gaps = []
    for seed in SEEDS:
        dist = next(r.accuracy for r in rows
                    if r.mode == "distributed" and r.n_ids == 18 and r.seed == seed)
        cent = next(r.accuracy for r in rows
                    if r.mode == "centralized" and r.n_ids == 18 and r.seed == seed)
        gaps.append(abs(dist - cent))
    mean_gap = float(np.mean(gaps))
    assert mean_gap <= 2.0
    assert elapsed < 120.0
    report(3, f"mean |distributed - centralized| accuracy gap at N=18: "
              f"{mean_gap:.3f} pp over 5 seeds (sweep took {elapsed:.0f}s)")


def test_criterion_04_accuracy_trend(compare_rows):
    rows, _ = compare_rows
    means = []
    for n in N_VALUES:
        accs = [r.accuracy for r in rows
                if r.mode == "distributed" and r.n_ids == n]
        means.append(float(np.mean(accs)))
    rho = spearmanr(N_VALUES, means).statistic
    assert rho > 0
    report(4, f"rank correlation N vs mean distributed accuracy: rho={rho:.2f} "
              f"(means: {[round(m, 2) for m in means]})")


def test_criterion_05_quality_floor(train_eval_result):
    rows = train_eval_result.rows
    acc = float(np.mean([r.accuracy for r in rows]))
    det = float(np.mean([r.detection_rate for r in rows]))
    assert acc >= 94.0
    assert det >= 88.0
    report(5, f"4-feature distributed accuracy {acc:.2f}% (>= 94), "
              f"detection rate {det:.2f}% (>= 88) over 5 seeds")


def test_criterion_06_false_alarm(train_eval_result):
    rows = train_eval_result.rows
    fpr = float(np.mean([r.false_positive_rate for r in rows]))
    assert fpr <= 2.0
    report(6, f"false-positive rate at N=18: {fpr:.3f}% (<= 2%) over 5 seeds")


def test_criterion_07_communication_advantage(train_eval_result):
    rows = train_eval_result.rows
    ratios = [r.comm_ratio for r in rows]
    for row in rows:
        assert row.bytes_distributed < row.bytes_centralized
        assert row.comm_ratio < 1.0
    assert train_eval_result.elapsed < 120.0
    report(7, f"distributed/centralized byte ratio per seed: "
              f"{[round(r, 3) for r in ratios]} (all < 1)")


def test_criterion_08_voting_properties():
    start = time.monotonic()
    checked = 0
    for size in range(1, 10):
        for votes_for in range(size + 1):
            for against in range(size - votes_for + 1):
                # abstaining agents are the remainder and stay counted
                expected = votes_for > size / 2
                assert majority_verdict(votes_for, size) == expected
                if votes_for * 2 == size:
                    assert not majority_verdict(votes_for, size)  # tie acquits
                checked += 1
    elapsed = time.monotonic() - start
    assert elapsed < 5.0
    report(8, f"strict-majority rule verified over {checked} tallies "
              f"(cluster sizes 1-9), {elapsed:.2f}s")


def test_criterion_09_reelection_properties(corpus_records):
    start = time.monotonic()
    # trigger rule over every count and depletion profile
    for n in range(1, 9):
        for depleted in range(n + 1):
            energies = [0.49] * depleted + [0.91] * (n - depleted)
            expected = depleted >= math.ceil(0.75 * n)
            assert reelection_due(energies, [1.0] * n) == expected

    # post-election energy invariant on concrete topologies
    for n_ids in range(1, 9):
        topo = build_topology(30, 10000.0, 55.0, 2, seed=50 + n_ids)
        place_ids(topo, n_ids)
        for agent in topo.ids_agents():
            agent.energy_spent = agent.initial_energy * 0.6
        for cid in sorted(topo.clusters):
            if not topo.ids_agents(cid):
                continue
            event = reelect_check(topo, cid)
            if isinstance(event, ReelectionEvent):
                for nid in event.promoted:
                    node = topo.nodes[nid]
                    assert node.energy >= 0.5 * node.initial_energy
                    assert node.role is Role.IDS_AGENT

    # signature handover: promoted agents hold the head's database version
    cfg = ExperimentConfig(seeds=(1,), n_nodes=20, n_clusters=2, n_ids=4,
                           ticks=10, attack_fraction=0.0, node_energy=0.15,
                           head_energy=2.0)
    ds = dataset_from_records(corpus_records, cfg)
    sim = Simulator(cfg, ds, seed=1).setup().train().replay()
    assert sim.reelections >= 1
    handovers = [e for e in sim.events if e.etype == "handover"]
    assert handovers
    for event in handovers:
        assert sim.views[event.actor].db.version == event.db_version
    elapsed = time.monotonic() - start
    assert elapsed < 5.0
    report(9, f"ceil(3/4) trigger, >=50% post-election energy and signature "
              f"handover verified ({sim.reelections} rotation(s)), {elapsed:.1f}s")


def test_criterion_10_end_to_end_detection(corpus_records):
    start = time.monotonic()
    cfg = ExperimentConfig(seeds=SEEDS, attack_fraction=0.1)
    result = run_simulate(cfg, corpus_records)
    total_compromised = 0
    for sim in result.simulators:
        assert sim.compromised
        total_compromised += len(sim.compromised)
        isolated = set(sim.isolation_order)
        assert sim.compromised <= isolated
        for nid in isolated:
            assert nid in sim.emitted  # silent nodes stay untouched

        # audit: every verdict reproducible from its logged votes
        pending = {}
        for event in sim.events:
            if event.etype == "vote":
                pending.setdefault(event.suspect, []).append(event.verdict)
            elif event.etype == "verdict":
                votes = pending.pop(event.suspect)
                votes_for = sum(1 for v in votes if v == "intruder")
                expected = "intruder" if votes_for > len(votes) / 2 else "benign"
                assert event.verdict == expected
    elapsed = time.monotonic() - start
    assert elapsed < 180.0
    report(10, f"{total_compromised} compromised nodes isolated across 5 seeds, "
               f"no silent node isolated, verdict audit clean, {elapsed:.0f}s")
