"""Hybrid detection primitives: signature store, misuse matching, learned
signature synthesis, majority voting and alert application.

Signatures are geometric patterns over the normalized feature space: a
centroid plus a Euclidean radius. The pieces here are pure; the simulator
wires them into the per-agent pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MIN_SIGNATURE_RADIUS = 0.05
PREDEFINED_RADIUS_PERCENTILE = 90.0


@dataclass
class Signature:
    sig_id: int
    centroid: np.ndarray
    radius: float
    origin: str = "predefined"  # or "learned"
    attack_hint: str | None = None

    def __post_init__(self):
        self.centroid = np.asarray(self.centroid, dtype=float)
        if self.radius < 0:
            raise ValueError("signature radius must be non-negative")

    def contains(self, features: np.ndarray) -> bool:
        return float(np.linalg.norm(features - self.centroid)) <= self.radius


@dataclass
class SignatureDb:
    signatures: list[Signature] = field(default_factory=list)
    version: int = 0

    def __post_init__(self):
        ids = [s.sig_id for s in self.signatures]
        if len(set(ids)) != len(ids):
            raise ValueError("signature ids must be unique")

    def add(self, sig: Signature) -> bool:
        """Install a signature; repeated ids are ignored. Each accepted
        update bumps the version by exactly one."""
        if any(s.sig_id == sig.sig_id for s in self.signatures):
            return False
        self.signatures.append(sig)
        self.version += 1
        return True

    def clone(self) -> "SignatureDb":
        return SignatureDb(list(self.signatures), self.version)


@dataclass
class IntrusionReport:
    reporter: int
    suspect: int
    features: np.ndarray
    decision_value: float
    timestamp: int

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        if self.decision_value >= 0:
            raise ValueError("reports exist only for anomaly-flagged traffic")


@dataclass
class Alert:
    malicious: int
    issuing_head: int
    new_signature: Signature | None = None

    @property
    def key(self):
        sig = self.new_signature.sig_id if self.new_signature else None
        return (self.malicious, sig)


def misuse_check(db: SignatureDb, report: IntrusionReport) -> int | None:
    """Id of the nearest signature containing the reported features, or
    None when nothing matches. Distance ties go to the lower id."""
    best = None
    for sig in db.signatures:
        dist = float(np.linalg.norm(report.features - sig.centroid))
        if dist <= sig.radius:
            key = (dist, sig.sig_id)
            if best is None or key < best[0]:
                best = (key, sig.sig_id)
    return None if best is None else best[1]


def derive_signature(reports: list[IntrusionReport], sig_id: int,
                     min_radius: float = MIN_SIGNATURE_RADIUS) -> Signature:
    """New rule from the reports that convicted one suspect: centroid is
    the feature mean, radius covers every contributing vector (floored)."""
    if not reports:
        raise ValueError("cannot derive a signature from zero reports")
    feats = np.array([r.features for r in reports])
    centroid = feats.mean(axis=0)
    radius = max(float(np.max(np.linalg.norm(feats - centroid, axis=1))), min_radius)
    return Signature(sig_id, centroid, radius, origin="learned")


def build_predefined_signatures(category_samples: dict[str, list],
                                percentile: float = PREDEFINED_RADIUS_PERCENTILE,
                                min_radius: float = MIN_SIGNATURE_RADIUS) -> list[Signature]:
    """Seed rules from held-out per-attack-category slices: one signature
    per category, centred on the slice mean with the given percentile of
    member distances as radius."""
    sigs = []
    for sig_id, (category, samples) in enumerate(sorted(category_samples.items())):
        feats = np.array([s.x for s in samples])
        centroid = feats.mean(axis=0)
        dists = np.linalg.norm(feats - centroid, axis=1)
        radius = max(float(np.percentile(dists, percentile)), min_radius)
        sigs.append(Signature(sig_id, centroid, radius, origin="predefined",
                              attack_hint=category))
    return sigs


def majority_verdict(votes_for: int, active_agents: int) -> bool:
    """Strict majority over every active agent in the cluster; abstaining
    agents stay in the denominator, so a tie acquits."""
    if active_agents < 1:
        raise ValueError("verdict requires at least one active agent")
    return votes_for > active_agents / 2


@dataclass
class NodeView:
    """A node's local picture of the network: who is isolated plus its own
    copy of the signature database."""

    node_id: int
    db: SignatureDb
    isolated_peers: set = field(default_factory=set)
    applied_alerts: set = field(default_factory=set)


def apply_alert(view: NodeView, alert: Alert) -> bool:
    """Fold an alert into the local view; duplicates are no-ops."""
    if alert.key in view.applied_alerts:
        return False
    view.applied_alerts.add(alert.key)
    view.isolated_peers.add(alert.malicious)
    if alert.new_signature is not None:
        view.db.add(alert.new_signature)
    return True
