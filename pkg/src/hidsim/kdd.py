"""KDD'99 corpus handling.

Parsing of the 41-feature connection records, attack-name -> category
mapping, numeric feature selection, min-max normalization, deterministic
per-agent sampling and the delete-one-feature ranking procedure.
"""

from __future__ import annotations

import gzip
import io
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import InsufficientDataError, ParseError, UnknownLabelError
from .svm import Sample

KDD_FIELDS = (
    "duration", "protocol_type", "service", "flag", "src_bytes", "dst_bytes",
    "land", "wrong_fragment", "urgent", "hot", "num_failed_logins",
    "logged_in", "num_compromised", "root_shell", "su_attempted", "num_root",
    "num_file_creations", "num_shells", "num_access_files",
    "num_outbound_cmds", "is_host_login", "is_guest_login", "count",
    "srv_count", "serror_rate", "srv_serror_rate", "rerror_rate",
    "srv_rerror_rate", "same_srv_rate", "diff_srv_rate",
    "srv_diff_host_rate", "dst_host_count", "dst_host_srv_count",
    "dst_host_same_srv_rate", "dst_host_diff_srv_rate",
    "dst_host_same_src_port_rate", "dst_host_srv_diff_host_rate",
    "dst_host_serror_rate", "dst_host_srv_serror_rate",
    "dst_host_rerror_rate", "dst_host_srv_rerror_rate",
)
FIELD_INDEX = {name: i for i, name in enumerate(KDD_FIELDS)}
SYMBOLIC_FIELDS = frozenset({"protocol_type", "service", "flag"})

CATEGORIES = ("normal", "dos", "probe", "u2r", "r2l")
ANOMALY_CATEGORIES = ("dos", "probe")
EXCLUDED_CATEGORIES = ("u2r", "r2l")

DEFAULT_FEATURES = ("src_bytes", "dst_bytes", "count", "srv_diff_host_rate")
# candidate pool for ranking runs: numeric fields including the default four
RANKING_FEATURES = (
    "duration", "src_bytes", "dst_bytes", "wrong_fragment", "count",
    "srv_count", "serror_rate", "same_srv_rate", "srv_diff_host_rate",
)

TEST_RECORDS_PER_AGENT = 60
TEST_ANOMALY_SHARE = 0.42


@dataclass(slots=True)
class RawRecord:
    """One corpus line: 41 raw field strings plus the attack-name label.
    `index` is the position in the corpus and doubles as sample identity."""

    fields: tuple[str, ...]
    label: str
    index: int


def load_category_map(path=None) -> dict[str, str]:
    """Attack-name -> category table; the packaged default covers the
    10%-KDD attack names and can be overridden with any two-column file."""
    if path is None:
        text = resources.files("hidsim.data").joinpath("attack_categories.tsv").read_text()
    else:
        text = Path(path).read_text()
    mapping = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ParseError(f"category map line {line_no}: expected 2 tab-separated columns", line_no)
        name, category = parts[0].strip(), parts[1].strip().lower()
        if category not in CATEGORIES:
            raise ParseError(f"category map line {line_no}: unknown category {category!r}", line_no)
        mapping[name] = category
    return mapping


def _open_source(source):
    if isinstance(source, (str, Path)):
        raw = Path(source).read_bytes()
    elif isinstance(source, bytes):
        raw = source
    else:
        raw = source.read()
        if isinstance(raw, str):
            raw = raw.encode()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return io.TextIOWrapper(io.BytesIO(raw), encoding="utf-8")


def parse_kdd(source) -> list[RawRecord]:
    """Parse comma-separated KDD records (plain or gzip). Every line must
    carry 41 features plus a label; numeric fields must parse as floats."""
    records = []
    with _open_source(source) as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != len(KDD_FIELDS) + 1:
                raise ParseError(
                    f"line {line_no}: expected {len(KDD_FIELDS) + 1} fields, got {len(parts)}",
                    line_no,
                )
            for name, value in zip(KDD_FIELDS, parts):
                if name not in SYMBOLIC_FIELDS:
                    try:
                        float(value)
                    except ValueError:
                        raise ParseError(
                            f"line {line_no}: field {name!r} is not numeric: {value!r}",
                            line_no,
                        ) from None
            fields = tuple(sys.intern(p) for p in parts[:-1])
            records.append(RawRecord(fields=fields, label=parts[-1], index=len(records)))
    return records


def record_category(record: RawRecord, category_map: dict[str, str]) -> str:
    name = record.label.rstrip(".")
    try:
        return category_map[name]
    except KeyError:
        raise UnknownLabelError(f"attack name {record.label!r} missing from category map") from None


def map_label(record: RawRecord, category_map: dict[str, str]) -> int | None:
    """normal -> +1, dos/probe -> -1, u2r/r2l -> None (excluded)."""
    category = record_category(record, category_map)
    if category == "normal":
        return 1
    if category in ANOMALY_CATEGORIES:
        return -1
    return None


@dataclass
class LabeledDataset:
    samples: list[Sample]
    feature_ids: tuple[str, ...]
    categories: list[str]
    normalization: list[tuple[float, float]] | None = None

    @property
    def dim(self) -> int:
        return len(self.feature_ids)

    def matrix(self) -> np.ndarray:
        return np.array([s.x for s in self.samples])

    def labels(self) -> np.ndarray:
        return np.array([s.y for s in self.samples])

    def project(self, feature_ids) -> "LabeledDataset":
        """Column subset, preserving sample identity and label."""
        feature_ids = tuple(feature_ids)
        cols = [self.feature_ids.index(f) for f in feature_ids]
        samples = [Sample(s.x[cols], s.y, uid=s.uid) for s in self.samples]
        norm = None
        if self.normalization is not None:
            norm = [self.normalization[c] for c in cols]
        return LabeledDataset(samples, feature_ids, list(self.categories), norm)


def select_features(records, category_map, feature_ids=DEFAULT_FEATURES) -> LabeledDataset:
    """Project records onto numeric features and map labels to +/-1;
    u2r/r2l records are dropped. Record order is preserved."""
    feature_ids = tuple(feature_ids)
    if not feature_ids:
        raise ValueError("feature_ids must not be empty")
    for f in feature_ids:
        if f not in FIELD_INDEX:
            raise ValueError(f"unknown KDD field {f!r}")
        if f in SYMBOLIC_FIELDS:
            raise ValueError(f"field {f!r} is symbolic and unsupported for feature vectors")
    cols = [FIELD_INDEX[f] for f in feature_ids]
    samples, categories = [], []
    for rec in records:
        label = map_label(rec, category_map)
        if label is None:
            continue
        x = np.array([float(rec.fields[c]) for c in cols])
        samples.append(Sample(x, label, uid=rec.index))
        categories.append(record_category(rec, category_map))
    return LabeledDataset(samples, feature_ids, categories)


def compute_stats(samples: list[Sample]) -> list[tuple[float, float]]:
    """Per-feature (min, max) pairs over a sample list."""
    xs = np.array([s.x for s in samples])
    return [(float(lo), float(hi)) for lo, hi in zip(xs.min(axis=0), xs.max(axis=0))]


def apply_normalization(samples: list[Sample], stats) -> list[Sample]:
    """Min-max scale samples with precomputed (min, max) pairs; values
    outside the training range clip to the ends, constant features map to 0."""
    if not samples:
        return []
    xs = np.array([s.x for s in samples])
    lo = np.array([s[0] for s in stats])
    hi = np.array([s[1] for s in stats])
    span = hi - lo
    safe = np.where(span > 0, span, 1.0)
    scaled = np.clip((xs - lo) / safe, 0.0, 1.0)
    scaled[:, span <= 0] = 0.0
    return [Sample(scaled[i], s.y, uid=s.uid) for i, s in enumerate(samples)]


def normalize(ds: LabeledDataset, stats=None) -> LabeledDataset:
    """Min-max scale every feature to [0,1]. Without `stats` the scaling
    parameters come from `ds` itself; with `stats` (training-set values)
    they are reused verbatim."""
    if stats is None:
        stats = compute_stats(ds.samples)
    samples = apply_normalization(ds.samples, stats)
    return LabeledDataset(samples, ds.feature_ids, list(ds.categories), list(stats))


class CorpusPlan:
    """Deterministic, non-overlapping allocation of one dataset: per-agent
    training draws first, then the shared test set, then auxiliary slices
    (signature seeding, traffic pools) from the unconsumed remainder.

    Everything is a pure function of (dataset order, seed), so two plans
    built with the same arguments hand out identical index sets.
    """

    def __init__(self, ds: LabeledDataset, seed: int, n_agents: int,
                 train_normal: int = 50, train_anom: int = 50,
                 per_agent_test: int = TEST_RECORDS_PER_AGENT,
                 anomaly_share: float = TEST_ANOMALY_SHARE):
        self.ds = ds
        self.seed = seed
        self.n_agents = n_agents
        self.train_normal = train_normal
        self.train_anom = train_anom

        rng = np.random.default_rng(seed)
        normal_pos = [i for i, c in enumerate(ds.categories) if c == "normal"]
        dos_pos = [i for i, c in enumerate(ds.categories) if c == "dos"]
        probe_pos = [i for i, c in enumerate(ds.categories) if c == "probe"]
        self._normal = [normal_pos[k] for k in rng.permutation(len(normal_pos))]
        dos = [dos_pos[k] for k in rng.permutation(len(dos_pos))]
        probe = [probe_pos[k] for k in rng.permutation(len(probe_pos))]
        # anomaly stream alternates dos/probe so every 50-draw mixes both
        stream = []
        for a, b in zip(dos, probe):
            stream.append(a)
            stream.append(b)
        longer = dos if len(dos) > len(probe) else probe
        stream.extend(longer[min(len(dos), len(probe)):])
        self._anomaly = stream
        self._n_dos = len(dos)
        self._n_probe = len(probe)
        self._dos_tail = list(reversed(dos))
        self._probe_tail = list(reversed(probe))
        self._normal_tail = list(reversed(self._normal))

        total_test = n_agents * per_agent_test
        self.test_anom_count = round(anomaly_share * total_test)
        self.test_normal_count = total_test - self.test_anom_count
        self._normal_front = n_agents * train_normal + self.test_normal_count
        self._anom_front = n_agents * train_anom + self.test_anom_count
        self._normal_aux = 0   # consumed from the back of the normal order
        self._dos_aux = 0      # consumed from the back of the dos order
        self._probe_aux = 0
        self._extra_agents = 0

    def _take(self, order, start, count, what):
        if start + count > len(order):
            raise InsufficientDataError(
                f"corpus exhausted drawing {count} {what} records "
                f"(have {len(order) - start} unassigned)"
            )
        return order[start:start + count]

    def _stream_split(self, k):
        """How many dos/probe entries the first k of the anomaly stream use."""
        paired = 2 * min(self._n_dos, self._n_probe)
        if k <= paired:
            return (k + 1) // 2, k // 2
        rest = k - paired
        half = paired // 2
        if self._n_dos >= self._n_probe:
            return half + rest, half
        return half, half + rest

    def agent_training(self, agent_ord: int) -> list[Sample]:
        if agent_ord >= self.n_agents:
            raise ValueError(f"agent ordinal {agent_ord} out of range")
        n_idx = self._take(self._normal, agent_ord * self.train_normal,
                           self.train_normal, "normal")
        a_idx = self._take(self._anomaly, agent_ord * self.train_anom,
                           self.train_anom, "anomalous")
        return [self.ds.samples[i] for i in n_idx + a_idx]

    def extra_agent_training(self) -> list[Sample]:
        """Fresh draw for an agent promoted after the initial plan (grows the
        consumed front beyond the planned agents)."""
        ord_ = self.n_agents + self._extra_agents
        n_idx = self._take(self._normal, ord_ * self.train_normal,
                           self.train_normal, "normal")
        a_idx = self._take(self._anomaly, ord_ * self.train_anom,
                           self.train_anom, "anomalous")
        self._extra_agents += 1
        self._normal_front = max(self._normal_front,
                                 (ord_ + 1) * self.train_normal + self.test_normal_count)
        self._anom_front = max(self._anom_front,
                               (ord_ + 1) * self.train_anom + self.test_anom_count)
        return [self.ds.samples[i] for i in n_idx + a_idx]

    def test_set(self) -> list[Sample]:
        n_idx = self._take(self._normal, self.n_agents * self.train_normal,
                           self.test_normal_count, "normal")
        a_idx = self._take(self._anomaly, self.n_agents * self.train_anom,
                           self.test_anom_count, "anomalous")
        return [self.ds.samples[i] for i in n_idx + a_idx]

    def _aux_from_tail(self, tail, used, front_used, count, what):
        if used + count > len(tail) - front_used:
            raise InsufficientDataError(
                f"corpus exhausted drawing {count} {what} records for auxiliary use"
            )
        return tail[used:used + count]

    def heldout(self, category: str, count: int) -> list[Sample]:
        """Slice from the back of one category's order, disjoint from the
        training/test front. Used to seed predefined signatures."""
        dos_front, probe_front = self._stream_split(self._anom_front)
        if category == "dos":
            idx = self._aux_from_tail(self._dos_tail, self._dos_aux,
                                      dos_front, count, "dos")
            self._dos_aux += count
        elif category == "probe":
            idx = self._aux_from_tail(self._probe_tail, self._probe_aux,
                                      probe_front, count, "probe")
            self._probe_aux += count
        elif category == "normal":
            idx = self._aux_from_tail(self._normal_tail, self._normal_aux,
                                      self._normal_front, count, "normal")
            self._normal_aux += count
        else:
            raise ValueError(f"no held-out pool for category {category!r}")
        return [self.ds.samples[i] for i in idx]

    def traffic_pool(self, kind: str, count: int) -> list[Sample]:
        """Per-node emission pool; `kind` is 'normal', 'dos' or 'probe'."""
        return self.heldout(kind, count)


def sample_agent_training(ds, n_normal, n_anom, agent_id, seed,
                          n_agents=None) -> list[Sample]:
    """Training draw for one agent: disjoint across agent ids under a fixed
    seed, mixing dos and probe anomalies."""
    plan = CorpusPlan(ds, seed, n_agents=(n_agents or agent_id + 1),
                      train_normal=n_normal, train_anom=n_anom)
    return plan.agent_training(agent_id)


def sample_test(ds, n_agents, seed, train_normal=50, train_anom=50) -> list[Sample]:
    """Shared test set of n_agents*60 records (42% anomalous), disjoint from
    every agent's training draw under the same seed."""
    if n_agents == 0:
        return []
    plan = CorpusPlan(ds, seed, n_agents=n_agents,
                      train_normal=train_normal, train_anom=train_anom)
    return plan.test_set()


@dataclass
class RankingRow:
    feature_ids: tuple[str, ...]
    accuracy: float
    detection_rate: float


@dataclass
class FeatureRanking:
    rows: list[RankingRow]


def rank_features(ds: LabeledDataset, base_feature_ids, train_eval) -> FeatureRanking:
    """Delete-one-feature ranking: starting from the base set, repeatedly
    drop the feature whose removal gives the best re-trained accuracy,
    recording (subset, accuracy, detection rate) down to 2 features.

    `train_eval(sub_ds) -> (accuracy, detection_rate)` evaluates one subset;
    ties between candidate deletions drop the higher KDD field index.
    """
    base = tuple(base_feature_ids)
    if len(base) < 2:
        raise ValueError("ranking needs at least 2 base features")
    current = list(base)
    acc, det = train_eval(ds.project(current))
    rows = [RankingRow(tuple(current), acc, det)]
    while len(current) > 2:
        best = None
        for f in current:
            subset = [g for g in current if g != f]
            a, d = train_eval(ds.project(subset))
            key = (a, FIELD_INDEX[f])
            if best is None or key > best[0]:
                best = (key, f, a, d)
        _, dropped, a, d = best
        current.remove(dropped)
        rows.append(RankingRow(tuple(current), a, d))
    return FeatureRanking(rows)
