"""Attributed graphs: canonical loaders, synthetic generators, probe sampling.

The canonical on-disk format is a directory with three CSV files (edges,
features, labels) plus a small JSON manifest; ``planetoid_raw`` reads the
public Cora/CiteSeer distribution layout (``<name>.content`` +
``<name>.cites``).
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .diffcore import RngStream

__all__ = [
    "AttributedGraph",
    "Splits",
    "EdgeProbeSet",
    "NoiseSpec",
    "GraphFormatError",
    "GraphValidationError",
    "ProbeSamplingError",
    "load_graph",
    "save_graph",
    "make_default_splits",
    "synth_sbm",
    "sample_probe_set",
    "corrupt",
    "corrupt_with_mask",
    "induced_subgraph",
]


class GraphFormatError(ValueError):
    """A dataset file failed to parse; message carries line/field context."""


class GraphValidationError(ValueError):
    """A loaded graph violates the representation invariants."""


class ProbeSamplingError(RuntimeError):
    """The probe-pair sampling request cannot be satisfied."""


@dataclass
class Splits:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray

    def to_lists(self):
        return {
            "train": self.train.tolist(),
            "val": self.val.tolist(),
            "test": self.test.tolist(),
        }


@dataclass
class AttributedGraph:
    """Immutable-by-convention container for one node-classification dataset."""

    n: int
    features: np.ndarray  # n x d float64
    labels: np.ndarray  # length-n int64 in [0, num_classes)
    adjacency: np.ndarray  # n x n symmetric 0/1, zero diagonal
    splits: Splits
    feature_kind: str  # "binary" | "continuous"
    num_classes: int

    def __post_init__(self):
        self.validate()

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def num_edges(self) -> int:
        return int(self.adjacency.sum()) // 2

    def edge_list(self) -> np.ndarray:
        """Undirected edges as (m, 2) with u < v."""
        u, v = np.nonzero(np.triu(self.adjacency, k=1))
        return np.stack([u, v], axis=1)

    def neighbors(self, i: int) -> np.ndarray:
        return np.nonzero(self.adjacency[i])[0]

    def validate(self) -> None:
        a = self.adjacency
        if a.shape != (self.n, self.n):
            raise GraphValidationError("adjacency shape does not match node count")
        if not np.array_equal(a, a.T):
            raise GraphValidationError("adjacency is not symmetric")
        if np.any(np.diag(a) != 0):
            raise GraphValidationError("adjacency has nonzero diagonal")
        if not np.all(np.isin(a, (0.0, 1.0))):
            raise GraphValidationError("adjacency entries must be 0/1")
        if self.features.shape[0] != self.n or self.labels.shape[0] != self.n:
            raise GraphValidationError("feature/label row count does not match n")
        if np.any(self.labels < 0) or np.any(self.labels >= self.num_classes):
            raise GraphValidationError(
                f"label out of range [0, {self.num_classes})"
            )
        ids = np.concatenate([self.splits.train, self.splits.val, self.splits.test])
        if len(np.unique(ids)) != len(ids):
            raise GraphValidationError("splits overlap")
        if len(ids) and (ids.min() < 0 or ids.max() >= self.n):
            raise GraphValidationError("split ids out of range")
        if self.feature_kind == "binary":
            if not np.all(np.isin(self.features, (0.0, 1.0))):
                raise GraphValidationError("binary feature_kind with non-0/1 entries")
        elif self.feature_kind != "continuous":
            raise GraphValidationError(f"unknown feature_kind {self.feature_kind!r}")


# ---------------------------------------------------------------------------
# loading / saving


def _read_edge_csv(path: str, n: int) -> np.ndarray:
    adj = np.zeros((n, n), dtype=np.float64)
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise GraphFormatError(
                    f"{path}:{lineno}: expected 'u,v', got {line!r}"
                )
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError as e:
                raise GraphFormatError(f"{path}:{lineno}: non-integer node id") from e
            if not (0 <= u < n and 0 <= v < n):
                raise GraphFormatError(f"{path}:{lineno}: node id out of range")
            if u == v:
                continue  # self-loops dropped
            adj[u, v] = 1.0
            adj[v, u] = 1.0  # edge kept if present in either direction
    return adj


def _load_canonical(path: str) -> AttributedGraph:
    manifest_path = os.path.join(path, "manifest.json")
    try:
        with open(manifest_path) as fh:
            manifest = json.load(fh)
    except FileNotFoundError:
        raise GraphFormatError(f"missing manifest: {manifest_path}")
    except json.JSONDecodeError as e:
        raise GraphFormatError(f"{manifest_path}: invalid JSON ({e})")

    for key in ("n", "d", "num_classes", "feature_kind"):
        if key not in manifest:
            raise GraphFormatError(f"{manifest_path}: missing field {key!r}")
    n, d = int(manifest["n"]), int(manifest["d"])

    features = np.zeros((n, d), dtype=np.float64)
    fpath = os.path.join(path, "features.csv")
    with open(fpath) as fh:
        rows = 0
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if rows >= n:
                raise GraphFormatError(f"{fpath}:{lineno}: more than {n} feature rows")
            parts = line.split(",")
            if len(parts) != d:
                raise GraphFormatError(
                    f"{fpath}:{lineno}: expected {d} fields, got {len(parts)}"
                )
            try:
                features[rows] = [float(p) for p in parts]
            except ValueError:
                raise GraphFormatError(f"{fpath}:{lineno}: non-numeric feature value")
            rows += 1
        if rows != n:
            raise GraphFormatError(f"{fpath}: expected {n} rows, got {rows}")

    lpath = os.path.join(path, "labels.csv")
    labels = np.zeros(n, dtype=np.int64)
    with open(lpath) as fh:
        rows = 0
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if rows >= n:
                raise GraphFormatError(f"{lpath}:{lineno}: more than {n} labels")
            try:
                labels[rows] = int(line)
            except ValueError:
                raise GraphFormatError(f"{lpath}:{lineno}: non-integer label")
            rows += 1
        if rows != n:
            raise GraphFormatError(f"{lpath}: expected {n} labels, got {rows}")

    adjacency = _read_edge_csv(os.path.join(path, "edges.csv"), n)

    if "splits" in manifest:
        s = manifest["splits"]
        splits = Splits(
            np.asarray(s["train"], dtype=np.int64),
            np.asarray(s["val"], dtype=np.int64),
            np.asarray(s["test"], dtype=np.int64),
        )
    else:
        splits = make_default_splits(
            labels, int(manifest["num_classes"]), RngStream(int(manifest.get("split_seed", 0)))
        )

    return AttributedGraph(
        n=n,
        features=features,
        labels=labels,
        adjacency=adjacency,
        splits=splits,
        feature_kind=manifest["feature_kind"],
        num_classes=int(manifest["num_classes"]),
    )


def _load_planetoid_raw(path: str, split_seed: int = 0) -> AttributedGraph:
    stems = [f[: -len(".content")] for f in os.listdir(path) if f.endswith(".content")]
    if len(stems) != 1:
        raise GraphFormatError(f"{path}: expected exactly one .content file")
    stem = stems[0]
    content_path = os.path.join(path, stem + ".content")
    cites_path = os.path.join(path, stem + ".cites")

    ids: list[str] = []
    rows: list[np.ndarray] = []
    raw_labels: list[str] = []
    width = None
    with open(content_path) as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split("\t")
            if len(parts) < 3:
                raise GraphFormatError(f"{content_path}:{lineno}: too few fields")
            if width is None:
                width = len(parts)
            elif len(parts) != width:
                raise GraphFormatError(
                    f"{content_path}:{lineno}: expected {width} fields, got {len(parts)}"
                )
            ids.append(parts[0])
            try:
                rows.append(np.array([float(x) for x in parts[1:-1]]))
            except ValueError:
                raise GraphFormatError(f"{content_path}:{lineno}: non-numeric feature")
            raw_labels.append(parts[-1])

    n = len(ids)
    index = {node_id: i for i, node_id in enumerate(ids)}
    if len(index) != n:
        raise GraphFormatError(f"{content_path}: duplicate node ids")
    classes = sorted(set(raw_labels))
    labels = np.array([classes.index(l) for l in raw_labels], dtype=np.int64)
    features = np.stack(rows)

    adjacency = np.zeros((n, n), dtype=np.float64)
    with open(cites_path) as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if len(parts) != 2:
                raise GraphFormatError(f"{cites_path}:{lineno}: expected two ids")
            try:
                u, v = index[parts[0]], index[parts[1]]
            except KeyError as e:
                raise GraphFormatError(
                    f"{cites_path}:{lineno}: unknown node id {e.args[0]!r}"
                )
            if u == v:
                continue
            adjacency[u, v] = 1.0
            adjacency[v, u] = 1.0

    binary = bool(np.all(np.isin(features, (0.0, 1.0))))
    splits = make_default_splits(labels, len(classes), RngStream(split_seed))
    return AttributedGraph(
        n=n,
        features=features,
        labels=labels,
        adjacency=adjacency,
        splits=splits,
        feature_kind="binary" if binary else "continuous",
        num_classes=len(classes),
    )


def load_graph(path: str, format: str = "canonical", split_seed: int = 0) -> AttributedGraph:
    """Load and validate an attributed graph from disk."""
    if format == "canonical":
        return _load_canonical(path)
    if format == "planetoid_raw":
        return _load_planetoid_raw(path, split_seed)
    raise GraphFormatError(f"unknown format {format!r}")


def save_graph(g: AttributedGraph, path: str) -> None:
    """Write the canonical directory format; load(save(g)) is bit-identical."""
    os.makedirs(path, exist_ok=True)
    manifest = {
        "n": g.n,
        "d": g.d,
        "num_classes": g.num_classes,
        "feature_kind": g.feature_kind,
        "splits": g.splits.to_lists(),
    }
    with open(os.path.join(path, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=1)
    with open(os.path.join(path, "edges.csv"), "w") as fh:
        for u, v in g.edge_list():
            fh.write(f"{u},{v}\n")
    with open(os.path.join(path, "features.csv"), "w") as fh:
        for row in g.features:
            # repr round-trips float64 exactly, keeping save/load bit-identical
            fh.write(",".join(repr(float(x)) for x in row) + "\n")
    with open(os.path.join(path, "labels.csv"), "w") as fh:
        for y in g.labels:
            fh.write(f"{y}\n")


def make_default_splits(labels: np.ndarray, num_classes: int, rng: RngStream,
                        train_frac: float = 0.10, val_frac: float = 0.10) -> Splits:
    """Per-class 10%/10%/80% train/val/test split (at least one train node)."""
    train, val, test = [], [], []
    for c in range(num_classes):
        members = np.nonzero(labels == c)[0]
        if len(members) == 0:
            continue
        order = members[rng.permutation(len(members))]
        n_tr = max(1, int(round(train_frac * len(members))))
        n_va = max(1, int(round(val_frac * len(members)))) if len(members) > 2 else 0
        train.extend(order[:n_tr])
        val.extend(order[n_tr : n_tr + n_va])
        test.extend(order[n_tr + n_va :])
    return Splits(
        np.sort(np.array(train, dtype=np.int64)),
        np.sort(np.array(val, dtype=np.int64)),
        np.sort(np.array(test, dtype=np.int64)),
    )


# ---------------------------------------------------------------------------
# synthetic graphs


def synth_sbm(blocks: int, sizes: list[int], p_in: float, p_out: float,
              feature_signal: float, d: int, rng: RngStream) -> AttributedGraph:
    """Stochastic block model with block-coded noisy features.

    Features are a one-hot block indicator scaled by ``feature_signal`` plus
    unit Gaussian noise, so ``feature_signal=0`` removes all block information
    from the features.
    """
    if len(sizes) != blocks:
        raise ValueError(f"sizes length {len(sizes)} does not match blocks={blocks}")
    if not (0.0 <= p_in <= 1.0 and 0.0 <= p_out <= 1.0):
        raise ValueError("probabilities must lie in [0,1]")
    n = int(sum(sizes))
    labels = np.repeat(np.arange(blocks), sizes).astype(np.int64)

    probs = np.where(labels[:, None] == labels[None, :], p_in, p_out)
    upper = np.triu(rng.uniform(size=(n, n)) < probs, k=1)
    adjacency = (upper | upper.T).astype(np.float64)

    code = np.zeros((n, d))
    code[np.arange(n), labels % d] = feature_signal
    features = code + rng.normal(size=(n, d))

    splits = make_default_splits(labels, blocks, rng)
    return AttributedGraph(
        n=n,
        features=features,
        labels=labels,
        adjacency=adjacency,
        splits=splits,
        feature_kind="continuous",
        num_classes=blocks,
    )


# ---------------------------------------------------------------------------
# evaluation-pair sampling


@dataclass
class EdgeProbeSet:
    """Balanced positive/negative node pairs anchored on a sampled node set."""

    u: np.ndarray
    v: np.ndarray
    labels: np.ndarray  # 1 = edge, 0 = non-edge
    seed: int
    sampled_nodes: np.ndarray = field(default_factory=lambda: np.array([], dtype=np.int64))

    def __len__(self):
        return len(self.labels)

    @property
    def positives(self) -> np.ndarray:
        return np.nonzero(self.labels == 1)[0]

    @property
    def negatives(self) -> np.ndarray:
        return np.nonzero(self.labels == 0)[0]

    def endpoints(self) -> np.ndarray:
        return np.unique(np.concatenate([self.u, self.v]))


def _round_count(fraction: float, n: int) -> int:
    return max(1, int(math.floor(fraction * n + 0.5)))


def sample_probe_set(g: AttributedGraph, node_fraction: float = 0.10,
                     rng: RngStream | None = None) -> EdgeProbeSet:
    """Positives: every edge incident to a sampled node set; negatives: an
    equal number of distinct non-edges, each with an endpoint in that set."""
    if rng is None:
        rng = RngStream(0)
    k = _round_count(node_fraction, g.n)
    sampled = np.sort(rng.choice(g.n, size=k, replace=False))
    in_set = np.zeros(g.n, dtype=bool)
    in_set[sampled] = True

    edges = g.edge_list()
    incident = edges[in_set[edges[:, 0]] | in_set[edges[:, 1]]]
    if len(incident) == 0:
        raise ProbeSamplingError("no edges incident to the sampled node set")
    need = len(incident)

    taken: set[tuple[int, int]] = set()
    neg_u: list[int] = []
    neg_v: list[int] = []
    attempts = 0
    max_attempts = 60 * need
    adj = g.adjacency
    while len(neg_u) < need and attempts < max_attempts:
        attempts += 1
        s = int(sampled[rng.integers(0, k)])
        t = int(rng.integers(0, g.n))
        if s == t or adj[s, t] != 0:
            continue
        key = (min(s, t), max(s, t))
        if key in taken:
            continue
        taken.add(key)
        neg_u.append(key[0])
        neg_v.append(key[1])

    if len(neg_u) < need:
        # Dense fallback: enumerate every admissible non-edge exactly.
        cand = []
        for s in sampled:
            row = adj[s]
            for t in range(g.n):
                if t == s or row[t] != 0:
                    continue
                key = (min(int(s), t), max(int(s), t))
                cand.append(key)
        cand = sorted(set(cand) - taken)
        short = need - len(neg_u)
        if len(cand) < short:
            raise ProbeSamplingError(
                f"only {len(cand) + len(neg_u)} admissible non-edges for {need} positives"
            )
        pick = rng.choice(len(cand), size=short, replace=False)
        for i in np.sort(pick):
            neg_u.append(cand[i][0])
            neg_v.append(cand[i][1])

    u = np.concatenate([incident[:, 0], np.array(neg_u, dtype=np.int64)])
    v = np.concatenate([incident[:, 1], np.array(neg_v, dtype=np.int64)])
    labels = np.concatenate([np.ones(need, dtype=np.int64), np.zeros(need, dtype=np.int64)])
    return EdgeProbeSet(u=u, v=v, labels=labels, seed=rng.seed, sampled_nodes=sampled)


# ---------------------------------------------------------------------------
# corruption


@dataclass
class NoiseSpec:
    ratio: float
    mode: str  # "binary_flip_ones" | "gaussian_additive"
    rng: RngStream

    def __post_init__(self):
        if not (0.0 <= self.ratio <= 1.0):
            raise ValueError("noise ratio must lie in [0,1]")
        if self.mode not in ("binary_flip_ones", "gaussian_additive"):
            raise ValueError(f"unknown noise mode {self.mode!r}")


def corrupt_with_mask(x: np.ndarray, spec: NoiseSpec) -> tuple[np.ndarray, np.ndarray]:
    """Corrupted copy of x plus the boolean mask of touched entries."""
    x = np.asarray(x, dtype=np.float64)
    out = x.copy()
    mask = np.zeros(x.shape, dtype=bool)
    if spec.mode == "binary_flip_ones":
        if not np.all(np.isin(x, (0.0, 1.0))):
            raise ValueError("binary_flip_ones requires a 0/1 matrix")
        ones = np.flatnonzero(x.reshape(-1) == 1.0)
        k = int(math.ceil(spec.ratio * len(ones)))
        if k > 0:
            hit = spec.rng.choice(ones, size=k, replace=False)
            out.reshape(-1)[hit] = 0.0
            mask.reshape(-1)[hit] = True
    else:
        k = int(math.ceil(spec.ratio * x.size))
        if k > 0:
            hit = spec.rng.choice(x.size, size=k, replace=False)
            out.reshape(-1)[hit] += spec.rng.normal(size=k)
            mask.reshape(-1)[hit] = True
    return out, mask


def corrupt(x: np.ndarray, spec: NoiseSpec) -> np.ndarray:
    return corrupt_with_mask(x, spec)[0]


# ---------------------------------------------------------------------------
# partial-node-set view


def induced_subgraph(g: AttributedGraph, node_fraction: float,
                     rng: RngStream) -> AttributedGraph:
    """Restrict the graph to a sampled node subset with compacted ids."""
    if not (0.0 < node_fraction <= 1.0):
        raise ValueError("node_fraction must lie in (0,1]")
    m = _round_count(node_fraction, g.n)
    keep = np.sort(rng.choice(g.n, size=m, replace=False))
    remap = -np.ones(g.n, dtype=np.int64)
    remap[keep] = np.arange(m)

    def restrict(ids):
        ids = ids[remap[ids] >= 0]
        return np.sort(remap[ids])

    return AttributedGraph(
        n=m,
        features=g.features[keep].copy(),
        labels=g.labels[keep].copy(),
        adjacency=g.adjacency[np.ix_(keep, keep)].copy(),
        splits=Splits(
            restrict(g.splits.train), restrict(g.splits.val), restrict(g.splits.test)
        ),
        feature_kind=g.feature_kind,
        num_classes=g.num_classes,
    )
