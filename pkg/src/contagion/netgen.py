"""Preferential-attachment networks with spectral node features.

Pipeline: grow a PA graph, embed every node with the eigenvectors of the
graph Laplacian for the k smallest eigenvalues, calibrate edge weights from
feature similarity, and tag nodes with structural segments (core /
intermediate / periphery by degree decile).
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh
from scipy.sparse.csgraph import connected_components, dijkstra

from .errors import InvalidParameter

logger = logging.getLogger(__name__)

CORE = "core"
INTERMEDIATE = "intermediate"
PERIPHERY = "periphery"


@dataclass(frozen=True)
class RawGraph:
    """Unweighted undirected graph with dense node ids 0..n-1 in arrival order."""

    n: int
    edges: np.ndarray  # (m, 2) int64, each row i < j, rows sorted
    neighbors: tuple  # per-node sorted int64 arrays

    @property
    def built_order(self) -> np.ndarray:
        # ids are assigned in insertion order, so the arrival sequence is 0..n-1
        return np.arange(self.n, dtype=np.int64)

    @property
    def degree(self) -> np.ndarray:
        return np.array([len(nb) for nb in self.neighbors], dtype=np.int64)

    def adjacency(self) -> sp.csr_matrix:
        """0/1 symmetric adjacency in CSR form."""
        i, j = self.edges[:, 0], self.edges[:, 1]
        data = np.ones(2 * len(self.edges))
        mat = sp.coo_matrix(
            (data, (np.concatenate([i, j]), np.concatenate([j, i]))),
            shape=(self.n, self.n),
        )
        return mat.tocsr()


@dataclass(frozen=True)
class FeatureMatrix:
    """Unit-norm node feature rows from a Laplacian eigenbasis.

    ``basis`` holds the unit-column eigenvectors for the k smallest
    eigenvalues; ``rows`` is the same matrix with every row rescaled to unit
    L2 norm, which is the form consumed by the propagation dynamics.
    """

    rows: np.ndarray  # (n, k), each row unit norm
    eigenvalues: np.ndarray | None = None  # (k,) ascending
    basis: np.ndarray | None = None  # (n, k) unit columns, pre row-normalization
    max_residual: float = 0.0  # max_j ||L q_j - lambda_j q_j||_2
    warnings: tuple = ()

    @property
    def k(self) -> int:
        return self.rows.shape[1]

    def __post_init__(self):
        norms = np.linalg.norm(self.rows, axis=1)
        if not np.all(np.abs(norms - 1.0) <= 1e-9):
            raise InvalidParameter("features", "rows must have unit L2 norm")


@dataclass(frozen=True)
class WeightedGraph:
    """Immutable network bundle: topology, features, weights, segments."""

    raw: RawGraph
    features: FeatureMatrix
    edge_weights: np.ndarray  # (m,) aligned with raw.edges
    weights: sp.csr_matrix  # symmetric weighted adjacency
    weighted_degree: np.ndarray  # (n,)
    segments: np.ndarray  # (n,) of {core, intermediate, periphery}
    nbr_weights: tuple  # per-node weight arrays aligned with raw.neighbors
    nbr_rev: tuple = field(repr=False, default=())  # position of v inside each neighbor's list
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.raw.n


def generate_pa(n: int, r: int, rng_seed: int) -> RawGraph:
    """Grow a preferential-attachment graph G(n, r).

    Starts from a complete graph on r+1 nodes; every later arrival attaches
    to r distinct existing nodes drawn without replacement with probability
    proportional to current degree. Deterministic given ``rng_seed``.
    """
    if r < 1:
        raise InvalidParameter("attach", "attachment count must be >= 1")
    if n <= r:
        raise InvalidParameter("nodes", f"need more than attach={r} nodes, got {n}")
    rng = np.random.default_rng(int(rng_seed))

    edges = [(i, j) for i in range(r + 1) for j in range(i + 1, r + 1)]
    degree = np.zeros(n, dtype=np.float64)
    degree[: r + 1] = r

    for v in range(r + 1, n):
        weights = degree[:v].copy()
        targets = []
        for _ in range(r):
            total = weights.sum()
            cum = np.cumsum(weights)
            u = rng.random() * total
            t = int(np.searchsorted(cum, u, side="right"))
            t = min(t, v - 1)
            targets.append(t)
            weights[t] = 0.0
        for t in targets:
            edges.append((t, v))
            degree[t] += 1
        degree[v] = r

    return _finish_raw(n, edges)


def _finish_raw(n: int, edge_pairs) -> RawGraph:
    edges = np.array([(min(a, b), max(a, b)) for a, b in edge_pairs], dtype=np.int64)
    if len(edges):
        order = np.lexsort((edges[:, 1], edges[:, 0]))
        edges = edges[order]
    else:
        edges = edges.reshape(0, 2)
    adj = [[] for _ in range(n)]
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    neighbors = tuple(np.array(sorted(nb), dtype=np.int64) for nb in adj)
    return RawGraph(n=n, edges=edges, neighbors=neighbors)


def component_count(g: RawGraph) -> int:
    ncomp, _ = connected_components(g.adjacency(), directed=False)
    return int(ncomp)


def spectral_embed(g: RawGraph, k: int) -> FeatureMatrix:
    """Node features from the k smallest Laplacian eigenpairs.

    Computes L = D - A for the unweighted adjacency, takes the eigenvectors
    of the k smallest eigenvalues (unit columns), then renormalizes each row
    to unit L2 norm. Eigenvector signs are canonicalized so the entry of
    largest magnitude in each column is positive.
    """
    if k < 1 or k > g.n:
        raise InvalidParameter("embed_dim", f"need 1 <= k <= {g.n}, got {k}")
    warnings = ()
    ncomp = component_count(g)
    if ncomp > 1:
        msg = f"graph has {ncomp} connected components; embedding computed anyway"
        logger.warning(msg)
        warnings = (msg,)

    adj = g.adjacency().toarray()
    lap = np.diag(adj.sum(axis=1)) - adj
    vals, vecs = eigh(lap, subset_by_index=[0, k - 1])

    # deterministic sign convention per column
    for j in range(k):
        col = vecs[:, j]
        pivot = np.argmax(np.abs(col))
        if col[pivot] < 0:
            vecs[:, j] = -col

    residual = float(
        max(np.linalg.norm(lap @ vecs[:, j] - vals[j] * vecs[:, j]) for j in range(k))
    )

    row_norms = np.linalg.norm(vecs, axis=1)
    if np.any(row_norms < 1e-12):
        raise InvalidParameter("embed_dim", "degenerate zero feature row; increase k")
    rows = vecs / row_norms[:, None]
    return FeatureMatrix(
        rows=rows,
        eigenvalues=vals,
        basis=vecs,
        max_residual=residual,
        warnings=warnings,
    )


def segment_nodes(g) -> np.ndarray:
    """Structural segment labels from the unweighted degree ranking.

    Nodes are ranked by descending degree with ties broken by ascending id;
    the top ceil(0.1 n) are core, the bottom ceil(0.1 n) periphery, the rest
    intermediate.
    """
    raw = g.raw if isinstance(g, WeightedGraph) else g
    degree = raw.degree
    n = raw.n
    order = np.lexsort((np.arange(n), -degree))  # descending degree, ascending id
    n_band = int(np.ceil(0.1 * n))
    labels = np.full(n, INTERMEDIATE, dtype="<U12")
    labels[order[:n_band]] = CORE
    labels[order[n - n_band :]] = PERIPHERY
    return labels


def assign_edge_weights(g: RawGraph, f: FeatureMatrix, meta: dict | None = None) -> WeightedGraph:
    """Weight every edge by calibrated feature similarity (1 + x_i . x_j) / 2.

    Non-edges carry weight zero. Also fills weighted degrees, segments and
    the per-node neighbor weight tables used by the simulators.
    """
    if f.rows.shape[0] != g.n:
        raise InvalidParameter("features", f"expected {g.n} rows, got {f.rows.shape[0]}")
    return _build_weighted(g, f, _edge_dot_weights(g, f.rows), meta)


def _edge_dot_weights(g: RawGraph, rows: np.ndarray) -> np.ndarray:
    i, j = g.edges[:, 0], g.edges[:, 1]
    dots = np.einsum("ij,ij->i", rows[i], rows[j])
    return np.clip((1.0 + dots) / 2.0, 0.0, 1.0)


def _build_weighted(g: RawGraph, f: FeatureMatrix, edge_weights: np.ndarray, meta=None) -> WeightedGraph:
    i, j = g.edges[:, 0], g.edges[:, 1]
    mat = sp.coo_matrix(
        (
            np.concatenate([edge_weights, edge_weights]),
            (np.concatenate([i, j]), np.concatenate([j, i])),
        ),
        shape=(g.n, g.n),
    ).tocsr()
    wdeg = np.asarray(mat.sum(axis=1)).ravel()

    # per-node neighbor weight arrays aligned with g.neighbors
    lookup = {}
    for e, (a, b) in enumerate(g.edges):
        lookup[(int(a), int(b))] = edge_weights[e]
    nbr_weights = []
    for v in range(g.n):
        ws = np.array(
            [lookup[(min(v, int(w)), max(v, int(w)))] for w in g.neighbors[v]],
            dtype=np.float64,
        )
        nbr_weights.append(ws)

    # reverse index: position of v inside each neighbor's adjacency list
    pos = {v: {int(w): idx for idx, w in enumerate(g.neighbors[v])} for v in range(g.n)}
    nbr_rev = tuple(
        np.array([pos[int(w)][v] for w in g.neighbors[v]], dtype=np.int64)
        for v in range(g.n)
    )

    return WeightedGraph(
        raw=g,
        features=f,
        edge_weights=edge_weights,
        weights=mat,
        weighted_degree=wdeg,
        segments=segment_nodes(g),
        nbr_weights=tuple(nbr_weights),
        nbr_rev=nbr_rev,
        meta=dict(meta or {}),
    )


def build_graph(n: int, r: int, k: int, seed: int) -> WeightedGraph:
    """Full pipeline: generate, embed, weight."""
    raw = generate_pa(n, r, seed)
    feats = spectral_embed(raw, k)
    return assign_edge_weights(raw, feats, meta={"r": r, "seed": int(seed)})


def diameter(g: RawGraph, chunk: int = 256) -> int:
    """Exact unweighted diameter from all-source BFS distances.

    Raises on disconnected input, where the diameter is undefined.
    """
    adj = g.adjacency()
    best = 0
    for start in range(0, g.n, chunk):
        idx = np.arange(start, min(start + chunk, g.n))
        dist = dijkstra(adj, directed=False, unweighted=True, indices=idx)
        if np.isinf(dist).any():
            raise InvalidParameter("graph", "diameter undefined for disconnected graph")
        best = max(best, int(dist.max()))
    return best


def make_unit_features(rows) -> FeatureMatrix:
    """FeatureMatrix from explicit unit-norm rows (no spectral metadata)."""
    return FeatureMatrix(rows=np.asarray(rows, dtype=np.float64))


def save_graph(g: WeightedGraph, path) -> None:
    """Serialize to the toolkit's JSON graph schema."""
    doc = {
        "n": g.n,
        "r": g.meta.get("r"),
        "seed": g.meta.get("seed"),
        "edges": [[int(a), int(b)] for a, b in g.raw.edges],
        "features": [[float(x) for x in row] for row in g.features.rows],
        "weights": [
            [int(a), int(b), float(w)]
            for (a, b), w in zip(g.raw.edges, g.edge_weights)
        ],
        "segments": [str(s) for s in g.segments],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_graph(path) -> WeightedGraph:
    """Rebuild a WeightedGraph from its JSON document."""
    with open(path) as fh:
        doc = json.load(fh)
    n = int(doc["n"])
    raw = _finish_raw(n, [(int(a), int(b)) for a, b in doc["edges"]])
    feats = make_unit_features(doc["features"])
    wlookup = {(min(a, b), max(a, b)): float(w) for a, b, w in doc["weights"]}
    edge_weights = np.array(
        [wlookup[(int(a), int(b))] for a, b in raw.edges], dtype=np.float64
    )
    g = _build_weighted(raw, feats, edge_weights, meta={"r": doc.get("r"), "seed": doc.get("seed")})
    if "segments" in doc:
        g.segments[:] = np.array(doc["segments"], dtype="<U12")
    return g
