"""Closed-form incubation probabilities and cascade statistics.

The incubation scenario is a seed node attached to a clique through a single
bridge node: the bridge's per-step activation probability has the closed form
gamma * (alpha * (1 + dot) / 2 + beta / k), and its chance of activating
within a cooling window of epsilon steps is 1 - (1 - p)^epsilon. These two
formulas are validated against simulation elsewhere in the suite.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import InvalidParameter
from .netgen import FeatureMatrix, _build_weighted, _finish_raw
from .updyn import CascadeRecord, Propagation

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class IncubationScenario:
    """Bridge-into-clique configuration for the incubation formulas."""

    k: int
    dot: float
    alpha: float = 0.5
    beta: float = 0.5
    gamma: float = 1.0
    epsilon: int = 1

    def __post_init__(self):
        if self.k < 2:
            raise InvalidParameter("k", f"clique size must be >= 2, got {self.k}")
        if not -1.0 <= self.dot <= 1.0:
            raise InvalidParameter("dot", f"alignment must be in [-1,1], got {self.dot}")
        if self.epsilon < 1:
            raise InvalidParameter("epsilon", "cooling period must be >= 1")


def incubation_step_prob(s: IncubationScenario) -> float:
    """Per-step activation probability of the bridge node, global term ~ 0."""
    raw = s.gamma * (s.alpha * (1.0 + s.dot) / 2.0 + s.beta / s.k)
    if raw < 0.0 or raw > 1.0:
        logger.warning("incubation step probability %.4f outside [0,1]; clamped", raw)
    return float(np.clip(raw, 0.0, 1.0))


def incubation_eps_prob(s: IncubationScenario) -> float:
    """Probability the bridge activates within the epsilon-step window."""
    p = incubation_step_prob(s)
    return 1.0 - (1.0 - p) ** s.epsilon


def make_clique_scenario_graph(k: int, dot: float = 1.0):
    """Unweighted clique-plus-pendant fixture for incubation experiments.

    Nodes: 0 is the seed, 1 is the bridge, 2..k complete the clique over
    {1..k}. All edge weights are 1. Features are 2-d unit vectors chosen so
    the bridge's alignment with the returned propagation equals ``dot`` while
    the other clique members are antipodal to it (inert under pure affinity).
    Returns (graph, propagation).
    """
    if k < 2:
        raise InvalidParameter("k", f"clique size must be >= 2, got {k}")
    edges = [(0, 1)]
    for i in range(1, k + 1):
        for j in range(i + 1, k + 1):
            edges.append((i, j))
    raw = _finish_raw(k + 1, edges)

    rows = np.zeros((k + 1, 2))
    rows[0] = (1.0, 0.0)  # seed, aligned
    rows[1] = (dot, np.sqrt(max(0.0, 1.0 - dot * dot)))
    rows[2:] = (-1.0, 0.0)  # rest of the clique, anti-aligned
    feats = FeatureMatrix(rows=rows)
    weights = np.ones(len(raw.edges))
    graph = _build_weighted(raw, feats, weights, meta={"scenario": "clique", "k": k})
    return graph, Propagation(vec=np.array([1.0, 0.0]))


def detect_virality(rec: CascadeRecord, viral_fraction: float = 0.5) -> bool:
    """True when the final spread reaches the configured network fraction."""
    return rec.final_spread >= viral_fraction * rec.n


def ttv_from_new_per_step(new_per_step, n: int, viral_fraction: float = 0.5):
    cum = np.cumsum(np.asarray(new_per_step))
    hits = np.flatnonzero(cum >= viral_fraction * n)
    return int(hits[0]) if len(hits) else None


def time_to_virality(rec: CascadeRecord, viral_fraction: float = 0.5):
    """First step at which cumulative activations reach the viral threshold,
    or None if the run never gets there. Step 0 counts the seed set."""
    return ttv_from_new_per_step(rec.new_per_step, rec.n, viral_fraction)


def tipping_point(rec: CascadeRecord):
    """Step of the largest adopter wave (earliest on ties).

    None when nothing beyond the seed set ever activated, in which case no
    spike exists.
    """
    waves = np.asarray(rec.new_per_step)
    if waves[1:].sum() == 0:
        return None
    return int(np.argmax(waves))


def spread_histogram(recs, bins):
    """Histogram (counts, edges) of final spreads across records."""
    spreads = np.array([r.final_spread for r in recs])
    counts, edges = np.histogram(spreads, bins=bins)
    return counts, edges


def spearman(xs, ys) -> float:
    """Spearman rank correlation with average ranks on ties."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if len(xs) != len(ys):
        raise InvalidParameter("series", "inputs must have equal length")
    if len(xs) < 3:
        raise InvalidParameter("series", "need at least 3 points")
    if np.all(xs == xs[0]) or np.all(ys == ys[0]):
        raise InvalidParameter("series", "constant input; rank correlation undefined")
    rho, _ = stats.spearmanr(xs, ys)
    return float(rho)


def kendall_tau(xs, ys) -> float:
    """Kendall tau-b; NaN pairs are dropped first (e.g. empty-cell sweep means)."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    keep = ~(np.isnan(xs) | np.isnan(ys))
    xs, ys = xs[keep], ys[keep]
    if len(xs) < 2:
        raise InvalidParameter("series", "need at least 2 finite points")
    tau, _ = stats.kendalltau(xs, ys)
    return float(tau)
