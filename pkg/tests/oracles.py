"""Independent brute-force oracles used by the test suite.

Everything here recomputes model quantities from first principles (explicit
sums over neighbors, full enumeration of Bernoulli outcome trees) without
touching the vectorized simulation path it is checking.
"""

import itertools
from collections import defaultdict

import numpy as np


def naive_activation_prob(g, active: frozenset, v: int, c_vec, params) -> float:
    """Eq.-by-eq per-node activation probability, plain python sums."""
    x_v = g.features.rows[v]
    aff = (1.0 + float(np.dot(c_vec, x_v))) / 2.0
    num = 0.0
    den = 0.0
    for w, wt in zip(g.raw.neighbors[v], g.nbr_weights[v]):
        den += wt
        if int(w) in active:
            num += wt
        else:
            num -= wt
    li = (1.0 + num / den) / 2.0
    gi = len(active) / g.n
    raw = params.gamma * (params.alpha * aff + params.beta * li
                          + (1.0 - params.alpha - params.beta) * gi)
    return min(1.0, max(0.0, raw))


def eligible_nodes(g, active: frozenset, require_contact: bool):
    out = []
    for v in range(g.n):
        if v in active:
            continue
        if require_contact and not any(int(w) in active for w in g.raw.neighbors[v]):
            continue
        out.append(v)
    return out


def enumerate_spread_distribution(g, c_vec, seeds, params) -> dict:
    """Exact distribution of the final spread via outcome-tree enumeration.

    Walks every Bernoulli outcome sequence of the synchronous process,
    applying the same cooling-period and step-cap termination rules as the
    simulator. Exponential in graph size; only for tiny fixtures.
    """
    max_steps = params.resolve_max_steps(g.n)
    dist = defaultdict(float)

    def recurse(active: frozenset, stable: int, steps: int, prob: float):
        if stable >= params.epsilon or steps >= max_steps:
            dist[len(active)] += prob
            return
        elig = eligible_nodes(g, active, params.require_contact)
        if not elig:
            recurse(active, stable + 1, steps + 1, prob)
            return
        probs = [naive_activation_prob(g, active, v, c_vec, params) for v in elig]
        for outcome in itertools.product([0, 1], repeat=len(elig)):
            p_branch = prob
            for flag, p_v in zip(outcome, probs):
                p_branch *= p_v if flag else (1.0 - p_v)
            if p_branch == 0.0:
                continue
            newly = [v for flag, v in zip(outcome, elig) if flag]
            nxt = active | frozenset(newly)
            recurse(nxt, 0 if newly else stable + 1, steps + 1, p_branch)

    recurse(frozenset(int(s) for s in seeds), 0, 0, 1.0)
    return dict(dist)


def total_variation(dist_a: dict, dist_b: dict) -> float:
    keys = set(dist_a) | set(dist_b)
    return 0.5 * sum(abs(dist_a.get(k, 0.0) - dist_b.get(k, 0.0)) for k in keys)


def empirical_spread_distribution(spreads) -> dict:
    spreads = np.asarray(spreads)
    vals, counts = np.unique(spreads, return_counts=True)
    return {int(v): c / len(spreads) for v, c in zip(vals, counts)}
