"""K-medoids (PAM) clustering of viewpoints under the Lie-group metric.

BUILD greedily seeds K medoids, then SWAP performs exact best-improvement
local search over all (medoid, non-medoid) exchanges until no swap lowers
the total member-to-medoid cost. Exact cost ties are broken by a seeded
RNG; with generic (distinct) distances the result is independent of input
order up to relabeling.

Pairs whose relative transform has no principal logarithm (rotation angle
at pi) are given a large finite penalty distance and reported with a
warning; such pairs simply never end up in the same cluster.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateLogarithmError
from .geometry import viewpoint_distance

DEFAULT_K = 9
# Stand-in for +inf so that cost arithmetic stays NaN-free.
_PENALTY = 1e18


@dataclass
class ClusterAssignment:
    medoid_indices: np.ndarray  # (K,) indices into the input list
    labels: np.ndarray          # (n,) cluster id in [0, K)
    total_cost: float

    def cluster_sizes(self):
        k = len(self.medoid_indices)
        return np.bincount(self.labels, minlength=k)


def distance_matrix(matrices):
    """Symmetric pairwise viewpoint distances; degenerate pairs penalized."""
    n = len(matrices)
    D = np.zeros((n, n))
    degenerate = 0
    for i in range(n):
        for j in range(i + 1, n):
            try:
                d = viewpoint_distance(matrices[i], matrices[j])
            except DegenerateLogarithmError:
                d = _PENALTY
                degenerate += 1
            D[i, j] = D[j, i] = d
    if degenerate:
        warnings.warn(
            f"{degenerate} viewpoint pair(s) had no principal logarithm; "
            "assigned a penalty distance"
        )
    return D


def _assign(D, medoids):
    """Labels and cost for a fixed medoid set (medoids keep their own label)."""
    cols = D[:, medoids]
    labels = np.argmin(cols, axis=1)
    for k, m in enumerate(medoids):
        labels[m] = k
    cost = float(cols[np.arange(len(D)), labels].sum())
    return labels, cost


def _tiebreak(rng, candidates, values, minimize=True):
    values = np.asarray(values, dtype=float)
    best = values.min() if minimize else values.max()
    pool = [c for c, v in zip(candidates, values) if v == best]
    if len(pool) == 1:
        return pool[0]
    return pool[int(rng.integers(len(pool)))]


def kmedoids_from_distances(D, k, seed=0, max_swaps=10000):
    """PAM on a precomputed distance matrix."""
    n = len(D)
    if not 1 <= k <= n:
        raise ValueError(f"K must be in [1, {n}], got {k}")
    rng = np.random.default_rng(seed)

    # BUILD: first medoid minimizes total distance; each next medoid is the
    # non-medoid giving the largest cost reduction.
    totals = D.sum(axis=1)
    medoids = [_tiebreak(rng, list(range(n)), totals)]
    nearest = D[:, medoids[0]].copy()
    while len(medoids) < k:
        cands = [i for i in range(n) if i not in medoids]
        gains = [np.maximum(nearest - D[:, c], 0.0).sum() for c in cands]
        chosen = _tiebreak(rng, cands, gains, minimize=False)
        medoids.append(chosen)
        nearest = np.minimum(nearest, D[:, chosen])

    # SWAP: exact best-improvement local search.
    medoids = sorted(medoids)
    _, cost = _assign(D, medoids)
    for _ in range(max_swaps):
        best_swap, best_cost = None, cost
        med_arr = np.array(medoids)
        others = np.array([i for i in range(n) if i not in medoids])
        if len(others) == 0:
            break
        swaps, costs = [], []
        for mi, m in enumerate(medoids):
            rest = np.delete(med_arr, mi)
            if len(rest):
                without = D[:, rest].min(axis=1)
            else:
                without = np.full(n, np.inf)
            cand_costs = np.minimum(without[:, None], D[:, others]).sum(axis=0)
            for h, ccost in zip(others, cand_costs):
                swaps.append((m, int(h)))
                costs.append(float(ccost))
        costs = np.asarray(costs)
        idx = int(np.argmin(costs))
        if costs[idx] < best_cost - 1e-12 * max(1.0, abs(best_cost)):
            # Tie-break among equal-best improving swaps.
            best_val = costs[idx]
            pool = [s for s, c in zip(swaps, costs) if c == best_val]
            m, h = pool[int(rng.integers(len(pool)))] if len(pool) > 1 else pool[0]
            medoids = sorted(set(medoids) - {m} | {h})
            _, cost = _assign(D, medoids)
        else:
            break

    medoids = np.array(sorted(medoids))
    labels, cost = _assign(D, medoids)
    return ClusterAssignment(medoids, labels, cost)


def kmedoids(matrices, k=DEFAULT_K, seed=0):
    """Cluster model-view matrices under the viewpoint metric."""
    return kmedoids_from_distances(distance_matrix(matrices), k, seed)


def representative_views(matrices, photo_ids, k=DEFAULT_K, seed=0):
    """Photo ids of cluster medoids, largest cluster first."""
    if len(photo_ids) != len(matrices):
        raise ValueError("photo_ids must align with matrices")
    assignment = kmedoids(matrices, k, seed)
    sizes = assignment.cluster_sizes()
    order = sorted(range(k), key=lambda c: (-sizes[c], assignment.medoid_indices[c]))
    return [photo_ids[assignment.medoid_indices[c]] for c in order]


def save_clusters_csv(assignment: ClusterAssignment, photo_ids, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "cluster", "is_medoid"])
        medoid_set = set(assignment.medoid_indices.tolist())
        for i, pid in enumerate(photo_ids):
            writer.writerow([pid, int(assignment.labels[i]), int(i in medoid_set)])
