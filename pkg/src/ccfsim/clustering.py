"""Channel-correlation AP clustering and per-user serving set selection.

APs are compared through the normalized inner product of their stacked
channel vectors (one LK-vector per AP); the dissimilarity D_mn = 1 - |rho_mn|
feeds bottom-up agglomerative clustering. A user is served by the whole
cluster containing its strongest AP (by large-scale gain).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)


def stack_ap_channel(g: np.ndarray, m: int) -> np.ndarray:
    """Collective channel of AP m: [g_m1; g_m2; ...; g_mK], length L*K."""
    return g[m].reshape(-1)


def correlation(g_m: np.ndarray, g_n: np.ndarray) -> complex:
    """Normalized inner product g_m^H g_n / (|g_m| |g_n|); 0 if either vector is zero."""
    norm_m = np.linalg.norm(g_m)
    norm_n = np.linalg.norm(g_n)
    if norm_m == 0.0 or norm_n == 0.0:
        return 0.0 + 0.0j
    return complex(np.vdot(g_m, g_n) / (norm_m * norm_n))


def correlation_matrix(g: np.ndarray) -> np.ndarray:
    """Pairwise AP channel correlations, (M, M) complex with unit diagonal."""
    m = g.shape[0]
    stacked = g.reshape(m, -1)
    norms = np.linalg.norm(stacked, axis=1)
    gram = stacked @ stacked.conj().T
    degenerate = norms == 0.0
    if degenerate.any():
        logger.warning("correlation_matrix: %d AP(s) with zero channel energy", degenerate.sum())
    safe = np.where(degenerate, 1.0, norms)
    rho = gram / np.outer(safe, safe)
    rho[degenerate, :] = 0.0
    rho[:, degenerate] = 0.0
    np.fill_diagonal(rho, 1.0)
    return rho


def distance_matrix(rho: np.ndarray) -> np.ndarray:
    """Dissimilarity D_mn = 1 - |rho_mn|, clipped to [0, 1] with a zero diagonal."""
    d = 1.0 - np.abs(rho)
    d = np.clip(d, 0.0, 1.0)
    d = 0.5 * (d + d.T)
    np.fill_diagonal(d, 0.0)
    return d


@dataclass(frozen=True)
class Dendrogram:
    """Ordered merge list; entry (a, b, height) joins cluster ids a and b.

    Leaves are ids 0..M-1; the i-th merge creates id M+i (scipy convention).
    """

    merges: tuple[tuple[int, int, float], ...]


def hierarchical_cluster(d: np.ndarray, threshold: float, linkage: str = "average"):
    """Agglomerate APs bottom-up and cut the dendrogram at ``threshold``.

    Returns (Dendrogram, partition) where the partition is a list of AP index
    lists: two APs share a part iff they were joined at height <= threshold.
    Ties in the closest-pair search resolve to the lexicographically smallest
    slot pair, so results are deterministic.
    """
    if linkage not in ("average", "single", "complete"):
        raise ValueError(f"unknown linkage {linkage!r}")
    m = d.shape[0]
    work = np.array(d, dtype=float)
    np.fill_diagonal(work, np.inf)
    ids = list(range(m))
    sizes = np.ones(m)
    active = np.ones(m, dtype=bool)
    merges = []
    next_id = m
    for _ in range(m - 1):
        masked = np.where(active[:, None] & active[None, :], work, np.inf)
        flat = int(np.argmin(masked))          # row-major scan: smallest (i, j) wins ties
        i, j = divmod(flat, m)
        if i > j:
            i, j = j, i
        height = float(work[i, j])
        merges.append((ids[i], ids[j], height))
        row_i, row_j = work[i, :], work[j, :]
        if linkage == "average":
            merged = (sizes[i] * row_i + sizes[j] * row_j) / (sizes[i] + sizes[j])
        elif linkage == "single":
            merged = np.minimum(row_i, row_j)
        else:
            merged = np.maximum(row_i, row_j)
        work[i, :] = merged
        work[:, i] = merged
        work[i, i] = np.inf
        work[j, :] = np.inf
        work[:, j] = np.inf
        sizes[i] += sizes[j]
        active[j] = False
        ids[i] = next_id
        next_id += 1
    dendrogram = Dendrogram(merges=tuple(merges))
    return dendrogram, cut_dendrogram(dendrogram, m, threshold)


def cut_dendrogram(dendrogram: Dendrogram, num_leaves: int, threshold: float):
    """Partition implied by applying every merge of height <= threshold."""
    parent = list(range(num_leaves))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    rep = {i: i for i in range(num_leaves)}    # cluster id -> one member leaf
    next_id = num_leaves
    for a, b, height in dendrogram.merges:
        leaf_a, leaf_b = rep[a], rep[b]
        rep[next_id] = leaf_a
        next_id += 1
        if height <= threshold:
            parent[find(leaf_b)] = find(leaf_a)
    groups = {}
    for leaf in range(num_leaves):
        groups.setdefault(find(leaf), []).append(leaf)
    return sorted((sorted(members) for members in groups.values()), key=lambda part: part[0])


def select_serving_cluster(k: int, partition, beta: np.ndarray, score: str = "max"):
    """Serving set C_k: the partition cell scoring highest for user k.

    The score of a cell is the max (or sum) of beta_mk over its members; ties
    go to the lower cell index.
    """
    if score not in ("max", "sum"):
        raise ValueError(f"unknown cluster score {score!r}")
    reducer = np.max if score == "max" else np.sum
    scores = np.array([reducer(beta[cell, k]) for cell in partition])
    return list(partition[int(np.argmax(scores))])


def build_association_matrix(serving_sets, num_aps: int) -> np.ndarray:
    """Binary B with B_mk = 1 iff AP m serves user k; every user needs a server."""
    b = np.zeros((num_aps, len(serving_sets)), dtype=int)
    for k, cell in enumerate(serving_sets):
        if len(cell) == 0:
            raise ValueError(f"user {k} has an empty serving set")
        b[list(cell), k] = 1
    return b


def cluster_association(g, beta, options):
    """Full proposed pipeline: channels -> correlation -> clusters -> B.

    Returns (association matrix, Dendrogram) so callers can dump the merge
    list for debugging.
    """
    rho = correlation_matrix(g)
    d = distance_matrix(rho)
    dendrogram, partition = hierarchical_cluster(d, options.threshold, options.linkage)
    serving = [
        select_serving_cluster(k, partition, beta, options.score)
        for k in range(beta.shape[1])
    ]
    return build_association_matrix(serving, beta.shape[0]), dendrogram
