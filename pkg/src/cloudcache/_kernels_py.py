"""Pure-numpy fallback for the Monte Carlo hot-path kernels.

The compiled twin (cloudcache._kernels) implements the same contracts
with scalar C loops.  ``serve_powers`` is bit-identical across backends;
the distance/interference pipelines may differ in the last floating-point
digits (numpy's vectorized transcendentals round differently than libm),
which is harmless for the estimators and documented in the backend
module.
"""

from __future__ import annotations

import numpy as np


def serve_powers(
    power: np.ndarray,
    dist: np.ndarray,
    offsets: np.ndarray,
    k_mat: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Serving received power per (trial, file) for both selection rules.

    ``power`` and ``dist`` hold per-candidate received powers and
    distances, concatenated across trials with boundaries in ``offsets``.
    ``k_mat[t, i]`` is the number of candidates of trial ``t`` caching
    file ``i``; the first ``k`` candidates of the segment are that file's
    caching set.  Row outputs are 0 where ``k`` is 0 (no cache hit
    possible).  Closest selection serves from the minimum-distance
    candidate, best selection from the maximum-power one.
    """
    trials = offsets.size - 1
    files = k_mat.shape[1]
    closest = np.zeros((trials, files))
    best = np.zeros((trials, files))
    for t in range(trials):
        a, b = offsets[t], offsets[t + 1]
        n = b - a
        if n == 0:
            continue
        d = dist[a:b]
        p = power[a:b]
        prefix_min = np.minimum.accumulate(d)
        is_new_min = np.empty(n, dtype=bool)
        is_new_min[0] = True
        is_new_min[1:] = d[1:] < prefix_min[:-1]
        argmin_prefix = np.maximum.accumulate(
            np.where(is_new_min, np.arange(n), 0)
        )
        closest_prefix = p[argmin_prefix]
        best_prefix = np.maximum.accumulate(p)
        k = k_mat[t]
        nz = k > 0
        closest[t, nz] = closest_prefix[k[nz] - 1]
        best[t, nz] = best_prefix[k[nz] - 1]
    return closest, best


def disk_distances(
    centers: np.ndarray, u1: np.ndarray, u2: np.ndarray, D: float
) -> np.ndarray:
    """Distances to the origin of points uniform on radius-D disks.

    ``centers`` holds each disk center's distance from the origin; ``u1``
    and ``u2`` are U(0,1) draws for the radial and angular coordinates.
    """
    r = D * np.sqrt(u1)
    return np.sqrt(
        centers * centers
        + r * r
        + 2.0 * centers * r * np.cos(2.0 * np.pi * u2)
    )


def cloud_interference(
    x: np.ndarray,
    clouds_per_trial: np.ndarray,
    active: np.ndarray,
    u1: np.ndarray,
    u2: np.ndarray,
    fades: np.ndarray,
    P: float,
    D: float,
    alpha_o: float,
) -> np.ndarray:
    """Per-trial interference from clouds needing no guard-disk rejection.

    ``x`` lists cloud-center distances grouped by trial
    (``clouds_per_trial`` gives the group sizes), ``active`` the number of
    transmitting nodes per cloud; ``u1``/``u2``/``fades`` hold one draw
    triple per node in cloud order.  Adds P * fade * y^(-alpha_o) over a
    cloud's nodes, where y is the node's distance to the origin.
    """
    trials = clouds_per_trial.size
    node_trial = np.repeat(
        np.repeat(np.arange(trials), clouds_per_trial), active
    )
    x_node = np.repeat(x, active)
    y = disk_distances(x_node, u1, u2, D)
    contrib = P * fades * y**-alpha_o
    return np.bincount(node_trial, weights=contrib, minlength=trials)
