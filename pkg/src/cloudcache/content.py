"""Popularity distributions and probabilistic cache placement.

A library of N files carries request probabilities sorted from most to
least popular.  A cache policy assigns each file an independent caching
probability per node, constrained so the expected number of cached files
fits the per-node memory budget.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_BUDGET_SLACK = 1e-9


@dataclass(frozen=True)
class PopularityProfile:
    """Request probabilities q, sorted nonincreasing, summing to one."""

    q: np.ndarray
    gamma: float | None = None

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        object.__setattr__(self, "q", q)
        if q.ndim != 1 or q.size == 0:
            raise ValueError("popularity vector must be a nonempty 1-D array")
        if np.any(q < 0):
            raise ValueError("request probabilities must be nonnegative")
        if abs(q.sum() - 1.0) > 1e-12:
            raise ValueError(f"request probabilities sum to {q.sum()}, not 1")
        if np.any(np.diff(q) > 1e-15):
            raise ValueError("request probabilities must be nonincreasing")

    @property
    def N(self) -> int:
        return self.q.size


@dataclass(frozen=True)
class CachePolicy:
    """Per-file caching probabilities under a memory budget of N_c files."""

    p: np.ndarray
    N_c: int = field(default=0)

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        object.__setattr__(self, "p", p)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("cache probability vector must be a nonempty 1-D array")
        if np.any(p < 0) or np.any(p > 1):
            raise ValueError("cache probabilities must lie in [0, 1]")
        if p.sum() > self.N_c + _BUDGET_SLACK:
            raise ValueError(
                f"cache probabilities sum to {p.sum()}, exceeding budget {self.N_c}"
            )

    @property
    def N(self) -> int:
        return self.p.size


def zipf_profile(N: int, gamma: float) -> PopularityProfile:
    """Zipf popularity: q_i proportional to i^(-gamma), i = 1..N."""
    if N < 1:
        raise ValueError(f"library size must be >= 1, got {N}")
    if gamma < 0:
        raise ValueError(f"skewness must be nonnegative, got {gamma}")
    ranks = np.arange(1, N + 1, dtype=float)
    weights = ranks**-gamma
    return PopularityProfile(q=weights / weights.sum(), gamma=gamma)


def most_popular_policy(profile: PopularityProfile, N_c: int) -> CachePolicy:
    """Deterministically cache the N_c most popular files everywhere."""
    if N_c > profile.N:
        raise ValueError(f"memory size {N_c} exceeds library size {profile.N}")
    if N_c < 0:
        raise ValueError(f"memory size must be nonnegative, got {N_c}")
    p = np.zeros(profile.N)
    p[:N_c] = 1.0
    return CachePolicy(p=p, N_c=N_c)


def sample_cache_contents(policy: CachePolicy, rng: np.random.Generator) -> set[int]:
    """One node's cached file indices: independent Bernoulli(p_i) per file.

    The budget holds in expectation only; individual draws may store more
    or fewer than N_c files, matching the independent-thinning model the
    analysis assumes.
    """
    draws = rng.random(policy.N) < policy.p
    return set(np.flatnonzero(draws).tolist())
