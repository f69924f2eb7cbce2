"""Seeded generation of random connectivity and low-overlap stimulus sets.

Connectivity is dense: a recurrent graph or fiber is a float64 weight
matrix whose nonzero entries (all 1.0 initially) mark the edges, each
present independently with probability p. The boolean mask is implicit
as ``weights > 0``; plasticity and homeostasis preserve the zero set, so
the mask never needs separate storage. Memory is n*n doubles per matrix,
which is the right trade at n <= 5000 and p up to 0.5.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class StimulusOverlapError(ValueError):
    """Requested stimulus family cannot satisfy the pairwise overlap bound."""


@dataclass(frozen=True)
class ModelParams:
    """Area-level parameters: n neurons, k-cap size, edge density p, plasticity beta."""

    n: int
    k: int
    p: float
    beta: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be positive, got {self.n}")
        if not 1 <= self.k <= self.n:
            raise ValueError(f"k must satisfy 1 <= k <= n, got k={self.k}, n={self.n}")
        if not 0.0 < self.p < 1.0:
            raise ValueError(f"p must lie in (0, 1), got {self.p}")
        if self.beta < 0.0:
            raise ValueError(f"beta must be nonnegative, got {self.beta}")


def gen_recurrent(params: ModelParams, rng: np.random.Generator) -> np.ndarray:
    """Recurrent weight matrix: Bernoulli(p) directed edges, weight 1, no self-edges.

    Self-edges are excluded by convention (a neuron never synapses onto
    itself); entry [j, i] is the weight of the synapse j -> i.
    """
    n = params.n
    weights = (rng.random((n, n)) < params.p).astype(np.float64)
    np.fill_diagonal(weights, 0.0)
    return weights


def gen_fiber(n_src: int, n_dst: int, p: float, rng: np.random.Generator) -> np.ndarray:
    """Bipartite fiber weights (n_src x n_dst): Bernoulli(p) edges of weight 1."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    return (rng.random((n_src, n_dst)) < p).astype(np.float64)


def sample_stimuli(
    n: int,
    k: int,
    count: int,
    delta: int,
    rng: np.random.Generator,
    *,
    retry_budget: int = 1000,
) -> list[np.ndarray]:
    """Sample ``count`` k-subsets of range(n) with pairwise overlap <= delta.

    When the sets fit disjointly (k*count <= n) they are carved from one
    permutation, which satisfies any delta. Otherwise each set is drawn
    by rejection against all accepted sets, up to ``retry_budget``
    attempts per set; exhaustion raises StimulusOverlapError. delta = 0
    with k*count > n is reported as infeasible immediately.
    """
    if count < 0:
        raise ValueError(f"count must be nonnegative, got {count}")
    if delta < 0:
        raise ValueError(f"delta must be nonnegative, got {delta}")
    if not 1 <= k <= n:
        raise ValueError(f"k must satisfy 1 <= k <= n, got k={k}, n={n}")
    if count == 0:
        return []

    if k * count <= n:
        perm = rng.permutation(n)
        return [np.sort(perm[i * k : (i + 1) * k]).astype(np.int64) for i in range(count)]

    if delta == 0:
        raise StimulusOverlapError(
            f"{count} disjoint sets of size {k} do not fit in {n} neurons"
        )

    accepted: list[np.ndarray] = []
    for index in range(count):
        for _ in range(retry_budget):
            cand = np.sort(rng.choice(n, size=k, replace=False)).astype(np.int64)
            if all(
                np.intersect1d(cand, prev, assume_unique=True).size <= delta
                for prev in accepted
            ):
                accepted.append(cand)
                break
        else:
            raise StimulusOverlapError(
                f"retry budget {retry_budget} exhausted at set {index + 1}/{count} "
                f"(n={n}, k={k}, delta={delta})"
            )
    return accepted


def max_pairwise_overlap(sets: list[np.ndarray]) -> int:
    """Largest |S_i ∩ S_j| over distinct pairs; 0 for fewer than two sets."""
    best = 0
    for i in range(len(sets)):
        for j in range(i + 1, len(sets)):
            best = max(best, np.intersect1d(sets[i], sets[j], assume_unique=True).size)
    return best
