"""Exact brute-force ground truth over small binary feature-vector distributions.

This module is the test-side counterweight to the approximate operators:
it enumerates full joint distributions over binary known/unknown vectors
(dense, bitmask-indexed, so dimension is capped at 20) and evaluates the
per-dimension mean-field objectives whose closed-form minimizers are the
forward/backward update rules.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence

import numpy as np

__all__ = [
    "MAX_DIM",
    "DiscreteDistribution",
    "exact_entail_prob",
    "factorize",
    "bound_forward",
    "bound_backward",
]

MAX_DIM = 20

_PROB_TOL = 1e-12


class DiscreteDistribution:
    """A distribution over binary vectors of a fixed dimension.

    Vectors are indexed as integer bitmasks: bit k of the index is
    component k of the vector (1 = feature known).  ``probs`` is the
    dense table of length 2**dim.
    """

    __slots__ = ("dim", "probs")

    def __init__(self, dim: int, probs):
        if not 1 <= dim <= MAX_DIM:
            raise ValueError(f"dim must be in [1, {MAX_DIM}], got {dim}")
        probs = np.asarray(probs, dtype=np.float64)
        if probs.shape != (1 << dim,):
            raise ValueError(
                f"probs must have length 2**{dim} = {1 << dim}, got shape {probs.shape}"
            )
        if np.any(probs < 0):
            raise ValueError("probabilities must be non-negative")
        total = probs.sum()
        if abs(total - 1.0) > _PROB_TOL:
            raise ValueError(f"probabilities must sum to 1 (got {total!r})")
        self.dim = dim
        self.probs = probs

    @classmethod
    def from_support(cls, dim: int, support: Mapping) -> "DiscreteDistribution":
        """Build from {bit-tuple or bitmask: probability}; omitted states get 0."""
        probs = np.zeros(1 << dim)
        for state, p in support.items():
            if isinstance(state, (tuple, list)):
                if len(state) != dim:
                    raise ValueError(f"state {state} does not have {dim} bits")
                mask = sum(1 << k for k, bit in enumerate(state) if bit)
            else:
                mask = int(state)
            probs[mask] += p
        return cls(dim, probs)

    @classmethod
    def point_mass(cls, bits: Sequence[int]) -> "DiscreteDistribution":
        return cls.from_support(len(bits), {tuple(bits): 1.0})

    @classmethod
    def factorized(cls, marginals) -> "DiscreteDistribution":
        """Product distribution with P(x_k = 1) = marginals[k]."""
        marginals = np.asarray(marginals, dtype=np.float64)
        if np.any((marginals < 0) | (marginals > 1)):
            raise ValueError("marginals must lie in [0, 1]")
        probs = np.ones(1)
        for q in marginals:  # dim k doubles the table at bit position k
            probs = np.concatenate([probs * (1.0 - q), probs * q])
        return cls(len(marginals), probs)


def exact_entail_prob(px: DiscreteDistribution, py: DiscreteDistribution) -> float:
    """Exact P(y => x) = sum_x sum_y P(x) P(y) [knowns(x) subset of knowns(y)].

    The double sum is evaluated exactly by first accumulating, for every
    mask y, the total P(x) mass on subsets of y (a sum-over-subsets pass,
    one in-place fold per bit), then weighting by P(y).
    """
    if px.dim != py.dim:
        raise ValueError(f"dimension mismatch: {px.dim} vs {py.dim}")
    dim = px.dim
    covered = px.probs.reshape((2,) * dim).copy()
    for axis in range(dim):
        hi = [slice(None)] * dim
        lo = [slice(None)] * dim
        hi[axis], lo[axis] = 1, 0
        covered[tuple(hi)] += covered[tuple(lo)]
    return float(np.dot(py.probs, covered.reshape(-1)))


def factorize(dist: DiscreteDistribution) -> np.ndarray:
    """Per-dimension marginals P(x_k = 1) of an arbitrary joint."""
    masks = np.arange(1 << dist.dim)
    return np.array(
        [dist.probs[(masks >> k) & 1 == 1].sum() for k in range(dist.dim)]
    )


def bound_forward(q_x, q_y, theta_x):
    """Per-dimension forward-inference objective, as a function of q_x.

    q_x log q_x + (1-q_x) log(1-q_x) - q_x theta_x - q_x log q_y: the
    negative entropy plus prior and entailment terms that depend on q_x
    (additive constants in the full bound are dropped).  Minimized at
    q_x = sigma(theta_x + log q_y), which is the forward update rule.
    """
    q_x = np.asarray(q_x, dtype=np.float64)
    q_y = np.asarray(q_y, dtype=np.float64)
    if np.any((q_x <= 0) | (q_x >= 1)):
        raise ValueError("q_x must lie strictly inside (0, 1)")
    if np.any((q_y <= 0) | (q_y > 1)):
        raise ValueError("q_y must lie in (0, 1]")
    out = (
        q_x * np.log(q_x)
        + (1.0 - q_x) * np.log1p(-q_x)
        - q_x * np.asarray(theta_x, dtype=np.float64)
        - q_x * np.log(q_y)
    )
    return float(out) if out.ndim == 0 else out


def bound_backward(q_y, q_x, theta_y):
    """Per-dimension backward-inference objective, as a function of q_y.

    q_y log q_y + (1-q_y) log(1-q_y) - q_y theta_y - (1-q_y) log(1-q_x).
    Minimized at q_y = sigma(theta_y - log(1-q_x)), the backward update.
    """
    q_y = np.asarray(q_y, dtype=np.float64)
    q_x = np.asarray(q_x, dtype=np.float64)
    if np.any((q_y <= 0) | (q_y >= 1)):
        raise ValueError("q_y must lie strictly inside (0, 1)")
    if np.any((q_x < 0) | (q_x >= 1)):
        raise ValueError("q_x must lie in [0, 1)")
    out = (
        q_y * np.log(q_y)
        + (1.0 - q_y) * np.log1p(-q_y)
        - q_y * np.asarray(theta_y, dtype=np.float64)
        - (1.0 - q_y) * np.log1p(-q_x)
    )
    return float(out) if out.ndim == 0 else out
