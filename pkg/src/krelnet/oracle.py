"""Exact unreliability by full enumeration of the 2^m edge-state space.

This is the ground truth everything else is checked against. All arithmetic
on probabilities is exact; every Pr(X) has a power-of-two denominator, so
weights are carried as integers over the common denominator 2^B.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InvalidArgument, ResourceLimitError
from .graph_model import (NetworkInstance, evaluate_structure, evaluate_structure_batch,
                          realization_probability)

DEFAULT_EDGE_LIMIT = 24
SELF_CHECK_LIMIT = 12
_CHUNK_BITS = 14


@dataclass(frozen=True)
class ExactResult:
    unreliability: Fraction
    failure_state_count: int | None  # only meaningful when every p_e = 1/2
    states_enumerated: int

    @property
    def reliability(self) -> Fraction:
        return 1 - self.unreliability


def _check_limit(instance, limit):
    if instance.m > limit:
        raise ResourceLimitError(
            f"exact enumeration over {instance.m} edges exceeds the limit of {limit}")


def _state_block(m_low: int) -> np.ndarray:
    """All 2^m_low bit patterns as a (2^m_low, m_low) bool array; bit j = edge j."""
    codes = np.arange(1 << m_low, dtype=np.int64)
    return ((codes[:, None] >> np.arange(m_low)) & 1).astype(bool)


def _enumerate(instance: NetworkInstance):
    """Return (failure count, exact weight numerator) over the whole state space.

    Edge states are split into high bits, looped in Python, and low bits,
    evaluated as one vectorised block. The common denominator is
    2^(sum of edge bits).
    """
    m = instance.m
    m_low = min(m, _CHUNK_BITS)
    low = _state_block(m_low)
    # integer weight of each edge state: failed -> numerator, up -> 2^b - numerator
    fail_w = [e.p.numerator for e in instance.edges]
    up_w = [e.p.denominator - e.p.numerator for e in instance.edges]

    low_weights = np.empty(len(low), dtype=object)
    for i, row in enumerate(low):
        w = 1
        for j in range(m_low):
            w *= up_w[j] if row[j] else fail_w[j]
        low_weights[i] = w

    high = np.zeros((len(low), m - m_low), dtype=bool)
    failures = 0
    total = 0
    for hi_bits in itertools.product((False, True), repeat=m - m_low):
        hi_w = 1
        for j, up in enumerate(hi_bits, start=m_low):
            hi_w *= up_w[j] if up else fail_w[j]
        high[:] = hi_bits
        states = np.concatenate([low, high], axis=1)
        unsafe = ~evaluate_structure_batch(instance, states)
        failures += int(unsafe.sum())
        total += hi_w * int(low_weights[unsafe].sum())
    return failures, total


def exact_unreliability(instance: NetworkInstance, limit: int = DEFAULT_EDGE_LIMIT,
                        self_check: bool = False) -> ExactResult:
    """u = sum over unsafe X of Pr(X), as an exact fraction.

    With ``self_check`` (only for m <= 12) the vectorised result is compared
    against a naive per-state BFS evaluation.
    """
    _check_limit(instance, limit)
    failures, weight = _enumerate(instance)
    denom = 1 << sum(e.p.bits for e in instance.edges)
    u = Fraction(weight, denom)
    result = ExactResult(u, failures if instance.is_uniform_half() else None,
                         1 << instance.m)
    if self_check:
        naive = naive_unreliability(instance)
        if naive != result:
            raise AssertionError(f"self-check mismatch: {naive} != {result}")
    return result


def naive_unreliability(instance: NetworkInstance) -> ExactResult:
    """Reference enumeration: one BFS and one exact product per state."""
    if instance.m > SELF_CHECK_LIMIT:
        raise ResourceLimitError(
            f"naive enumeration is capped at {SELF_CHECK_LIMIT} edges")
    u = Fraction(0)
    failures = 0
    for x in itertools.product((0, 1), repeat=instance.m):
        if not evaluate_structure(instance, x):
            failures += 1
            u += realization_probability(instance, x)
    return ExactResult(u, failures if instance.is_uniform_half() else None,
                       1 << instance.m)


def enumerate_failure_states(instance: NetworkInstance,
                             limit: int = DEFAULT_EDGE_LIMIT) -> int:
    """|Omega_f| for an instance whose edges all fail with probability 1/2."""
    if not instance.is_uniform_half():
        raise InvalidArgument("failure-state counting needs every p_e = 1/2")
    _check_limit(instance, limit)
    failures, _ = _enumerate(instance)
    return failures
