"""Shared oracles for the exact (enumeration-based) checks.

The helpers here deliberately avoid the package's own kernels wherever they
serve as an independent oracle: beta-binomial masses come from
scipy.stats.betabinom, probabilities are exact fractions.
"""

from fractions import Fraction

import numpy as np
import pytest

from worcs import BoundedCsState, PprState, enumerate_orderings


def ppr_ratio_at(n, a, b, t, s, n_plus):
    """Package ratio at an arbitrary (t, s) history."""
    st = PprState(n, a, b, track_intersection=False)
    st.t, st.s = t, s
    return st.ratio(n_plus)


def reachable_binary_histories(n, n_plus):
    """All (t, s) pairs a stream from the (n, n_plus) urn can visit."""
    out = []
    for t in range(n):
        for s in range(max(0, t - (n - n_plus)), min(t, n_plus) + 1):
            out.append((t, s))
    return out


def walk_bounded_prefixes(values):
    """Yield (prefix, remaining multiset) over all orderings of `values`.

    Items are distinguishable: a value appearing k times contributes k
    branches with conditional probability k/len(remaining) merged into one
    (the processes only see values).
    """
    values = tuple(values)

    def rec(prefix, remaining):
        yield prefix, remaining
        if not remaining:
            return
        seen = set()
        for i, v in enumerate(remaining):
            if v in seen:
                continue
            seen.add(v)
            yield from rec(prefix + (v,), remaining[:i] + remaining[i + 1:])

    yield from rec((), values)


def replay_bounded(values_prefix, n_pop, lower, upper, alpha, schedule,
                   method="hoeffding"):
    st = BoundedCsState(n_pop, lower, upper, alpha, schedule, method=method)
    for v in values_prefix:
        st.update(v)
    return st


def exact_ordering_expectation(spec, fn):
    """Sum fn(ordering) weighted by exact ordering probabilities."""
    total = Fraction(0)
    acc = 0.0
    for ordering, p in enumerate_orderings(spec):
        total += p
        acc += float(p) * fn(ordering)
    assert abs(float(total) - 1.0) < 1e-12
    return acc


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
