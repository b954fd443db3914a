"""Anytime-valid p-values, e-values and stopping decisions on top of any
confidence-sequence engine.

Everything here is a pure function of engine state or snapshot history;
decisions made at data-dependent times inherit their validity from the
time-uniform guarantee of the underlying sequences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bounded import BoundedCsState
from .errors import DomainError, IntegrityError, ValidationError
from .ppr import DirMultPprState, PprState

_COUNT_KINDS = ("count_leq", "count_geq", "count_in")
_MEAN_KINDS = ("mean_leq", "mean_geq")


@dataclass(frozen=True)
class NullHypothesis:
    """A one-sided or index-set null about a count or a bounded mean."""

    kind: str
    threshold: float | None = None
    index_set: frozenset | None = None

    def __post_init__(self):
        if self.kind in _COUNT_KINDS[:2] or self.kind in _MEAN_KINDS:
            if self.threshold is None:
                raise ValidationError("null needs a threshold", field="null")
        elif self.kind == "count_in":
            if not self.index_set:
                raise ValidationError("count_in needs a nonempty index set",
                                      field="null")
        else:
            raise ValidationError(f"unknown null kind {self.kind!r}",
                                  field="null")

    @classmethod
    def count_leq(cls, d: int) -> "NullHypothesis":
        return cls(kind="count_leq", threshold=int(d))

    @classmethod
    def count_geq(cls, d: int) -> "NullHypothesis":
        return cls(kind="count_geq", threshold=int(d))

    @classmethod
    def count_in(cls, indices) -> "NullHypothesis":
        return cls(kind="count_in", index_set=frozenset(int(i) for i in indices))

    @classmethod
    def mean_leq(cls, m0: float) -> "NullHypothesis":
        return cls(kind="mean_leq", threshold=float(m0))

    @classmethod
    def mean_geq(cls, m0: float) -> "NullHypothesis":
        return cls(kind="mean_geq", threshold=float(m0))

    @classmethod
    def parse(cls, text: str) -> "NullHypothesis":
        """Parse the CLI grammar, e.g. "count_leq:550" or "mean_geq:0.4"."""
        kind, _, arg = text.partition(":")
        if kind in ("count_leq", "count_geq"):
            return cls(kind=kind, threshold=int(arg))
        if kind in _MEAN_KINDS:
            return cls(kind=kind, threshold=float(arg))
        if kind == "count_in":
            return cls.count_in(int(v) for v in arg.split(",") if v)
        raise ValidationError(f"cannot parse null {text!r}", field="null")

    @property
    def is_count(self) -> bool:
        return self.kind in _COUNT_KINDS

    @property
    def is_mean(self) -> bool:
        return self.kind in _MEAN_KINDS

    def count_mask(self, n: int) -> np.ndarray:
        """Boolean membership mask over the count grid 0..n."""
        mask = np.zeros(n + 1, dtype=bool)
        if self.kind == "count_leq":
            d = int(self.threshold)
            if not 0 <= d <= n:
                raise DomainError("threshold outside the count range")
            mask[: d + 1] = True
        elif self.kind == "count_geq":
            d = int(self.threshold)
            if not 0 <= d <= n:
                raise DomainError("threshold outside the count range")
            mask[d:] = True
        elif self.kind == "count_in":
            idx = np.asarray(sorted(self.index_set), dtype=int)
            if idx.size and (idx.min() < 0 or idx.max() > n):
                raise DomainError("index set outside the count range")
            mask[idx] = True
        else:
            raise DomainError("not a count null")
        return mask

    def describe(self) -> str:
        if self.kind == "count_in":
            return f"count_in:{','.join(map(str, sorted(self.index_set)))}"
        return f"{self.kind}:{self.threshold}"


@dataclass(frozen=True)
class StoppingPolicy:
    """A pure predicate over snapshot history; exactly one mode armed."""

    alpha: float
    mode: str
    value: float | None = None
    width: float | None = None
    pair: tuple[str, str] = ("self", "mirror")

    def __post_init__(self):
        if self.mode not in ("reject_null", "cs_excludes_value",
                             "cs_width_below", "sets_disjoint"):
            raise ValidationError(f"unknown stopping mode {self.mode!r}",
                                  field="stop")
        if self.mode == "cs_excludes_value" and self.value is None:
            raise ValidationError("cs_excludes_value needs a value",
                                  field="stop")
        if self.mode == "cs_width_below" and self.width is None:
            raise ValidationError("cs_width_below needs a width",
                                  field="stop")

    @classmethod
    def parse(cls, text: str, alpha: float) -> "StoppingPolicy":
        """Parse the CLI grammar: "reject_null", "excludes:V",
        "width_below:W" or "sets_disjoint"."""
        mode, _, arg = text.partition(":")
        if mode == "reject_null":
            return cls(alpha=alpha, mode="reject_null")
        if mode == "excludes":
            return cls(alpha=alpha, mode="cs_excludes_value", value=float(arg))
        if mode == "width_below":
            return cls(alpha=alpha, mode="cs_width_below", width=float(arg))
        if mode == "sets_disjoint":
            return cls(alpha=alpha, mode="sets_disjoint")
        raise ValidationError(f"cannot parse stopping rule {text!r}",
                              field="stop")


@dataclass(frozen=True)
class StopDecision:
    stopped: bool
    reason: str | None = None
    t: int | None = None


def _snapshot_bounds(snap):
    """Effective (lo, hi) of a snapshot's set, preferring intersected."""
    if snap.set_lo is not None or snap.set_hi is not None or snap.method in (
            "ppr", "dm"):
        return snap.set_lo, snap.set_hi
    lo = snap.lo_intersected if snap.lo_intersected is not None else snap.lo
    hi = snap.hi_intersected if snap.hi_intersected is not None else snap.hi
    return lo, hi


def _excludes_value(snap, v: float) -> bool:
    if snap.index_set is not None:
        return int(v) not in snap.index_set
    lo, hi = _snapshot_bounds(snap)
    if lo is None and hi is None and snap.method == "ppr":
        return True  # empty set excludes everything
    if lo is None or hi is None:
        return False
    if snap.method == "ppr" and snap.contiguous is False:
        # Hull only: exclusion is certain only outside the hull.
        return v < lo or v > hi
    return v < lo or v > hi


def _width(snap) -> float:
    lo, hi = _snapshot_bounds(snap)
    if lo is None or hi is None:
        return 0.0 if snap.method == "ppr" else math.inf
    return hi - lo


def _mirror_disjoint(snap) -> bool:
    n = snap.extra.get("n_pop")
    if n is None:
        raise DomainError("sets_disjoint needs count snapshots carrying n_pop")
    if snap.index_set is not None:
        s = set(snap.index_set)
        return not (s & {n - i for i in s})
    lo, hi = snap.set_lo, snap.set_hi
    if lo is None or hi is None:
        return True
    # Hull test: conservative when the set is not contiguous.
    return 2 * hi < n or 2 * lo > n


def evaluate_stop(policy: StoppingPolicy, history) -> StopDecision:
    """First-crossing stop decision over a snapshot history.

    Idempotent: re-evaluating a longer history that already crossed returns
    the same stop index.
    """
    if not history:
        raise DomainError("history must be nonempty")
    for snap in history:
        hit = False
        if policy.mode == "reject_null":
            hit = snap.p_value is not None and snap.p_value <= policy.alpha
        elif policy.mode == "cs_excludes_value":
            hit = _excludes_value(snap, policy.value)
        elif policy.mode == "cs_width_below":
            hit = _width(snap) < policy.width
        elif policy.mode == "sets_disjoint":
            hit = _mirror_disjoint(snap)
        if hit:
            return StopDecision(stopped=True, reason=policy.mode, t=snap.t)
    return StopDecision(stopped=False)


# -- p-values ---------------------------------------------------------------

def anytime_p_mean(state: BoundedCsState, null: NullHypothesis,
                   method: str | None = None) -> float:
    """Anytime-valid p-value for a one-sided mean null.

    Closed form: the inverse of the running maximum of the exponential
    process evaluated at the null boundary, capped at one.  The null is
    registered on the state at first use, so later calls return a running
    minimum from that point on; register at t = 0 to track the full process.
    """
    if not null.is_mean:
        raise DomainError(f"{null.kind} is not a mean null")
    side = "leq" if null.kind == "mean_leq" else "geq"
    state.register_null(null.threshold, side)
    log_m = state.runmax_log_m(null.threshold, side, method)
    return min(1.0, math.exp(-log_m))


def anytime_p_count(state: PprState, null: NullHypothesis,
                    intersected: bool | None = None) -> float:
    """Anytime-valid p-value for a count null on a binary-count state."""
    if not null.is_count:
        raise DomainError(f"{null.kind} is not a count null")
    return state.p_value(null.count_mask(state.n), intersected=intersected)


def _as_interval(cs):
    if isinstance(cs, tuple) and len(cs) == 2:
        return cs
    return None


def _intersects(cs, null_set) -> bool:
    iv = _as_interval(cs)
    if iv is not None:
        lo, hi = iv
        niv = _as_interval(null_set)
        if niv is not None:
            return not (hi < niv[0] or lo > niv[1])
        return any(lo <= v <= hi for v in null_set)
    cs_set = set(np.asarray(list(cs)).ravel().tolist())
    niv = _as_interval(null_set)
    if niv is not None:
        return any(niv[0] <= v <= niv[1] for v in cs_set)
    return bool(cs_set & set(null_set))


def _contained_in(small, big) -> bool:
    siv, biv = _as_interval(small), _as_interval(big)
    if siv is not None and biv is not None:
        return biv[0] <= siv[0] and siv[1] <= biv[1]
    if siv is None and biv is None:
        return set(small) <= set(big)
    return True  # mixed representations: skip the check


def anytime_p_generic(cs_at_level, null_set, tol: float = 1e-5) -> float:
    """Invert an arbitrary monotone confidence-set family by bisection.

    `cs_at_level(q)` must return a set that shrinks as q grows (spot-checked;
    violations raise IntegrityError).  Returns the conservative upper end of
    the final bracket: the smallest error level at which the set just
    excludes the null.
    """
    lo, hi = 1e-12, 1.0 - 1e-12
    spots = [0.2, 0.5, 0.8]
    sets = [cs_at_level(q) for q in spots]
    for a, b in zip(sets[1:], sets[:-1]):
        if not _contained_in(a, b):
            raise IntegrityError("confidence-set family is not monotone in q")
    if _intersects(cs_at_level(hi), null_set):
        return 1.0
    if not _intersects(cs_at_level(lo), null_set):
        return lo
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _intersects(cs_at_level(mid), null_set):
            lo = mid
        else:
            hi = mid
    return hi


# -- e-values -----------------------------------------------------------------

def e_value(state, null: NullHypothesis) -> float:
    """Current e-value for a null: the (inf over the null of the) process.

    For count states this is the raw prior/posterior ratio, not its running
    maximum -- only the raw process has the unit-bounded optional-stopping
    expectation.
    """
    if isinstance(state, PprState):
        if not null.is_count:
            raise DomainError(f"{null.kind} is not a count null")
        return state.e_value(null.count_mask(state.n))
    if isinstance(state, BoundedCsState):
        if not null.is_mean:
            raise DomainError(f"{null.kind} is not a mean null")
        side = "leq" if null.kind == "mean_leq" else "geq"
        return math.exp(state.log_m(null.threshold, side))
    if isinstance(state, DirMultPprState):
        raise DomainError("category-total e-values need an explicit lattice "
                          "null; not offered")
    raise DomainError(f"unsupported state type {type(state).__name__}")
