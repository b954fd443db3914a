"""Prior/posterior-ratio confidence sequences for count parameters.

The binary engine tracks the unknown success total of a finite 0/1
population through a beta-binomial working prior; the K-category engine
(K = 2 or 3) does the same for the vector of category totals through a
Dirichlet-multinomial working prior.  The working-model machinery is a
device only: the emitted sets are frequentist confidence sequences, valid
for any fixed prior parameters.

All mass functions are evaluated in log space via log-gamma, and ratios are
compared against log(1/alpha), so populations up to ~1e6 stay stable.  The
ratio itself reduces to a ratio of binomial coefficients times a
beta-function constant, which the grid kernels exploit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import betaln, gammaln

from . import _backend
from .errors import DomainError, StateError, ValidationError
from .snapshots import CsSnapshot


def log_beta_binomial_pmf(k: int, n: int, a: float, b: float) -> float:
    """Log pmf of the beta-binomial(n, a, b) law at k.

    Computed entirely via log-gamma: log C(n,k) + lbeta(k+a, n-k+b)
    - lbeta(a, b).  Exponentiating over k = 0..n sums to one.
    """
    if a <= 0 or b <= 0:
        raise DomainError("prior parameters must be positive")
    if not 0 <= k <= n:
        raise DomainError(f"k={k} outside 0..{n}")
    return float(_backend.betabin_logpmf(k, n, a, b))


def coupled_prior(boundary_p: float, concentration: float) -> tuple[float, float]:
    """Map a decision boundary and concentration to prior parameters.

    Returns (a, b) = (kappa * p, kappa * (1 - p)), which peaks the working
    prior's mass near the fraction p of the population; useful when the goal
    is to decide quickly on which side of p the true fraction lies.  Validity
    of the resulting confidence sequence does not depend on this choice.
    """
    if not 0 < boundary_p < 1:
        raise DomainError("boundary must be inside (0, 1)")
    if concentration <= 0:
        raise DomainError("concentration must be positive")
    return concentration * boundary_p, concentration * (1.0 - boundary_p)


def _check_alpha(alpha: float) -> None:
    if not 0 < alpha < 1:
        raise DomainError(f"alpha={alpha} outside (0, 1)")


class PprState:
    """Streaming confidence-sequence state for a binary population total.

    Parameters
    ----------
    n : int
        Population size N.
    a, b : float
        Working-prior parameters (default uniform, a = b = 1).
    track_intersection : bool
        Maintain the running intersection of the per-time sets (on by
        default; the time-uniform guarantee licenses it).  Tracking costs
        one O(N) grid scan per update.
    """

    def __init__(self, n: int, a: float = 1.0, b: float = 1.0,
                 track_intersection: bool = True):
        if n < 1:
            raise ValidationError("population size must be >= 1", field="N")
        if a <= 0 or b <= 0:
            raise DomainError("prior parameters must be positive")
        self.n = int(n)
        self.a = float(a)
        self.b = float(b)
        self.t = 0
        self.s = 0
        self.track_intersection = track_intersection
        self._table = _backend.lgamma_table(self.n)
        self._logc_pop = _backend.log_choose_grid(self.n, self._table)
        self._lbeta_ab = float(betaln(a, b))
        self._runmax = (np.zeros(self.n + 1) if track_intersection else None)

    def copy(self) -> "PprState":
        new = PprState.__new__(PprState)
        new.__dict__.update(self.__dict__)
        if self._runmax is not None:
            new._runmax = self._runmax.copy()
        return new

    def _lbeta_const(self) -> float:
        return float(betaln(self.a + self.s, self.b + self.t - self.s)
                     - self._lbeta_ab)

    def log_ratio_grid(self) -> np.ndarray:
        """Current log prior/posterior ratio over the count grid 0..N."""
        return _backend.ppr_log_ratio_grid(
            self._logc_pop, self._table, self.t, self.s, self._lbeta_const())

    def update(self, x: int) -> "PprState":
        """Ingest one observation (0 or 1)."""
        if self.t >= self.n:
            raise StateError("population exhausted: update past t = N")
        if x not in (0, 1):
            raise DomainError(f"binary observation must be 0 or 1, got {x!r}")
        self.t += 1
        self.s += x
        if self._runmax is not None:
            np.maximum(self._runmax, self.log_ratio_grid(), out=self._runmax)
        return self

    def ratio(self, n_plus: int) -> float:
        """Prior/posterior ratio at a single candidate total.

        Returns +inf exactly when the working posterior's support excludes
        the candidate (n_plus < s or N - n_plus < t - s); the support
        constraint is enforced through the zero posterior, never clipped.
        """
        if not 0 <= n_plus <= self.n:
            raise DomainError(f"n_plus={n_plus} outside 0..{self.n}")
        k = n_plus - self.s
        m = self.n - self.t
        if k < 0 or k > m:
            return math.inf
        logc_post = float(self._table[m] - self._table[k] - self._table[m - k])
        return math.exp(self._lbeta_const()
                        + float(self._logc_pop[n_plus]) - logc_post)

    def _set_grid(self, intersected: bool) -> np.ndarray:
        if intersected:
            if self._runmax is None:
                raise StateError("running intersection is not being tracked")
            return self._runmax
        return self.log_ratio_grid()

    def confidence_set(self, alpha: float, include_index_set: bool = False,
                       intersected: bool | None = None) -> CsSnapshot:
        """Exact index set {n+ : ratio < 1/alpha}, its hull and convexity.

        Nothing guarantees contiguity of the raw set, so the exact set and a
        convexity flag are reported alongside the interval hull.
        """
        _check_alpha(alpha)
        if intersected is None:
            intersected = self.track_intersection
        grid = self._set_grid(intersected)
        mask = grid < -math.log(alpha)
        idx = np.flatnonzero(mask)
        if idx.size:
            lo, hi = int(idx[0]), int(idx[-1])
            contiguous = bool(idx.size == hi - lo + 1)
        else:
            lo = hi = None
            contiguous = True
        return CsSnapshot(
            t=self.t, alpha=alpha, method="ppr",
            set_lo=lo, set_hi=hi, contiguous=contiguous,
            index_set=(idx.tolist() if include_index_set else None),
        )

    def _null_mask(self, null) -> np.ndarray:
        if callable(null):
            mask = np.fromiter((bool(null(i)) for i in range(self.n + 1)),
                               dtype=bool, count=self.n + 1)
        elif isinstance(null, np.ndarray) and null.dtype == bool:
            if null.shape != (self.n + 1,):
                raise DomainError("null mask must cover the grid 0..N")
            mask = null
        else:
            mask = np.zeros(self.n + 1, dtype=bool)
            mask[np.asarray(sorted(set(int(i) for i in null)), dtype=int)] = True
        if not mask.any():
            raise DomainError("empty null set")
        return mask

    def p_value(self, null, intersected: bool | None = None) -> float:
        """Anytime-valid p-value for a composite null over the count grid.

        `null` is an index predicate or an iterable of indices.  With the
        running intersection tracked (the default), the returned sequence is
        nonincreasing in t and crosses alpha exactly when the intersected
        confidence set first excludes the null set.  Without tracking this
        is the per-time value min(1, 1/min ratio over the null).
        """
        if intersected is None:
            intersected = self.track_intersection
        mask = self._null_mask(null)
        grid = self._set_grid(intersected)
        m = float(np.min(grid[mask]))
        return min(1.0, math.exp(-m))

    def e_value(self, null) -> float:
        """Infimum of the current ratio over the null set (an e-value)."""
        mask = self._null_mask(null)
        m = float(np.min(self.log_ratio_grid()[mask]))
        return math.exp(m) if m != math.inf else math.inf


def _ldirichlet_norm(v: np.ndarray) -> float:
    return float(np.sum(gammaln(v)) - gammaln(np.sum(v)))


@dataclass
class DmConfidenceSet:
    """Explicit lattice confidence set for category totals."""

    t: int
    alpha: float
    points: np.ndarray  # shape (m, K), rows sum to N
    marginal_lo: tuple[int, ...]
    marginal_hi: tuple[int, ...]

    def __contains__(self, n_vec) -> bool:
        target = np.asarray(n_vec)
        return bool((self.points == target).all(axis=1).any())


class DirMultPprState:
    """Streaming confidence-sequence state for K-category totals (K <= 3)."""

    def __init__(self, n: int, prior, track_intersection: bool = True):
        prior = np.asarray(prior, dtype=np.float64)
        if prior.ndim != 1 or prior.shape[0] < 2:
            raise ValidationError("prior must have K >= 2 entries",
                                  field="prior")
        if prior.shape[0] > 3:
            raise DomainError(
                "K > 3 categories are refused: the candidate lattice grows "
                "combinatorially")
        if np.any(prior <= 0):
            raise DomainError("prior parameters must be positive")
        if n < 1:
            raise ValidationError("population size must be >= 1", field="N")
        self.n = int(n)
        self.k = int(prior.shape[0])
        self.prior = prior
        self.t = 0
        self.s = np.zeros(self.k, dtype=np.int64)
        self.track_intersection = track_intersection
        self._lattice = self._build_lattice()
        self._log_multc_pop = self._log_multc(self.n, self._lattice)
        self._ldir_prior = _ldirichlet_norm(prior)
        self._runmax = (np.zeros(self._lattice.shape[0])
                        if track_intersection else None)

    def _build_lattice(self) -> np.ndarray:
        n, k = self.n, self.k
        if k == 2:
            n1 = np.arange(n + 1)
            return np.column_stack([n1, n - n1])
        n1, n2 = np.meshgrid(np.arange(n + 1), np.arange(n + 1),
                             indexing="ij")
        keep = (n1 + n2) <= n
        n1, n2 = n1[keep], n2[keep]
        return np.column_stack([n1, n2, n - n1 - n2])

    @staticmethod
    def _log_multc(total: int, counts: np.ndarray) -> np.ndarray:
        return gammaln(total + 1) - gammaln(counts + 1).sum(axis=1)

    def log_ratio_lattice(self) -> np.ndarray:
        """Current log prior/posterior ratio over the count lattice."""
        rem = self._lattice - self.s
        out = np.full(self._lattice.shape[0], np.inf)
        ok = (rem >= 0).all(axis=1)
        const = (_ldirichlet_norm(self.prior + self.s) - self._ldir_prior)
        out[ok] = (self._log_multc_pop[ok]
                   - self._log_multc(self.n - self.t, rem[ok]) + const)
        return out

    def update(self, category: int) -> "DirMultPprState":
        if self.t >= self.n:
            raise StateError("population exhausted: update past t = N")
        if not 0 <= category < self.k:
            raise DomainError(f"category {category} outside 0..{self.k - 1}")
        self.t += 1
        self.s[category] += 1
        if self._runmax is not None:
            np.maximum(self._runmax, self.log_ratio_lattice(),
                       out=self._runmax)
        return self

    def confidence_set(self, alpha: float,
                       intersected: bool | None = None) -> DmConfidenceSet:
        """Lattice points whose ratio stays below 1/alpha."""
        _check_alpha(alpha)
        if intersected is None:
            intersected = self.track_intersection
        if intersected:
            if self._runmax is None:
                raise StateError("running intersection is not being tracked")
            grid = self._runmax
        else:
            grid = self.log_ratio_lattice()
        pts = self._lattice[grid < -math.log(alpha)]
        if pts.size:
            marg_lo = tuple(int(v) for v in pts.min(axis=0))
            marg_hi = tuple(int(v) for v in pts.max(axis=0))
        else:
            marg_lo = marg_hi = tuple([-1] * self.k)
        return DmConfidenceSet(t=self.t, alpha=alpha, points=pts,
                               marginal_lo=marg_lo, marginal_hi=marg_hi)
