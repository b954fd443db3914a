"""Time-uniform confidence sequences and fixed-time intervals for the mean
of a bounded finite population sampled without replacement.

Two exponential-process families are provided: a quadratic ("Hoeffding
style") one that only uses boundedness, and a variance-adaptive
("empirical Bernstein style") one whose width tracks the squared deviations
actually observed.  Both are driven by a predictable weight sequence
(lambda schedule): the weight applied at step t is always computed before
the t-th observation is ingested.

A classical without-replacement baseline band built from Hoeffding-Serfling
inequalities (`bm_cs`) is included for comparisons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import DomainError, ScheduleError, StateError, ValidationError
from .snapshots import CsSnapshot

_SCHED_CODES = {
    "constant": _backend.SCHED_CONSTANT,
    "fixed_opt": _backend.SCHED_FIXED_OPT,
    "hoeffding_spread": _backend.SCHED_HOEFFDING_SPREAD,
    "eb_t0": _backend.SCHED_EB_T0,
    "eb_spread": _backend.SCHED_EB_SPREAD,
    "eb_ci": _backend.SCHED_EB_CI,
    "custom": _backend.SCHED_CUSTOM,
}

_EB_KINDS = {"eb_t0", "eb_spread", "eb_ci"}

_M_CAP = 1e300


def advantage(t: int, n_pop: int) -> float:
    """Exact partial sum of (i-1)/(N-i+1) for i = 1..t.

    This is the tightening a without-replacement band enjoys over its
    with-replacement counterpart; it vanishes at t = 1 and grows roughly
    like t^2/N early on and N log N near exhaustion.
    """
    if not 1 <= t <= n_pop:
        raise DomainError(f"t={t} outside 1..{n_pop}")
    i = np.arange(1, t + 1, dtype=np.float64)
    return float(np.sum((i - 1.0) / (n_pop - i + 1.0)))


def psi_h(lam: float, lower: float, upper: float) -> float:
    """Quadratic exponent term lambda^2 (upper - lower)^2 / 8."""
    if upper <= lower:
        raise DomainError("bounds must satisfy lower < upper")
    return lam * lam * (upper - lower) ** 2 / 8.0


def psi_e(lam: float, c: float) -> float:
    """Log-type exponent term (-log(1 - c*lambda) - c*lambda) / 4.

    Defined for lambda in [0, 1/c); approaches the quadratic term as
    lambda -> 0.
    """
    if c <= 0:
        raise DomainError("range c must be positive")
    if lam < 0 or lam * c >= 1.0:
        raise DomainError(f"lambda={lam} outside [0, 1/c) with c={c}")
    return (-math.log1p(-c * lam) - c * lam) / 4.0


@dataclass(frozen=True)
class LambdaSchedule:
    """A predictable weight sequence for the exponential processes.

    Kinds:

    - ``constant``:          a fixed user-supplied value
    - ``fixed_opt``:         constant value that minimizes the width at t0
    - ``hoeffding_spread``:  ~ 1/sqrt(t log t), capped at 1/(upper-lower)
    - ``eb_t0``:             variance-adaptive, tuned for time t0, capped
                             at 1/(2(upper-lower))
    - ``eb_spread``:         variance-adaptive ~ 1/sqrt(t log t), same cap
    - ``eb_ci``:             variance-adaptive, tuned for sample size n
    - ``custom``:            an explicit sequence (validated at use only)
    """

    kind: str
    alpha: float
    t0: int | None = None
    value: float | None = None
    sequence: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in _SCHED_CODES:
            raise ValidationError(f"unknown schedule kind {self.kind!r}",
                                  field="schedule")
        if not 0 < self.alpha < 1:
            raise DomainError(f"alpha={self.alpha} outside (0, 1)")
        if self.kind in ("fixed_opt", "eb_t0", "eb_ci"):
            if self.t0 is None or self.t0 < 1:
                raise ValidationError("schedule needs a target time >= 1",
                                      field="t0")
        if self.kind == "constant" and (self.value is None or self.value <= 0):
            raise ValidationError("constant schedule needs a positive value",
                                  field="value")
        if self.kind == "custom" and not self.sequence:
            raise ValidationError("custom schedule needs a sequence",
                                  field="sequence")

    @classmethod
    def fixed_opt(cls, t0: int, alpha: float) -> "LambdaSchedule":
        return cls(kind="fixed_opt", alpha=alpha, t0=int(t0))

    @classmethod
    def hoeffding_spread(cls, alpha: float) -> "LambdaSchedule":
        return cls(kind="hoeffding_spread", alpha=alpha)

    @classmethod
    def eb_t0(cls, t0: int, alpha: float) -> "LambdaSchedule":
        return cls(kind="eb_t0", alpha=alpha, t0=int(t0))

    @classmethod
    def eb_spread(cls, alpha: float) -> "LambdaSchedule":
        return cls(kind="eb_spread", alpha=alpha)

    @classmethod
    def eb_ci(cls, n: int, alpha: float) -> "LambdaSchedule":
        return cls(kind="eb_ci", alpha=alpha, t0=int(n))

    @classmethod
    def constant(cls, value: float, alpha: float) -> "LambdaSchedule":
        return cls(kind="constant", alpha=alpha, value=float(value))

    @classmethod
    def custom(cls, sequence, alpha: float) -> "LambdaSchedule":
        return cls(kind="custom", alpha=alpha,
                   sequence=tuple(float(v) for v in sequence))

    @property
    def is_variance_adaptive(self) -> bool:
        return self.kind in _EB_KINDS

    def backend_args(self):
        code = _SCHED_CODES[self.kind]
        t0 = float(self.t0 or 0)
        lam = float(self.value or 0.0)
        custom = (np.asarray(self.sequence, dtype=np.float64)
                  if self.kind == "custom" else None)
        return code, t0, lam, custom


def next_lambda(schedule: LambdaSchedule, t: int,
                state: "BoundedCsState | None" = None) -> float:
    """The weight the schedule emits for step t (1-based).

    Depends only on t, the schedule constants and -- for variance-adaptive
    kinds -- the observations strictly before t, supplied through `state`.
    """
    if t < 1:
        raise DomainError("t must be >= 1")
    alpha = schedule.alpha
    big_log = math.log(2.0 / alpha)
    if schedule.kind == "constant":
        return schedule.value
    if schedule.kind == "custom":
        if t > len(schedule.sequence):
            raise ScheduleError("custom schedule ran out of values")
        return schedule.sequence[t - 1]
    if state is None:
        raise DomainError("this schedule kind needs the running state")
    c = state.upper - state.lower
    if schedule.kind == "fixed_opt":
        return math.sqrt(8.0 * big_log / (schedule.t0 * c * c))
    if schedule.kind == "hoeffding_spread":
        return min(math.sqrt(8.0 * big_log / (t * math.log(t + 1.0) * c * c)),
                   1.0 / c)
    if schedule.is_variance_adaptive:
        if t != state.t + 1:
            raise DomainError(
                "variance-adaptive schedules are only defined for the next "
                "step of the supplied state")
        sig2 = state.sigma2_prev()
        if schedule.kind == "eb_t0":
            raw = math.sqrt(2.0 * big_log / (sig2 * schedule.t0))
        elif schedule.kind == "eb_spread":
            raw = math.sqrt(2.0 * big_log / (sig2 * t * math.log(t + 1.0)))
        else:  # eb_ci
            raw = math.sqrt(2.0 * big_log / (schedule.t0 * sig2))
        return min(raw, 1.0 / (2.0 * c))
    raise ScheduleError(f"unhandled schedule kind {schedule.kind!r}")


@dataclass(frozen=True)
class ConfidenceInterval:
    lo: float
    hi: float
    center: float
    halfwidth: float


class BoundedCsState:
    """O(1)-per-update state for the bounded-mean confidence sequences.

    Single-owner mutable; every update ingests one observation, first fixing
    the step's weight from the past only, and returns a snapshot with the
    two-sided band (optionally running-intersected), the one-sided bounds,
    and the current estimators.
    """

    def __init__(self, n: int, lower: float, upper: float, alpha: float,
                 schedule: LambdaSchedule | None = None,
                 method: str = "hoeffding", intersect: bool = True):
        if n < 1:
            raise ValidationError("population size must be >= 1", field="N")
        if upper <= lower:
            raise ValidationError("bounds must satisfy lower < upper",
                                  field="bounds")
        if not 0 < alpha < 1:
            raise DomainError(f"alpha={alpha} outside (0, 1)")
        if method not in ("hoeffding", "eb"):
            raise ValidationError(f"unknown method {method!r}", field="method")
        self.n = int(n)
        self.lower = float(lower)
        self.upper = float(upper)
        self.c = self.upper - self.lower
        self.alpha = float(alpha)
        self.method = method
        if schedule is None:
            schedule = (LambdaSchedule.eb_spread(alpha) if method == "eb"
                        else LambdaSchedule.hoeffding_spread(alpha))
        self.schedule = schedule
        self.intersect = intersect

        self.t = 0
        self.sum_x = 0.0
        self.sum_weighted_num = 0.0
        self.sum_weighted_den = 0.0
        self.sum_psi_h = 0.0
        self.sum_psi_e_var = 0.0
        self.var_process = 0.0
        self.num4 = 0.0
        self.adv = 0.0
        self.sum_sq_dev_mean = 0.0
        self.lambda_history: list[float] = []
        self._run_lo = self.lower
        self._run_hi = self.upper
        # (m0, side) -> [runmax log M_H, runmax log M_E]
        self._null_runmax: dict[tuple[float, str], list[float]] = {}

    # -- derived quantities -------------------------------------------------

    def sigma2_prev(self) -> float:
        """Variance estimate built from the observations seen so far."""
        return (self.c * self.c / 4.0 + self.sum_sq_dev_mean) / (self.t + 1.0)

    def mu_hat_plain(self) -> float:
        """Unweighted shrinking-population mean estimator (midpoint at t=0)."""
        if self.t == 0:
            return 0.5 * (self.lower + self.upper)
        return self.num4 / (self.t + self.adv)

    def mu_hat_weighted(self) -> float:
        if self.sum_weighted_den == 0.0:
            return 0.5 * (self.lower + self.upper)
        return self.sum_weighted_num / self.sum_weighted_den

    def running_mean(self) -> float:
        return self.sum_x / self.t if self.t else 0.5 * (self.lower + self.upper)

    def _psi_sum(self, method: str | None = None) -> float:
        method = method or self.method
        return self.sum_psi_h if method == "hoeffding" else self.sum_psi_e_var

    def log_m(self, mu: float, side: str = "leq",
              method: str | None = None) -> float:
        """Log of the exponential process evaluated at a candidate mean.

        side="leq" is the process whose growth witnesses the mean exceeding
        mu; side="geq" is its reflection.
        """
        psi = self._psi_sum(method)
        signed = self.sum_weighted_num - mu * self.sum_weighted_den
        if side == "geq":
            signed = -signed
        elif side != "leq":
            raise DomainError(f"unknown side {side!r}")
        return signed - psi

    def register_null(self, m0: float, side: str) -> None:
        """Start tracking the running max of log M at a null mean.

        Needed for anytime p-values that are exact running minima; nulls
        registered at t = 0 track the whole process.
        """
        key = (float(m0), side)
        if key not in self._null_runmax:
            self._null_runmax[key] = [self.log_m(m0, side, "hoeffding"),
                                      self.log_m(m0, side, "eb")]

    def runmax_log_m(self, m0: float, side: str,
                     method: str | None = None) -> float:
        key = (float(m0), side)
        if key not in self._null_runmax:
            raise StateError("null was never registered on this state")
        pair = self._null_runmax[key]
        return pair[0] if (method or self.method) == "hoeffding" else pair[1]

    def peek_lambda(self) -> float:
        """The weight the next update will use (predictable: past-only)."""
        return next_lambda(self.schedule, self.t + 1, self)

    def halfwidth(self, alpha: float | None = None,
                  method: str | None = None, one_sided: bool = False) -> float:
        alpha = self.alpha if alpha is None else alpha
        if not 0 < alpha < 1:
            raise DomainError(f"alpha={alpha} outside (0, 1)")
        if self.sum_weighted_den == 0.0:
            return math.inf
        tail = math.log((1.0 if one_sided else 2.0) / alpha)
        return (self._psi_sum(method) + tail) / self.sum_weighted_den

    def interval(self, alpha: float | None = None, method: str | None = None,
                 one_sided: bool = False) -> ConfidenceInterval:
        """Per-time band at an arbitrary level (clipped to the support)."""
        hw = self.halfwidth(alpha, method, one_sided)
        center = self.mu_hat_weighted()
        return ConfidenceInterval(
            lo=max(self.lower, center - hw), hi=min(self.upper, center + hw),
            center=center, halfwidth=hw)

    # -- the update ----------------------------------------------------------

    def update(self, x: float) -> CsSnapshot:
        """Ingest one observation and emit the per-time snapshot."""
        if self.t >= self.n:
            raise StateError("population exhausted: update past t = N")
        x = float(x)
        if not self.lower <= x <= self.upper:
            raise DomainError(
                f"observation {x} outside [{self.lower}, {self.upper}] "
                "(boundedness is an assumption, not a clamp)")
        lam = self.peek_lambda()
        if self.method == "eb":
            if not 0.0 <= lam < 1.0 / self.c:
                raise ScheduleError(
                    f"schedule emitted lambda={lam} outside [0, 1/c)")
        elif lam <= 0:
            raise ScheduleError("schedule emitted a nonpositive lambda")

        i = self.t + 1
        pop_left = self.n - i + 1.0
        carry = (self.sum_x) / pop_left
        w = 1.0 + (i - 1.0) / pop_left
        dev = x - self.mu_hat_plain()

        self.adv += (i - 1.0) / pop_left
        self.sum_weighted_num += lam * (x + carry)
        self.sum_weighted_den += lam * w
        self.sum_psi_h += psi_h(lam, self.lower, self.upper)
        if lam * self.c < 1.0:
            self.sum_psi_e_var += ((2.0 / self.c) ** 2 * dev * dev
                                   * psi_e(lam, self.c))
        else:
            self.sum_psi_e_var = math.inf
        self.var_process += dev * dev
        self.num4 += x + carry
        self.sum_x += x
        self.t = i
        mean = self.sum_x / i
        self.sum_sq_dev_mean += (x - mean) ** 2
        self.lambda_history.append(lam)

        for (m0, side), pair in self._null_runmax.items():
            pair[0] = max(pair[0], self.log_m(m0, side, "hoeffding"))
            pair[1] = max(pair[1], self.log_m(m0, side, "eb"))

        return self._snapshot(lam)

    def _snapshot(self, lam: float) -> CsSnapshot:
        band = self.interval()
        one_hw = self.halfwidth(one_sided=True)
        center = band.center
        if self.intersect:
            self._run_lo = max(self._run_lo, band.lo)
            self._run_hi = min(self._run_hi, band.hi)
        m_value = None
        log_m_value = None
        if self._null_runmax:
            (m0, side) = next(iter(self._null_runmax))
            log_m_value = self.log_m(m0, side)
            m_value = min(math.exp(min(log_m_value, 709.0)), _M_CAP)
        snap = CsSnapshot(
            t=self.t, alpha=self.alpha, method=self.method,
            mu_hat_weighted=center, mu_hat_plain=self.mu_hat_plain(),
            lambda_t=lam, lo=band.lo, hi=band.hi,
            lo_intersected=(self._run_lo if self.intersect else None),
            hi_intersected=(self._run_hi if self.intersect else None),
            lo_one_sided=max(self.lower, center - one_hw),
            hi_one_sided=min(self.upper, center + one_hw),
            m_value=m_value,
        )
        if log_m_value is not None:
            snap.extra["log_m_value"] = log_m_value
        if self.t == self.n:
            # Population fully observed: report the exact mean alongside the
            # formula band, which need not collapse on its own.
            snap.exact_mean = self.sum_x / self.n
        return snap


def wor_mean_trace(x, n_pop: int) -> np.ndarray:
    """Trace of the unweighted shrinking-population mean estimator."""
    res = _backend.bounded_trace(np.asarray(x, dtype=np.float64), n_pop,
                                 0.0, 1.0, 0.5, _backend.SCHED_CONSTANT,
                                 lam_fixed=1.0)
    return res["mu4"]


def hoeffding_ci(data, n_pop: int, lower: float, upper: float,
                 alpha: float) -> ConfidenceInterval:
    """Fixed-time interval from the quadratic family, tuned at n = len(data).

    Strictly narrower than the classical with-replacement interval for every
    n >= 2 thanks to the advantage term.
    """
    x = np.asarray(data, dtype=np.float64)
    n = x.shape[0]
    if n < 1 or n > n_pop:
        raise DomainError("need 1 <= n <= N observations")
    if upper <= lower:
        raise DomainError("bounds must satisfy lower < upper")
    if not 0 < alpha < 1:
        raise DomainError(f"alpha={alpha} outside (0, 1)")
    if np.any((x < lower) | (x > upper)):
        raise DomainError("data outside declared bounds")
    c = upper - lower
    adv = advantage(n, n_pop)
    center = float(wor_mean_trace(x, n_pop)[-1])
    hw = math.sqrt(0.5 * c * c * math.log(2.0 / alpha)) / (
        math.sqrt(n) + adv / math.sqrt(n))
    return ConfidenceInterval(lo=max(lower, center - hw),
                              hi=min(upper, center + hw),
                              center=center, halfwidth=hw)


def eb_ci(sample, n_pop: int, lower: float, upper: float, alpha: float,
          permutation_seed: int) -> ConfidenceInterval:
    """Fixed-time variance-adaptive interval for a simple random sample.

    The sample is internally permuted with the given seed to recover the
    sequential observation model, then run through the variance-adaptive
    machinery with the sample-size-tuned schedule; deviations use the lagged
    plain running mean (midpoint before the first observation).
    """
    x = np.asarray(sample, dtype=np.float64)
    n = x.shape[0]
    if n < 1 or n > n_pop:
        raise DomainError("need 1 <= n <= N observations")
    if upper <= lower:
        raise DomainError("bounds must satisfy lower < upper")
    if not 0 < alpha < 1:
        raise DomainError(f"alpha={alpha} outside (0, 1)")
    if np.any((x < lower) | (x > upper)):
        raise DomainError("data outside declared bounds")
    rng = np.random.Generator(np.random.Philox(int(permutation_seed)))
    perm = rng.permutation(x)
    res = _backend.bounded_trace(perm, n_pop, lower, upper, alpha,
                                 _backend.SCHED_EB_CI, t0=float(n),
                                 dev_plain=True)
    den = float(res["den_w"][-1])
    center = float(res["num_w"][-1]) / den
    hw = (float(res["psi_e_var"][-1]) + math.log(2.0 / alpha)) / den
    return ConfidenceInterval(lo=max(lower, center - hw),
                              hi=min(upper, center + hw),
                              center=center, halfwidth=hw)


def bm_halfwidth(t: int, n: int, n_pop: int, lower: float, upper: float,
                 alpha: float, branch: str | None = None) -> float:
    """Half-width of the Hoeffding-Serfling baseline band at time t.

    The band is tuned at time n; t < n and t >= n use different closed
    forms (`branch` forces one for continuity diagnostics).
    """
    if not 1 <= t <= n_pop - 1:
        raise DomainError("t must satisfy 1 <= t <= N-1")
    if not 1 <= n <= n_pop:
        raise DomainError("tuning time n must be in 1..N")
    c = upper - lower
    log4 = math.log(4.0 / alpha)
    if branch is None:
        branch = "pre" if t < n else "post"
    if branch == "pre":
        if n == n_pop:
            return math.inf
        return (n * (n_pop - t) / (t * (n_pop - n))) * math.sqrt(
            log4 * (1.0 - (n - 1.0) / n_pop) * c * c / (2.0 * n))
    if branch == "post":
        return math.sqrt(log4 * (1.0 - n / n_pop) * (1.0 + 1.0 / n)
                         * c * c / (2.0 * n))
    raise DomainError(f"unknown branch {branch!r}")


def bm_cs(t: int, n: int, n_pop: int, sample_mean: float, lower: float,
          upper: float, alpha: float) -> ConfidenceInterval:
    """Two-sided Hoeffding-Serfling baseline band around the plain mean."""
    hw = bm_halfwidth(t, n, n_pop, lower, upper, alpha)
    return ConfidenceInterval(lo=max(lower, sample_mean - hw),
                              hi=min(upper, sample_mean + hw),
                              center=sample_mean, halfwidth=hw)
