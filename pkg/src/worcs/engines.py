"""One config schema and streaming engine shared by the CLI and the service.

An Engine wraps one confidence-sequence state, wires configured nulls into
p/e-values on every snapshot, and applies stopping policies with
first-crossing semantics.  The CLI builds its config from flags, the
service from a JSON body; both validate through `EngineConfig.from_dict`.
"""

from __future__ import annotations

from dataclasses import dataclass

from .bounded import BoundedCsState, LambdaSchedule, bm_cs
from .errors import StateError, ValidationError
from .inference import NullHypothesis, StoppingPolicy, anytime_p_count, \
    anytime_p_mean, e_value, evaluate_stop
from .ppr import DirMultPprState, PprState
from .snapshots import CsSnapshot

_E_CAP = 1e300

METHODS = ("ppr", "dm", "hoeffding", "eb", "bm")


def _build_schedule(method: str, d: dict | None, alpha: float,
                    n: int) -> LambdaSchedule | None:
    if method in ("ppr", "dm", "bm"):
        return None
    d = dict(d or {})
    kind = d.pop("kind", "spread")
    if kind == "spread":
        return (LambdaSchedule.eb_spread(alpha) if method == "eb"
                else LambdaSchedule.hoeffding_spread(alpha))
    if kind == "t0":
        t0 = int(d.get("t0") or 0)
        if t0 < 1:
            raise ValidationError("schedule t0 must be >= 1", field="t0")
        return (LambdaSchedule.eb_t0(t0, alpha) if method == "eb"
                else LambdaSchedule.fixed_opt(t0, alpha))
    if kind == "ci":
        t0 = int(d.get("t0") or n)
        return LambdaSchedule.eb_ci(t0, alpha)
    if kind == "constant":
        if d.get("value") is None:
            raise ValidationError("constant schedule needs a value",
                                  field="schedule")
        return LambdaSchedule.constant(float(d["value"]), alpha)
    if kind == "custom":
        return LambdaSchedule.custom(d.get("sequence") or (), alpha)
    raise ValidationError(f"unknown schedule kind {kind!r}", field="schedule")


@dataclass(frozen=True)
class EngineConfig:
    method: str
    n: int
    alpha: float = 0.05
    prior_a: float = 1.0
    prior_b: float = 1.0
    dm_prior: tuple[float, ...] | None = None
    lower: float | None = None
    upper: float | None = None
    schedule: dict | None = None
    bm_tune: int | None = None
    intersect: bool = True
    emit_set: bool = False
    nulls: tuple[NullHypothesis, ...] = ()
    stops: tuple[StoppingPolicy, ...] = ()

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValidationError(f"unknown method {self.method!r}",
                                  field="method")
        if self.n < 1:
            raise ValidationError("population size must be >= 1", field="N")
        if not 0 < self.alpha < 1:
            raise ValidationError("alpha must be in (0, 1)", field="alpha")
        if self.method in ("hoeffding", "eb", "bm"):
            if self.lower is None or self.upper is None:
                raise ValidationError(
                    "bounded methods need --lower/--upper", field="bounds")
            if not self.lower < self.upper:
                raise ValidationError("bounds must satisfy lower < upper",
                                      field="bounds")
        for null in self.nulls:
            if self.method in ("hoeffding", "eb"):
                if not null.is_mean:
                    raise ValidationError(
                        f"{null.kind} null does not apply to a mean method",
                        field="null")
                if not self.lower <= null.threshold <= self.upper:
                    raise ValidationError(
                        "null mean outside the declared bounds", field="null")
            if self.method == "ppr":
                if not null.is_count:
                    raise ValidationError(
                        f"{null.kind} null does not apply to a count method",
                        field="null")
                null.count_mask(self.n)  # raises if outside 0..N
            if self.method in ("dm", "bm"):
                raise ValidationError(
                    f"nulls are not offered for method {self.method!r}",
                    field="null")

    @classmethod
    def from_dict(cls, d: dict) -> "EngineConfig":
        d = dict(d)
        d.pop("v", None)
        if "N" in d and "n" not in d:
            d["n"] = d.pop("N")
        nulls = tuple(
            NullHypothesis.parse(s) if isinstance(s, str)
            else NullHypothesis(**s)
            for s in d.pop("nulls", ()) or ())
        alpha = float(d.get("alpha", 0.05))
        stops = tuple(
            StoppingPolicy.parse(s, alpha) if isinstance(s, str)
            else StoppingPolicy(**{"alpha": alpha, **s})
            for s in d.pop("stops", ()) or ())
        if "dm_prior" in d and d["dm_prior"] is not None:
            d["dm_prior"] = tuple(float(v) for v in d["dm_prior"])
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValidationError(f"unknown config fields: {sorted(unknown)}",
                                  field=sorted(unknown)[0])
        try:
            return cls(nulls=nulls, stops=stops, **d)
        except TypeError as e:
            raise ValidationError(str(e)) from e

    def to_dict(self) -> dict:
        return {
            "method": self.method, "N": self.n, "alpha": self.alpha,
            "intersect": self.intersect,
            "nulls": [n.describe() for n in self.nulls],
            "stops": [s.mode for s in self.stops],
            **({"lower": self.lower, "upper": self.upper}
               if self.lower is not None else {}),
        }


class Engine:
    """Streaming adapter: observations in, snapshots out, stop state kept."""

    def __init__(self, cfg: EngineConfig):
        self.cfg = cfg
        self.stopped: tuple[str, int] | None = None
        self.history: list[CsSnapshot] = []
        m = cfg.method
        if m == "ppr":
            self.state = PprState(cfg.n, cfg.prior_a, cfg.prior_b,
                                  track_intersection=cfg.intersect)
        elif m == "dm":
            prior = cfg.dm_prior or (1.0, 1.0)
            self.state = DirMultPprState(cfg.n, prior,
                                         track_intersection=cfg.intersect)
        elif m in ("hoeffding", "eb"):
            sched = _build_schedule(m, cfg.schedule, cfg.alpha, cfg.n)
            if m == "eb" and sched is not None:
                c = cfg.upper - cfg.lower
                fixed = [sched.value] if sched.kind == "constant" else (
                    sched.sequence or ())
                if any(not 0 <= v < 1.0 / c for v in fixed):
                    raise ValidationError(
                        "schedule out of domain: the variance-adaptive "
                        f"family needs weights in [0, {1.0 / c:g})",
                        field="schedule")
            self.state = BoundedCsState(cfg.n, cfg.lower, cfg.upper,
                                        cfg.alpha, sched, method=m,
                                        intersect=cfg.intersect)
            for null in cfg.nulls:
                side = "leq" if null.kind == "mean_leq" else "geq"
                self.state.register_null(null.threshold, side)
        elif m == "bm":
            self.state = None
            self._bm_t = 0
            self._bm_sum = 0.0
            self._bm_run = (cfg.lower, cfg.upper)

    @property
    def t(self) -> int:
        if self.cfg.method == "bm":
            return self._bm_t
        return self.state.t

    @property
    def exhausted(self) -> bool:
        return self.t >= self.cfg.n

    def parse_value(self, raw: str):
        m = self.cfg.method
        if m in ("ppr", "dm"):
            try:
                return int(raw)
            except ValueError:
                raise ValidationError(
                    f"expected an integer observation, got {raw!r}",
                    field="value") from None
        try:
            return float(raw)
        except ValueError:
            raise ValidationError(f"expected a number, got {raw!r}",
                                  field="value") from None

    def initial_snapshot(self) -> CsSnapshot:
        cfg = self.cfg
        if cfg.method == "ppr":
            snap = CsSnapshot(t=0, alpha=cfg.alpha, method="ppr",
                              set_lo=0, set_hi=cfg.n, contiguous=True)
            snap.extra["n_pop"] = cfg.n
        elif cfg.method == "dm":
            snap = CsSnapshot(t=0, alpha=cfg.alpha, method="dm")
            snap.extra["n_pop"] = cfg.n
        else:
            snap = CsSnapshot(t=0, alpha=cfg.alpha, method=cfg.method,
                              lo=cfg.lower, hi=cfg.upper,
                              lo_intersected=cfg.lower,
                              hi_intersected=cfg.upper)
        if cfg.nulls:
            snap.p_value = 1.0
            snap.e_value = 1.0
        return snap

    def _attach_inference(self, snap: CsSnapshot) -> None:
        cfg = self.cfg
        if not cfg.nulls:
            return
        ps, es = [], []
        for null in cfg.nulls:
            if cfg.method == "ppr":
                ps.append(anytime_p_count(self.state, null))
            else:
                ps.append(anytime_p_mean(self.state, null))
            es.append(min(e_value(self.state, null), _E_CAP))
        snap.p_value = ps[0]
        snap.e_value = es[0]
        if len(cfg.nulls) > 1:
            snap.extra["p_values"] = ps
            snap.extra["e_values"] = es

    def observe(self, value) -> CsSnapshot:
        cfg = self.cfg
        if self.exhausted:
            raise StateError("population exhausted")
        if cfg.method == "ppr":
            self.state.update(int(value))
            snap = self.state.confidence_set(cfg.alpha,
                                             include_index_set=cfg.emit_set)
            snap.extra["n_pop"] = cfg.n
            self._attach_inference(snap)
        elif cfg.method == "dm":
            self.state.update(int(value))
            cs = self.state.confidence_set(cfg.alpha)
            snap = CsSnapshot(t=self.state.t, alpha=cfg.alpha, method="dm")
            snap.extra["n_pop"] = cfg.n
            snap.extra["marginal_lo"] = list(cs.marginal_lo)
            snap.extra["marginal_hi"] = list(cs.marginal_hi)
            snap.extra["n_points"] = int(cs.points.shape[0])
        elif cfg.method in ("hoeffding", "eb"):
            snap = self.state.update(float(value))
            self._attach_inference(snap)
        else:  # bm
            x = float(value)
            if not cfg.lower <= x <= cfg.upper:
                raise ValidationError(
                    f"observation {x} outside [{cfg.lower}, {cfg.upper}]",
                    field="value")
            self._bm_t += 1
            self._bm_sum += x
            mean = self._bm_sum / self._bm_t
            if self._bm_t <= cfg.n - 1:
                band = bm_cs(self._bm_t, cfg.bm_tune or max(1, cfg.n // 2),
                             cfg.n, mean, cfg.lower, cfg.upper, cfg.alpha)
                lo, hi = band.lo, band.hi
            else:
                lo = hi = mean
            run_lo = max(self._bm_run[0], lo)
            run_hi = min(self._bm_run[1], hi)
            if cfg.intersect:
                self._bm_run = (run_lo, run_hi)
            snap = CsSnapshot(
                t=self._bm_t, alpha=cfg.alpha, method="bm",
                mu_hat_plain=mean, lo=lo, hi=hi,
                lo_intersected=(run_lo if cfg.intersect else None),
                hi_intersected=(run_hi if cfg.intersect else None))
            if self._bm_t == cfg.n:
                snap.exact_mean = mean

        if self.stopped is not None:
            snap.post_stop = True
            snap.stop_reason, snap.stop_t = self.stopped
        else:
            for policy in cfg.stops:
                decision = evaluate_stop(policy, [snap])
                if decision.stopped:
                    self.stopped = (decision.reason, snap.t)
                    snap.stopped = True
                    snap.stop_reason, snap.stop_t = self.stopped
                    break
        self.history.append(snap)
        return snap
