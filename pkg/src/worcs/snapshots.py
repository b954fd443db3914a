"""Per-time confidence-set snapshots, the unit of CLI/service output."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

SCHEMA_VERSION = 1

#: Fields that survive into the flat CSV rendering (NDJSON carries everything).
CSV_FIELDS = (
    "t", "alpha", "method", "set_lo", "set_hi", "contiguous",
    "mu_hat_weighted", "mu_hat_plain", "lambda_t", "lo", "hi",
    "lo_intersected", "hi_intersected", "m_value", "p_value", "e_value",
    "exact_mean", "stopped",
)


@dataclass
class CsSnapshot:
    """One time step of a confidence sequence plus its testing side-cars.

    Count-valued methods populate the ``set_*`` fields; bounded-mean methods
    populate the interval fields.  ``p_value``/``e_value``/``m_value`` are
    present only when a null hypothesis is configured.
    """

    t: int
    alpha: float
    method: str
    # count-parameter confidence sets
    set_lo: int | None = None
    set_hi: int | None = None
    contiguous: bool | None = None
    index_set: list[int] | None = None
    # bounded-mean confidence intervals
    mu_hat_weighted: float | None = None
    mu_hat_plain: float | None = None
    lambda_t: float | None = None
    lo: float | None = None
    hi: float | None = None
    lo_intersected: float | None = None
    hi_intersected: float | None = None
    lo_one_sided: float | None = None
    hi_one_sided: float | None = None
    m_value: float | None = None
    # exhaustion shortcut: once t = N the mean is known exactly
    exact_mean: float | None = None
    # testing side-cars
    p_value: float | None = None
    e_value: float | None = None
    # stopping
    stopped: bool = False
    stop_reason: str | None = None
    stop_t: int | None = None
    post_stop: bool = False
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("extra")
        out = {"v": SCHEMA_VERSION}
        out.update({k: v for k, v in d.items() if v is not None})
        if not (self.stopped or self.post_stop):
            out.pop("stop_reason", None)
            out.pop("stop_t", None)
        if not self.post_stop:
            out.pop("post_stop", None)
        out.update(self.extra)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"), allow_nan=True)

    def to_csv_row(self) -> str:
        vals = []
        for name in CSV_FIELDS:
            v = getattr(self, name)
            vals.append("" if v is None else str(v))
        return ",".join(vals)

    @staticmethod
    def csv_header() -> str:
        return ",".join(CSV_FIELDS)

    @classmethod
    def from_dict(cls, d: dict) -> "CsSnapshot":
        d = dict(d)
        d.pop("v", None)
        known = {f for f in cls.__dataclass_fields__ if f != "extra"}
        extra = {k: d.pop(k) for k in list(d) if k not in known}
        return cls(extra=extra, **d)
