"""Fixed finite populations and seeded without-replacement streams.

A population is fixed and nonrandom; the only randomness in the whole
package is the order in which its items are observed.  Streams are driven
by the counter-based Philox generator so that the same (spec, seed) pair
replays byte-identically on any platform, and seed 0 is legal.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DomainError, EnumerationCapError, StateError, ValidationError

ENUMERATION_CAP = 10**6
_MATERIALIZE_CAP = 10**7


@dataclass(frozen=True)
class PopulationSpec:
    """A binary, categorical, or bounded real-valued finite population.

    Binary and categorical populations are stored as counts so that sizes up
    to 1e9 stay representable; bounded populations store their values plus
    the declared support [lower, upper].
    """

    kind: str
    n: int
    n_plus: int | None = None
    counts: tuple[int, ...] | None = None
    values: tuple[float, ...] | None = None
    lower: float | None = None
    upper: float | None = None

    def __post_init__(self):
        if self.kind == "binary":
            if self.n < 1:
                raise ValidationError("binary population needs N >= 1", field="N")
            if self.n_plus is None or not 0 <= self.n_plus <= self.n:
                raise ValidationError(
                    "n_plus must satisfy 0 <= n_plus <= N", field="n_plus")
        elif self.kind == "categorical":
            if self.counts is None or len(self.counts) < 2:
                raise ValidationError("categorical needs K >= 2 counts",
                                      field="counts")
            if any(c < 0 for c in self.counts):
                raise ValidationError("category counts must be >= 0",
                                      field="counts")
            if sum(self.counts) != self.n or self.n < 1:
                raise ValidationError("counts must sum to N >= 1", field="counts")
        elif self.kind == "bounded":
            if self.values is None or len(self.values) != self.n or self.n < 1:
                raise ValidationError("bounded needs N >= 1 values",
                                      field="values")
            if self.lower is None or self.upper is None:
                raise ValidationError("bounded needs explicit lower/upper",
                                      field="bounds")
            if not self.lower < self.upper:
                raise ValidationError("bounds must satisfy lower < upper",
                                      field="bounds")
            bad = [v for v in self.values
                   if not (self.lower <= v <= self.upper)]
            if bad:
                raise ValidationError(
                    f"value outside bounds [{self.lower}, {self.upper}]: {bad[0]}",
                    field="values")
        else:
            raise ValidationError(f"unknown population kind {self.kind!r}",
                                  field="kind")

    # -- constructors -----------------------------------------------------

    @classmethod
    def binary(cls, n: int, n_plus: int) -> "PopulationSpec":
        return cls(kind="binary", n=n, n_plus=n_plus)

    @classmethod
    def categorical(cls, counts) -> "PopulationSpec":
        counts = tuple(int(c) for c in counts)
        return cls(kind="categorical", n=sum(counts), counts=counts)

    @classmethod
    def bounded(cls, values, lower: float, upper: float) -> "PopulationSpec":
        values = tuple(float(v) for v in values)
        return cls(kind="bounded", n=len(values), values=values,
                   lower=float(lower), upper=float(upper))

    # -- derived quantities ------------------------------------------------

    @property
    def k(self) -> int:
        if self.kind == "categorical":
            return len(self.counts)
        if self.kind == "binary":
            return 2
        raise DomainError("bounded populations have no category count")

    @property
    def mean(self) -> float:
        if self.kind == "binary":
            return self.n_plus / self.n
        if self.kind == "categorical":
            raise DomainError("categorical populations have no scalar mean")
        return float(np.mean(self.values))

    def items(self) -> tuple:
        """The population multiset, materialized (small populations only)."""
        if self.n > _MATERIALIZE_CAP:
            raise DomainError("population too large to materialize")
        if self.kind == "binary":
            return (1,) * self.n_plus + (0,) * (self.n - self.n_plus)
        if self.kind == "categorical":
            out = []
            for cat, c in enumerate(self.counts):
                out.extend([cat] * c)
            return tuple(out)
        return self.values

    def to_dict(self) -> dict:
        if self.kind == "binary":
            return {"kind": "binary", "N": self.n, "n_plus": self.n_plus}
        if self.kind == "categorical":
            return {"kind": "categorical", "counts": list(self.counts)}
        return {"kind": "bounded", "values": list(self.values),
                "lower": self.lower, "upper": self.upper}


class ObservationStream:
    """Single-owner iterator over one uniformly random WoR ordering.

    Counts-based populations are sampled one conditional draw at a time
    (one uniform per step), so arbitrarily large populations never get
    materialized; bounded populations are shuffled once up front.
    """

    def __init__(self, spec: PopulationSpec, seed: int):
        if not 0 <= int(seed) < 2**64:
            raise ValidationError("seed must be a 64-bit unsigned integer",
                                  field="seed")
        self.spec = spec
        self.seed = int(seed)
        self.t = 0
        self._rng = np.random.Generator(np.random.Philox(self.seed))
        if spec.kind == "binary":
            self._rem = [spec.n - spec.n_plus, spec.n_plus]
        elif spec.kind == "categorical":
            self._rem = list(spec.counts)
        else:
            self._order = self._rng.permutation(np.asarray(spec.values))

    @property
    def remaining(self) -> int:
        return self.spec.n - self.t

    def __iter__(self):
        return self

    def __next__(self):
        if self.t >= self.spec.n:
            raise StopIteration
        spec = self.spec
        if spec.kind == "bounded":
            x = float(self._order[self.t])
        elif spec.kind == "binary":
            u = self._rng.random()
            total = spec.n - self.t
            x = 1 if u < self._rem[1] / total else 0
            self._rem[x] -= 1
        else:
            u = self._rng.random()
            total = spec.n - self.t
            acc = 0
            x = len(self._rem) - 1
            for cat, c in enumerate(self._rem):
                acc += c
                if u < acc / total:
                    x = cat
                    break
            self._rem[x] -= 1
        self.t += 1
        return x

    def take(self, k: int) -> list:
        if k > self.remaining:
            raise StateError("stream exhausted before k items")
        return [next(self) for _ in range(k)]

    def drain(self) -> list:
        return self.take(self.remaining)


def draw_stream(spec: PopulationSpec, seed: int) -> ObservationStream:
    """Deterministic uniformly-random WoR stream for (spec, seed)."""
    return ObservationStream(spec, seed)


def split_seeds(master_seed: int, n: int) -> list[int]:
    """Derive n independent 64-bit child seeds from a master seed."""
    children = np.random.SeedSequence(master_seed).spawn(n)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


def draw_stream_batch(spec: PopulationSpec, seeds) -> np.ndarray:
    """Materialize one stream per seed as a (len(seeds), N) array.

    Row i is bit/category/value-identical to draining
    ``draw_stream(spec, seeds[i])``; used by the simulation harness to avoid
    Python-level stepping.
    """
    seeds = list(seeds)
    r, n = len(seeds), spec.n
    if spec.kind == "bounded":
        out = np.empty((r, n), dtype=np.float64)
        vals = np.asarray(spec.values)
        for i, sd in enumerate(seeds):
            rng = np.random.Generator(np.random.Philox(int(sd)))
            out[i] = rng.permutation(vals)
        return out
    if spec.kind == "binary":
        u = np.empty((r, n), dtype=np.float64)
        for i, sd in enumerate(seeds):
            u[i] = np.random.Generator(np.random.Philox(int(sd))).random(n)
        out = np.empty((r, n), dtype=np.int8)
        rem_plus = np.full(r, spec.n_plus, dtype=np.float64)
        for t in range(n):
            x = u[:, t] < rem_plus / (n - t)
            out[:, t] = x
            rem_plus -= x
        return out
    raise DomainError("batch streams are provided for binary/bounded kinds")


# -- exact enumeration ----------------------------------------------------

def _multiset_sequences(counts):
    if sum(counts) == 0:
        yield ()
        return
    for cat, c in enumerate(counts):
        if c == 0:
            continue
        rest = list(counts)
        rest[cat] -= 1
        for tail in _multiset_sequences(rest):
            yield (cat,) + tail


def enumerate_orderings(spec: PopulationSpec, cap: int = ENUMERATION_CAP):
    """All distinct orderings with their exact probabilities.

    Binary/categorical populations enumerate distinct label sequences (the
    WoR product probability aggregated over indistinguishable items);
    bounded populations enumerate all N! orderings of distinguishable items.
    Probabilities are exact `Fraction`s summing to one.
    """
    n = spec.n
    if spec.kind == "binary":
        count = math.comb(n, spec.n_plus)
    elif spec.kind == "categorical":
        count = math.factorial(n)
        for c in spec.counts:
            count //= math.factorial(c)
    else:
        count = math.factorial(n)
    if count > cap:
        raise EnumerationCapError(
            f"{count} orderings exceed the enumeration cap of {cap}")

    out = []
    if spec.kind == "binary":
        p = Fraction(1, count)
        for seq in _multiset_sequences((spec.n - spec.n_plus, spec.n_plus)):
            out.append((seq, p))
    elif spec.kind == "categorical":
        p = Fraction(1, count)
        for seq in _multiset_sequences(spec.counts):
            out.append((seq, p))
    else:
        import itertools

        p = Fraction(1, count)
        for seq in itertools.permutations(spec.values):
            out.append((seq, p))
    return out


# -- loading --------------------------------------------------------------

def _as_text(source) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8")
    if isinstance(source, str):
        return source
    data = source.read()
    if isinstance(data, bytes):
        return data.decode("utf-8")
    return data


def load_population(source, format: str, *, kind: str | None = None,
                    lower: float | None = None, upper: float | None = None,
                    header: bool = False) -> PopulationSpec:
    """Parse a population from CSV lines or a JSON object.

    CSV carries one observation per line and needs `kind` (plus explicit
    bounds for bounded data -- bounds are never inferred from the data, or
    the boundedness guarantee would not survive hypothetical repeats).
    """
    text = _as_text(source)
    if format == "json":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as e:
            raise ValidationError(f"invalid JSON: {e}", line=e.lineno) from e
        k = obj.get("kind")
        if k == "binary":
            return PopulationSpec.binary(int(obj["N"]), int(obj["n_plus"]))
        if k == "categorical":
            return PopulationSpec.categorical(obj["counts"])
        if k == "bounded":
            if "lower" not in obj or "upper" not in obj:
                raise ValidationError("missing bounds", field="bounds")
            return PopulationSpec.bounded(obj["values"], obj["lower"],
                                          obj["upper"])
        raise ValidationError(f"unknown population kind {k!r}", field="kind")

    if format != "csv":
        raise ValidationError(f"unknown format {format!r}", field="format")
    if kind is None:
        raise ValidationError("CSV loading needs an explicit kind",
                              field="kind")

    lines = io.StringIO(text).read().splitlines()
    if header and lines:
        lines = lines[1:]
    rows = [(i + 1 + int(header), line.strip())
            for i, line in enumerate(lines) if line.strip()]
    if kind == "binary":
        vals = []
        for lineno, raw in rows:
            if raw not in ("0", "1"):
                raise ValidationError(f"expected 0/1, got {raw!r}",
                                      line=lineno)
            vals.append(int(raw))
        return PopulationSpec.binary(len(vals), sum(vals))
    if kind == "categorical":
        cats = []
        for lineno, raw in rows:
            try:
                cats.append(int(raw))
            except ValueError:
                raise ValidationError(f"expected category index, got {raw!r}",
                                      line=lineno) from None
        if not cats or min(cats) < 0:
            raise ValidationError("category indices must be >= 0")
        k_n = max(cats) + 1
        counts = [0] * max(k_n, 2)
        for c in cats:
            counts[c] += 1
        return PopulationSpec.categorical(counts)
    if kind == "bounded":
        if lower is None or upper is None:
            raise ValidationError("missing bounds", field="bounds")
        vals = []
        for lineno, raw in rows:
            try:
                v = float(raw)
            except ValueError:
                raise ValidationError(f"expected number, got {raw!r}",
                                      line=lineno) from None
            if not (lower <= v <= upper):
                raise ValidationError(
                    f"value outside bounds [{lower}, {upper}]: {v}",
                    line=lineno)
            vals.append(v)
        return PopulationSpec.bounded(vals, lower, upper)
    raise ValidationError(f"unknown population kind {kind!r}", field="kind")
