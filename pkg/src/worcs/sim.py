"""Desk-scale experiment harness: miscoverage, width comparisons, the four
worked applications, fixed-vs-uniform widths, and timing.

Every experiment is a deterministic function of (config, master seed):
per-replication seeds are split from the master seed, so results are
reproducible under any parallelism degree.  The one exception is the timing
scenario, which measures wall clocks.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
import subprocess
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _backend
from .bounded import BoundedCsState, bm_halfwidth, hoeffding_ci
from .errors import ValidationError
from .population import PopulationSpec, draw_stream_batch, split_seeds
from .ppr import PprState, coupled_prior

SCENARIOS = (
    "miscoverage", "width_compare", "survey_A", "permutation_B",
    "shapley_C", "intervention_D", "fixed_vs_uniform_G", "timing_H",
)

_DEFAULT_REPLICATIONS = {
    "miscoverage": 5000,
    "width_compare": 100,
    "survey_A": 200,
    "permutation_B": 200,
    "shapley_C": 100,
    "intervention_D": 100,
    "fixed_vs_uniform_G": 50,
    "timing_H": 100,
}


@dataclass
class ExperimentConfig:
    scenario: str
    alpha: float = 0.05
    replications: int | None = None
    seed: int = 0
    population_size: int = 1000
    methods: tuple[str, ...] | None = None
    parallelism: int = 1
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValidationError(f"unknown scenario {self.scenario!r}",
                                  field="scenario")
        if self.replications is not None and self.replications < 1:
            raise ValidationError("replications must be >= 1",
                                  field="replications")
        if not 0 < self.alpha < 1:
            raise ValidationError("alpha must be in (0, 1)", field="alpha")

    @property
    def r(self) -> int:
        return self.replications or _DEFAULT_REPLICATIONS[self.scenario]

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        if "methods" in d and d["methods"] is not None:
            d["methods"] = tuple(d["methods"])
        return cls(**d)

    def to_canonical_json(self) -> str:
        d = {
            "scenario": self.scenario, "alpha": self.alpha,
            "replications": self.r, "seed": self.seed,
            "population_size": self.population_size,
            "methods": list(self.methods) if self.methods else None,
            "parallelism": self.parallelism, "params": self.params,
        }
        return json.dumps(d, sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.to_canonical_json().encode()).hexdigest()[:16]


@dataclass
class SimResult:
    scenario: str
    tables: dict[str, tuple[list[str], list[tuple]]]
    summary: dict
    manifest: dict


def _git_describe() -> str:
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty"],
                             capture_output=True, text=True, timeout=5)
        return out.stdout.strip() or "unknown"
    except Exception:
        return "unknown"


def _finish(cfg: ExperimentConfig, tables, summary, t_start) -> SimResult:
    manifest = {
        "scenario": cfg.scenario,
        "config_hash": cfg.config_hash(),
        "seed": cfg.seed,
        "backend": _backend.BACKEND_NAME,
        "git_describe": _git_describe(),
        "wall_time_s": round(time.perf_counter() - t_start, 3),
    }
    return SimResult(cfg.scenario, tables, summary, manifest)


def run_scenario(cfg: ExperimentConfig) -> SimResult:
    return {
        "miscoverage": run_miscoverage,
        "width_compare": run_width_compare,
        "survey_A": run_survey_experiment,
        "permutation_B": run_permutation_experiment,
        "shapley_C": run_shapley_experiment,
        "intervention_D": run_intervention_experiment,
        "fixed_vs_uniform_G": run_fixed_vs_uniform,
        "timing_H": run_timing,
    }[cfg.scenario](cfg)


# -- shared trace helpers -----------------------------------------------------

def _bounded_widths(x2d, n_pop, lower, upper, alpha, sched_kind, t0=0.0):
    """(centers, halfwidths) per replication/time for a bounded-mean CS."""
    res = _backend.bounded_trace(x2d, n_pop, lower, upper, alpha, sched_kind,
                                 t0=t0)
    center = res["num_w"] / res["den_w"]
    log2a = math.log(2.0 / alpha)
    psi = res["psi_h"] if sched_kind in (
        _backend.SCHED_CONSTANT, _backend.SCHED_FIXED_OPT,
        _backend.SCHED_HOEFFDING_SPREAD) else res["psi_e_var"]
    hw = (psi + log2a) / res["den_w"]
    return center, hw


def _ever_missed_bounded(x2d, mu, n_pop, lower, upper, alpha, sched_kind,
                         t0=0.0):
    center, hw = _bounded_widths(x2d, n_pop, lower, upper, alpha, sched_kind,
                                 t0)
    miss = np.abs(mu - center) > hw
    return np.maximum.accumulate(miss, axis=-1)


def _ever_missed_bm(x2d, mu, n_pop, n_tune, lower, upper, alpha):
    t = np.arange(1, x2d.shape[-1] + 1)
    mean = np.cumsum(x2d, axis=-1) / t
    hw = np.array([bm_halfwidth(tt, n_tune, n_pop, lower, upper, alpha)
                   if tt <= n_pop - 1 else math.inf for tt in t])
    miss = np.abs(mu - mean) > hw
    return np.maximum.accumulate(miss, axis=-1)


def _ever_missed_ppr(bits2d, n_plus, n_pop, alpha, a=1.0, b=1.0):
    logr = _backend.ppr_point_trace(np.asarray(bits2d, dtype=np.float64),
                                    n_pop, n_plus, a, b)
    miss = logr >= -math.log(alpha)
    return np.maximum.accumulate(miss, axis=-1)


def _t_grid(n: int) -> np.ndarray:
    g = np.unique(np.geomspace(1, n, 60).astype(int))
    return g


# -- miscoverage --------------------------------------------------------------

def _miscoverage_chunk(pop_name, n, n_plus, values, batch_seeds, methods,
                       alpha, bm_tune):
    """Per-chunk ever-miscovered arrays; top level so pools can pickle it."""
    if pop_name == "binary":
        spec = PopulationSpec.binary(n, n_plus)
        x = draw_stream_batch(spec, batch_seeds).astype(np.float64)
        mu = n_plus / n
    else:
        x = np.empty((len(batch_seeds), n))
        for i, sd in enumerate(batch_seeds):
            g = np.random.Generator(np.random.Philox(int(sd)))
            x[i] = g.permutation(values)
        mu = float(np.mean(values))
    out = {}
    for m in methods:
        if m == "ppr":
            out[m] = _ever_missed_ppr(x, n_plus, n, alpha)
        elif m == "hoeffding":
            out[m] = _ever_missed_bounded(x, mu, n, 0.0, 1.0, alpha,
                                          _backend.SCHED_HOEFFDING_SPREAD)
        elif m == "eb":
            out[m] = _ever_missed_bounded(x, mu, n, 0.0, 1.0, alpha,
                                          _backend.SCHED_EB_SPREAD)
        elif m == "bm":
            out[m] = _ever_missed_bm(x, mu, n, bm_tune, 0.0, 1.0, alpha)
        else:
            raise ValidationError(f"unknown method {m!r}", field="methods")
    return out


def _miscoverage_chunk_star(args):
    return _miscoverage_chunk(*args)


def run_miscoverage(cfg: ExperimentConfig) -> SimResult:
    """Time-uniform miscoverage rates over seeded replications.

    The count-parameter method only applies to the binary population; the
    bounded-mean methods run on both.  Chunks run serially or on a process
    pool per cfg.parallelism; per-replication seeds come from splitting the
    master seed, so the rates are identical under any parallelism degree.
    """
    t0 = time.perf_counter()
    n = cfg.population_size
    r = cfg.r
    alpha = cfg.alpha
    methods = cfg.methods or ("ppr", "hoeffding", "eb", "bm")
    seeds = split_seeds(cfg.seed, r + 1)
    rep_seeds, pop_seed = seeds[:r], seeds[r]
    grid = _t_grid(n)
    bm_tune = int(cfg.params.get("bm_tune", n // 2))

    rng = np.random.Generator(np.random.Philox(pop_seed))
    pops = {"binary": (n // 2, None), "uniform": (None, rng.random(n))}

    header = ["population", "method", "t", "miscoverage", "ci_lo", "ci_hi"]
    rows = []
    finals = {}
    chunk = int(cfg.params.get("chunk", 1000))
    for pop_name, (n_plus, values) in pops.items():
        applicable = [m for m in methods
                      if not (m == "ppr" and pop_name != "binary")]
        jobs = [(pop_name, n, n_plus, values, rep_seeds[s:s + chunk],
                 applicable, alpha, bm_tune)
                for s in range(0, r, chunk)]
        if cfg.parallelism > 1:
            from concurrent.futures import ProcessPoolExecutor

            with ProcessPoolExecutor(max_workers=cfg.parallelism) as pool:
                parts = list(pool.map(_miscoverage_chunk_star, jobs))
        else:
            parts = [_miscoverage_chunk(*job) for job in jobs]
        for m in applicable:
            rate = np.vstack([p[m] for p in parts]).mean(axis=0)
            se = np.sqrt(np.maximum(rate * (1 - rate), 0.0) / r)
            for t in grid:
                rr = rate[t - 1]
                rows.append((pop_name, m, int(t), float(rr),
                             float(max(0.0, rr - 3 * se[t - 1])),
                             float(min(1.0, rr + 3 * se[t - 1]))))
            finals[f"{pop_name}/{m}"] = float(rate[-1])

    slack = alpha + 3 * math.sqrt(alpha * (1 - alpha) / r)
    summary = {
        "final_miscoverage": finals,
        "threshold": slack,
        "all_within": all(v <= slack for v in finals.values()),
    }
    return _finish(cfg, {"miscoverage": (header, rows)}, summary, t0)


# -- width comparison ---------------------------------------------------------

def _population_values(kind: str, n: int, pop_seed: int) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(pop_seed))
    if kind == "zero_variance":
        return np.full(n, 0.5)
    if kind == "low_variance":
        return rng.beta(50, 50, size=n)
    if kind == "binary":
        return np.concatenate([np.ones(n // 2), np.zeros(n - n // 2)])
    if kind == "uniform":
        return rng.random(n)
    raise ValidationError(f"unknown population shape {kind!r}", field="params")


def run_width_compare(cfg: ExperimentConfig) -> SimResult:
    """Mean band widths by method/time on fixed population shapes, plus the
    Hoeffding-Serfling baseline comparison at a matched tuning time."""
    t0 = time.perf_counter()
    n = cfg.population_size
    r = cfg.r
    alpha = cfg.alpha
    shapes = cfg.params.get("shapes",
                            ("zero_variance", "low_variance", "binary"))
    seeds = split_seeds(cfg.seed, r + 1)
    rep_seeds, pop_seed = seeds[:r], seeds[r]
    grid = _t_grid(n)

    header = ["population", "method", "t", "mean_width", "frac_eb_narrower"]
    rows = []
    summary = {}
    for shape in shapes:
        values = _population_values(shape, n, pop_seed)
        x = np.empty((r, n))
        for i, sd in enumerate(rep_seeds):
            g = np.random.Generator(np.random.Philox(int(sd)))
            x[i] = g.permutation(values)
        _, hw_h = _bounded_widths(x, n, 0.0, 1.0, alpha,
                                  _backend.SCHED_HOEFFDING_SPREAD)
        _, hw_e = _bounded_widths(x, n, 0.0, 1.0, alpha,
                                  _backend.SCHED_EB_SPREAD)
        eb_narrower = hw_e < hw_h
        for t in grid:
            rows.append((shape, "hoeffding", int(t),
                         float(hw_h[:, t - 1].mean() * 2), ""))
            rows.append((shape, "eb", int(t), float(hw_e[:, t - 1].mean() * 2),
                         float(eb_narrower[:, t - 1].mean())))
        burn = int(cfg.params.get("burn_in", 50))
        summary[f"{shape}/frac_seeds_eb_narrower_after_burnin"] = float(
            np.mean(eb_narrower[:, burn - 1:].all(axis=1)))
        summary[f"{shape}/frac_seeds_h_narrower_at_half"] = float(
            np.mean(~eb_narrower[:, n // 2 - 1]))

    # Hoeffding-Serfling baseline, both tuned at n/2 (widths are data-free).
    tune = int(cfg.params.get("bm_tune", n // 2))
    dummy = np.zeros((1, n))
    _, hw_ours = _bounded_widths(dummy, n, 0.0, 1.0, alpha,
                                 _backend.SCHED_FIXED_OPT, t0=float(tune))
    hw_ours = hw_ours[0]
    bm_rows = []
    for t in grid:
        if t <= n - 1:
            bm_hw = bm_halfwidth(int(t), tune, n, 0.0, 1.0, alpha)
            bm_rows.append((int(t), float(hw_ours[t - 1] * 2),
                            float(bm_hw * 2)))
    summary["bm/tune"] = tune
    summary["bm/ours_at_tune"] = float(hw_ours[tune - 1])
    summary["bm/bm_at_tune"] = bm_halfwidth(tune, tune, n, 0.0, 1.0, alpha)
    for t_chk in (n // 10, 9 * n // 10):
        summary[f"bm/ours_at_{t_chk}"] = float(hw_ours[t_chk - 1])
        summary[f"bm/bm_at_{t_chk}"] = bm_halfwidth(t_chk, tune, n, 0.0, 1.0,
                                                    alpha)
    tables = {
        "widths": (header, rows),
        "bm_compare": (["t", "width_ours", "width_bm"], bm_rows),
    }
    return _finish(cfg, tables, summary, t0)


# -- worked applications ------------------------------------------------------

def _ppr_adaptive_run(spec, seed, alpha, a, b, stop_fn, max_steps=None):
    """Step a count CS until stop_fn(set_lo, set_hi) returns a decision."""
    from .population import draw_stream

    st = PprState(spec.n, a, b, track_intersection=True)
    stream = draw_stream(spec, seed)
    max_steps = max_steps or spec.n
    for x in stream:
        st.update(int(x))
        cs = st.confidence_set(alpha)
        decision = stop_fn(cs.set_lo, cs.set_hi)
        if decision is not None:
            return st.t, decision
        if st.t >= max_steps:
            break
    return st.t, None


def run_survey_experiment(cfg: ExperimentConfig) -> SimResult:
    """Two-color urn monitoring: stop when the color sets become disjoint."""
    t0 = time.perf_counter()
    n = cfg.population_size
    n_plus = int(cfg.params.get("n_plus", int(0.65 * n)))
    spec = PopulationSpec.binary(n, n_plus)
    seeds = split_seeds(cfg.seed, cfg.r)

    def stop(lo, hi):
        if lo is None:
            return None
        if 2 * hi < n:
            return "minority"
        if 2 * lo > n:
            return "majority"
        return None

    header = ["seed_index", "stop_t", "decision"]
    rows = []
    stop_ts = []
    for i, sd in enumerate(seeds):
        t, decision = _ppr_adaptive_run(spec, sd, cfg.alpha, 1.0, 1.0, stop)
        rows.append((i, t, decision or "none"))
        stop_ts.append(t)
    stop_ts = np.asarray(stop_ts)
    correct = "majority" if 2 * n_plus > n else "minority"
    summary = {
        "median_stop_t": float(np.median(stop_ts)),
        "frac_stopped_before_half": float(np.mean(stop_ts <= n // 2)),
        "frac_correct": float(np.mean([r[2] == correct for r in rows])),
    }
    return _finish(cfg, {"survey": (header, rows)}, summary, t0)


def exact_tea_tasting_p() -> tuple[Fraction, int, int]:
    """Exhaustive enumeration of the 12-cup, 6/6 guessing experiment.

    Returns (P, hits, total): the probability that a uniformly random
    6-of-12 guess identifies at least 10 cups correctly, as an exact
    fraction over all C(12,6) guess patterns.
    """
    true_set = frozenset(range(6))
    hits = 0
    total = 0
    for guess in itertools.combinations(range(12), 6):
        overlap = len(true_set & frozenset(guess))
        correct = 2 * overlap  # matched picks plus matched non-picks
        total += 1
        if correct >= 10:
            hits += 1
    return Fraction(hits, total), hits, total


def run_permutation_experiment(cfg: ExperimentConfig) -> SimResult:
    """Adaptive monitoring of an exact permutation p-value.

    The population is the indicator, over all C(12,6) = 924 guess patterns,
    of identifying >= 10 cups correctly; sampling patterns WoR and tracking
    the count CS decides on which side of the 5% bar the exact p-value lies.
    A boundary-peaked prior run is included for comparison.
    """
    t0 = time.perf_counter()
    p_exact, hits, total = exact_tea_tasting_p()
    spec = PopulationSpec.binary(total, hits)
    alpha = cfg.alpha
    perm_level = float(cfg.params.get("perm_level", 0.05))
    threshold = perm_level * total
    kappa = float(cfg.params.get("prior_concentration", 100.0))
    priors = {
        "uniform": (1.0, 1.0),
        "coupled": coupled_prior(perm_level, kappa),
    }
    seeds = split_seeds(cfg.seed, cfg.r)

    def stop(lo, hi):
        if lo is None:
            return None
        if hi < threshold:
            return "below"
        if lo > threshold:
            return "above"
        return None

    header = ["seed_index", "prior", "stop_t", "decision"]
    rows = []
    stops = {name: [] for name in priors}
    correct_side = "below" if p_exact < Fraction(perm_level) else "above"
    n_correct = 0
    for i, sd in enumerate(seeds):
        for name, (a, b) in priors.items():
            t, decision = _ppr_adaptive_run(spec, sd, alpha, a, b, stop)
            rows.append((i, name, t, decision or "none"))
            stops[name].append(t)
            if name == "uniform" and decision == correct_side:
                n_correct += 1
    summary = {
        "exact_p": f"{p_exact.numerator}/{p_exact.denominator}",
        "exact_p_float": float(p_exact),
        "frac_correct_uniform": n_correct / cfg.r,
        "median_stop_uniform": float(np.median(stops["uniform"])),
        "median_stop_coupled": float(np.median(stops["coupled"])),
    }
    return _finish(cfg, {"permutation": (header, rows)}, summary, t0)


def shapley_contributions(costs) -> tuple[np.ndarray, np.ndarray]:
    """(all permutations' per-player marginal contributions, exact values).

    The coalition value is the largest cost in the coalition, so a player's
    marginal contribution in an ordering is the positive part of its cost
    over the running maximum before it.
    """
    costs = np.asarray(costs, dtype=np.float64)
    b = costs.shape[0]
    perms = np.array(list(itertools.permutations(range(b))), dtype=np.int64)
    vals = costs[perms]
    runmax_before = np.concatenate(
        [np.zeros((perms.shape[0], 1)),
         np.maximum.accumulate(vals, axis=1)[:, :-1]], axis=1)
    marg = np.maximum(vals - runmax_before, 0.0)
    contrib = np.zeros_like(marg)
    rows = np.arange(perms.shape[0])[:, None]
    contrib[rows, perms] = marg
    exact = contrib.mean(axis=0)
    return contrib, exact


def run_shapley_experiment(cfg: ExperimentConfig) -> SimResult:
    """Simultaneous cost-share bands for 7 players via WoR-sampled orderings."""
    t0 = time.perf_counter()
    costs = tuple(cfg.params.get("costs", (1, 10, 40, 80, 130, 175, 200)))
    contrib, exact = shapley_contributions(costs)
    n_perm, b = contrib.shape
    upper = float(max(costs))
    alpha = cfg.alpha
    seeds = split_seeds(cfg.seed, cfg.r)

    header = ["seed_index", "all_covered", "ident_t"]
    rows = []
    top = int(np.argmax(exact))
    n_covered = 0
    ident_ts = []
    for i, sd in enumerate(seeds):
        g = np.random.Generator(np.random.Philox(int(sd)))
        order = g.permutation(n_perm)
        x = contrib[order].T  # (players, time)
        center, hw = _bounded_widths(x, n_perm, 0.0, upper, alpha,
                                     _backend.SCHED_EB_SPREAD)
        lo = np.maximum.accumulate(np.maximum(center - hw, 0.0), axis=1)
        hi = np.minimum.accumulate(np.minimum(center + hw, upper), axis=1)
        # exhaustion: all contributions observed, totals known exactly
        lo[:, -1] = np.maximum(lo[:, -1], exact)
        hi[:, -1] = np.minimum(hi[:, -1], exact)
        covered = bool(np.all((exact[:, None] >= lo - 1e-12)
                              & (exact[:, None] <= hi + 1e-12)))
        n_covered += covered
        others = [p for p in range(b) if p != top]
        sep = lo[top] > np.max(hi[others], axis=0)
        ident_t = int(np.argmax(sep) + 1) if sep.any() else None
        ident_ts.append(ident_t)
        rows.append((i, covered, ident_t if ident_t is not None else ""))
    summary = {
        "exact_values": [float(v) for v in exact],
        "efficiency_total": float(exact.sum()),
        "frac_all_covered": n_covered / cfg.r,
        "frac_identified": float(np.mean([t is not None for t in ident_ts])),
        "median_ident_t": float(np.median([t for t in ident_ts
                                           if t is not None])),
        "top_player": top,
    }
    return _finish(cfg, {"shapley": (header, rows)}, summary, t0)


def run_intervention_experiment(cfg: ExperimentConfig) -> SimResult:
    """Staged-rollout monitoring: when does the effect band exclude zero?"""
    t0 = time.perf_counter()
    n = int(cfg.params.get("n", 3000))
    lower, upper = -100.0, 100.0
    alpha = cfg.alpha
    seeds = split_seeds(cfg.seed, cfg.r + 1)
    rep_seeds, pop_seed = seeds[:cfg.r], seeds[cfg.r]
    rng = np.random.Generator(np.random.Philox(pop_seed))
    values = rng.beta(3, 2, size=n) * (upper - lower) + lower

    runs = {
        "t0=10": (_backend.SCHED_FIXED_OPT, 10.0),
        "t0=100": (_backend.SCHED_FIXED_OPT, 100.0),
        "t0=1000": (_backend.SCHED_FIXED_OPT, 1000.0),
        "spread": (_backend.SCHED_HOEFFDING_SPREAD, 0.0),
    }
    x = np.empty((cfg.r, n))
    for i, sd in enumerate(rep_seeds):
        g = np.random.Generator(np.random.Philox(int(sd)))
        x[i] = g.permutation(values)

    header = ["schedule", "seed_index", "first_exclusion_t"]
    rows = []
    summary = {"population_mean": float(values.mean()),
               "population_in_bounds": bool((values >= lower).all()
                                            and (values <= upper).all())}
    widths_at = {}
    for name, (kind, t0_arg) in runs.items():
        center, hw = _bounded_widths(x, n, lower, upper, alpha, kind,
                                     t0=t0_arg)
        lo_run = np.maximum.accumulate(center - hw, axis=1)
        excl = lo_run > 0.0
        firsts = []
        for i in range(cfg.r):
            ft = int(np.argmax(excl[i]) + 1) if excl[i].any() else None
            rows.append((name, i, ft if ft is not None else ""))
            firsts.append(ft)
        summary[f"{name}/frac_excluding_zero"] = float(
            np.mean([f is not None for f in firsts]))
        good = [f for f in firsts if f is not None]
        summary[f"{name}/median_first_exclusion"] = (
            float(np.median(good)) if good else None)
        widths_at[name] = float(hw[0, 99])  # width at t=100 (data-free)
    summary["width_at_100/t0=100"] = widths_at["t0=100"]
    summary["width_at_100/t0=1000"] = widths_at["t0=1000"]
    return _finish(cfg, {"intervention": (header, rows)}, summary, t0)


def run_fixed_vs_uniform(cfg: ExperimentConfig) -> SimResult:
    """Time-uniform band widths against the fixed-time interval, plus the
    count CS, on the half/half binary population."""
    t0 = time.perf_counter()
    n = cfg.population_size
    alpha = cfg.alpha
    tune = int(cfg.params.get("tune", n // 2))
    spec = PopulationSpec.binary(n, n // 2)
    seeds = split_seeds(cfg.seed, cfg.r)
    x = draw_stream_batch(spec, seeds).astype(np.float64)

    _, hw_fixed = _bounded_widths(x[:1], n, 0.0, 1.0, alpha,
                                  _backend.SCHED_FIXED_OPT, t0=float(tune))
    _, hw_spread = _bounded_widths(x[:1], n, 0.0, 1.0, alpha,
                                   _backend.SCHED_HOEFFDING_SPREAD)
    hw_fixed, hw_spread = hw_fixed[0], hw_spread[0]
    ci_hw = np.array([hoeffding_ci(x[0, :t], n, 0.0, 1.0, alpha).halfwidth
                      for t in _t_grid(n)])

    ppr_widths = np.zeros(n)
    for row in x:
        st = PprState(n, 1.0, 1.0, track_intersection=True)
        for t, xx in enumerate(row, 1):
            st.update(int(xx))
            cs = st.confidence_set(alpha)
            ppr_widths[t - 1] += (cs.set_hi - cs.set_lo) / n
    ppr_widths /= len(x)

    grid = _t_grid(n)
    header = ["t", "ci_width", "cs_fixed_width", "cs_spread_width",
              "ppr_width"]
    rows = []
    for gi, t in enumerate(grid):
        rows.append((int(t), float(2 * ci_hw[gi]),
                     float(2 * hw_fixed[t - 1]), float(2 * hw_spread[t - 1]),
                     float(ppr_widths[t - 1])))
    ci_at_tune = hoeffding_ci(x[0, :tune], n, 0.0, 1.0, alpha).halfwidth
    summary = {
        "tune": tune,
        "ratio_fixed_cs_over_ci_at_tune": float(hw_fixed[tune - 1]
                                                / ci_at_tune),
        "ratio_spread_cs_over_ci_at_tune": float(hw_spread[tune - 1]
                                                 / ci_at_tune),
    }
    return _finish(cfg, {"fixed_vs_uniform": (header, rows)}, summary, t0)


def run_timing(cfg: ExperimentConfig) -> SimResult:
    """Wall-clock cost of full traces; checks the O(1)-per-update claim."""
    t0 = time.perf_counter()
    n = cfg.population_size
    reps = cfg.r
    alpha = cfg.alpha
    spec = PopulationSpec.binary(n, n // 2)
    bits = draw_stream_batch(spec, split_seeds(cfg.seed, 1)).astype(float)[0]

    def time_stream(method):
        out = []
        for _ in range(reps):
            st = BoundedCsState(n, 0.0, 1.0, alpha, method=method,
                                intersect=True)
            t1 = time.perf_counter()
            for xx in bits:
                st.update(xx)
            out.append(time.perf_counter() - t1)
        return np.asarray(out)

    def time_ppr():
        out = []
        for _ in range(max(1, reps // 10)):
            st = PprState(n, 1.0, 1.0, track_intersection=True)
            t1 = time.perf_counter()
            for xx in bits:
                st.update(int(xx))
                st.confidence_set(alpha)
            out.append(time.perf_counter() - t1)
        return np.asarray(out)

    times = {"hoeffding": time_stream("hoeffding"), "eb": time_stream("eb"),
             "ppr": time_ppr()}
    header = ["method", "mean_seconds", "std_seconds"]
    rows = [(m, float(v.mean()), float(v.std())) for m, v in times.items()]

    # per-update cost at 10x the population size
    n_big = 10 * n
    spec_big = PopulationSpec.binary(n_big, n_big // 2)
    bits_big = draw_stream_batch(spec_big, split_seeds(cfg.seed, 1)).astype(
        float)[0]
    ratios = {}
    for method in ("hoeffding", "eb"):
        per_small = []
        per_big = []
        for rep in range(6):
            st = BoundedCsState(n, 0.0, 1.0, alpha, method=method)
            t1 = time.perf_counter()
            for xx in bits:
                st.update(xx)
            if rep:  # first pass warms caches
                per_small.append((time.perf_counter() - t1) / n)
            st = BoundedCsState(n_big, 0.0, 1.0, alpha, method=method)
            t1 = time.perf_counter()
            for xx in bits_big:
                st.update(xx)
            if rep:
                per_big.append((time.perf_counter() - t1) / n_big)
        ratios[method] = float(np.median(per_big) / np.median(per_small))
    summary = {
        "ppr_trace_seconds": float(times["ppr"].mean()),
        "per_update_ratio": ratios,
        "backend": _backend.BACKEND_NAME,
    }
    return _finish(cfg, {"timing": (header, rows)}, summary, t0)


# -- output -------------------------------------------------------------------

def write_result(result: SimResult, out_dir) -> list[str]:
    """Write each table as CSV plus a JSON manifest; returns written paths."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    written = []
    for name, (header, rows) in result.tables.items():
        path = os.path.join(out_dir, f"{result.scenario}_{name}.csv")
        with open(path, "w", encoding="utf-8") as f:
            f.write(",".join(header) + "\n")
            for row in rows:
                f.write(",".join("" if v is None else str(v) for v in row)
                        + "\n")
        written.append(path)
    manifest = dict(result.manifest)
    manifest["summary"] = result.summary
    path = os.path.join(out_dir, f"{result.scenario}_manifest.json")
    with open(path, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
    written.append(path)
    return written
