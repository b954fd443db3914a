"""Command-line front door.

Verbs: ``stream`` (observations in, one snapshot line out per observation),
``ci`` (one fixed-time interval), ``pvalue`` (final anytime p-value for a
null), ``simexp`` (experiment harness), ``serve`` (HTTP session service).

Exit codes: 0 success or clean early stop, 2 usage/validation problems,
3 internal invariant violations.  Snapshot output is append-only NDJSON
(schema-versioned, "v":1); ``--format csv`` emits the flat fields only.
"""

from __future__ import annotations

import json
import sys

import click

from .engines import Engine, EngineConfig
from .errors import IntegrityError, WorcsError
from .snapshots import CsSnapshot

EXIT_VALIDATION = 2
EXIT_INTERNAL = 3


def _fail(message: str, code: int = EXIT_VALIDATION):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _iter_lines(input_path):
    if input_path and input_path != "-":
        with open(input_path, "r", encoding="utf-8") as f:
            yield from f
    else:
        yield from sys.stdin


def _engine_config(method, n, alpha, lower, upper, schedule, t0, lambda_value,
                   prior_a, prior_b, prior_boundary, prior_kappa, dm_prior,
                   null, stop_when, no_intersect, emit_set, bm_tune):
    if prior_boundary is not None:
        from .ppr import coupled_prior

        if prior_kappa is None:
            _fail("--prior-boundary needs --prior-kappa")
        prior_a, prior_b = coupled_prior(prior_boundary, prior_kappa)
    sched = None
    if schedule is not None:
        sched = {"kind": schedule}
        if t0 is not None:
            sched["t0"] = t0
        if lambda_value is not None:
            sched["value"] = lambda_value
    cfg = {
        "method": method, "n": n, "alpha": alpha,
        "prior_a": prior_a, "prior_b": prior_b,
        "lower": lower, "upper": upper,
        "schedule": sched, "bm_tune": bm_tune,
        "intersect": not no_intersect, "emit_set": emit_set,
        "nulls": list(null), "stops": list(stop_when),
    }
    if dm_prior:
        cfg["dm_prior"] = [float(v) for v in dm_prior.split(",")]
    return EngineConfig.from_dict(cfg)


def _common_engine_options(fn):
    opts = [
        click.option("--method", required=True,
                     type=click.Choice(["ppr", "dm", "hoeffding", "eb", "bm"]),
                     help="confidence-sequence family to run"),
        click.option("--N", "--population-size", "n", required=True, type=int,
                     help="finite population size"),
        click.option("--alpha", default=0.05, show_default=True, type=float,
                     help="error level of the confidence sequence"),
        click.option("--lower", type=float, default=None,
                     help="lower support bound (bounded methods)"),
        click.option("--upper", type=float, default=None,
                     help="upper support bound (bounded methods)"),
        click.option("--schedule",
                     type=click.Choice(["spread", "t0", "constant", "ci"]),
                     default=None,
                     help="weight schedule: spread the width optimization "
                          "over time, tune it for --t0, hold a constant "
                          "value, or tune for a fixed sample size"),
        click.option("--t0", type=int, default=None,
                     help="target time the width is optimized for"),
        click.option("--lambda-value", type=float, default=None,
                     help="value for the constant schedule"),
        click.option("--prior-a", type=float, default=1.0, show_default=True,
                     help="working-prior success parameter (count methods)"),
        click.option("--prior-b", type=float, default=1.0, show_default=True,
                     help="working-prior failure parameter (count methods)"),
        click.option("--prior-boundary", type=float, default=None,
                     help="peak the working prior at this population "
                          "fraction (decision-coupled prior)"),
        click.option("--prior-kappa", type=float, default=None,
                     help="concentration of the decision-coupled prior"),
        click.option("--dm-prior", type=str, default=None,
                     help="comma-separated per-category prior parameters"),
        click.option("--null", multiple=True,
                     help='null hypothesis, e.g. "count_leq:550" or '
                          '"mean_geq:0.4" (repeatable)'),
        click.option("--stop-when", multiple=True,
                     help='stopping rule: "reject_null", "excludes:V", '
                          '"width_below:W" or "sets_disjoint" (repeatable)'),
        click.option("--no-intersect", is_flag=True,
                     help="disable the running intersection of the sets"),
        click.option("--emit-set", is_flag=True,
                     help="include the exact index set in count snapshots"),
        click.option("--bm-tune", type=int, default=None,
                     help="tuning time of the baseline band"),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


@click.group()
def main():
    """Streaming inference for sampling without replacement."""


@main.command()
@_common_engine_options
@click.option("--input", "input_path", default="-",
              help="observations file, one per line (default stdin)")
@click.option("--format", "fmt", type=click.Choice(["ndjson", "csv"]),
              default="ndjson", show_default=True)
def stream(method, n, alpha, lower, upper, schedule, t0, lambda_value,
           prior_a, prior_b, prior_boundary, prior_kappa, dm_prior, null,
           stop_when, no_intersect, emit_set, bm_tune, input_path, fmt):
    """Stream observations through a confidence sequence, one snapshot per
    observation."""
    try:
        cfg = _engine_config(method, n, alpha, lower, upper, schedule, t0,
                             lambda_value, prior_a, prior_b, prior_boundary,
                             prior_kappa, dm_prior, null, stop_when,
                             no_intersect, emit_set, bm_tune)
        engine = Engine(cfg)
    except WorcsError as e:
        _fail(str(e))
    if fmt == "csv":
        click.echo(CsSnapshot.csv_header())
    lineno = 0
    try:
        for raw in _iter_lines(input_path):
            raw = raw.strip()
            if not raw:
                continue
            lineno += 1
            if engine.exhausted:
                _fail(f"line {lineno}: observation after exhaustion (N={n})")
            try:
                value = engine.parse_value(raw)
                snap = engine.observe(value)
            except WorcsError as e:
                _fail(f"line {lineno}: {e}")
            click.echo(snap.to_json() if fmt == "ndjson"
                       else snap.to_csv_row())
            if snap.stopped and stop_when:
                reason, at = engine.stopped
                click.echo(json.dumps(
                    {"v": 1, "stop": True, "reason": reason, "t": at}))
                sys.exit(0)
    except IntegrityError as e:
        _fail(str(e), EXIT_INTERNAL)
    except OSError as e:
        _fail(str(e))


@main.command()
@click.option("--method", required=True, type=click.Choice(["hoeffding", "eb"]))
@click.option("--N", "--population-size", "n", required=True, type=int)
@click.option("--alpha", default=0.05, show_default=True, type=float)
@click.option("--lower", type=float, required=True)
@click.option("--upper", type=float, required=True)
@click.option("--perm-seed", type=int, default=0, show_default=True,
              help="seed for the internal sample permutation (variance-"
                   "adaptive method only)")
@click.option("--input", "input_path", default="-")
def ci(method, n, alpha, lower, upper, perm_seed, input_path):
    """Fixed-time confidence interval from a simple random sample."""
    from .bounded import eb_ci, hoeffding_ci

    try:
        data = [float(raw.strip()) for raw in _iter_lines(input_path)
                if raw.strip()]
        if method == "hoeffding":
            iv = hoeffding_ci(data, n, lower, upper, alpha)
        else:
            iv = eb_ci(data, n, lower, upper, alpha, perm_seed)
    except (WorcsError, ValueError) as e:
        _fail(str(e))
    click.echo(json.dumps({
        "v": 1, "method": method, "n": len(data), "N": n, "alpha": alpha,
        "lo": iv.lo, "hi": iv.hi, "center": iv.center,
        "halfwidth": iv.halfwidth,
    }, separators=(",", ":")))


@main.command()
@_common_engine_options
@click.option("--input", "input_path", default="-")
@click.option("--trace", is_flag=True, help="emit one p/e line per step")
def pvalue(method, n, alpha, lower, upper, schedule, t0, lambda_value,
           prior_a, prior_b, prior_boundary, prior_kappa, dm_prior, null,
           stop_when, no_intersect, emit_set, bm_tune, input_path, trace):
    """Run a stream and report the anytime-valid p-value for a null."""
    if not null:
        _fail("pvalue needs at least one --null")
    try:
        cfg = _engine_config(method, n, alpha, lower, upper, schedule, t0,
                             lambda_value, prior_a, prior_b, prior_boundary,
                             prior_kappa, dm_prior, null, stop_when,
                             no_intersect, emit_set, bm_tune)
        engine = Engine(cfg)
    except WorcsError as e:
        _fail(str(e))
    lineno = 0
    snap = None
    for raw in _iter_lines(input_path):
        raw = raw.strip()
        if not raw:
            continue
        lineno += 1
        try:
            snap = engine.observe(engine.parse_value(raw))
        except WorcsError as e:
            _fail(f"line {lineno}: {e}")
        if trace:
            click.echo(json.dumps({"v": 1, "t": snap.t,
                                   "p_value": snap.p_value,
                                   "e_value": snap.e_value},
                                  separators=(",", ":")))
    if snap is None:
        _fail("no observations supplied")
    click.echo(json.dumps({
        "v": 1, "t": snap.t, "null": [n_.describe() for n_ in cfg.nulls],
        "p_value": snap.p_value, "e_value": snap.e_value,
    }, separators=(",", ":")))


@main.group()
def simexp():
    """Run the simulation experiments."""


@simexp.command("run")
@click.argument("scenario")
@click.option("--config", "config_path", default=None,
              help="JSON file with experiment-config overrides")
@click.option("--out", "out_dir", default="simexp-results", show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--replications", type=int, default=None)
def simexp_run(scenario, config_path, out_dir, seed, replications):
    """Run SCENARIO and write CSV tables plus a JSON manifest."""
    from .sim import ExperimentConfig, run_scenario, write_result

    overrides = {}
    if config_path:
        try:
            with open(config_path, "r", encoding="utf-8") as f:
                overrides = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            _fail(f"cannot read config: {e}")
    overrides["scenario"] = scenario
    if seed is not None:
        overrides["seed"] = seed
    if replications is not None:
        overrides["replications"] = replications
    try:
        cfg = ExperimentConfig.from_dict(overrides)
        result = run_scenario(cfg)
    except WorcsError as e:
        _fail(str(e))
    except TypeError as e:
        _fail(f"bad config: {e}")
    paths = write_result(result, out_dir)
    click.echo(json.dumps({"written": paths, "summary": result.summary},
                          indent=2, default=str))


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True,
              help="0 binds an ephemeral port (printed on startup)")
@click.option("--state-file", default=None,
              help="append-only observation log for crash recovery")
@click.option("--max-sessions", type=int, default=10000, show_default=True)
def serve(host, port, state_file, max_sessions):
    """Serve the interactive monitoring HTTP API."""
    import socket

    import uvicorn

    from .service import SessionStore, create_app

    try:
        store = SessionStore(state_file=state_file, max_sessions=max_sessions)
    except WorcsError as e:
        _fail(str(e))
    app = create_app(store)
    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        sock.bind((host, port))
        sock.listen(128)
    except OSError as e:
        _fail(f"cannot bind {host}:{port}: {e}")
    bound_port = sock.getsockname()[1]
    click.echo(f"listening on http://{host}:{bound_port}")
    click.echo("READY", nl=True)
    sys.stdout.flush()
    config = uvicorn.Config(app, log_level="warning")
    server = uvicorn.Server(config)
    server.run(sockets=[sock])


if __name__ == "__main__":
    main()
