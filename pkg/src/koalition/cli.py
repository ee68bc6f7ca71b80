"""Command-line front end: config + poll CSV in, JSON reports and SVG out.

Exit codes: 0 success, 1 usage, 2 data error, 3 config error. All errors
go to stderr as a single JSON line. Reports are byte-deterministic for a
given argv and input files: keys are sorted, fractions carry 6 decimals,
and nothing depends on the wall clock or the worker count.
"""

from __future__ import annotations

import argparse
import configparser
import datetime as dt
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import engine, forecast, pooling, polls, posterior, viz
from .electoral import ElectionRules
from .engine import EventSpec
from .pooling import NoPollsError, PoolingConfig
from .polls import PartyRegistry, Party, PollError

__all__ = ["Config", "ConfigError", "UsageError", "load_config", "main"]

FIGURES = (
    "classic",
    "poe-bars",
    "density",
    "parliaments",
    "ridgeline",
    "poe-timeline",
    "fan",
    "forecast-ridgeline",
)

DEFAULT_SEED = 42


class ConfigError(ValueError):
    pass


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class Config:
    registry: PartyRegistry
    rules: ElectionRules
    pooling: PoolingConfig
    prior_alpha: float
    m: int
    tau: float
    coalitions: dict[str, tuple[str, ...]]


def load_config(path: str | Path) -> Config:
    """Read the INI-style run configuration; see docs/config.example.ini."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # party ids are case-sensitive
    try:
        with open(path, encoding="utf-8") as handle:
            parser.read_file(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None

    if not parser.has_section("parties") or not parser.items("parties"):
        raise ConfigError("config needs a [parties] section with at least one party")
    members = []
    for pid, value in parser.items("parties"):
        try:
            name, color = value.rsplit(",", 1)
        except ValueError:
            raise ConfigError(
                f"party {pid!r}: expected 'Display Name, #RRGGBB'"
            ) from None
        members.append(Party(pid.strip(), name.strip(), color.strip()))
    try:
        # the last [parties] entry is the residual "other" bucket
        registry = PartyRegistry(parties=tuple(members), other_id=members[-1].id)
    except ValueError as exc:
        raise ConfigError(f"bad party registry: {exc}") from None

    def get(section, option, cast, default):
        if parser.has_option(section, option):
            try:
                return cast(parser.get(section, option))
            except ValueError as exc:
                raise ConfigError(f"[{section}] {option}: {exc}") from None
        return default

    try:
        rules = ElectionRules(
            threshold=get("rules", "threshold", float, 0.05),
            house_size=get("rules", "house_size", int, 598),
            method=get("rules", "method", str, "sainte-lague"),
        )
        pool_cfg = PoolingConfig(
            window_days=get("pooling", "window_days", int, 14),
            dependence_factor=get("pooling", "dependence_factor", float, 1.0),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    prior_alpha = get("posterior", "prior_alpha", float, posterior.DEFAULT_PRIOR_ALPHA)
    if prior_alpha <= 0:
        raise ConfigError("prior_alpha must be > 0")
    m = get("posterior", "draws", int, posterior.DEFAULT_DRAWS)
    tau = get("forecast", "tau_days", float, forecast.DEFAULT_TAU_DAYS)
    if tau <= 0:
        raise ConfigError("tau_days must be > 0")

    coalitions = {}
    if parser.has_section("coalitions"):
        for name, value in parser.items("coalitions"):
            ids = tuple(x.strip() for x in value.split(",") if x.strip())
            unknown = [pid for pid in ids if pid not in registry.ids]
            if unknown:
                raise ConfigError(
                    f"coalition {name!r} names unknown part{'ies' if len(unknown) > 1 else 'y'}: "
                    + ", ".join(unknown)
                )
            if not ids:
                raise ConfigError(f"coalition {name!r} is empty")
            coalitions[name] = ids
    if not coalitions:
        raise ConfigError("config needs a [coalitions] section with at least one entry")

    return Config(
        registry=registry,
        rules=rules,
        pooling=pool_cfg,
        prior_alpha=prior_alpha,
        m=m,
        tau=tau,
        coalitions=coalitions,
    )


def _round_floats(obj, digits=6):
    if isinstance(obj, float):
        return round(obj, digits)
    if isinstance(obj, dict):
        return {k: _round_floats(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v, digits) for v in obj]
    return obj


def _emit(report: dict, out: str | None) -> None:
    text = json.dumps(_round_floats(report), sort_keys=True, indent=2) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _parse_date(value: str, flag: str) -> dt.date:
    try:
        return dt.date.fromisoformat(value)
    except ValueError:
        raise UsageError(f"{flag} expects an ISO date, got {value!r}") from None


def _load_inputs(args) -> tuple[Config, list[polls.Poll]]:
    config = load_config(args.config)
    try:
        text = Path(args.polls).read_text(encoding="utf-8")
    except OSError as exc:
        raise PollError(f"cannot read polls file {args.polls}: {exc}") from None
    try:
        return config, polls.parse_polls(text, config.registry)
    except PollError as exc:
        exc.file = args.polls  # error payloads report file and line
        raise


def _resolve_as_of(args, poll_list) -> dt.date:
    if args.as_of:
        return _parse_date(args.as_of, "--as-of")
    return max(p.publish_date for p in poll_list)


def _party_report(sim: engine.Simulation, post) -> dict:
    means = post.mean()
    out = {}
    lo = max(1, int(np.ceil(0.025 * sim.m))) - 1
    hi = min(sim.m, int(np.ceil(0.975 * sim.m))) - 1
    for col, pid in enumerate(sim.parties):
        ordered = np.sort(sim.shares[:, col])
        out[pid] = {
            "mean": means[pid],
            "ci95": [float(ordered[lo]), float(ordered[hi])],
        }
    return out


def _coalition_report(config, post, m, seed, workers) -> tuple[dict, engine.Simulation]:
    sim = engine.run_simulation(post, config.rules, m, seed, workers=workers)
    block = {}
    for name, ids in sorted(config.coalitions.items()):
        result = engine.estimate_poe(
            post, config.rules, EventSpec("coalition-majority", ids), m, seed,
            workers=workers,
        )
        block[name] = {
            "members": list(ids),
            "probability": result.probability,
            "subset_probability": result.subset_probability,
            "mc_stderr": result.mc_stderr,
        }
    return block, sim


def _cmd_nowcast(args) -> int:
    config, poll_list = _load_inputs(args)
    as_of = _resolve_as_of(args, poll_list)
    m = args.draws or config.m
    pooled = pooling.pool(
        poll_list, config.registry, as_of,
        config.pooling.window_days, config.pooling.dependence_factor,
    )
    post = posterior.posterior_from(pooled, config.registry, config.prior_alpha)
    coalitions, sim = _coalition_report(config, post, m, args.seed, args.workers)
    report = {
        "as_of": as_of.isoformat(),
        "coalitions": coalitions,
        "diagnostics": {
            "dependence_factor": config.pooling.dependence_factor,
            "hung_fraction": sim.hung_fraction,
            "n_eff": pooled.n_eff,
            "polls_used": [[p, d.isoformat()] for p, d in pooled.polls_used],
            "window_days": pooled.window_days,
        },
        "m": m,
        "parties": _party_report(sim, post),
        "seed": args.seed,
    }
    _emit(report, args.out)
    return 0


def _cmd_forecast(args) -> int:
    config, poll_list = _load_inputs(args)
    as_of = _resolve_as_of(args, poll_list)
    if not args.election_date:
        raise UsageError("forecast requires --election-date")
    election = _parse_date(args.election_date, "--election-date")
    m = args.draws or config.m
    spec = forecast.ForecastSpec(election_date=election, as_of=as_of, tau=config.tau)
    pooled = pooling.pool(
        poll_list, config.registry, as_of,
        config.pooling.window_days, config.pooling.dependence_factor,
    )
    post = posterior.posterior_from(pooled, config.registry, config.prior_alpha)
    inflated = forecast.inflate(post, spec, config.prior_alpha)
    coalitions, sim = _coalition_report(config, inflated, m, args.seed, args.workers)
    report = {
        "as_of": as_of.isoformat(),
        "coalitions": coalitions,
        "diagnostics": {
            "dependence_factor": config.pooling.dependence_factor,
            "hung_fraction": sim.hung_fraction,
            "n_eff": pooled.n_eff,
            "polls_used": [[p, d.isoformat()] for p, d in pooled.polls_used],
            "window_days": pooled.window_days,
        },
        "election_date": election.isoformat(),
        "horizon_days": spec.horizon_days,
        "m": m,
        "parties": _party_report(sim, inflated),
        "seed": args.seed,
        "shrink_factor": forecast.shrink_factor(spec.horizon_days, spec.tau),
        "tau_days": spec.tau,
    }
    _emit(report, args.out)
    return 0


def _cmd_parliaments(args) -> int:
    config, poll_list = _load_inputs(args)
    as_of = _resolve_as_of(args, poll_list)
    pooled = pooling.pool(
        poll_list, config.registry, as_of,
        config.pooling.window_days, config.pooling.dependence_factor,
    )
    post = posterior.posterior_from(pooled, config.registry, config.prior_alpha)
    allocs = engine.sample_parliaments(post, config.rules, args.k, args.seed)
    report = {
        "as_of": as_of.isoformat(),
        "house_size": config.rules.house_size,
        "k": args.k,
        "n_eff": pooled.n_eff,
        "window_days": pooled.window_days,
        "parliaments": [
            {
                "eligible": sorted(a.eligible),
                "hung": a.hung,
                "seats": a.seats,
            }
            for a in allocs
        ],
        "seed": args.seed,
    }
    _emit(report, args.out)
    return 0


def _series_dates(poll_list, as_of) -> list[dt.date]:
    return sorted({p.publish_date for p in poll_list if p.publish_date <= as_of})


def _pick_coalition(args, config) -> tuple[str, tuple[str, ...]]:
    if args.coalition:
        if args.coalition not in config.coalitions:
            raise ConfigError(f"coalition {args.coalition!r} not found in config")
        return args.coalition, config.coalitions[args.coalition]
    name = sorted(config.coalitions)[0]
    return name, config.coalitions[name]


def _cmd_plot(args) -> int:
    config, poll_list = _load_inputs(args)
    as_of = _resolve_as_of(args, poll_list)
    m = args.draws or config.m
    seed = args.seed
    workers = args.workers
    theme = viz.theme_for(config.registry)
    _, coalition = _pick_coalition(args, config)

    def posterior_at(date):
        pooled = pooling.pool(
            poll_list, config.registry, date,
            config.pooling.window_days, config.pooling.dependence_factor,
        )
        return posterior.posterior_from(pooled, config.registry, config.prior_alpha)

    def election() -> dt.date:
        if not args.election_date:
            raise UsageError(f"figure {args.figure!r} requires --election-date")
        return _parse_date(args.election_date, "--election-date")

    if args.figure == "classic":
        latest = max(
            (p for p in poll_list if p.publish_date <= as_of),
            key=lambda p: (p.publish_date, p.pollster),
            default=None,
        )
        if latest is None:
            raise NoPollsError(as_of, config.pooling.window_days)
        svg = viz.render_classic_bars(latest, theme, as_of=as_of)
    elif args.figure == "poe-bars":
        post = posterior_at(as_of)
        results = []
        labels = []
        for name, ids in sorted(config.coalitions.items()):
            results.append(
                (
                    ids,
                    engine.estimate_poe(
                        post, config.rules, EventSpec("coalition-majority", ids),
                        m, seed, workers=workers,
                    ),
                )
            )
            labels.append(name)
        svg = viz.render_poe_bars(
            results, config.registry, theme, means=post.mean(), labels=labels,
            seed=seed, m=m, as_of=as_of,
        )
    elif args.figure == "density":
        dist = engine.seat_distribution(
            posterior_at(as_of), config.rules, coalition, m, seed, workers=workers
        )
        svg = viz.render_seat_density(dist, theme, seed=seed, m=m, as_of=as_of)
    elif args.figure == "parliaments":
        allocs = engine.sample_parliaments(posterior_at(as_of), config.rules, args.k, seed)
        svg = viz.render_parliaments(
            allocs, coalition, config.registry, theme, seed=seed, m=args.k, as_of=as_of
        )
    elif args.figure == "ridgeline":
        series = engine.distribution_series(
            poll_list, config.registry, _series_dates(poll_list, as_of), config.rules,
            coalition, config.pooling, config.prior_alpha, m, seed, workers,
        )
        svg = viz.render_ridgeline(series.points, theme, seed=seed, m=m, as_of=as_of)
    elif args.figure == "poe-timeline":
        series = engine.poe_series(
            poll_list, config.registry, _series_dates(poll_list, as_of), config.rules,
            EventSpec("coalition-majority", coalition), config.pooling,
            config.prior_alpha, m, seed, workers,
        )
        svg = viz.render_poe_timeline(series.points, theme, seed=seed, m=m, as_of=as_of)
    elif args.figure == "fan":
        spec = forecast.ForecastSpec(election_date=election(), as_of=as_of, tau=config.tau)
        fan = forecast.fan_chart_data(
            poll_list, config.registry, spec, config.pooling, config.prior_alpha,
            args.grid_days, m, seed, workers,
        )
        svg = viz.render_fan_chart(
            fan, poll_list, as_of, spec.election_date, theme, seed=seed, m=m
        )
    elif args.figure == "forecast-ridgeline":
        dates = _series_dates(poll_list, as_of)
        now_series = engine.distribution_series(
            poll_list, config.registry, dates, config.rules, coalition,
            config.pooling, config.prior_alpha, m, seed, workers,
        )
        fc_series = forecast.forecast_distribution_series(
            poll_list, config.registry, dates, config.rules, coalition, election(),
            config.tau, config.pooling, config.prior_alpha, m, seed, workers,
        )
        svg = viz.render_forecast_ridgeline(
            now_series.points, fc_series.points, theme, seed=seed, m=m, as_of=as_of
        )
    else:
        raise UsageError(f"unknown figure {args.figure!r}")

    if not args.out:
        raise UsageError("plot requires --out")
    Path(args.out).write_text(svg, encoding="utf-8")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="koalition", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--polls", required=True, help="poll CSV file")
        p.add_argument("--config", required=True, help="run configuration (INI)")
        p.add_argument("--as-of", dest="as_of", help="ISO date; default: newest poll")
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        p.add_argument("--draws", type=int, help="Monte-Carlo draws; default from config")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--out", help="output path; default stdout (reports only)")

    now = sub.add_parser("nowcast", help="coalition PoE report from current polls")
    common(now)
    now.set_defaults(func=_cmd_nowcast)

    fc = sub.add_parser("forecast", help="election-day report with inflated uncertainty")
    common(fc)
    fc.add_argument("--election-date", dest="election_date")
    fc.set_defaults(func=_cmd_forecast)

    parl = sub.add_parser("parliaments", help="sample whole parliaments")
    common(parl)
    parl.add_argument("--k", type=int, default=6)
    parl.set_defaults(func=_cmd_parliaments)

    plot = sub.add_parser("plot", help="render a figure as SVG")
    common(plot)
    plot.add_argument("--figure", required=True, choices=FIGURES)
    plot.add_argument("--coalition", help="configured coalition name; default: first")
    plot.add_argument("--election-date", dest="election_date")
    plot.add_argument("--k", type=int, default=6, help="parliaments to draw")
    plot.add_argument("--grid-days", dest="grid_days", type=int, default=7)
    plot.set_defaults(func=_cmd_plot)
    return parser


def _fail(code: int, kind: str, exc: Exception) -> int:
    payload = {"error": kind, "message": str(exc)}
    for key in ("file", "line"):
        value = getattr(exc, key, None)
        if value is not None:
            payload[key] = value
    sys.stderr.write(json.dumps(payload, sort_keys=True) + "\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        return _fail(1, "usage", exc)
    except (PollError, NoPollsError) as exc:
        return _fail(2, "data", exc)
    except ConfigError as exc:
        return _fail(3, "config", exc)
    except ValueError as exc:
        return _fail(2, "data", exc)


if __name__ == "__main__":
    sys.exit(main())
