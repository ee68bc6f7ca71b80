"""Extrapolate a nowcast to election day by inflating its uncertainty.

There is no model of how the electoral mood will actually move; what a
forecast can honestly add to a nowcast is wider uncertainty, growing with
the distance to election day. This module shrinks the data content of the
posterior by s(h) = 1 / (1 + h / tau) for a horizon of h days: the prior
is kept and the evidence counts are scaled down, so the mean is nearly
preserved while every marginal variance strictly increases with h.

Unforeseeable campaign events (a late scandal, a resignation) are outside
any such scheme; the widened bands quantify drift of the current mood,
never news that has not happened yet.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass

import numpy as np

from .electoral import ElectionRules
from .engine import (
    DistributionSeries,
    EventSpec,
    PoEResult,
    SeatShareDistribution,
    _posterior_at,
    estimate_poe,
    seat_distribution,
)
from .pooling import NoPollsError, PoolingConfig
from .polls import PartyRegistry, Poll
from .posterior import (
    DEFAULT_PRIOR_ALPHA,
    DirichletPosterior,
    _resolve_prior,
    sample_shares,
)

__all__ = [
    "FanChart",
    "FanPoint",
    "ForecastSpec",
    "fan_chart_data",
    "forecast_distribution_series",
    "forecast_poe",
    "inflate",
    "shrink_factor",
]

DEFAULT_TAU_DAYS = 60.0


@dataclass(frozen=True)
class ForecastSpec:
    election_date: dt.date
    as_of: dt.date
    tau: float = DEFAULT_TAU_DAYS

    def __post_init__(self):
        if self.election_date < self.as_of:
            raise ValueError("past-election: election_date is before as_of")
        if self.tau <= 0:
            raise ValueError("tau must be > 0")

    @property
    def horizon_days(self) -> int:
        return (self.election_date - self.as_of).days


def shrink_factor(horizon_days: float, tau: float) -> float:
    """s(h) = 1 / (1 + h / tau): 1 at h = 0, 1/2 at h = tau, -> 0."""
    if horizon_days < 0:
        raise ValueError("past-election: negative horizon")
    return 1.0 / (1.0 + horizon_days / tau)


def _inflate_by_days(
    posterior: DirichletPosterior,
    horizon_days: int,
    tau: float,
    prior_alpha,
) -> DirichletPosterior:
    if horizon_days == 0:
        # Exact identity at zero horizon; recomputing prior + (alpha - prior)
        # could perturb the last bit.
        return posterior
    prior = _resolve_prior(prior_alpha, posterior.parties)
    alpha = np.asarray(posterior.alpha)
    if np.any(alpha < prior):
        raise ValueError("posterior alpha below prior: data content negative")
    s = shrink_factor(horizon_days, tau)
    inflated = prior + s * (alpha - prior)
    return DirichletPosterior(
        parties=posterior.parties,
        alpha=tuple(float(a) for a in inflated),
        other_id=posterior.other_id,
        source=posterior.source,
    )


def inflate(
    posterior: DirichletPosterior,
    spec: ForecastSpec,
    prior_alpha=DEFAULT_PRIOR_ALPHA,
) -> DirichletPosterior:
    """Shrink the posterior's data content for the spec's full horizon.

    Single-step only: inflating by h1 and then treating the result as
    fresh data for another h2 is NOT the same as inflating by h1 + h2
    (s(h1) * s(h2) != s(h1 + h2)). Always inflate the original nowcast
    once, by the total horizon.
    """
    return _inflate_by_days(posterior, spec.horizon_days, spec.tau, prior_alpha)


@dataclass(frozen=True)
class FanPoint:
    date: dt.date
    mean: float
    lo: float
    hi: float


@dataclass(frozen=True)
class FanChart:
    parties: tuple[str, ...]
    points: dict[str, tuple[FanPoint, ...]]
    as_of: dt.date
    election_date: dt.date
    skipped: tuple[dt.date, ...]


def _party_band(
    posterior: DirichletPosterior, m: int, seed: int, workers: int
) -> dict[str, tuple[float, float, float]]:
    draws = sample_shares(posterior, m, seed, workers=workers).draws
    means = posterior.mean()
    out = {}
    lo_rank = max(1, int(np.ceil(0.025 * m))) - 1
    hi_rank = min(m, int(np.ceil(0.975 * m))) - 1
    for col, pid in enumerate(posterior.parties):
        ordered = np.sort(draws[:, col])
        out[pid] = (means[pid], float(ordered[lo_rank]), float(ordered[hi_rank]))
    return out


def fan_chart_data(
    polls: list[Poll],
    registry: PartyRegistry,
    spec: ForecastSpec,
    pooling: PoolingConfig = PoolingConfig(),
    prior_alpha=DEFAULT_PRIOR_ALPHA,
    grid_days: int = 7,
    m: int = 10_000,
    seed: int = 0,
    workers: int = 1,
) -> FanChart:
    """Per-party mean and 95% band from the first poll through election day.

    Dates up to as_of carry the nowcast posterior of that date; dates
    beyond it carry the as_of posterior inflated for the elapsed horizon,
    so the band can only widen to the right of as_of.
    """
    if not polls:
        raise NoPollsError(spec.as_of, pooling.window_days)
    if grid_days < 1:
        raise ValueError("grid_days must be >= 1")

    start = min(p.publish_date for p in polls)
    dates = []
    d = start
    while d < spec.as_of:
        dates.append(d)
        d += dt.timedelta(days=grid_days)
    dates.append(spec.as_of)
    d = spec.as_of + dt.timedelta(days=grid_days)
    while d < spec.election_date:
        dates.append(d)
        d += dt.timedelta(days=grid_days)
    if spec.election_date > spec.as_of:
        dates.append(spec.election_date)

    base = _posterior_at(polls, registry, spec.as_of, pooling, prior_alpha)
    series: dict[str, list[FanPoint]] = {pid: [] for pid in registry.ids}
    skipped = []
    for date in dates:
        if date <= spec.as_of:
            try:
                posterior = _posterior_at(polls, registry, date, pooling, prior_alpha)
            except NoPollsError:
                skipped.append(date)
                continue
        else:
            horizon = (date - spec.as_of).days
            posterior = _inflate_by_days(base, horizon, spec.tau, prior_alpha)
        band = _party_band(posterior, m, seed, workers)
        for pid, (mean, lo, hi) in band.items():
            series[pid].append(FanPoint(date, mean, lo, hi))

    return FanChart(
        parties=registry.ids,
        points={pid: tuple(pts) for pid, pts in series.items()},
        as_of=spec.as_of,
        election_date=spec.election_date,
        skipped=tuple(skipped),
    )


def forecast_poe(
    polls: list[Poll],
    registry: PartyRegistry,
    rules: ElectionRules,
    event: EventSpec,
    spec: ForecastSpec,
    pooling: PoolingConfig = PoolingConfig(),
    prior_alpha=DEFAULT_PRIOR_ALPHA,
    m: int = 10_000,
    seed: int = 0,
    workers: int = 1,
) -> PoEResult:
    """PoE for election day: inflate the as_of nowcast, then estimate."""
    posterior = _posterior_at(polls, registry, spec.as_of, pooling, prior_alpha)
    inflated = inflate(posterior, spec, prior_alpha)
    return estimate_poe(inflated, rules, event, m, seed, workers=workers)


def forecast_distribution_series(
    polls: list[Poll],
    registry: PartyRegistry,
    dates: list[dt.date],
    rules: ElectionRules,
    coalition: tuple[str, ...],
    election_date: dt.date,
    tau: float = DEFAULT_TAU_DAYS,
    pooling: PoolingConfig = PoolingConfig(),
    prior_alpha=DEFAULT_PRIOR_ALPHA,
    m: int = 10_000,
    seed: int = 0,
    workers: int = 1,
) -> DistributionSeries:
    """Election-day seat-share forecast as seen from each date.

    The ridge for date d is the d-nowcast inflated over the remaining
    days to the election; later dates therefore produce tighter ridges.
    """
    if list(dates) != sorted(dates):
        raise ValueError("dates must be ascending")
    points: list[tuple[dt.date, SeatShareDistribution]] = []
    skipped = []
    for date in dates:
        try:
            posterior = _posterior_at(polls, registry, date, pooling, prior_alpha)
        except NoPollsError:
            skipped.append(date)
            continue
        spec = ForecastSpec(election_date=election_date, as_of=date, tau=tau)
        inflated = inflate(posterior, spec, prior_alpha)
        points.append(
            (date, seat_distribution(inflated, rules, coalition, m, seed, workers))
        )
    if not points:
        raise ValueError("no-data: every requested date has an empty poll window")
    return DistributionSeries(points=tuple(points), skipped=tuple(skipped))
