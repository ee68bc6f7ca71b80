"""German-style election mechanics: threshold, seat allocation, majorities.

Seat allocation uses highest averages (Sainte-Lague/Schepers by default,
divisors 1, 3, 5, ...; D'Hondt available behind the same signature). The
allocator is vectorized over simulation draws: it starts from the rounded
proportional split and repairs the total with greedy add/remove steps,
which reproduces the classic one-seat-at-a-time method exactly, including
tie-breaks by party order.

Threshold semantics: a party with share strictly below the threshold is
excluded, so a party at exactly 5% enters parliament. The residual
"other" bucket is never eligible regardless of its size, because it
aggregates many small parties none of which clears the threshold alone.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "ElectionRules",
    "SeatAllocation",
    "allocate_many",
    "allocate_seats",
    "apply_threshold",
    "coalition_seats",
    "has_majority",
    "subset_sufficient",
]

METHODS = ("sainte-lague", "dhondt")

DEFAULT_THRESHOLD = 0.05
DEFAULT_HOUSE_SIZE = 598


@dataclass(frozen=True)
class ElectionRules:
    threshold: float = DEFAULT_THRESHOLD
    house_size: int = DEFAULT_HOUSE_SIZE
    method: str = "sainte-lague"

    def __post_init__(self):
        if not (0.0 <= self.threshold < 0.5):
            raise ValueError("threshold must be in [0, 0.5)")
        if self.house_size < 1:
            raise ValueError("house_size must be >= 1")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")


@dataclass(frozen=True)
class SeatAllocation:
    """Seats per party for one parliament; hung when nothing is eligible."""

    seats: dict[str, int]
    eligible: frozenset[str]

    @property
    def hung(self) -> bool:
        return not self.eligible


def apply_threshold(
    shares: Mapping[str, float],
    rules: ElectionRules,
    other_id: str | None = None,
) -> dict[str, float]:
    """Drop sub-threshold parties and the other bucket, then renormalize.

    Returns the eligible parties (input order preserved) with shares
    rescaled to sum 1. An empty dict flags a hung outcome; it is a valid
    state, not an error.
    """
    eligible = {
        pid: share
        for pid, share in shares.items()
        if pid != other_id and share >= rules.threshold
    }
    total = sum(eligible.values())
    if total <= 0.0:
        return {}
    return {pid: share / total for pid, share in eligible.items()}


def _signposts(method: str, counts: np.ndarray) -> np.ndarray:
    # Divisor for winning the counts-th seat; counts >= 1.
    if method == "sainte-lague":
        return 2 * counts - 1
    return counts


def allocate_many(
    shares: np.ndarray,
    house_size: int,
    method: str = "sainte-lague",
) -> np.ndarray:
    """Allocate seats for every row of an (m, K) share matrix.

    Ineligible parties carry zero entries; all-zero rows are hung and
    receive zero seats. Rows are renormalized internally, so scaling a
    row by a positive constant cannot change its allocation. Ties break
    toward the lower column index, matching sequential highest-averages
    assignment.
    """
    shares = np.atleast_2d(np.asarray(shares, dtype=float))
    m, k = shares.shape
    totals = shares.sum(axis=1, keepdims=True)
    live = totals[:, 0] > 0.0
    shares = np.divide(shares, totals, out=np.zeros_like(shares), where=totals > 0)

    if method == "sainte-lague":
        seats = np.floor(shares * house_size + 0.5).astype(np.int64)
    elif method == "dhondt":
        seats = np.floor(shares * house_size).astype(np.int64)
    else:
        raise ValueError(f"method must be one of {METHODS}")
    seats[~live] = 0

    # Repair totals one seat per row per pass. The initial rounding is off
    # by at most ~K/2 seats, so this loop runs a handful of times.
    guard = house_size + k + 1
    for _ in range(guard):
        totals = seats.sum(axis=1)
        under = live & (totals < house_size)
        over = live & (totals > house_size)
        if not under.any() and not over.any():
            break
        if under.any():
            gain = shares[under] / _signposts(method, seats[under] + 1)
            cols = np.argmax(gain, axis=1)  # first max: earlier party wins ties
            seats[np.flatnonzero(under), cols] += 1
        if over.any():
            held = seats[over]
            loss = np.where(
                held > 0,
                shares[over] / _signposts(method, np.maximum(held, 1)),
                np.inf,
            )
            # last min: the later party loses its seat first on ties
            cols = k - 1 - np.argmin(loss[:, ::-1], axis=1)
            seats[np.flatnonzero(over), cols] -= 1
    else:
        raise RuntimeError("seat repair failed to converge")

    # Float-safety net: the rounded start and the quotient comparisons use
    # different arithmetic, so swap any held seat that a stronger unheld
    # quotient should displace. In exact arithmetic this never triggers.
    for _ in range(guard):
        gain = shares / _signposts(method, seats + 1)
        gain_col = np.argmax(gain, axis=1)
        gain_val = gain[np.arange(m), gain_col]
        loss = np.where(
            seats > 0, shares / _signposts(method, np.maximum(seats, 1)), np.inf
        )
        loss_col = k - 1 - np.argmin(loss[:, ::-1], axis=1)
        loss_val = loss[np.arange(m), loss_col]
        swap = live & (
            (gain_val > loss_val) | ((gain_val == loss_val) & (gain_col < loss_col))
        )
        if not swap.any():
            break
        rows = np.flatnonzero(swap)
        seats[rows, gain_col[rows]] += 1
        seats[rows, loss_col[rows]] -= 1

    return seats


def allocate_seats(
    eligible_shares: Mapping[str, float],
    rules: ElectionRules,
    parties: Sequence[str] | None = None,
) -> SeatAllocation:
    """Allocate the full house among eligible parties.

    parties, when given, fixes the universe of the seat map (zero-filled
    for non-eligible members); it defaults to the eligible parties.
    """
    universe = tuple(parties) if parties is not None else tuple(eligible_shares)
    if not eligible_shares:
        return SeatAllocation(seats={p: 0 for p in universe}, eligible=frozenset())
    row = np.array([[eligible_shares.get(p, 0.0) for p in universe]])
    seats = allocate_many(row, rules.house_size, rules.method)[0]
    return SeatAllocation(
        seats={p: int(s) for p, s in zip(universe, seats)},
        eligible=frozenset(eligible_shares),
    )


def coalition_seats(alloc: SeatAllocation, coalition: Iterable[str]) -> int:
    total = 0
    for pid in coalition:
        if pid not in alloc.seats:
            raise ValueError(f"unknown-party: {pid!r}")
        total += alloc.seats[pid]
    return total


def has_majority(seats: int, rules: ElectionRules) -> bool:
    """Strictly more than half the house; 300 of 598 is the edge case."""
    return 2 * seats > rules.house_size


def subset_sufficient(
    alloc: SeatAllocation, coalition: Iterable[str], rules: ElectionRules
) -> bool:
    """True when some proper subset of the coalition already has a majority.

    Enumerates proper subsets outright; coalitions are small. (The maximal
    proper-subset sum is the coalition minus its weakest member, which the
    Monte-Carlo engine uses as a fast path; this function stays the
    independent reference.)
    """
    members = tuple(coalition)
    if not members:
        raise ValueError("coalition must not be empty")
    for size in range(1, len(members)):
        for subset in combinations(members, size):
            if has_majority(coalition_seats(alloc, subset), rules):
                return True
    return False
