"""Conjugate Dirichlet posterior over party shares and reproducible sampling.

The posterior is the standard Dirichlet-multinomial update: concentration
alpha_k = prior_k + counts_k. Sampling draws one Gamma variate per party
and normalizes rows to sum 1.

Reproducibility contract: the Gamma stream for draw block c of party p is
keyed by (seed, party id, c) through a counter-based Philox generator, so
draw i depends only on (seed, i) and the party's own alpha. Consequences:

* identical (seed, m, alpha) give a bit-identical matrix on any worker
  count or schedule;
* the first k rows of a larger run equal a run of size k (prefix-stable);
* reordering parties permutes columns without changing any party's draws.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numpy.random import Generator, Philox

from .pooling import PooledSample
from .polls import PartyRegistry

__all__ = ["DirichletPosterior", "DrawMatrix", "posterior_from", "sample_shares"]

DEFAULT_PRIOR_ALPHA = 0.5
DEFAULT_DRAWS = 100_000

# Draws are generated in fixed blocks; a partial tail block is computed in
# full and sliced, which is what makes the stream prefix-stable.
_BLOCK = 4096
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class DirichletPosterior:
    """Concentration vector over parties, ordered as in the registry."""

    parties: tuple[str, ...]
    alpha: tuple[float, ...]
    other_id: str | None = None
    source: PooledSample | None = field(default=None, compare=False, hash=False)

    def __post_init__(self):
        if len(self.parties) != len(self.alpha):
            raise ValueError("parties and alpha length mismatch")
        if any(a <= 0 for a in self.alpha):
            raise ValueError("bad-prior: every alpha component must be > 0")
        if self.other_id is not None and self.other_id not in self.parties:
            raise ValueError(f"other bucket {self.other_id!r} not among parties")

    @property
    def alpha_total(self) -> float:
        return float(sum(self.alpha))

    def mean(self) -> dict[str, float]:
        total = self.alpha_total
        return {p: a / total for p, a in zip(self.parties, self.alpha)}

    def marginal_variance(self) -> dict[str, float]:
        # Dirichlet marginal: mean * (1 - mean) / (alpha_total + 1)
        total = self.alpha_total
        return {
            p: (a / total) * (1.0 - a / total) / (total + 1.0)
            for p, a in zip(self.parties, self.alpha)
        }


@dataclass(frozen=True)
class DrawMatrix:
    """m x K matrix of share vectors; rows sum to 1, entries in [0, 1]."""

    draws: np.ndarray
    seed: int
    m: int

    def __post_init__(self):
        self.draws.flags.writeable = False


def _resolve_prior(prior_alpha, parties: tuple[str, ...]) -> np.ndarray:
    if isinstance(prior_alpha, dict):
        try:
            values = np.array([float(prior_alpha[p]) for p in parties])
        except KeyError as exc:
            raise ValueError(f"bad-prior: missing prior for party {exc.args[0]!r}") from None
    else:
        values = np.full(len(parties), float(prior_alpha))
    if np.any(values <= 0):
        raise ValueError("bad-prior: prior_alpha components must be > 0")
    return values


def posterior_from(
    pooled: PooledSample,
    registry: PartyRegistry,
    prior_alpha=DEFAULT_PRIOR_ALPHA,
) -> DirichletPosterior:
    """Conjugate update: alpha_k = prior_k + counts_k.

    prior_alpha may be a scalar applied to every party or a per-party dict.
    """
    parties = registry.ids
    prior = _resolve_prior(prior_alpha, parties)
    alpha = tuple(
        float(p) + float(pooled.counts.get(pid, 0)) for p, pid in zip(prior, parties)
    )
    return DirichletPosterior(
        parties=parties, alpha=alpha, other_id=registry.other_id, source=pooled
    )


def _party_key(party_id: str) -> int:
    # Stable across runs and platforms, unlike hash().
    digest = hashlib.sha256(party_id.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def _gamma_block(seed: int, party_id: str, alpha: float, block: int) -> np.ndarray:
    # Block index lives in the high counter word, leaving 2^192 values of
    # stream per block: no overlap, no coordination between blocks.
    bitgen = Philox(counter=[0, 0, 0, block], key=[seed & _MASK64, _party_key(party_id)])
    return Generator(bitgen).standard_gamma(alpha, size=_BLOCK)


def sample_shares(
    posterior: DirichletPosterior,
    m: int,
    seed: int,
    workers: int = 1,
) -> DrawMatrix:
    """Draw m share vectors from the posterior, reproducibly.

    Raises:
        ValueError: "empty-request" when m < 1.
    """
    if m < 1:
        raise ValueError("empty-request: need m >= 1 draws")
    parties = posterior.parties
    alpha = posterior.alpha
    k = len(parties)
    n_blocks = (m + _BLOCK - 1) // _BLOCK
    gammas = np.empty((n_blocks * _BLOCK, k))

    def fill(task):
        block, col = task
        lo = block * _BLOCK
        gammas[lo : lo + _BLOCK, col] = _gamma_block(seed, parties[col], alpha[col], block)

    tasks = [(b, c) for b in range(n_blocks) for c in range(k)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill, tasks))
    else:
        for task in tasks:
            fill(task)

    gammas = gammas[:m]
    totals = gammas.sum(axis=1, keepdims=True)
    if np.any(totals == 0.0):
        raise ValueError("alpha too small: gamma draws underflowed to zero")
    draws = gammas / totals
    return DrawMatrix(draws=draws, seed=seed, m=m)
