import datetime as dt
from pathlib import Path

import pytest

from koalition.polls import Party, PartyRegistry, parse_polls
from koalition.pooling import PooledSample

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"

AS_OF = dt.date(2018, 3, 5)


@pytest.fixture(scope="session")
def registry() -> PartyRegistry:
    return PartyRegistry(
        parties=(
            Party("union", "Union", "#1B1B1B"),
            Party("spd", "SPD", "#E3000F"),
            Party("gruene", "Gruene", "#1AA037"),
            Party("fdp", "FDP", "#D1A514"),
            Party("linke", "Linke", "#BE3075"),
            Party("afd", "AfD", "#0489DB"),
            Party("other", "Other", "#ADB5BD"),
        ),
        other_id="other",
    )


@pytest.fixture(scope="session")
def two_party_registry() -> PartyRegistry:
    return PartyRegistry(
        parties=(
            Party("a", "Alpha", "#CC0000"),
            Party("b", "Beta", "#0000CC"),
            Party("other", "Other", "#999999"),
        ),
        other_id="other",
    )


@pytest.fixture(scope="session")
def fixture_polls(registry):
    return parse_polls((FIXTURES / "polls.csv").read_text(), registry)


@pytest.fixture(scope="session")
def pooled_counts(registry) -> PooledSample:
    # Hand-fixed counts giving a mid-sized effective sample.
    counts = {
        "union": 660,
        "spd": 340,
        "gruene": 240,
        "fdp": 200,
        "linke": 200,
        "afd": 260,
        "other": 100,
    }
    return PooledSample(
        as_of=AS_OF,
        window_days=14,
        counts=counts,
        n_eff=2000,
        polls_used=(("Insa", AS_OF),),
    )
