import datetime as dt

import pytest

from conceptviz.table import Table, build_table
from conceptviz.values import SemanticType


def make_t0(name: str = "temps") -> Table:
    """Canonical daily-temperature fixture used across the suite."""
    return build_table(
        name,
        [("Date", SemanticType.DATE), ("City", SemanticType.TEXT),
         ("Temperature", SemanticType.INTEGER)],
        [
            (dt.date(2020, 1, 1), "Seattle", 51),
            (dt.date(2020, 1, 1), "Atlanta", 45),
            (dt.date(2020, 1, 2), "Seattle", 45),
            (dt.date(2020, 1, 2), "Atlanta", 47),
            (dt.date(2020, 1, 3), "Seattle", 48),
            (dt.date(2020, 1, 3), "Atlanta", 56),
        ],
    )


T0_CSV = (
    "Date,City,Temperature\n"
    "2020-01-01,Seattle,51\n"
    "2020-01-01,Atlanta,45\n"
    "2020-01-02,Seattle,45\n"
    "2020-01-02,Atlanta,47\n"
    "2020-01-03,Seattle,48\n"
    "2020-01-03,Atlanta,56\n"
)


@pytest.fixture
def t0() -> Table:
    return make_t0()
