"""Reference models of the simulated QUIC server.

``M_MIN`` covers the minimal alphabet and ``M_EXT`` adds the 0-RTT column.
State names are internal labels. The learner never sees these machines;
they back the exhaustive test oracle and the acceptance checks.
"""

from .alphabet import (
    CLOSE, CLOSED, EXP, EXTENDED_ALPHABET, FULL_CHLO, GET, HTTP, INIT_CHLO,
    MINIMAL_ALPHABET, PRST, REJ, SHLO, ZERO_RTT_CHLO,
)
from .mealy import MealyMachine

_MIN_TABLE = {
    "S0": {INIT_CHLO: (REJ, "S1"), FULL_CHLO: (PRST, "S0"), GET: (EXP, "S0"), CLOSE: (PRST, "S0")},
    "S1": {INIT_CHLO: (REJ, "S1"), FULL_CHLO: (SHLO, "S2"), GET: (EXP, "S1"), CLOSE: (CLOSED, "S4")},
    "S2": {INIT_CHLO: (REJ, "S1"), FULL_CHLO: (EXP, "S2"), GET: (HTTP, "S3"), CLOSE: (CLOSED, "S4")},
    "S3": {INIT_CHLO: (REJ, "S1"), FULL_CHLO: (EXP, "S3"), GET: (EXP, "S3"), CLOSE: (CLOSED, "S4")},
    "S4": {INIT_CHLO: (REJ, "S1"), FULL_CHLO: (PRST, "S4"), GET: (PRST, "S4"), CLOSE: (PRST, "S4")},
}

_ZERO_RTT_COLUMN = {
    "S0": (REJ, "S1"),
    "S1": (SHLO, "S2"),
    "S2": (SHLO, "S2"),
    "S3": (SHLO, "S2"),
    "S4": (SHLO, "S2"),
}


def _ext_table():
    table = {}
    for state, row in _MIN_TABLE.items():
        row = dict(row)
        row[ZERO_RTT_CHLO] = _ZERO_RTT_COLUMN[state]
        table[state] = row
    return table


M_MIN = MealyMachine.from_table(_MIN_TABLE, "S0", MINIMAL_ALPHABET)
M_EXT = MealyMachine.from_table(_ext_table(), "S0", EXTENDED_ALPHABET)

REFERENCE = {"minimal": M_MIN, "extended": M_EXT}
