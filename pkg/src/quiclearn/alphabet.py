"""Abstract input and output symbols used to learn QUIC handshake models."""

INIT_CHLO = "INIT-CHLO"
FULL_CHLO = "FULL-CHLO"
ZERO_RTT_CHLO = "0RTT-CHLO"
GET = "GET"
CLOSE = "CLOSE"

REJ = "REJ"
SHLO = "SHLO"
HTTP = "HTTP"
CLOSED = "CLOSED"
PRST = "PRST"
EXP = "EXP"

MINIMAL_ALPHABET = (INIT_CHLO, FULL_CHLO, GET, CLOSE)
EXTENDED_ALPHABET = (INIT_CHLO, FULL_CHLO, ZERO_RTT_CHLO, GET, CLOSE)
OUTPUTS = frozenset({REJ, SHLO, HTTP, CLOSED, PRST, EXP})

ALPHABETS = {
    "minimal": MINIMAL_ALPHABET,
    "extended": EXTENDED_ALPHABET,
}
