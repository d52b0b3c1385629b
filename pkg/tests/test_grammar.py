"""Text grammar: parse/print round trips and rejection diagnostics."""

import pytest

from dulac.errors import ParseError
from dulac.grammar import parse_series, print_series
from dulac.randomgen import random_series, rng_from_seed
from dulac.series import series_close

GOOD = [
    "z",
    "2*z",
    "0.5*z + (1,-2)",
    "z + 3*E[1]",
    "z + (1 + 2*z)*E[1.5]",
    "2*z + (0.5,-1) + (1 + 2*z)*E[1.5] + 3*E[4]",
    "z + (0,1)*E[2] - 0.25*E[3]",
    "z - (1 - z)*E[0.5]",
    "z + (2*z^2 - z + 1)*E[2.5]",
]

BAD = [
    "",
    "z + E[",
    "z + (1,2",
    "q*z",
    "z + (z^2)",  # polynomial factors need an exponential part
    "-1*z",  # the multiplier must be positive
    "z + z",
    "z + (1)*E[0]",  # exponents must be positive
    "3",  # no linear head
]


@pytest.mark.parametrize("text", GOOD)
def test_parse_print_roundtrip_exact(text):
    s = parse_series(text, 6)
    assert print_series(parse_series(print_series(s), 6)) == print_series(s)


@pytest.mark.parametrize("text", GOOD)
def test_print_parse_close(text):
    s = parse_series(text, 6)
    assert series_close(parse_series(print_series(s), 6), s, 1e-45)


def test_whitespace_insensitive():
    a = parse_series("2*z+(0.5,-1)+(1+2*z)*E[1.5]", 5)
    b = parse_series("  2 * z + ( 0.5 , -1 ) + ( 1 + 2*z ) * E[ 1.5 ]  ", 5)
    assert series_close(a, b, 1e-45)


@pytest.mark.parametrize("text", BAD)
def test_rejections_carry_position(text):
    with pytest.raises(ParseError) as exc:
        parse_series(text, 5)
    assert exc.value.position >= 0


def test_printer_handles_negative_coefficients():
    rng = rng_from_seed(13)
    for _ in range(10):
        f = random_series(rng, 5, max_degree=2, scale=1.0)
        out = print_series(f)
        assert "+ -" not in out and "- -" not in out
        assert series_close(parse_series(out, f.validity), f, 1e-40)
