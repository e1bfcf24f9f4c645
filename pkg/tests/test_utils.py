import logging
from fractions import Fraction

import pytest

from btembed.util import format_fraction, frac_part, log_inputs_outputs, parse_fraction


@pytest.mark.parametrize("log_level", (logging.DEBUG, logging.INFO, "WARNING"))
def test_log_inputs(
    caplog: pytest.LogCaptureFixture,
    log_level: int | str,
) -> None:
    """Test log_inputs decorator captures function inputs and outputs."""
    caplog.set_level(logging.DEBUG)

    @log_inputs_outputs(log_level=log_level)
    def example_func(a: int, *, b: str = "test") -> str:
        return f"{a}{b}"

    result = example_func(1, b="value")
    assert result == "1value"

    expect_log_to_contain_snippets = [
        "Calling command example_func with inputs:",
        "Arg_0=1",
        "b='value'",
        "resp='1value'",
    ]
    for t in expect_log_to_contain_snippets:
        assert t in caplog.text, t
        for record in caplog.records:
            if t in record.message:
                assert log_level in (record.levelno, record.levelname), record.levelno


@pytest.mark.parametrize(
    ("raw", "expected"),
    (
        ("1/2", Fraction(1, 2)),
        (" -3/4 ", Fraction(-3, 4)),
        ("5", Fraction(5)),
        (7, Fraction(7)),
        (Fraction(2, 3), Fraction(2, 3)),
    ),
)
def test_parse_fraction(raw: str | int | Fraction, expected: Fraction) -> None:
    assert parse_fraction(raw) == expected


@pytest.mark.parametrize("raw", ("1/0", "half", ""))
def test_parse_fraction_rejects_junk(raw: str) -> None:
    with pytest.raises((ValueError, ZeroDivisionError)):
        parse_fraction(raw)


def test_format_fraction() -> None:
    assert format_fraction(Fraction(-1, 4)) == "-1/4"
    assert format_fraction(Fraction(2)) == "2"


@pytest.mark.parametrize(
    ("x", "expected"),
    (
        (Fraction(1, 4), Fraction(1, 4)),
        (Fraction(-1, 4), Fraction(3, 4)),
        (Fraction(5, 2), Fraction(1, 2)),
        (Fraction(-2), Fraction(0)),
    ),
)
def test_frac_part(x: Fraction, expected: Fraction) -> None:
    assert frac_part(x) == expected
