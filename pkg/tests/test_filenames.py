import pytest
from hypothesis import given
from hypothesis import strategies as st

from ratecast.filenames import (
    FileNameParts,
    FilenameParseError,
    format_filename,
    parse_filename,
)


def test_parse_standard_name():
    assert parse_filename("e991-r0002-s01-c00.xtc") == FileNameParts(991, 2, 1, 0)


def test_parse_zero_case():
    assert parse_filename("e0-r0-s0-c0") == FileNameParts(0, 0, 0, 0)


@pytest.mark.parametrize(
    "name",
    [
        "notafile.dat",
        "e1-r2-s3",
        "e1-r2-s3-c4-x5",
        "e-r2-s3-c4",
        "e1-r2-s3-c4.",
        "E1-R2-S3-C4",
        "e1-r2-s3-c4.xtc\n",
        "",
    ],
)
def test_parse_rejects_malformed_names(name):
    with pytest.raises(FilenameParseError) as err:
        parse_filename(name)
    assert err.value.name == name


def test_parse_accepts_any_padding_width():
    assert parse_filename("e000991-r2-s0001-c000.xtc") == FileNameParts(991, 2, 1, 0)


def test_format_normalizes_padding():
    parts = parse_filename("e0991-r0002-s01-c00.xtc")
    assert format_filename(parts) == "e991-r2-s1-c0"
    assert format_filename(parts, ext="xtc") == "e991-r2-s1-c0.xtc"


def test_parts_reject_negative_values():
    with pytest.raises(ValueError):
        FileNameParts(-1, 0, 0, 0)


@given(
    exp=st.integers(0, 10**9),
    run=st.integers(0, 10**9),
    stream=st.integers(0, 10**9),
    chunk=st.integers(0, 10**9),
    ext=st.none() | st.sampled_from(["xtc", "dat", "xtc.inprogress"]),
)
def test_round_trip_preserves_values(exp, run, stream, chunk, ext):
    parts = FileNameParts(exp, run, stream, chunk)
    assert parse_filename(format_filename(parts, ext=ext)) == parts


@given(st.text(max_size=60))
def test_parser_never_crashes_on_arbitrary_text(name):
    try:
        parts = parse_filename(name)
    except FilenameParseError:
        return
    assert isinstance(parts, FileNameParts)


def test_round_trip_fuzz_10k_tuples():
    import numpy as np

    rng = np.random.default_rng(7)
    for _ in range(10_000):
        values = [int(v) for v in rng.integers(0, 10**6, size=4)]
        parts = FileNameParts(*values)
        assert parse_filename(format_filename(parts, ext="xtc")) == parts
