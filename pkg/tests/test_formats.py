import numpy as np
import pytest
from hypothesis import given, strategies as st

from polproj.formats import (
    format_complex,
    format_counts,
    format_report,
    format_table,
    hardy_to_records,
    matrix_from_report,
    parse_complex,
    parse_counts,
    parse_hardy_counts,
    parse_report,
    parse_table,
    write_text,
)
from polproj.hardy import HARDY_LABELS, table_i_counts
from polproj.tomography import PROBE_LABELS, CountRecord

finite = st.floats(allow_nan=False, allow_infinity=False)


@given(finite, finite)
def test_complex_round_trip(re, im):
    z = complex(re, im)
    assert parse_complex(format_complex(z)) == z


def test_complex_format_shape():
    assert format_complex(0.5 - 0.25j) == "0.5-0.25j"
    assert format_complex(1) == "1+0j"


def test_counts_round_trip():
    recs = [CountRecord(lb, k * 3, 2.5, 1e4) for k, lb in enumerate(PROBE_LABELS)]
    back = parse_counts(format_counts(recs), PROBE_LABELS)
    assert back == recs


def test_counts_float_values_survive():
    recs = [CountRecord("HH", 0.1 + 0.2, 1.0, 3.0)]
    assert parse_counts(format_counts(recs))[0].counts == 0.1 + 0.2


def test_counts_schema_errors():
    text = format_counts([CountRecord(lb, 1, 1.0, 1.0) for lb in PROBE_LABELS[:3]])
    with pytest.raises(ValueError, match="missing labels: RH, HV"):
        parse_counts(text, PROBE_LABELS)
    with pytest.raises(ValueError, match="header"):
        parse_counts("a,b\n1,2\n")
    with pytest.raises(ValueError, match="line 2"):
        parse_counts("label,counts,duration_s,rate_scale\nHH,x,1,1\n")
    dup = format_counts([CountRecord("HH", 1, 1.0, 1.0)] * 2)
    with pytest.raises(ValueError, match="duplicate labels: HH"):
        parse_counts(dup, ["HH"])


def test_hardy_file_round_trip():
    text = format_counts(hardy_to_records(table_i_counts()))
    assert '"alpha,-alpha_perp",727,420,1' in text
    assert parse_hardy_counts(text).counts == table_i_counts().counts


def test_hardy_file_missing_row():
    text = format_counts(hardy_to_records(table_i_counts())[:-1])
    with pytest.raises(ValueError, match=HARDY_LABELS[-1]):
        parse_hardy_counts(text)


def test_table_round_trip():
    cols = {
        "x": [0.1, 1 / 3, 2.0],
        "z": [1 + 2j, -0.5j, 1e-17 + 0j],
        "ok": [True, False, True],
        "n": [1, 2, 3],
    }
    assert parse_table(format_table(cols)) == cols


def test_table_rejects_ragged():
    with pytest.raises(ValueError):
        format_table({"a": [1], "b": [1, 2]})


def test_report_round_trip():
    m = np.array([[1 + 1e-17j, 0.3], [np.pi, -2j]])
    text = format_report({"m": m, "g": np.float64(0.645), "flag": np.bool_(True)})
    back = parse_report(text)
    assert np.array_equal(matrix_from_report(back["m"]), m)
    assert back["g"] == 0.645 and back["flag"] is True


def test_write_text_is_atomic(tmp_path):
    target = tmp_path / "out.csv"
    write_text(target, "a\n")
    assert target.read_text() == "a\n"
    assert [p.name for p in tmp_path.iterdir()] == ["out.csv"]
