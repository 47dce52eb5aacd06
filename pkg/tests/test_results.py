import math

import pytest

from results import CurveRow, column, load_rows, parse_csv_text, save_rows, to_csv_text


def _rows():
    return [
        CurveRow.of(n_users=100, rho=0.5, delta=1.25),
        CurveRow.of(n_users=math.inf, rho=1.0, delta=None),
    ]


def test_csv_text_format():
    text = to_csv_text(_rows())
    assert text == "n_users,rho,delta\n100,0.5,1.25\ninf,1,NA\n"


def test_csv_reads_back_values():
    rows = parse_csv_text(to_csv_text(_rows()))
    assert rows[0].as_dict() == {"n_users": 100, "rho": 0.5, "delta": 1.25}
    assert math.isinf(rows[1].get("n_users"))
    assert rows[1].get("delta") is None


def test_twelve_significant_digits():
    text = to_csv_text([CurveRow.of(x=1.0 / 3.0)])
    assert text.splitlines()[1] == "0.333333333333"


def test_mismatched_columns_rejected():
    with pytest.raises(ValueError):
        to_csv_text([CurveRow.of(a=1), CurveRow.of(b=2)])
    with pytest.raises(ValueError):
        to_csv_text([])


def test_bad_field_count_rejected():
    with pytest.raises(ValueError) as exc:
        parse_csv_text("a,b\n1,2\n3\n")
    assert "line 3" in str(exc.value)


def test_empty_input_rejected():
    with pytest.raises(ValueError):
        parse_csv_text("")


def test_save_and_load(tmp_path):
    path = tmp_path / "out" / "curve.csv"
    save_rows(_rows(), path)
    assert path.exists()
    assert not path.with_suffix(".csv.tmp").exists()
    assert column(load_rows(path), "rho") == [0.5, 1]


def test_save_overwrites(tmp_path):
    path = tmp_path / "curve.csv"
    save_rows(_rows(), path)
    save_rows([CurveRow.of(m=30, ka=50)], path)
    assert path.read_text(encoding="utf-8") == "m,ka\n30,50\n"
