import csv
import json
import math

import pytest

from app.services.report_service import ReportWriter, flatten_row, rows_to_frame


@pytest.fixture
def writer() -> ReportWriter:
    return ReportWriter({"model": {"kind": "quadratic", "W": 3.0}, "solver": {"seed": 0}})


def test_flatten_row_splits_complex():
    assert flatten_row({"j": 0, "eigenvalue": 1 + 2j}) == {"j": 0, "eigenvalue_re": 1.0, "eigenvalue_im": 2.0}


def test_csv_starts_with_config_and_grid(writer, tmp_path):
    path = tmp_path / "out.csv"
    writer.write_csv(path, [{"j": 0, "eigenvalue": 0.5 + 0.25j}, {"j": 1, "eigenvalue": 0.1 + 0j}], {"L": 4.8, "N": 616})
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith("# config: ")
    assert json.loads(lines[0][len("# config: "):])["model"]["W"] == 3.0
    assert json.loads(lines[1][len("# grid: "):]) == {"L": 4.8, "N": 616}
    rows = list(csv.DictReader(lines[2:]))
    assert list(rows[0]) == ["j", "eigenvalue_re", "eigenvalue_im"]
    assert float(rows[0]["eigenvalue_im"]) == 0.25


def test_csv_columns_are_union_of_rows(writer, tmp_path):
    path = tmp_path / "out.csv"
    writer.write_csv(path, [{"j": 0, "eigenvalue": 1.0}, {"j": 1, "singular_value": 0.5}], {})
    rows = list(csv.DictReader(path.read_text(encoding="utf-8").splitlines()[2:]))
    assert list(rows[1]) == ["j", "eigenvalue", "singular_value"]
    assert rows[1]["eigenvalue"] == ""


def test_no_temporary_files_left(writer, tmp_path):
    writer.write_csv(tmp_path / "out.csv", [{"x": 1}], {})
    writer.write_json(tmp_path / "out.json", {"x": 1}, {})
    assert sorted(p.name for p in tmp_path.iterdir()) == ["out.csv", "out.json"]


def test_creates_parent_directories(writer, tmp_path):
    path = tmp_path / "nested" / "deeper" / "out.json"
    writer.write_json(path, {}, {})
    assert path.is_file()


def test_json_layout(writer, tmp_path):
    path = tmp_path / "out.json"
    writer.write_json(path, {"zeta": 1j, "values": [1 + 1j, 2.0], "missing": math.nan}, {"L": 1.0, "N": 8})
    text = path.read_text(encoding="utf-8")
    data = json.loads(text)
    assert set(data) == {"config", "grid", "results"}
    assert data["results"]["zeta"] == [0.0, 1.0]
    assert data["results"]["values"] == [[1.0, 1.0], 2.0]
    assert math.isnan(data["results"]["missing"])
    # 键排序，重复写出字节一致
    assert text.index('"config"') < text.index('"grid"') < text.index('"results"')
    writer.write_json(path, {"zeta": 1j, "values": [1 + 1j, 2.0], "missing": math.nan}, {"L": 1.0, "N": 8})
    assert path.read_text(encoding="utf-8") == text


def test_gnuplot_file(tmp_path):
    writer = ReportWriter({}, gnuplot=True)
    writer.write_csv(tmp_path / "out.csv", [{"n": 0, "value": 0.5 - 0.5j}, {"n": 1, "value": 0.25 + 0j}], {"L": 2.0})
    lines = (tmp_path / "out.dat").read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith("# config:")
    assert lines[2] == "# n value_re value_im"
    assert lines[3].split() == ["0", "0.5", "-0.5"]


def test_rows_to_frame_keeps_first_seen_column_order():
    df = rows_to_frame([{"W": 8.0, "A": 1 + 0.5j}, {"W": 16.0, "normB": 0.1}])
    assert list(df.columns) == ["W", "A_re", "A_im", "normB"]
    assert df["A_im"].iloc[0] == 0.5
    assert math.isnan(df["normB"].iloc[0])


def test_gnuplot_missing_values(tmp_path):
    writer = ReportWriter({}, gnuplot=True)
    writer.write_csv(tmp_path / "out.csv", [{"j": 0, "eigenvalue": 1.0}, {"j": 1, "singular_value": 0.5}], {})
    lines = (tmp_path / "out.dat").read_text(encoding="utf-8").splitlines()
    assert lines[2] == "# j eigenvalue singular_value"
    assert lines[4].split() == ["1", "nan", "0.5"]
