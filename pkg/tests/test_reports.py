import json
import math

import numpy as np
from pytest import importorskip, mark

from reports import export_table, format_value, render_csv

HEADERS = ("name", "value", "passed")
ROWS = [{"name": "a", "value": 0.1, "passed": True}, {"name": "b", "value": np.float64(2.0), "passed": False}]


@mark.parametrize("value expected".split(), (
    (0.1, "0.10000000000000001"),
    (1.0 / 3.0, "0.33333333333333331"),
    (3, "3"),
    (np.int64(7), "7"),
    (True, "true"),
    (None, ""),
    (math.inf, "inf"),
    (-math.inf, "-inf"),
    (math.nan, "nan"),
    ("text", "text"),
))
def test_format_value(value, expected):
    assert format_value(value) == expected


def test_render_csv_is_stable():
    text = render_csv(HEADERS, ROWS)
    assert text == "name,value,passed\na,0.10000000000000001,true\nb,2,false\n"
    assert render_csv(HEADERS, ROWS) == text


def test_export_table_writes_csv_and_json(tmp_path):
    written = export_table(str(tmp_path), "calabi", 5, HEADERS, ROWS, {"value": np.float64(1.5), "gap": math.inf})
    assert [path.rsplit("/", 1)[-1] for path in written] == ["calabi-5.csv", "calabi-5.json"]
    assert (tmp_path / "calabi-5.csv").read_text(encoding="utf-8") == render_csv(HEADERS, ROWS)
    summary = json.loads((tmp_path / "calabi-5.json").read_text(encoding="utf-8"))
    assert summary == {"value": 1.5, "gap": "inf"}


def test_export_table_xlsx(tmp_path):
    openpyxl = importorskip("openpyxl")
    written = export_table(str(tmp_path), "flow", 0, HEADERS, ROWS, xlsx=True)
    assert written[-1].endswith("flow-0.xlsx")
    sheet = openpyxl.load_workbook(written[-1]).active
    assert [cell.value for cell in sheet[1]] == list(HEADERS)
    assert sheet["B2"].value == 0.1
