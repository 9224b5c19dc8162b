import csv
import io
import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from lglab.report import (
    SCHEMA_VERSION,
    ReportWriteError,
    emit_report,
    load_report,
    render_csv,
    render_json,
)

scalars = st.one_of(st.none(), st.booleans(), st.integers(-10**6, 10**6),
                    st.floats(allow_nan=False, allow_infinity=False), st.text(max_size=12))
# the stdlib reader used for checking rejects NUL
cell_text = st.text(st.characters(blacklist_characters="\x00"), max_size=12)
records = st.lists(st.dictionaries(st.sampled_from(["a", "b", "eta", "n"]), scalars),
                   max_size=5)


class TestCSV:
    def test_empty_is_header_only(self):
        assert render_csv([], ["eta", "delta0_analytic"]) == "eta,delta0_analytic\n"

    def test_seventeen_digits(self):
        text = render_csv([{"x": 2 * math.pi / 3}])
        value = text.splitlines()[1]
        assert value == "2.0943951023931953"
        assert float(value) == 2 * math.pi / 3

    def test_quoting_and_line_endings(self):
        text = render_csv([{"outcome": "+1,-1", "note": 'say "hi"'}])
        assert "\r" not in text
        assert text.splitlines()[1] == '"+1,-1","say ""hi"""'
        assert list(csv.reader(io.StringIO(text)))[1] == ["+1,-1", 'say "hi"']

    def test_cells(self):
        row = render_csv([{"a": None, "b": True, "c": math.inf, "d": math.nan}]).splitlines()[1]
        assert row == ",true,inf,nan"

    def test_column_order(self):
        text = render_csv([{"b": 1}, {"a": 2, "b": 3}])
        assert text.splitlines()[0] == "b,a"

    @given(st.lists(st.dictionaries(st.sampled_from(["a", "b"]), cell_text,
                                    min_size=1), max_size=5))
    def test_round_trip_strings(self, recs):
        text = render_csv(recs, ["a", "b"])
        got = list(csv.reader(io.StringIO(text, newline="")))[1:]
        assert got == [[r.get("a", ""), r.get("b", "")] for r in recs]


class TestJSON:
    def test_envelope(self):
        doc = json.loads(render_json([{"x": 1}], report="analytic"))
        assert doc["schema_version"] == SCHEMA_VERSION
        assert doc["report"] == "analytic"
        assert list(doc) == ["schema_version", "report", "meta", "records"]

    @given(records)
    def test_round_trip(self, recs):
        assert json.loads(render_json(recs))["records"] == recs


class TestEmit:
    def test_file_round_trip(self, tmp_path):
        recs = [{"eta": 0.1, "n": 3, "ok": True}]
        path = tmp_path / "sub" / "r.json"
        emit_report(recs, "json", str(path))
        assert load_report(str(path)) == recs

    def test_stdout(self, capsys):
        emit_report([{"a": 1}], "csv", None)
        assert capsys.readouterr().out == "a\n1\n"

    def test_unwritable(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        with pytest.raises(ReportWriteError):
            emit_report([], "csv", str(blocker / "r.csv"))

    def test_bad_format(self):
        with pytest.raises(ValueError):
            emit_report([], "xml", None)

    def test_schema_check(self, tmp_path):
        p = tmp_path / "r.json"
        p.write_text(json.dumps({"schema_version": 99, "records": []}))
        with pytest.raises(ValueError):
            load_report(str(p))
