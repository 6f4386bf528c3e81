import json

import pytest

from conceptviz.cli import EXIT_ERROR, EXIT_NO_PROGRAM, EXIT_OK, main
from conceptviz.session import Session

from .conftest import T0_CSV, make_t0

WIDE_CSV = (
    "Date,Seattle,Atlanta\n"
    "2020-01-01,51,45\n"
    "2020-01-02,45,47\n"
    "2020-01-03,48,56\n"
)

EXAMPLE_CSV = "Seattle Temp,Atlanta Temp\n51,45\n45,47\n"


@pytest.fixture()
def t0_csv(tmp_path):
    p = tmp_path / "t0.csv"
    p.write_text(T0_CSV)
    return p


@pytest.fixture()
def wide_csv(tmp_path):
    p = tmp_path / "wide.csv"
    p.write_text(WIDE_CSV)
    return p


@pytest.fixture()
def example_csv(tmp_path):
    p = tmp_path / "example.csv"
    p.write_text(EXAMPLE_CSV)
    return p


def session_file(tmp_path):
    s = Session("cli-session")
    s.upload_table(make_t0())
    s.create_custom_concept("Seattle Temp", [51, 45])
    s.create_custom_concept("Atlanta Temp", [45, 47, 56, 41])
    p = tmp_path / "session.json"
    p.write_text(json.dumps(s.to_dict()))
    return p


def chart_file(tmp_path, template="scatter"):
    p = tmp_path / "chart.json"
    p.write_text(json.dumps({
        "template_id": template,
        "encodings": [
            {"channel": "x", "concept_name": "Seattle Temp"},
            {"channel": "y", "concept_name": "Atlanta Temp"},
        ]}))
    return p


class TestSynth:
    def test_pivot_printed(self, t0_csv, example_csv, capsys):
        code = main(["synth", "--table", str(t0_csv),
                     "--example", str(example_csv)])
        out = capsys.readouterr().out
        assert code == EXIT_OK
        assert '(pivot_wider (input) name_col="City"' in out.splitlines()[0]

    def test_identity_example(self, t0_csv, tmp_path, capsys):
        example = tmp_path / "identity.csv"
        example.write_text("City,Temperature\nSeattle,51\nAtlanta,45\n")
        code = main(["synth", "--table", str(t0_csv),
                     "--example", str(example)])
        out = capsys.readouterr().out
        assert code == EXIT_OK
        assert "(input)" in out.splitlines()[0]

    def test_typo_exits_2(self, t0_csv, tmp_path, capsys):
        example = tmp_path / "typo.csv"
        example.write_text("Seattle Temp,Atlanta Temp\n51,999\n45,47\n")
        code = main(["synth", "--table", str(t0_csv),
                     "--example", str(example)])
        err = capsys.readouterr().err
        assert code == EXIT_NO_PROGRAM
        assert "999" in err

    def test_json_output(self, t0_csv, example_csv, capsys):
        code = main(["synth", "--table", str(t0_csv),
                     "--example", str(example_csv), "--json"])
        doc = json.loads(capsys.readouterr().out)
        assert code == EXIT_OK
        assert doc["results"][0]["program"].startswith("(pivot_wider")

    def test_missing_file_exits_1(self, t0_csv, capsys):
        code = main(["synth", "--table", str(t0_csv),
                     "--example", "/nonexistent.csv"])
        assert code == EXIT_ERROR


class TestDerive:
    def test_difference_column(self, wide_csv, capsys):
        code = main(["derive", "--table", str(wide_csv),
                     "--sources", "Seattle,Atlanta",
                     "--desc", "calculate seattle atlanta temp diff",
                     "--out", "Difference"])
        out = capsys.readouterr().out
        assert code == EXIT_OK
        lines = out.strip().splitlines()
        assert lines[0] == "Date,Seattle,Atlanta,Difference"
        assert [ln.split(",")[-1] for ln in lines[1:]] == ["6", "-2", "-8"]

    def test_show_candidates(self, wide_csv, capsys):
        code = main(["derive", "--table", str(wide_csv),
                     "--sources", "Seattle,Atlanta",
                     "--desc", "calculate seattle atlanta temp diff",
                     "--out", "Difference", "--show-candidates"])
        out = capsys.readouterr().out
        assert code == EXIT_OK
        assert out.count("[") >= 2 and "abs(" in out

    def test_pick_second(self, wide_csv, capsys):
        code = main(["derive", "--table", str(wide_csv),
                     "--sources", "Seattle,Atlanta",
                     "--desc", "calculate seattle atlanta temp diff",
                     "--out", "Difference", "--pick", "1"])
        out = capsys.readouterr().out
        assert code == EXIT_OK
        assert [ln.split(",")[-1]
                for ln in out.strip().splitlines()[1:]] == ["6", "2", "8"]

    def test_unknown_column_exits_1(self, wide_csv, capsys):
        code = main(["derive", "--table", str(wide_csv),
                     "--sources", "Nope", "--desc", "diff",
                     "--out", "X"])
        assert code == EXIT_ERROR

    def test_remote_without_key_exits_1(self, wide_csv, tmp_path,
                                        monkeypatch, capsys):
        monkeypatch.delenv("CONCEPTVIZ_API_KEY", raising=False)
        config = tmp_path / "config.json"
        config.write_text(json.dumps({
            "kind": "remote", "endpoint": "http://127.0.0.1:1/v1",
            "model": "m"}))
        code = main(["derive", "--table", str(wide_csv),
                     "--sources", "Seattle,Atlanta", "--desc", "diff",
                     "--out", "D", "--config", str(config)])
        assert code == EXIT_ERROR
        assert "backend unavailable" in capsys.readouterr().err


class TestFormulate:
    def test_pivot_scenario_files(self, tmp_path, example_csv, capsys):
        session = session_file(tmp_path)
        chart = chart_file(tmp_path)
        out_dir = tmp_path / "out"
        code = main(["formulate", "--session", str(session),
                     "--chart", str(chart), "--example", str(example_csv),
                     "--out-dir", str(out_dir)])
        assert code == EXIT_OK
        spec = json.loads((out_dir / "candidate-1.spec.json").read_text())
        assert spec["encoding"]["x"] == {"field": "Seattle Temp",
                                         "type": "quantitative"}
        table = (out_dir / "candidate-1.table.csv").read_text()
        assert table.splitlines()[0] == "Date,Seattle Temp,Atlanta Temp"

    def test_render_writes_png(self, tmp_path, example_csv, capsys):
        session = session_file(tmp_path)
        chart = chart_file(tmp_path)
        out_dir = tmp_path / "out"
        code = main(["formulate", "--session", str(session),
                     "--chart", str(chart), "--example", str(example_csv),
                     "--out-dir", str(out_dir), "--render"])
        assert code == EXIT_OK
        png = out_dir / "candidate-1.png"
        assert png.exists() and png.read_bytes()[:4] == b"\x89PNG"

    def test_missing_example_exits_1(self, tmp_path, capsys):
        session = session_file(tmp_path)
        chart = chart_file(tmp_path)
        code = main(["formulate", "--session", str(session),
                     "--chart", str(chart), "--out-dir", str(tmp_path)])
        assert code == EXIT_ERROR

    def test_missing_required_channel_exits_1(self, tmp_path, capsys):
        session = session_file(tmp_path)
        chart = tmp_path / "bad-chart.json"
        chart.write_text(json.dumps({
            "template_id": "scatter",
            "encodings": [{"channel": "x",
                           "concept_name": "Seattle Temp"}]}))
        code = main(["formulate", "--session", str(session),
                     "--chart", str(chart), "--out-dir", str(tmp_path)])
        assert code == EXIT_ERROR

    def test_typo_example_exits_2(self, tmp_path, capsys):
        session = session_file(tmp_path)
        chart = chart_file(tmp_path)
        example = tmp_path / "typo.csv"
        example.write_text("Seattle Temp,Atlanta Temp\n51,999\n45,47\n")
        code = main(["formulate", "--session", str(session),
                     "--chart", str(chart), "--example", str(example),
                     "--out-dir", str(tmp_path)])
        assert code == EXIT_NO_PROGRAM
