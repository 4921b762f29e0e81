import csv
import json
import subprocess
import sys

import pytest

from manetlab.errors import SchemaError
from manetlab.harness import (
    GRADES_HEADER,
    CampaignConfig,
    compare,
    compare_local,
    fmt,
    grades_csv,
    main,
    parse_ids,
    read_grades,
    run_campaign,
)
from manetlab.reference import ReferenceTable
from manetlab.stats import SummaryRow


def tiny(tmp_path, name, **kw):
    base = dict(algorithm="jso", functions=(5, 6), dimensions=(30,), runs=3, seed=1, budget_multiplier=20)
    base.update(kw)
    return CampaignConfig(out=tmp_path / name, **base)


class TestFormatting:
    @pytest.mark.parametrize(
        "value,text", [(0.0, "0.00e+00"), (0.585, "5.85e-01"), (58500.0, "5.85e+04"), (1.34e-07, "1.34e-07")]
    )
    def test_fmt(self, value, text):
        assert fmt(value) == text

    def test_grades_header(self):
        text = grades_csv([SummaryRow(6, 30, 0, 0, 0, 0, 0)])
        assert text.splitlines() == [
            "function,dimension,best,worst,mean,median,std",
            "6,30,0.00e+00,0.00e+00,0.00e+00,0.00e+00,0.00e+00",
        ]

    def test_parse_ids(self):
        assert parse_ids("1,3-10") == (1, 3, 4, 5, 6, 7, 8, 9, 10)
        assert parse_ids("30,50") == (30, 50)


class TestConfig:
    @pytest.mark.parametrize(
        "kw",
        [
            dict(runs=0),
            dict(functions=(2,)),
            dict(functions=()),
            dict(dimensions=(20,)),
            dict(workers=0),
            dict(learning_rate=0.01),
        ],
    )
    def test_invalid(self, tmp_path, kw):
        with pytest.raises(ValueError):
            tiny(tmp_path, "x", **kw)

    def test_unknown_algorithm(self, tmp_path):
        with pytest.raises(ValueError):
            tiny(tmp_path, "x", algorithm="pso")

    def test_run_seeds(self, tmp_path):
        cfg = tiny(tmp_path, "x", seed=100)
        assert [cfg.run_seed(r) for r in range(3)] == [100, 101, 102]


class TestCampaign:
    def test_files(self, tmp_path):
        cfg = tiny(tmp_path, "a")
        paths = run_campaign(cfg)
        folder = paths[30].parent
        with open(paths[30]) as fh:
            rows = list(csv.reader(fh))
        assert tuple(rows[0]) == GRADES_HEADER and len(rows) == 3
        for f in (5, 6):
            for r in range(3):
                trace = (folder / f"trace_F{f}_D30_run{r}.csv").read_text().splitlines()
                assert trace[0] == "fes,best_f" and trace[-1].startswith("600,")
        meta = json.loads((folder / "meta.json").read_text())
        assert meta["run_seeds"] == [1, 2, 3] and meta["max_fes"] == 600

    def test_manet_single_function(self, tmp_path):
        cfg = tiny(tmp_path, "m", algorithm="manet", functions=(6,), budget_multiplier=5, learning_rate=0.002)
        path = run_campaign(cfg)[30]
        assert len(path.read_text().splitlines()) == 2
        meta = json.loads((path.parent / "meta.json").read_text())
        assert meta["parameter_count"] == 1470 and meta["learning_rate"] == 0.002

    def test_byte_identical_reruns_and_workers(self, tmp_path):
        a = run_campaign(tiny(tmp_path, "a"))[30]
        b = run_campaign(tiny(tmp_path, "b"))[30]
        c = run_campaign(tiny(tmp_path, "c", workers=2))[30]
        assert a.read_bytes() == b.read_bytes() == c.read_bytes()
        for name in ("finals.csv", "meta.json", "trace_F6_D30_run2.csv"):
            assert (a.parent / name).read_bytes() == (c.parent / name).read_bytes()

    def test_grades_parse_back(self, tmp_path):
        rows = read_grades(run_campaign(tiny(tmp_path, "a"))[30])
        assert [r.function for r in rows] == [5, 6]
        assert all(r.best <= r.median <= r.worst for r in rows)


class TestCompare:
    def test_reference_tally(self):
        table = ReferenceTable()
        for d in (30, 50):
            report = compare(table.rows("manet", d), table)
            assert report.tally() == "+:4 =:2 −:3"
            assert {r.function: r.sign for r in report.rows} == {
                f: table.reference_sign(f, d).replace("−", "-") for f in (1, 3, 4, 5, 6, 7, 8, 9, 10)
            }

    def test_self_comparison(self):
        table = ReferenceTable()
        report = compare(table.rows("jso", 30), table)
        assert all(r.sign == "=" for r in report.rows)

    def test_from_csv(self, tmp_path):
        table = ReferenceTable()
        path = tmp_path / "grades.csv"
        path.write_text(grades_csv(table.rows("manet", 30)))
        assert compare(path, table).tally() == "+:4 =:2 −:3"
        assert "tally +:4" in compare(path, table).render()

    def test_missing_column(self, tmp_path):
        path = tmp_path / "grades.csv"
        path.write_text("function,dimension,best,worst,mean,median\n5,30,1,2,1.5,1.5\n")
        with pytest.raises(SchemaError) as err:
            read_grades(path)
        assert err.value.column == "std" and "std" in str(err.value)

    def test_bad_value(self, tmp_path):
        path = tmp_path / "grades.csv"
        path.write_text(",".join(GRADES_HEADER) + "\n5,30,1,x,1,1,0\n")
        with pytest.raises(SchemaError) as err:
            read_grades(path)
        assert err.value.column == "worst"


class TestReference:
    def test_transcription_roundtrip(self):
        table = ReferenceTable()
        row = table.get("MaNet", 5, 30)
        assert row.text == ("0.00e+00", "1.99e+00", "5.85e-01", "1.34e-07", "6.59e-01")
        assert [fmt(v) for v in (row.row.best, row.row.worst, row.row.mean, row.row.median, row.row.std)] == list(
            row.text
        )
        assert len(table.rows("jso", 50)) == 9


class TestCli:
    def test_main_runs_and_compares(self, tmp_path, capsys):
        code = main(
            ["--algo", "jso", "--funcs", "5", "--dims", "30", "--runs", "2", "--budget-multiplier", "10",
             "--out", str(tmp_path), "--compare-ref"]
        )
        out = capsys.readouterr().out
        assert code == 0 and "grades.csv" in out and "tally" in out

    def test_invalid_config_exit_code(self, tmp_path, capsys):
        assert main(["--algo", "jso", "--funcs", "2", "--out", str(tmp_path)]) == 2
        assert "error" in capsys.readouterr().err

    def test_unwritable_directory(self, tmp_path, capsys):
        blocker = tmp_path / "file"
        blocker.write_text("")
        code = main(["--algo", "jso", "--funcs", "5", "--dims", "30", "--runs", "1",
                     "--budget-multiplier", "1", "--out", str(blocker / "sub")])
        assert code == 1 and "cannot write" in capsys.readouterr().err

    def test_module_entry_point(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "manetlab", "--algo", "jso", "--funcs", "6", "--dims", "30", "--runs", "1",
             "--budget-multiplier", "5", "--out", str(tmp_path)],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
        assert (tmp_path / "jso" / "D30" / "grades.csv").exists()


def test_compare_local_raw_samples(tmp_path):
    manet = tmp_path / "a.csv"
    jso = tmp_path / "b.csv"
    manet.write_text("function,run,best_f\n" + "".join(f"5,{r},{0.1 * r}\n" for r in range(10)))
    jso.write_text("function,run,best_f\n" + "".join(f"5,{r},{10 + r}\n" for r in range(10)))
    report = compare_local(manet, jso, 30)
    assert report.mode == "raw local samples" and report.rows[0].sign == "+"
