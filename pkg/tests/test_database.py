from database import fetch_error_rows, fetch_runs, insert_error_rows, record_run
from models import ErrorReport, ErrorRow


def _report(scheme):
    return ErrorReport(
        scheme=scheme,
        rows=[
            ErrorRow(h=0.25, rms_error=0.04, ci_half_width=0.001, projection_count=3),
            ErrorRow(h=0.125, rms_error=0.02, ci_half_width=0.0005, eoc=1.0),
        ],
        num_samples=100,
    )


def test_runs_and_rows_round_trip(tmp_path):
    db = str(tmp_path / "ledger" / "results.db")
    run_id = record_run("table2", "convergence", 1, 100, {"name": "table2"}, db_path=db)
    assert insert_error_rows(run_id, _report("pmil"), db_path=db) == 2
    assert insert_error_rows(run_id, _report("ssbm"), db_path=db) == 2

    runs = fetch_runs(db_path=db)
    assert len(runs) == 1
    assert runs[0]["config"] == {"name": "table2"}
    assert runs[0]["samples"] == 100

    rows = fetch_error_rows(run_id, db_path=db)
    assert [r["scheme"] for r in rows] == ["pmil", "pmil", "ssbm", "ssbm"]
    assert rows[0]["eoc"] is None
    assert rows[1]["eoc"] == 1.0
    assert rows[0]["projection_count"] == 3
    assert all(r["valid"] for r in rows)
    assert len(fetch_error_rows(run_id, scheme="ssbm", db_path=db)) == 2


def test_runs_filtered_by_preset(tmp_path):
    db = str(tmp_path / "results.db")
    first = record_run("table2", "convergence", 1, 10, {}, db_path=db)
    second = record_run("table3", "convergence", 1, 10, {}, db_path=db)
    assert [r["id"] for r in fetch_runs(db_path=db)] == [second, first]
    assert [r["id"] for r in fetch_runs("table3", db_path=db)] == [second]
