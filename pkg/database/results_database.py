import json
import logging
import sqlite3
from pathlib import Path
from typing import Dict, List, Optional

from models import ErrorReport

logger = logging.getLogger(__name__)

DB_PATH = "results/results.db"


def _connect(db_path: Optional[str]) -> sqlite3.Connection:
    path = Path(db_path or DB_PATH)
    path.parent.mkdir(parents=True, exist_ok=True)
    return sqlite3.connect(path)


def init_database(db_path: Optional[str] = None):
    """Create the run ledger tables if they don't exist."""
    conn = _connect(db_path)
    cursor = conn.cursor()

    # One row per CLI run
    cursor.execute("""
        CREATE TABLE IF NOT EXISTS runs (
            id INTEGER PRIMARY KEY AUTOINCREMENT,
            preset TEXT NOT NULL,
            mode TEXT NOT NULL,
            seed INTEGER NOT NULL,
            samples INTEGER NOT NULL,
            config_json TEXT NOT NULL,
            created_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP
        )
    """)

    # Table rows of every strong-error report of a run
    cursor.execute("""
        CREATE TABLE IF NOT EXISTS error_rows (
            id INTEGER PRIMARY KEY AUTOINCREMENT,
            run_id INTEGER NOT NULL REFERENCES runs(id),
            scheme TEXT NOT NULL,
            h REAL NOT NULL,
            rms_error REAL NOT NULL,
            ci_half_width REAL NOT NULL,
            eoc REAL,
            projection_count INTEGER NOT NULL,
            wall_time_s REAL NOT NULL,
            valid INTEGER NOT NULL
        )
    """)

    conn.commit()
    conn.close()


def record_run(preset: str, mode: str, seed: int, samples: int, config: Dict,
               db_path: Optional[str] = None) -> int:
    """Insert a run and return its id."""
    init_database(db_path)
    conn = _connect(db_path)
    cursor = conn.cursor()
    cursor.execute(
        "INSERT INTO runs (preset, mode, seed, samples, config_json) VALUES (?, ?, ?, ?, ?)",
        (preset, mode, seed, samples, json.dumps(config, sort_keys=True)),
    )
    run_id = cursor.lastrowid
    conn.commit()
    conn.close()
    logger.info("ledger: recorded run %d (%s)", run_id, preset)
    return run_id


def insert_error_rows(run_id: int, report: ErrorReport, db_path: Optional[str] = None) -> int:
    """Append the rows of one report to a run. Returns the number of rows written."""
    init_database(db_path)
    conn = _connect(db_path)
    cursor = conn.cursor()
    cursor.executemany("""
        INSERT INTO error_rows
            (run_id, scheme, h, rms_error, ci_half_width, eoc, projection_count, wall_time_s, valid)
        VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?)
    """, [
        (run_id, report.scheme, row.h, row.rms_error, row.ci_half_width, row.eoc,
         row.projection_count, row.wall_time_s, int(report.valid))
        for row in report.rows
    ])
    written = cursor.rowcount
    conn.commit()
    conn.close()
    return written


def fetch_runs(preset: Optional[str] = None, db_path: Optional[str] = None) -> List[Dict]:
    """Fetch runs, newest first, optionally for one preset."""
    init_database(db_path)
    conn = _connect(db_path)
    cursor = conn.cursor()

    if preset is None:
        cursor.execute("""
            SELECT id, preset, mode, seed, samples, config_json, created_at
            FROM runs ORDER BY id DESC
        """)
    else:
        cursor.execute("""
            SELECT id, preset, mode, seed, samples, config_json, created_at
            FROM runs WHERE preset = ? ORDER BY id DESC
        """, (preset,))

    rows = cursor.fetchall()
    conn.close()

    return [
        {
            "id": row[0],
            "preset": row[1],
            "mode": row[2],
            "seed": row[3],
            "samples": row[4],
            "config": json.loads(row[5]),
            "created_at": row[6],
        }
        for row in rows
    ]


def fetch_error_rows(run_id: int, scheme: Optional[str] = None, db_path: Optional[str] = None) -> List[Dict]:
    """Fetch the error rows of a run in insertion order."""
    init_database(db_path)
    conn = _connect(db_path)
    cursor = conn.cursor()
    query = """
        SELECT scheme, h, rms_error, ci_half_width, eoc, projection_count, wall_time_s, valid
        FROM error_rows WHERE run_id = ?
    """
    params: tuple = (run_id,)
    if scheme is not None:
        query += " AND scheme = ?"
        params += (scheme,)
    cursor.execute(query + " ORDER BY id", params)
    rows = cursor.fetchall()
    conn.close()

    return [
        {
            "scheme": row[0],
            "h": row[1],
            "rms_error": row[2],
            "ci_half_width": row[3],
            "eoc": row[4],
            "projection_count": row[5],
            "wall_time_s": row[6],
            "valid": bool(row[7]),
        }
        for row in rows
    ]
