from .results_database import (
    init_database,
    record_run,
    insert_error_rows,
    fetch_runs,
    fetch_error_rows,
    DB_PATH,
)

__all__ = [
    "init_database",
    "record_run",
    "insert_error_rows",
    "fetch_runs",
    "fetch_error_rows",
    "DB_PATH",
]
