from pathlib import Path

import pytest

from dualcausal import PipelineConfig, load_csv, load_schema, run_pipeline

DATA = Path(__file__).resolve().parents[1] / "data"
TITANIC_CSV = DATA / "titanic.csv"
TITANIC_SCHEMA = DATA / "titanic_schema.json"

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def titanic_table():
    return load_csv(TITANIC_CSV, load_schema(TITANIC_SCHEMA))


@pytest.fixture(scope="session")
def titanic_result(titanic_table):
    return run_pipeline(titanic_table, PipelineConfig(outcome="Survived"))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
