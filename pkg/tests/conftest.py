from __future__ import annotations

import shutil
from pathlib import Path

import pytest

from lakefuse.tables import ingest_lake, load_table

FIXTURES = Path(__file__).parent / "fixtures"

EXAMPLE1_LAKE_FILES = ["t2_vaccination.csv", "t3_cases.csv", "t9_weather.csv"]
EXAMPLE4_LAKE_FILES = ["t5_approvals.csv", "t6_vaccine_facts.csv", "t9_weather.csv"]


def _copy_lake(src_dir: Path, names: list[str], dest: Path) -> Path:
    dest.mkdir(parents=True, exist_ok=True)
    for name in names:
        shutil.copy(src_dir / name, dest / name)
    return dest


@pytest.fixture(scope="session")
def example1_lake_dir(tmp_path_factory) -> Path:
    dest = tmp_path_factory.mktemp("example1_lake")
    return _copy_lake(FIXTURES / "example1", EXAMPLE1_LAKE_FILES, dest)


@pytest.fixture(scope="session")
def example4_lake_dir(tmp_path_factory) -> Path:
    dest = tmp_path_factory.mktemp("example4_lake")
    return _copy_lake(FIXTURES / "example4", EXAMPLE4_LAKE_FILES, dest)


@pytest.fixture()
def example1_lake(example1_lake_dir):
    return ingest_lake(example1_lake_dir)


@pytest.fixture()
def example4_lake(example4_lake_dir):
    return ingest_lake(example4_lake_dir)


@pytest.fixture(scope="session")
def t1_query():
    return load_table(FIXTURES / "example1" / "t1_covid.csv")


@pytest.fixture(scope="session")
def t4_query():
    return load_table(FIXTURES / "example4" / "t4_vaccines.csv")


@pytest.fixture(scope="session")
def example1_set():
    d = FIXTURES / "example1"
    return [
        load_table(d / "t1_covid.csv"),
        load_table(d / "t2_vaccination.csv"),
        load_table(d / "t3_cases.csv"),
    ]


@pytest.fixture(scope="session")
def example4_set():
    d = FIXTURES / "example4"
    return [
        load_table(d / "t4_vaccines.csv"),
        load_table(d / "t5_approvals.csv"),
        load_table(d / "t6_vaccine_facts.csv"),
    ]
