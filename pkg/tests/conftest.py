import os
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"

# Real Monash-archive datasets are not bundled (the package ships no
# downloader).  Point SACTS_DATA_DIR at a directory holding the archive's
# .tsf files to enable the quantitative reproduction tests.
DATA_DIR = Path(os.environ.get("SACTS_DATA_DIR", Path(__file__).parent / "data"))

ARCHIVE_FILES = {
    "us_births": "us_births_dataset.tsf",
    "sunspot": "sunspot_dataset_without_missing_values.tsf",
    "saugeen": "saugeenday_dataset.tsf",
}


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


def archive_path(key: str) -> Path | None:
    path = DATA_DIR / ARCHIVE_FILES[key]
    return path if path.exists() else None


def require_archive(key: str) -> Path:
    path = archive_path(key)
    if path is None:
        pytest.skip(
            f"Monash archive file {ARCHIVE_FILES[key]!r} not found in "
            f"{DATA_DIR} (set SACTS_DATA_DIR to run this check)"
        )
    return path
