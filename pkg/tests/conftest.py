from pathlib import Path

import pytest

from mcdakit.model import (
    NIST_CRITERIA,
    aggregate_ratings,
    bundled_data,
    parse_ranks,
    parse_ratings,
)

GOLDEN_DIR = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def bundled_records():
    return parse_ratings(bundled_data("ratings.csv"), "csv",
                         criteria=NIST_CRITERIA)


@pytest.fixture(scope="session")
def bundled_matrix(bundled_records):
    return aggregate_ratings(bundled_records, criteria=NIST_CRITERIA)


@pytest.fixture(scope="session")
def bundled_profiles():
    return parse_ranks(bundled_data("ranks.csv"), "csv")


@pytest.fixture(scope="session")
def golden_dir():
    return GOLDEN_DIR
