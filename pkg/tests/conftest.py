import json
import os

import numpy as np
import pytest

from hullaudit.ingest import EncodedDataset
from hullaudit.schema import CONTINUOUS, NOSCALE, FeatureDecl, FeatureSchema, build_layout

REPO = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
FIXTURES = os.path.join(REPO, "fixtures")

#: Directory holding adult.data / adult.test / heloc_dataset.csv, if present.
DATA_DIR = os.environ.get("HULLAUDIT_DATA", os.path.join(REPO, "data"))

DOWNLOAD_HINT = (
    "dataset files not found under %s; see README.md 'Reproducing the published "
    "numbers' for download instructions, then set HULLAUDIT_DATA" % DATA_DIR
)


def data_path(name: str) -> str:
    return os.path.join(DATA_DIR, name)


def require_data(*names: str):
    missing = [n for n in names if not os.path.exists(data_path(n))]
    if missing:
        pytest.skip(f"{DOWNLOAD_HINT} (missing: {', '.join(missing)})")


_LAYOUT_CACHE: dict[int, object] = {}


def numeric_dataset(D: np.ndarray) -> EncodedDataset:
    """Wrap a plain numeric matrix as an EncodedDataset (identity scaling)."""
    D = np.atleast_2d(np.asarray(D, dtype=float))
    d = D.shape[1]
    layout = _LAYOUT_CACHE.get(d)
    if layout is None:
        schema = FeatureSchema(features=tuple(FeatureDecl(f"f{i}", CONTINUOUS) for i in range(d)))
        layout = build_layout(schema, NOSCALE, [{f"f{i}": 0.0 for i in range(d)}])
        _LAYOUT_CACHE[d] = layout
    return EncodedDataset(D, np.arange(D.shape[0]), layout)


@pytest.fixture(scope="session")
def fixture_paths():
    return {
        "schema": os.path.join(FIXTURES, "fixture_schema.toml"),
        "train": os.path.join(FIXTURES, "fixture_train.csv"),
        "test": os.path.join(FIXTURES, "fixture_test.csv"),
        "expected": os.path.join(FIXTURES, "expected_summary.json"),
    }


@pytest.fixture(scope="session")
def fixture_expected(fixture_paths):
    with open(fixture_paths["expected"]) as fh:
        return json.load(fh)
