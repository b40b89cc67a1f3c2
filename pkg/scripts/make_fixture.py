"""Regenerate the bundled synthetic fixture and its frozen expected values.

The fixture has known hull geometry by construction: every categorical
profile carries the same numeric box, so membership and path statuses are
decidable by eye. Distances are computed here with an independent dense QP
solver (cvxpy) and frozen into expected_summary.json; the test suite and
the external bindings compare pipeline output against those numbers, never
against the pipeline itself.

Run from the repo root: python scripts/make_fixture.py
"""

import csv
import json
import os

import numpy as np
import cvxpy as cp

from hullaudit.ingest import load_dataset
from hullaudit.schema import (
    CATEGORICAL,
    CONTINUOUS,
    RELAXED_MIXTURE,
    DomainSpec,
    FeatureDecl,
    FeatureSchema,
    dump_schema_file,
)

OUT = os.path.join(os.path.dirname(__file__), "..", "fixtures")

BOX_CORNERS = [(0, 0), (0, 4), (4, 0), (4, 4)]
BOX_INNER = [(1, 1), (2, 2), (3, 1), (1, 3)]
TRAIN_PROFILES = [
    ("red", "circle"), ("red", "square"), ("green", "circle"),
    ("green", "square"), ("blue", "circle"),
]
ABSENT_PROFILE = ("blue", "square")

INSIDE_POINTS = [(2, 1), (1, 2), (3, 3), (2, 3)]
OUTSIDE_POINTS = [(5, 2), (-1, 3), (2, 6), (6, 6)]
NO_PATH_POINTS = [(2, 2), (1, 1), (3, 2), (0, 0), (4, 4), (5, 5), (-1, -1), (2, 0), (0, 3), (6, 1)]


def build_rows():
    train = []
    for color, shape in TRAIN_PROFILES:
        for x, y in BOX_CORNERS + BOX_INNER:
            train.append({"x": x, "y": y, "color": color, "shape": shape, "label": (x + y) % 2})
    test = []
    for color, shape in TRAIN_PROFILES:
        for x, y in INSIDE_POINTS:
            test.append({"x": x, "y": y, "color": color, "shape": shape, "label": 0, "_expect": "inside"})
    for color, shape in TRAIN_PROFILES:
        for x, y in OUTSIDE_POINTS:
            test.append({"x": x, "y": y, "color": color, "shape": shape, "label": 1, "_expect": "outside_path"})
    for x, y in NO_PATH_POINTS:
        color, shape = ABSENT_PROFILE
        test.append({"x": x, "y": y, "color": color, "shape": shape, "label": 1, "_expect": "outside_no_path"})
    return train, test


def write_csv(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["x", "y", "color", "shape", "label"])
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row[k] for k in writer.fieldnames})


def oracle_distance(D, x):
    a = cp.Variable(D.shape[0], nonneg=True)
    prob = cp.Problem(cp.Minimize(cp.sum_squares(D.T @ a - x)), [cp.sum(a) == 1])
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-12, tol_gap_rel=1e-12, tol_feas=1e-12)
    return float(np.sqrt(max(prob.value, 0.0)))


def main():
    os.makedirs(OUT, exist_ok=True)
    train_rows, test_rows = build_rows()
    write_csv(os.path.join(OUT, "fixture_train.csv"), train_rows)
    write_csv(os.path.join(OUT, "fixture_test.csv"), test_rows)

    schema = FeatureSchema(
        features=(
            FeatureDecl("x", CONTINUOUS),
            FeatureDecl("y", CONTINUOUS),
            FeatureDecl("color", CATEGORICAL, levels=("red", "green", "blue")),
            FeatureDecl("shape", CATEGORICAL, levels=("circle", "square")),
        ),
        target_column="label",
    )
    domain = DomainSpec(
        modes={"color": RELAXED_MIXTURE, "shape": RELAXED_MIXTURE},
        path_groups=("color", "shape"),
    ).validate(schema)
    with open(os.path.join(OUT, "fixture_schema.toml"), "w") as fh:
        fh.write(dump_schema_file(schema, domain, na_token="?"))

    train, _ = load_dataset(schema, os.path.join(OUT, "fixture_train.csv"), role="train",
                            scaler_kind="zscore")
    test, _ = load_dataset(schema, os.path.join(OUT, "fixture_test.csv"), role="test",
                           layout=train.layout)

    path_index = train.subprofile_index(("color", "shape"))
    cat_order = [f.name for f in schema.categorical_features]

    counts = {"inside": 0, "outside_path": 0, "outside_no_path": 0}
    per_row = {}
    for i, row in enumerate(test_rows):
        x = test.matrix[i]
        status = row["_expect"]
        key = (schema.feature("color").levels.index(row["color"]),
               schema.feature("shape").levels.index(row["shape"]))
        has_path = key in path_index
        assert has_path == (status != "outside_no_path"), (i, row)
        if status == "inside":
            # inside by construction: the numeric point sits in the profile's
            # own box, whose bilinear corner weights realize it exactly
            dist = 0.0
            assert oracle_distance(train.matrix, x) <= 1e-5, (i, row)
        else:
            dist = oracle_distance(train.matrix, x)
            assert dist > 1e-3, (i, row, dist)
        counts[status] += 1
        per_row[str(i)] = {"status": status, "distance_scaled": dist}

    n = len(test_rows)
    expected = {
        "n_test": n,
        "counts": counts,
        "fractions": {k: v / n for k, v in counts.items()},
        "scaler": "zscore",
        "membership_eps": 1e-6,
        "oracle": "cvxpy dense QP (CLARABEL)",
        "per_row": per_row,
    }
    with open(os.path.join(OUT, "expected_summary.json"), "w") as fh:
        json.dump(expected, fh, indent=2)
        fh.write("\n")
    print("fixture written:", counts, "of", n, "cat order:", cat_order)


if __name__ == "__main__":
    main()
