"""Dataset presets: canonical schemas and loader quirks for public data.

The data files themselves are never vendored; see README.md for download
instructions. Each preset pins the parsing choices that reproduction
depends on (header handling, cell normalization, label cleanup) plus the
default projection domain.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .ingest import LoadOptions
from .schema import (
    CATEGORICAL,
    CONTINUOUS,
    DISCRETE_EXCLUSIVE,
    DROP_ROW,
    FIXED_TO_QUERY,
    INTEGER,
    RELAXED_MIXTURE,
    DomainSpec,
    FeatureDecl,
    FeatureSchema,
)

# Adult census (UCI) dictionary levels, adult.names order.
ADULT_WORKCLASS = (
    "Private", "Self-emp-not-inc", "Self-emp-inc", "Federal-gov", "Local-gov",
    "State-gov", "Without-pay", "Never-worked",
)
ADULT_EDUCATION = (
    "Bachelors", "Some-college", "11th", "HS-grad", "Prof-school", "Assoc-acdm",
    "Assoc-voc", "9th", "7th-8th", "12th", "Masters", "1st-4th", "10th",
    "Doctorate", "5th-6th", "Preschool",
)
ADULT_MARITAL = (
    "Married-civ-spouse", "Divorced", "Never-married", "Separated", "Widowed",
    "Married-spouse-absent", "Married-AF-spouse",
)
ADULT_OCCUPATION = (
    "Tech-support", "Craft-repair", "Other-service", "Sales", "Exec-managerial",
    "Prof-specialty", "Handlers-cleaners", "Machine-op-inspct", "Adm-clerical",
    "Farming-fishing", "Transport-moving", "Priv-house-serv", "Protective-serv",
    "Armed-Forces",
)
ADULT_RELATIONSHIP = ("Wife", "Own-child", "Husband", "Not-in-family", "Other-relative", "Unmarried")
ADULT_RACE = ("White", "Asian-Pac-Islander", "Amer-Indian-Eskimo", "Other", "Black")
ADULT_SEX = ("Female", "Male")
ADULT_COUNTRY = (
    "United-States", "Cambodia", "England", "Puerto-Rico", "Canada", "Germany",
    "Outlying-US(Guam-USVI-etc)", "India", "Japan", "Greece", "South", "China",
    "Cuba", "Iran", "Honduras", "Philippines", "Italy", "Poland", "Jamaica",
    "Vietnam", "Mexico", "Portugal", "Ireland", "France", "Dominican-Republic",
    "Laos", "Ecuador", "Taiwan", "Haiti", "Columbia", "Hungary", "Guatemala",
    "Nicaragua", "Scotland", "Thailand", "Yugoslavia", "El-Salvador",
    "Trinadad&Tobago", "Peru", "Hong", "Holand-Netherlands",
)

ADULT_COLUMNS = [
    "age", "workclass", "fnlwgt", "education", "education_num", "marital_status",
    "occupation", "relationship", "race", "sex", "capital_gain", "capital_loss",
    "hours_per_week", "native_country", "income",
]

#: Demographic groups whose exact-match check defines "no continuous path".
ADULT_PATH_GROUPS = ("sex", "race", "native_country", "marital_status", "workclass")

FICO_COLUMNS = [
    "RiskPerformance",
    "ExternalRiskEstimate", "MSinceOldestTradeOpen", "MSinceMostRecentTradeOpen",
    "AverageMInFile", "NumSatisfactoryTrades", "NumTrades60Ever2DerogPubRec",
    "NumTrades90Ever2DerogPubRec", "PercentTradesNeverDelq", "MSinceMostRecentDelq",
    "MaxDelq2PublicRecLast12M", "MaxDelqEver", "NumTotalTrades",
    "NumTradesOpeninLast12M", "PercentInstallTrades", "MSinceMostRecentInqexcl7days",
    "NumInqLast6M", "NumInqLast6Mexcl7days", "NetFractionRevolvingBurden",
    "NetFractionInstallBurden", "NumRevolvingTradesWBalance",
    "NumInstallTradesWBalance", "NumBank2NatlTradesWHighUtilization",
    "PercentTradesWBalance",
]


@dataclass(frozen=True)
class DatasetPreset:
    name: str
    schema: FeatureSchema
    domain: DomainSpec
    train_options: LoadOptions
    test_options: LoadOptions | None = None
    notes: tuple[str, ...] = ()


def adult_schema(missing_policy: str = DROP_ROW) -> FeatureSchema:
    """Adult census schema: 5 numeric + 8 categorical, 104 encoded columns.

    The sampling weight column (fnlwgt) is excluded: it describes the census
    draw, not the person, and carries no meaning for hull geometry.
    """
    cat = dict(missing_policy=missing_policy)
    return FeatureSchema(
        features=(
            FeatureDecl("age", INTEGER, lower=0, upper=120),
            FeatureDecl("workclass", CATEGORICAL, levels=ADULT_WORKCLASS, **cat),
            FeatureDecl("education", CATEGORICAL, levels=ADULT_EDUCATION, **cat),
            FeatureDecl("education_num", INTEGER, lower=1, upper=16),
            FeatureDecl("marital_status", CATEGORICAL, levels=ADULT_MARITAL, **cat),
            FeatureDecl("occupation", CATEGORICAL, levels=ADULT_OCCUPATION, **cat),
            FeatureDecl("relationship", CATEGORICAL, levels=ADULT_RELATIONSHIP, **cat),
            FeatureDecl("race", CATEGORICAL, levels=ADULT_RACE, **cat),
            FeatureDecl("sex", CATEGORICAL, levels=ADULT_SEX, **cat),
            FeatureDecl("capital_gain", INTEGER, lower=0),
            FeatureDecl("capital_loss", INTEGER, lower=0),
            FeatureDecl("hours_per_week", INTEGER, lower=0, upper=168),
            FeatureDecl("native_country", CATEGORICAL, levels=ADULT_COUNTRY, **cat),
        ),
        target_column="income",
    )


def _strip_label_period(value: str) -> str:
    return value.rstrip(".")


def adult_preset(missing_policy: str = DROP_ROW) -> DatasetPreset:
    """Adult preset against the raw UCI files (adult.data / adult.test).

    The files have no header and are comma-space separated; the test file
    opens with a ``|1x3 Cross validator`` banner line and suffixes labels
    with a period. All of that is normalized here.
    """
    schema = adult_schema(missing_policy)
    domain = DomainSpec(
        modes={f.name: RELAXED_MIXTURE for f in schema.categorical_features},
        path_groups=ADULT_PATH_GROUPS,
    ).validate(schema)
    base = dict(
        na_token="?",
        has_header=False,
        column_names=list(ADULT_COLUMNS),
        strip_cells=True,
        value_normalizers={"income": _strip_label_period},
    )
    return DatasetPreset(
        name="adult",
        schema=schema,
        domain=domain,
        train_options=LoadOptions(**base),
        test_options=LoadOptions(**base, skip_comment_prefix="|"),
        notes=(
            "fnlwgt excluded from geometry (census sampling weight)",
            "default domain: every categorical group relaxed to mixtures; "
            "path status checked on sex/race/native_country/marital_status/workclass",
        ),
    )


def fico_schema() -> FeatureSchema:
    """FICO HELOC schema: 23 integer features, no categoricals.

    Special codes (-7, -8, -9) are kept as raw numeric values by default,
    matching how the published sample point carries -8 through both the
    query and its projection.
    """
    return FeatureSchema(
        features=tuple(FeatureDecl(c, INTEGER) for c in FICO_COLUMNS[1:]),
        target_column="RiskPerformance",
    )


def fico_preset(special_codes_as_missing: bool = False) -> DatasetPreset:
    schema = fico_schema()
    domain = DomainSpec(modes={}).validate(schema)
    na = ("-7", "-8", "-9") if special_codes_as_missing else ()
    return DatasetPreset(
        name="fico",
        schema=schema,
        domain=domain,
        train_options=LoadOptions(na_token=na, has_header=True),
        notes=(
            "single CSV (heloc_dataset.csv); split with split_rows(seed=0, test_fraction=0.5)",
            "special codes (-7/-8/-9) treated as missing" if special_codes_as_missing
            else "special codes (-7/-8/-9) kept as raw values",
        ),
    )


def vacs_like_schema() -> FeatureSchema:
    """Schema shaped like the veterans-cohort EHR table (18 features).

    The real data is private; this schema exists so the pipeline can be
    smoke-tested end to end on synthetic rows of the same shape.
    """
    cont = lambda name, lo=None, hi=None: FeatureDecl(name, CONTINUOUS, lower=lo, upper=hi)
    return FeatureSchema(
        features=(
            FeatureDecl("age", INTEGER, lower=18, upper=100),
            FeatureDecl("race", CATEGORICAL, levels=("Black", "White", "Hispanic", "Other")),
            FeatureDecl("gender", CATEGORICAL, levels=("Male", "Female")),
            cont("cd4_count", 0),
            cont("albumin", 0),
            cont("alanine_aminotransferase", 0),
            cont("aspartate_aminotransferase", 0),
            cont("creatinine", 0),
            cont("hemoglobin", 0),
            cont("platelet_count", 0),
            cont("white_blood_cell_count", 0),
            cont("body_mass_index", 5, 80),
            cont("days_between_visits", 0),
            cont("years_on_haart", 0),
            cont("fibrosis_4", 0),
            cont("egfr", 0),
            cont("viral_load", 0),
            FeatureDecl("hepatitis_c", CATEGORICAL, levels=("Yes", "No")),
        ),
    )


def vacs_like_preset() -> DatasetPreset:
    schema = vacs_like_schema()
    domain = DomainSpec(
        modes={
            "race": FIXED_TO_QUERY,
            "gender": FIXED_TO_QUERY,
            "hepatitis_c": DISCRETE_EXCLUSIVE,
        },
    ).validate(schema)
    return DatasetPreset(
        name="vacs_like",
        schema=schema,
        domain=domain,
        train_options=LoadOptions(na_token=""),
        notes=("synthetic smoke-test shape only; the underlying EHR data is private",),
    )


PRESETS = {
    "adult": adult_preset,
    "fico": fico_preset,
    "vacs_like": vacs_like_preset,
}


def split_rows(n: int, test_fraction: float = 0.5, seed: int = 0):
    """Deterministic shuffled train/test row-position split."""
    import numpy as np

    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    n_test = int(round(n * test_fraction))
    test = np.sort(order[:n_test])
    train = np.sort(order[n_test:])
    return train, test
