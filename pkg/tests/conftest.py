"""Shared fixtures: the two worked-example tables and small helpers."""
from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from microanon.dataset import Microdata
from microanon.microagg import Partition
from microanon.schema import Attribute, AttributeRole, AttributeSchema

settings.register_profile(
    "suite",
    deadline=None,
    max_examples=50,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")

# 12-record table: two numeric quasi-identifiers and a categorical
# confidential attribute coded 0=heart disease, 1=viral infection, 2=cancer.
DISEASE_ROWS = np.array([
    [2025, 28, 0],
    [2022, 29, 0],
    [2022, 25, 1],
    [2020, 24, 1],
    [1012, 50, 2],
    [1012, 55, 0],
    [1013, 47, 1],
    [1013, 49, 1],
    [1023, 31, 2],
    [1022, 34, 2],
    [1021, 35, 2],
    [1021, 37, 2],
], dtype=float)

# Exact group means of the three fixed-size groups {0..3}, {4..7}, {8..11}.
DISEASE_GROUP_MEANS = ((2022.25, 26.5), (1012.5, 50.25), (1021.75, 34.25))
# The same means as they appear in integer-formatted reports.
DISEASE_DISPLAY_MEANS = ((2022, 27), (1012, 50), (1021, 34))

# A 3-group regrouping of the same table in which every group covers all
# three disease codes (indices per group).
DISEASE_DIVERSE_GROUPS = ((5, 4, 7), (6, 11, 9, 1), (10, 0, 2, 3, 8))

# 13-record table: two numeric quasi-identifiers and a numeric confidential
# salary with three visible bands (low / middle / high).
SALARY_ROWS = np.array([
    [1011, 22, 500],
    [1007, 22, 550],
    [1012, 23, 600],
    [1009, 25, 1600],
    [1010, 28, 1500],
    [1011, 29, 1800],
    [1013, 31, 2900],
    [1010, 32, 3200],
    [1008, 32, 3600],
    [1010, 29, 1650],
    [1009, 26, 1550],
    [1011, 27, 1700],
    [1008, 33, 3800],
], dtype=float)

SALARY_BANDS = (
    (0, 1, 2),                # low:    500 - 600
    (3, 4, 5, 9, 10, 11),     # middle: 1500 - 1800
    (6, 7, 8, 12),            # high:   2900 - 3800
)


def _table(rows: np.ndarray, conf_name: str) -> Microdata:
    schema = AttributeSchema((
        Attribute("zip", AttributeRole.QUASI_IDENTIFIER),
        Attribute("age", AttributeRole.QUASI_IDENTIFIER),
        Attribute(conf_name, AttributeRole.CONFIDENTIAL),
    ))
    return Microdata(schema, rows)


@pytest.fixture
def disease_table() -> Microdata:
    return _table(DISEASE_ROWS, "disease")


@pytest.fixture
def disease_classes() -> np.ndarray:
    return DISEASE_ROWS[:, 2].astype(int)


@pytest.fixture
def disease_fixed_partition() -> Partition:
    return Partition(np.repeat([0, 1, 2], 4), 3, 3)


@pytest.fixture
def disease_diverse_partition() -> Partition:
    labels = np.empty(12, dtype=np.int64)
    for g, idxs in enumerate(DISEASE_DIVERSE_GROUPS):
        labels[list(idxs)] = g
    return Partition(labels, 3, 3)


@pytest.fixture
def salary_table() -> Microdata:
    return _table(SALARY_ROWS, "salary")


def groups_of(labels) -> list[list[int]]:
    """Partition labels -> sorted list of sorted member-index lists."""
    labels = np.asarray(labels)
    return sorted(
        sorted(np.flatnonzero(labels == g).tolist())
        for g in np.unique(labels)
    )
