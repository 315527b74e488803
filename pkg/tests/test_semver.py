from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from evalscope.semver import (
    ConstraintError,
    SemVer,
    constraint_satisfies,
    parse_version,
    parse_version_constraint,
)


def test_parse_full_version() -> None:
    assert parse_version("1.13.0") == SemVer(1, 13, 0)
    assert str(parse_version("1.13.0")) == "1.13.0"


def test_parse_partial_version_pads_with_zero() -> None:
    assert parse_version("1.0") == SemVer(1, 0, 0)
    assert parse_version("2") == SemVer(2, 0, 0)


@pytest.mark.parametrize("bad", ["", "a.b.c", "1.0.0-rc2", "1..0", "1.0.0.0", "x"])
def test_parse_version_rejects(bad: str) -> None:
    with pytest.raises(ConstraintError):
        parse_version(bad)


def test_caret_wildcard_clause_structure() -> None:
    constraint = parse_version_constraint("^1.x")
    assert len(constraint.clauses) == 1
    clause = constraint.clauses[0]
    assert clause.op == "^"
    assert clause.pattern.major == 1
    assert clause.pattern.minor is None


def test_conjunction_clause_structure() -> None:
    constraint = parse_version_constraint(">=1.10.x and <=1.13.0")
    assert [c.op for c in constraint.clauses] == [">=", "<="]


def test_unicode_comparators_accepted() -> None:
    constraint = parse_version_constraint("≥1.10.x and ≤1.13.0")
    assert constraint_satisfies(constraint, "1.12.0")


@pytest.mark.parametrize("bad", ["", "and", ">=", "^^1.0", "1.x.3", "x.1.2", ">= 1.0 or 2.0"])
def test_malformed_constraints_rejected(bad: str) -> None:
    with pytest.raises(ConstraintError):
        parse_version_constraint(bad)


def test_caret_examples() -> None:
    assert constraint_satisfies("^1.x", "1.13.0")
    assert constraint_satisfies("^1.x", "1.0.0")
    assert not constraint_satisfies("^1.x", "2.0.0")
    assert not constraint_satisfies("^1.x", "0.9.9")


def test_conjunction_example() -> None:
    constraint = ">=1.10.x and <=1.13.0"
    assert constraint_satisfies(constraint, "1.12.0")
    assert not constraint_satisfies(constraint, "1.14.0")


def test_enumerated_conjunction_against_hand_table() -> None:
    # Hand-evaluated truth table over 1.9.0 .. 1.14.0 for ">=1.10.x and <=1.13.0".
    table = {
        "1.9.0": False,
        "1.10.0": True,
        "1.11.0": True,
        "1.12.0": True,
        "1.13.0": True,
        "1.14.0": False,
    }
    for version, expected in table.items():
        assert constraint_satisfies(">=1.10.x and <=1.13.0", version) is expected


def test_tilde_and_bare_wildcard() -> None:
    assert constraint_satisfies("~1.13", "1.13.9")
    assert not constraint_satisfies("~1.13", "1.14.0")
    assert constraint_satisfies("1.12.x", "1.12.3")
    assert not constraint_satisfies("1.12.x", "1.13.0")


def test_zero_major_caret() -> None:
    assert constraint_satisfies("^0.2.1", "0.2.5")
    assert not constraint_satisfies("^0.2.1", "0.3.0")
    assert constraint_satisfies("^0.0.3", "0.0.3")
    assert not constraint_satisfies("^0.0.3", "0.0.4")


# Exhaustive caret algebra: ^M.x satisfaction is exactly M <= major < M+1.
@given(
    major=st.integers(0, 3),
    v=st.tuples(st.integers(0, 4), st.integers(0, 3), st.integers(0, 3)),
)
def test_caret_major_range_property(major: int, v: tuple[int, int, int]) -> None:
    version = SemVer(*v)
    expected = major <= version.major < major + 1
    assert constraint_satisfies(f"^{major}.x", version) is expected


def _oracle_interval(lo: tuple, hi_exclusive: tuple | None, hi_inclusive: tuple | None = None):
    def check(v: SemVer) -> bool:
        key = v.key()
        if key < lo:
            return False
        if hi_exclusive is not None and key >= hi_exclusive:
            return False
        if hi_inclusive is not None and key > hi_inclusive:
            return False
        return True

    return check


def test_constraint_truth_table_against_interval_oracle() -> None:
    """Grid 0.9.0-2.1.0 x the four reference constraints vs hardcoded bounds."""
    oracles = {
        "^1.x": _oracle_interval((1, 0, 0), (2, 0, 0)),
        "~1.13": _oracle_interval((1, 13, 0), (1, 14, 0)),
        ">=1.10.x and <=1.13.0": _oracle_interval((1, 10, 0), None, (1, 13, 0)),
        "1.12.x": _oracle_interval((1, 12, 0), (1, 13, 0)),
    }
    grid = [
        SemVer(major, minor, patch)
        for major in range(0, 3)
        for minor in range(0, 22)
        for patch in range(0, 3)
        if (0, 9, 0) <= (major, minor, patch) <= (2, 1, 0)
    ]
    assert len(grid) > 50
    disagreements = []
    for text, oracle in oracles.items():
        constraint = parse_version_constraint(text)
        for version in grid:
            if constraint.satisfies(version) is not oracle(version):
                disagreements.append((text, str(version)))
    assert disagreements == []
