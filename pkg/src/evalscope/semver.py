"""Semantic versions and version-constraint matching.

Constraints are conjunctions of comparator clauses, e.g. ``^1.x`` or
``>=1.10.x and <=1.13.0``. Minor/patch components of a clause may be the
wildcard ``x`` (or ``X``/``*``); a wildcard component widens the clause to
the implied range, so ``1.12.x`` means ``>=1.12.0 and <1.13.0`` and
``>=1.10.x`` means ``>=1.10.0``.

Supported operators: ``=`` (or none), ``>=``, ``<=``, ``>``, ``<``, ``^``
(up to the next leftmost-nonzero bump, so ``^1.x`` is ``>=1.0.0 <2.0.0``)
and ``~`` (up to the next minor when a minor is given: ``~1.13`` is
``>=1.13.0 <1.14.0``). Pre-release and build tags are not supported.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import total_ordering


class ConstraintError(ValueError):
    """Raised for malformed version or constraint strings."""


_VERSION_RE = re.compile(r"^(\d+)(?:\.(\d+))?(?:\.(\d+))?$")
_CLAUSE_RE = re.compile(r"^(>=|<=|>|<|=|\^|~|≥|≤)?\s*([\dxX*]+(?:\.[\dxX*]+){0,2})$")

_OP_ALIASES = {"≥": ">=", "≤": "<=", None: "=", "": "="}

OPERATORS = ("=", ">=", "<=", ">", "<", "^", "~")


@total_ordering
@dataclass(frozen=True)
class SemVer:
    """A concrete major.minor.patch version."""

    major: int
    minor: int
    patch: int

    def __str__(self) -> str:
        return f"{self.major}.{self.minor}.{self.patch}"

    def key(self) -> tuple[int, int, int]:
        return (self.major, self.minor, self.patch)

    def __lt__(self, other: "SemVer") -> bool:
        return self.key() < other.key()


def parse_version(text: str) -> SemVer:
    """Parse ``major[.minor[.patch]]``; omitted components default to 0.

    Wildcards are rejected here; they are only meaningful in constraints.
    """
    if not isinstance(text, str) or not text.strip():
        raise ConstraintError("empty version string")
    m = _VERSION_RE.match(text.strip())
    if m is None:
        raise ConstraintError(f"invalid semantic version {text!r}")
    major, minor, patch = (int(g) if g is not None else 0 for g in m.groups())
    return SemVer(major, minor, patch)


@dataclass(frozen=True)
class PartialVersion:
    """A version pattern where components may be wildcards or omitted.

    A wildcard major (the pattern ``x``) matches every version and is
    only meaningful under ``=`` or ``>=``.
    """

    major: int | None
    minor: int | None  # None == wildcard/omitted
    patch: int | None

    def floor(self) -> SemVer:
        return SemVer(self.major or 0, self.minor or 0, self.patch or 0)

    def implied_upper(self) -> SemVer | None:
        """Exclusive upper bound of the range this pattern denotes.

        ``1.2.3`` -> 1.2.4 (a single point), ``1.2.x`` -> 1.3.0,
        ``1.x`` -> 2.0.0. Returns None for a full wildcard.
        """
        if self.major is None:
            return None
        if self.minor is None:
            return SemVer(self.major + 1, 0, 0)
        if self.patch is None:
            return SemVer(self.major, self.minor + 1, 0)
        return SemVer(self.major, self.minor, self.patch + 1)

    def is_full(self) -> bool:
        return self.major is not None and self.minor is not None and self.patch is not None

    def __str__(self) -> str:
        parts = ["x" if self.major is None else str(self.major)]
        parts.append("x" if self.minor is None else str(self.minor))
        parts.append("x" if self.patch is None else str(self.patch))
        return ".".join(parts)


def _parse_partial(text: str) -> PartialVersion:
    comps = text.split(".")
    if not 1 <= len(comps) <= 3:
        raise ConstraintError(f"invalid version pattern {text!r}")
    parsed: list[int | None] = []
    for comp in comps:
        if comp in ("x", "X", "*"):
            parsed.append(None)
        elif comp.isdigit():
            parsed.append(int(comp))
        else:
            raise ConstraintError(f"invalid version component {comp!r} in {text!r}")
    while len(parsed) < 3:
        parsed.append(None)
    major, minor, patch = parsed
    if major is None and minor is not None:
        raise ConstraintError(f"wildcard major with concrete minor in {text!r}")
    if minor is None and patch is not None:
        raise ConstraintError(f"wildcard minor with concrete patch in {text!r}")
    return PartialVersion(major, minor, patch)


@dataclass(frozen=True)
class Clause:
    """One comparator clause: an operator applied to a version pattern."""

    op: str
    pattern: PartialVersion

    def __str__(self) -> str:
        op = "" if self.op == "=" else self.op
        return f"{op}{self.pattern}"

    def bounds(self) -> tuple[SemVer | None, bool, SemVer | None, bool]:
        """Return (lower, lower_inclusive, upper, upper_inclusive); None = open."""
        if self.pattern.major is None and self.op not in ("=", ">="):
            raise ConstraintError(
                f"operator {self.op!r} cannot be applied to the full wildcard pattern"
            )
        lo = self.pattern.floor()
        hi = self.pattern.implied_upper()
        if self.op == "=":
            return lo, True, hi, False
        if self.op == ">=":
            return lo, True, None, False
        if self.op == ">":
            # Greater than the whole implied range.
            return hi, True, None, False
        if self.op == "<":
            return None, False, lo, False
        if self.op == "<=":
            # At most the range: for a full version this is v <= that version.
            return None, False, hi, False
        if self.op == "~":
            explicit_minor = self.pattern.minor is not None
            upper = (
                SemVer(lo.major, lo.minor + 1, 0)
                if explicit_minor
                else SemVer(lo.major + 1, 0, 0)
            )
            return lo, True, upper, False
        if self.op == "^":
            return lo, True, self._caret_upper(lo), False
        raise ConstraintError(f"unknown operator {self.op!r}")

    def _caret_upper(self, lo: SemVer) -> SemVer:
        # Bump the leftmost non-zero component; wildcards bump at their level.
        if lo.major > 0 or self.pattern.minor is None:
            return SemVer(lo.major + 1, 0, 0)
        if lo.minor > 0 or self.pattern.patch is None:
            return SemVer(0, lo.minor + 1, 0)
        return SemVer(0, 0, lo.patch + 1)

    def matches(self, version: SemVer) -> bool:
        lo, lo_inc, hi, hi_inc = self.bounds()
        if lo is not None and (version < lo or (version == lo and not lo_inc)):
            return False
        if hi is not None and (version > hi or (version == hi and not hi_inc)):
            return False
        return True


@dataclass(frozen=True)
class VersionConstraint:
    """Conjunction of clauses; a version must satisfy every clause."""

    clauses: tuple[Clause, ...]
    text: str

    def satisfies(self, version: SemVer) -> bool:
        return all(clause.matches(version) for clause in self.clauses)

    def __str__(self) -> str:
        return self.text


def parse_version_constraint(text: str) -> VersionConstraint:
    """Parse a constraint string into its clause list (left to right)."""
    if not isinstance(text, str) or not text.strip():
        raise ConstraintError("empty constraint string")
    clauses = []
    for part in re.split(r"\s+and\s+", text.strip()):
        part = part.strip()
        if not part:
            raise ConstraintError(f"empty clause in constraint {text!r}")
        m = _CLAUSE_RE.match(part)
        if m is None:
            raise ConstraintError(f"malformed constraint clause {part!r}")
        op = _OP_ALIASES.get(m.group(1), m.group(1))
        clause = Clause(op, _parse_partial(m.group(2)))
        clause.bounds()  # validate operator/pattern combination eagerly
        clauses.append(clause)
    return VersionConstraint(tuple(clauses), text.strip())


def constraint_satisfies(constraint: VersionConstraint | str, version: SemVer | str) -> bool:
    """True iff *version* satisfies every clause of *constraint*."""
    if isinstance(constraint, str):
        constraint = parse_version_constraint(constraint)
    if isinstance(version, str):
        version = parse_version(version)
    return constraint.satisfies(version)
