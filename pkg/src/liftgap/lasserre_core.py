"""Moment vectors over a finite ground set, moment and slack matrices,
and the union lemmas that every certified solution must satisfy.

A moment vector y assigns a rational to each small subset of the ground
set, with y_{} = 1. Vectors may be stored explicitly, backed by a lazy
evaluator, or represented as a convex mixture of integral indicator
lifts (y_S = sum of weights of mixture sets containing S), optionally
with explicit overrides on individual subsets.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from .algebra import (
    PsdResult,
    Rational,
    RationalMatrix,
    format_rational,
    parse_rational,
    psd_check_exact,
)

__all__ = [
    "MissingValue",
    "PreconditionFailed",
    "WeightsNotNormalized",
    "GroundSet",
    "canon",
    "subset_index",
    "MixtureSupport",
    "LasserreVector",
    "mixture_lift",
    "moment_matrix",
    "slack_matrix",
    "UnionLemmaReport",
    "check_union_lemmas",
    "write_solution",
    "read_solution",
    "vector_from_entries",
]


class MissingValue(KeyError):
    """Raised when a vector with default rule 'error' is asked for an
    unstored subset, or any vector is asked beyond its depth."""


class PreconditionFailed(ValueError):
    """Raised when a check's stated precondition does not hold."""


class WeightsNotNormalized(ValueError):
    """Raised when mixture weights are not positive rationals summing to 1."""


class GroundSet:
    """An ordered universe of element ids (strings), canonically sorted."""

    def __init__(self, elements: Iterable[str]):
        elems = sorted(elements)
        if len(elems) != len(set(elems)):
            raise ValueError("duplicate ground elements")
        if any(not e for e in elems):
            raise ValueError("empty element id")
        self.elements = tuple(elems)
        self._pos = {e: i for i, e in enumerate(self.elements)}

    @property
    def size(self) -> int:
        return len(self.elements)

    def index_of(self, e: str) -> int:
        return self._pos[e]

    def __contains__(self, e: str) -> bool:
        return e in self._pos

    def __iter__(self):
        return iter(self.elements)

    def __eq__(self, other) -> bool:
        return isinstance(other, GroundSet) and self.elements == other.elements

    def __hash__(self) -> int:
        return hash(self.elements)

    def __repr__(self) -> str:
        return f"GroundSet(size={self.size})"


def canon(S: Iterable[str]) -> tuple[str, ...]:
    """Canonical subset representation: sorted, deduplicated tuple."""
    return tuple(sorted(set(S)))


def subset_index(ground: GroundSet, t: int) -> list[tuple[str, ...]]:
    """All subsets of size <= t, ordered by size then lexicographically.

    Length is sum_{i<=t} C(g, i); the elements come out already canonical
    because the ground is sorted.
    """
    out: list[tuple[str, ...]] = []
    for size in range(t + 1):
        out.extend(itertools.combinations(ground.elements, size))
    return out


@dataclass(frozen=True)
class MixtureSupport:
    """A convex combination of integral indicator lifts.

    sets[t] is the support set X_t and weights[t] its weight; the induced
    vector is y_S = sum of weights[t] over t with S a subset of X_t.
    """

    sets: tuple[frozenset, ...]
    weights: tuple[Rational, ...]

    def value(self, S: tuple[str, ...]) -> Rational:
        total = Fraction(0)
        for X, w in zip(self.sets, self.weights):
            if all(e in X for e in S):
                total += w
        return total


class LasserreVector:
    """A depth-bounded moment vector over a ground set.

    Lookup order for value(S): explicit values, then the backing
    evaluator, then the default rule ('zero' returns 0, 'error' raises
    MissingValue). Queries beyond depth 2*(level+1) always raise.
    """

    def __init__(
        self,
        ground: GroundSet,
        level: int,
        values: Mapping[tuple[str, ...], Rational] | None = None,
        default: str = "zero",
        backing: Callable[[tuple[str, ...]], Rational] | None = None,
        mixture: MixtureSupport | None = None,
    ):
        if level < 0:
            raise ValueError("level must be >= 0")
        if default not in ("zero", "error"):
            raise ValueError("default must be 'zero' or 'error'")
        self.ground = ground
        self.level = level
        self.default = default
        self.backing = backing
        self.mixture = mixture
        vals: dict[tuple[str, ...], Fraction] = {}
        for key, v in (values or {}).items():
            key = canon(key)
            if any(e not in ground for e in key):
                raise ValueError(f"unknown element in stored subset {key}")
            v = Fraction(v)
            if not (0 <= v <= 1):
                raise ValueError(f"stored value {v} outside [0, 1] at {key}")
            vals[key] = v
        self.values = vals
        if self.value(()) != 1:
            raise ValueError("y at the empty set must equal 1")

    @property
    def depth(self) -> int:
        return 2 * (self.level + 1)

    def value(self, S: Iterable[str]) -> Rational:
        key = canon(S)
        if len(key) > self.depth:
            raise MissingValue(f"subset of size {len(key)} beyond depth {self.depth}")
        if key in self.values:
            return self.values[key]
        if self.backing is not None:
            return Fraction(self.backing(key))
        if key == ():
            return Fraction(1)
        if self.default == "zero":
            return Fraction(0)
        raise MissingValue(f"no stored value for {key}")

    def stored_subsets(self) -> list[tuple[str, ...]]:
        return sorted(self.values, key=lambda s: (len(s), s))

    def __repr__(self) -> str:
        return (
            f"LasserreVector(ground={self.ground.size}, level={self.level}, "
            f"stored={len(self.values)})"
        )


def mixture_lift(
    ground: GroundSet,
    level: int,
    support: Sequence[tuple[Iterable[str], Rational]],
    overrides: Mapping[tuple[str, ...], Rational] | None = None,
) -> LasserreVector:
    """Build the moment vector of a convex mixture of indicator lifts.

    Each support entry is (X, w); weights must be positive and sum to 1.
    Overrides pin individual subsets to explicit values (used by negative
    controls); they take precedence over the mixture.
    """
    sets = []
    weights = []
    for X, w in support:
        X = frozenset(X)
        if any(e not in ground for e in X):
            raise ValueError("mixture set contains unknown elements")
        w = Fraction(w)
        if w <= 0:
            raise WeightsNotNormalized(f"weight {w} is not positive")
        sets.append(X)
        weights.append(w)
    if sum(weights, Fraction(0)) != 1:
        raise WeightsNotNormalized(f"weights sum to {sum(weights, Fraction(0))}, not 1")
    mix = MixtureSupport(sets=tuple(sets), weights=tuple(weights))
    values = dict(overrides or {})
    return LasserreVector(
        ground=ground,
        level=level,
        values=values,
        default="zero",
        backing=mix.value,
        mixture=mix,
    )


def moment_matrix(y: LasserreVector, t: int) -> RationalMatrix:
    """M_t(y): rows and columns indexed by subsets of size <= t, entry
    (I, J) = y_{I union J}. Requires 2t <= depth of y."""
    if 2 * t > y.depth:
        raise MissingValue(f"moment matrix at t={t} needs depth {2 * t} > {y.depth}")
    labels = subset_index(y.ground, t)
    cache: dict[tuple[str, ...], Fraction] = {}

    def val(I, J):
        key = canon(I + J)
        if key not in cache:
            cache[key] = y.value(key)
        return cache[key]

    rows = [[val(I, J) for J in labels] for I in labels]
    return RationalMatrix(labels, rows)


def slack_matrix(
    y: LasserreVector,
    a: Mapping[str, Rational],
    b: Rational,
    t: int,
) -> RationalMatrix:
    """Slack moment matrix of the constraint sum_i a_i x_i >= b at level t:
    entry (I, J) = sum_i a_i y_{I u J u {i}} - b y_{I u J}."""
    if 2 * t + 1 > y.depth:
        raise MissingValue(f"slack matrix at t={t} needs depth {2 * t + 1} > {y.depth}")
    coeffs = {e: Fraction(v) for e, v in a.items() if Fraction(v) != 0}
    for e in coeffs:
        if e not in y.ground:
            raise ValueError(f"constraint touches unknown element {e!r}")
    b = Fraction(b)
    labels = subset_index(y.ground, t)
    cache: dict[tuple[str, ...], Fraction] = {}

    def val(key):
        if key not in cache:
            cache[key] = y.value(key)
        return cache[key]

    rows = []
    for I in labels:
        row = []
        for J in labels:
            base = canon(I + J)
            total = -b * val(base)
            for e, ae in coeffs.items():
                total += ae * val(canon(base + (e,)))
            row.append(total)
        rows.append(row)
    return RationalMatrix(labels, rows)


@dataclass(frozen=True)
class UnionLemmaReport:
    passed: bool
    ones_checked: int
    zeros_checked: int
    facial_checked: int
    failures: tuple[str, ...]


def check_union_lemmas(y: LasserreVector, t: int) -> UnionLemmaReport:
    """Check the structural consequences of moment-matrix PSD-ness.

    Precondition (raises PreconditionFailed otherwise): M_t(y) is PSD.
    Verifies, over all index subsets I, J of size <= t:
      * y_I = 1 implies y_{I u J} = y_J
      * y_I = 0 implies y_{I u J} = 0
    and that for every ground element i the facial matrices
    (y_{I u J u {i}}) and (y_{I u J} - y_{I u J u {i}}) at level t-1 are
    both PSD.
    """
    base = moment_matrix(y, t)
    if not psd_check_exact(base).is_psd:
        raise PreconditionFailed("moment matrix at the stated level is not PSD")
    labels = subset_index(y.ground, t)
    failures: list[str] = []
    ones = zeros = 0
    for I in labels:
        yI = y.value(I)
        if yI == 1:
            for J in labels:
                ones += 1
                lhs = y.value(canon(I + J))
                rhs = y.value(J)
                if lhs != rhs:
                    failures.append(
                        f"y_I=1 union failure: I={I}, J={J}, y_IuJ={lhs}, y_J={rhs}"
                    )
        elif yI == 0:
            for J in labels:
                zeros += 1
                lhs = y.value(canon(I + J))
                if lhs != 0:
                    failures.append(f"y_I=0 union failure: I={I}, J={J}, y_IuJ={lhs}")
    facial = 0
    if t >= 1:
        small = subset_index(y.ground, t - 1)
        for e in y.ground:
            m_one = RationalMatrix.from_function(
                small, lambda I, J, e=e: y.value(canon(I + J + (e,)))
            )
            m_zero = RationalMatrix.from_function(
                small,
                lambda I, J, e=e: y.value(canon(I + J)) - y.value(canon(I + J + (e,))),
            )
            facial += 2
            if not psd_check_exact(m_one).is_psd:
                failures.append(f"facial matrix for {e} (present) not PSD")
            if not psd_check_exact(m_zero).is_psd:
                failures.append(f"facial matrix for {e} (absent) not PSD")
    return UnionLemmaReport(
        passed=not failures,
        ones_checked=ones,
        zeros_checked=zeros,
        facial_checked=facial,
        failures=tuple(failures),
    )


# --- profile compression ----------------------------------------------------
#
# For a mixture-backed vector, y_{I u J} depends on index subsets only
# through their membership profiles p(I) = (1[I subset X_t])_t, so moment
# and slack matrices are class functions once subsets are grouped by
# profile. Explicitly stored subsets (overrides) and their subsets are
# split off as singleton classes; entries between remaining group classes
# are then pure mixture values. Compressed PSD-ness is equivalent to full
# PSD-ness: one direction is the principal submatrix on representatives,
# the other follows by summing any full vector's coordinates within each
# class, which reproduces the full quadratic form on the compressed
# matrix.


@dataclass(frozen=True)
class CompressedIndex:
    """Representative subsets for the profile classes at a given depth."""

    reps: tuple[tuple[str, ...], ...]
    kinds: tuple[str, ...]  # "group" or "single" per class


def _element_profile(e: str, mix: MixtureSupport) -> tuple[int, ...]:
    return tuple(1 if e in X else 0 for X in mix.sets)


def compressed_index(y: LasserreVector, t: int) -> CompressedIndex:
    """Profile classes for index subsets of size <= t.

    Realized profiles are exactly the coordinatewise ANDs of at most t
    distinct element-class profiles (repeating a class never changes the
    AND, and classes partition the elements, so one-member-per-class
    representatives always exist). Representatives avoid subsets of
    overridden sets, which get singleton classes of their own.
    """
    mix = y.mixture
    if mix is None:
        raise ValueError("compression needs a mixture-backed vector")
    T = len(mix.sets)
    # Singleton classes: all subsets of overridden sets, up to size t.
    singles: set[tuple[str, ...]] = set()
    for key in y.values:
        for size in range(min(len(key), t) + 1):
            singles.update(itertools.combinations(key, size))

    by_profile: dict[tuple[int, ...], list[str]] = {}
    for e in y.ground:
        by_profile.setdefault(_element_profile(e, mix), []).append(e)
    el_classes = sorted(by_profile.items())  # deterministic order
    union_keys = {e for key in y.values for e in key}

    def pick_rep(chosen: list[list[str]]) -> tuple[str, ...] | None:
        # A subset with the combo's profile that is not override-related.
        # If some class has a member outside every overridden set, one
        # member per class (preferring such members) can never lie inside
        # an overridden set. Otherwise the member pool is small; search
        # it exhaustively, allowing several members of one class, and
        # report emptiness honestly with None.
        if any(any(m not in union_keys for m in members) for members in chosen):
            rep = []
            used_outside = False
            for members in chosen:
                free = next((m for m in members if m not in union_keys), None)
                if free is not None and not used_outside:
                    rep.append(free)
                    used_outside = True
                else:
                    rep.append(members[0])
            return tuple(sorted(rep))
        pool = sorted(set(itertools.chain.from_iterable(chosen)))
        class_of = {m: ci for ci, members in enumerate(chosen) for m in members}
        for size in range(len(chosen), t + 1):
            for cand in itertools.combinations(pool, size):
                if {class_of[m] for m in cand} != set(range(len(chosen))):
                    continue
                if cand not in singles:
                    return cand
        return None

    reps: list[tuple[str, ...]] = []
    kinds: list[str] = []
    seen_profiles: set[tuple[int, ...]] = set()
    all_ones = tuple([1] * T)
    if () not in singles:
        reps.append(())
        kinds.append("group")
        seen_profiles.add(all_ones)
    for size in range(1, t + 1):
        for combo in itertools.combinations(range(len(el_classes)), size):
            profile = tuple(
                min(el_classes[c][0][i] for c in combo) for i in range(T)
            )
            if profile in seen_profiles:
                continue
            rep = pick_rep([el_classes[c][1] for c in combo])
            if rep is None:
                continue  # every subset with this profile is overridden
            seen_profiles.add(profile)
            reps.append(rep)
            kinds.append("group")
    for sub in sorted(singles, key=lambda s: (len(s), s)):
        reps.append(sub)
        kinds.append("single")
    return CompressedIndex(reps=tuple(reps), kinds=tuple(kinds))


def compressed_moment_matrix(y: LasserreVector, t: int) -> RationalMatrix:
    """Moment matrix restricted to profile-class representatives; PSD iff
    the full M_t(y) is PSD."""
    if 2 * t > y.depth:
        raise MissingValue(f"moment matrix at t={t} needs depth {2 * t} > {y.depth}")
    idx = compressed_index(y, t)
    return RationalMatrix.from_function(
        idx.reps, lambda I, J: y.value(canon(I + J))
    )


def compressed_slack_matrix(
    y: LasserreVector,
    a: Mapping[str, Rational],
    b: Rational,
    t: int,
) -> RationalMatrix:
    """Slack matrix restricted to profile-class representatives; PSD iff
    the full slack matrix at level t is PSD."""
    if 2 * t + 1 > y.depth:
        raise MissingValue(f"slack matrix at t={t} needs depth {2 * t + 1} > {y.depth}")
    idx = compressed_index(y, t)
    coeffs = {e: Fraction(v) for e, v in a.items() if Fraction(v) != 0}
    b = Fraction(b)

    def entry(I, J):
        base = canon(I + J)
        total = -b * y.value(base)
        for e, ae in coeffs.items():
            total += ae * y.value(canon(base + (e,)))
        return total

    return RationalMatrix.from_function(idx.reps, entry)


# --- solution files ---------------------------------------------------------

_FORBIDDEN_IN_ID = set(",<>= \t\n")


def write_solution(y: LasserreVector, max_size: int | None = None) -> str:
    """Render the stored entries of y as text, one `<ids> = p/q` line per
    subset, empty set first, then by size and lexicographic order."""
    for e in y.ground:
        if set(e) & _FORBIDDEN_IN_ID:
            raise ValueError(f"element id {e!r} cannot be serialized")
    lines = [f"<> = {format_rational(y.value(()))}"]
    for key in y.stored_subsets():
        if key == ():
            continue
        if max_size is not None and len(key) > max_size:
            continue
        lines.append(f"<{','.join(key)}> = {format_rational(y.values[key])}")
    return "\n".join(lines) + "\n"


def read_solution(text: str) -> dict[tuple[str, ...], Rational]:
    """Parse solution text back into a subset -> value mapping."""
    entries: dict[tuple[str, ...], Fraction] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line or not line.startswith("<"):
            raise ValueError(f"line {lineno}: malformed solution line {raw!r}")
        left, right = line.split("=", 1)
        left = left.strip()
        if not (left.startswith("<") and left.endswith(">")):
            raise ValueError(f"line {lineno}: malformed subset {left!r}")
        inner = left[1:-1]
        key = canon(inner.split(",")) if inner else ()
        entries[key] = parse_rational(right)
    if entries.get((), None) != 1:
        raise ValueError("solution must assign 1 to the empty set")
    return entries


def vector_from_entries(
    ground: GroundSet,
    level: int,
    entries: Mapping[tuple[str, ...], Rational],
    default: str = "zero",
) -> LasserreVector:
    return LasserreVector(ground=ground, level=level, values=entries, default=default)
