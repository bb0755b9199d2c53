"""Lifted moment solutions for projection games and their verification.

The ground set has one element per (vertex, label) pair, rendered
"c1:2" / "x3:1". A solution built from a local distribution over
assignments stores the induced moments exactly; verification checks the
lifted program's constraints: y at the empty set is 1, the moment matrix
at level r is PSD, and every per-vertex label-sum slack vanishes exactly.

A float bridge to vector (Gram) form is provided for interoperability;
anything that passes through it is marked non-certifying.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .algebra import Rational, format_rational, psd_check_exact
from .lasserre_core import (
    GroundSet,
    LasserreVector,
    WeightsNotNormalized,
    canon,
    compressed_index,
    compressed_moment_matrix,
    mixture_lift,
    moment_matrix,
    subset_index,
)
from .projection_games import MissingLabel, ProjectionGame, evaluate

__all__ = [
    "ImperfectAssignment",
    "NumericalFailure",
    "ToleranceViolated",
    "pair_id",
    "parse_pair_id",
    "ground_for_game",
    "ProjSolution",
    "local_distribution_solution",
    "verify_projection_sdp",
    "check_pair_zero",
    "moments_to_vectors",
    "vectors_to_moments",
]

_DENSE_CAP = 400  # largest dense index size verify will assemble
_FLOAT_TOL = 1e-9


class ImperfectAssignment(ValueError):
    """Raised when a distribution member does not satisfy every edge."""


class NumericalFailure(RuntimeError):
    """Raised when the float bridge cannot meet its tolerance."""


class ToleranceViolated(ValueError):
    """Raised when supplied vectors violate the Gram-side constraints."""


def pair_id(vertex: str, label: int) -> str:
    return f"{vertex}:{label}"


def parse_pair_id(pid: str) -> tuple[str, int]:
    vertex, _, label = pid.rpartition(":")
    return vertex, int(label)


def ground_for_game(game: ProjectionGame) -> GroundSet:
    ids = [
        pair_id(v, s)
        for v in game.left_names + game.right_names
        for s in range(1, game.sigma + 1)
    ]
    return GroundSet(ids)


@dataclass
class ProjSolution:
    """A lifted solution for a game.

    support holds the local distribution (assignment, weight) pairs when
    the solution came from one; certified is False for anything built
    through the float bridge.
    """

    game: ProjectionGame
    vector: LasserreVector
    support: tuple[tuple[dict[str, int], Rational], ...] | None
    certified: bool = True

    @property
    def level(self) -> int:
        return self.vector.level


def _assignment_support(game: ProjectionGame, assignment: Mapping[str, int]) -> frozenset:
    for v in game.left_names + game.right_names:
        if v not in assignment:
            raise MissingLabel(v)
    return frozenset(
        pair_id(v, assignment[v]) for v in game.left_names + game.right_names
    )


def local_distribution_solution(
    game: ProjectionGame,
    support: Sequence[tuple[Mapping[str, int], Rational]],
    r: int,
    require_perfect: bool = True,
) -> ProjSolution:
    """Moments of a distribution over full assignments, stored to depth
    2(r+3) (level r+2), enough for spanner builds at parameter r.

    Raises WeightsNotNormalized unless weights are positive and sum to 1,
    and ImperfectAssignment if require_perfect and some member misses an
    edge.
    """
    ground = ground_for_game(game)
    entries = []
    for assignment, w in support:
        sat = evaluate(game, assignment)
        if require_perfect and sat != len(game.edges):
            raise ImperfectAssignment(
                f"assignment satisfies {sat} of {len(game.edges)} edges"
            )
        entries.append((_assignment_support(game, assignment), Fraction(w)))
    if not entries:
        raise WeightsNotNormalized("empty support")
    y = mixture_lift(ground, r + 2, entries)
    return ProjSolution(
        game=game,
        vector=y,
        support=tuple((dict(a), Fraction(w)) for a, w in support),
    )


def _vertex_slack_entry(
    game: ProjectionGame, y: LasserreVector, vertex: str, base: tuple[str, ...]
) -> Rational:
    total = -y.value(base)
    for s in range(1, game.sigma + 1):
        total += y.value(canon(base + (pair_id(vertex, s),)))
    return total


def verify_projection_sdp(game: ProjectionGame, sol: ProjSolution, r: int) -> dict:
    """Check the level-r constraints of the lifted projection program.

    Verifies y_{} = 1, PSD-ness of the moment matrix with index sets of
    size <= r, exact vanishing of each vertex's label-sum slack matrix at
    level r, and reports the objective sum over edge pairs. Uses the
    compressed route when the solution is mixture-backed, otherwise a
    dense matrix up to a size cap.
    """
    y = sol.vector
    report: dict = {"r": r, "passes": True, "failures": []}

    def fail(msg: str) -> None:
        report["passes"] = False
        report["failures"].append(msg)

    if y.value(()) != 1:
        fail(f"y at empty set is {format_rational(y.value(()))}, not 1")

    if y.mixture is not None:
        report["moment_route"] = "compressed"
        M = compressed_moment_matrix(y, r)
        index_reps = compressed_index(y, r).reps
    else:
        n_index = sum(
            len(list(itertools.combinations(range(y.ground.size), s)))
            for s in range(r + 1)
        )
        if n_index > _DENSE_CAP:
            raise ValueError(
                f"dense index of size {n_index} exceeds cap {_DENSE_CAP}; "
                "provide a mixture-backed solution"
            )
        report["moment_route"] = "dense"
        M = moment_matrix(y, r)
        index_reps = subset_index(y.ground, r)
    psd = psd_check_exact(M)
    report["moment_psd"] = psd.is_psd
    if not psd.is_psd:
        fail(f"moment matrix not PSD, witness value {format_rational(psd.witness_value)}")

    # Vertex slacks must vanish entrywise: index-pair unions suffice since
    # the entry at (I, J) only depends on I u J.
    slack_report = {}
    for vertex in game.left_names + game.right_names:
        bad = None
        for I in index_reps:
            for J in index_reps:
                base = canon(I + J)
                val = _vertex_slack_entry(game, y, vertex, base)
                if val != 0:
                    bad = (I, J, val)
                    break
            if bad:
                break
        if bad:
            slack_report[vertex] = (
                f"nonzero at I={bad[0]}, J={bad[1]}: {format_rational(bad[2])}"
            )
            fail(f"vertex slack for {vertex} does not vanish")
        else:
            slack_report[vertex] = "zero"
    report["vertex_slacks"] = slack_report

    objective = Fraction(0)
    for i, j in game.edges:
        ci, xj = game.left_name(i), game.right_name(j)
        for a, b in game.projections[(i, j)]:
            objective += y.value((pair_id(ci, a), pair_id(xj, b)))
    report["objective"] = objective
    report["objective_max"] = len(game.edges)
    return report


def check_pair_zero(game: ProjectionGame, sol: ProjSolution, r: int) -> dict:
    """Verify y_{Psi u {(c_i,sL),(x_j,sR)}} = 0 for every edge (i,j) and
    every pair (sL,sR) outside its projection, over index sets Psi of
    size <= 2r. Mixture-backed solutions are checked on profile-class
    representatives, which cover all index sets."""
    y = sol.vector
    if y.mixture is not None:
        bases = compressed_index(y, min(2 * r, y.depth - 2)).reps
        route = "compressed"
    else:
        t = min(2 * r, y.depth - 2)
        bases = subset_index(y.ground, t)
        route = "dense"
    checked = 0
    for i, j in game.edges:
        ci, xj = game.left_name(i), game.right_name(j)
        allowed = set(game.projections[(i, j)])
        for a in range(1, game.sigma + 1):
            for b in range(1, game.sigma + 1):
                if (a, b) in allowed:
                    continue
                pa, pb = pair_id(ci, a), pair_id(xj, b)
                for base in bases:
                    checked += 1
                    val = y.value(canon(base + (pa, pb)))
                    if val != 0:
                        return {
                            "passes": False,
                            "route": route,
                            "checked": checked,
                            "witness": {
                                "edge": (i, j),
                                "pair": (a, b),
                                "index_set": base,
                                "value": format_rational(val),
                            },
                        }
    return {"passes": True, "route": route, "checked": checked, "witness": None}


# --- float bridge (non-certifying) ------------------------------------------


def moments_to_vectors(sol: ProjSolution, r: int) -> dict[tuple[str, ...], np.ndarray]:
    """Factor the level-r moment matrix into Gram vectors (float).

    Raises NumericalFailure if the matrix is numerically far from PSD or
    the factorization does not reproduce it within 1e-9.
    """
    y = sol.vector
    labels = subset_index(y.ground, r)
    M = np.array([[float(y.value(canon(I + J))) for J in labels] for I in labels])
    w, V = np.linalg.eigh(M)
    if w.min() < -_FLOAT_TOL:
        raise NumericalFailure(f"eigenvalue {w.min()} below -{_FLOAT_TOL}")
    U = V @ np.diag(np.sqrt(np.clip(w, 0.0, None)))
    if np.abs(U @ U.T - M).max() > _FLOAT_TOL:
        raise NumericalFailure("factorization residual exceeds tolerance")
    return {lab: U[k] for k, lab in enumerate(labels)}


def vectors_to_moments(
    game: ProjectionGame,
    vectors: Mapping[tuple[str, ...], np.ndarray],
    r: int,
) -> ProjSolution:
    """Rebuild a moment solution from Gram vectors (float, non-certifying).

    Checks, within 1e-9: unit norm at the empty set, inner products in
    [0, 1], agreement of inner products whose index unions coincide, and
    per-vertex label-sum consistency. Raises ToleranceViolated otherwise.
    """
    vecs = {canon(k): np.asarray(v, dtype=float) for k, v in vectors.items()}
    if () not in vecs:
        raise ToleranceViolated("missing vector for the empty set")
    if abs(vecs[()] @ vecs[()] - 1.0) > _FLOAT_TOL:
        raise ToleranceViolated("empty-set vector is not unit norm")
    by_union: dict[tuple[str, ...], float] = {}
    keys = sorted(vecs, key=lambda s: (len(s), s))
    for I in keys:
        for J in keys:
            u = canon(I + J)
            val = float(vecs[I] @ vecs[J])
            if not (-_FLOAT_TOL <= val <= 1.0 + _FLOAT_TOL):
                raise ToleranceViolated(f"inner product {val} outside [0,1] at {u}")
            if u in by_union and abs(by_union[u] - val) > _FLOAT_TOL:
                raise ToleranceViolated(f"union inconsistency at {u}")
            by_union.setdefault(u, val)
    # Label sums: vectors for a vertex's labels must add up to the
    # empty-set vector when all singletons are present.
    ground = ground_for_game(game)
    for v in game.left_names + game.right_names:
        ids = [(pair_id(v, s),) for s in range(1, game.sigma + 1)]
        if all(i in vecs for i in ids):
            total = sum(vecs[i] for i in ids)
            if np.abs(total - vecs[()]).max() > 1e-6:
                raise ToleranceViolated(f"label vectors for {v} do not sum to U_empty")
    entries = {}
    for u, val in by_union.items():
        entries[u] = Fraction(min(max(val, 0.0), 1.0)).limit_denominator(10**12)
    entries[()] = Fraction(1)
    level = max(0, r - 1)
    y = LasserreVector(ground, level=level, values=entries, default="zero")
    return ProjSolution(game=game, vector=y, support=None, certified=False)
