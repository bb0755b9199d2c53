"""End-to-end gap measurement: transfer a certified projection-game
moment vector onto a constructed instance, evaluate the fractional
objective against its closed form, compute the exact integral optimum at
desk scale, and assemble a deterministic report.

The transfer map Phi sends each non-outer edge to at most one
(game vertex, label) pair; the lifted vector is y'_S = 0 when S touches
an outer edge and y*_{Phi(S)} otherwise, which is again a mixture of
integral indicator lifts when y* is one.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

import numpy as np

from . import __version__
from .algebra import Rational, format_rational, solve_lp_exact
from .lasserre_core import GroundSet, LasserreVector, canon, mixture_lift
from .projection_sdp import ProjSolution, pair_id
from .reductions import SpannerInstance, enumerate_stretch_paths

__all__ = [
    "DepthInsufficient",
    "ClosedFormMismatch",
    "CapExceeded",
    "ProvenanceMismatch",
    "PhiMap",
    "phi_map",
    "phi_of_set",
    "build_fractional",
    "fractional_objective",
    "solve_integral",
    "gap_report",
    "canonical_json",
    "report_digest",
    "instance_digest",
    "symbolic_formulas",
]


class DepthInsufficient(ValueError):
    """Raised when the game solution is too shallow for the requested level."""


class ClosedFormMismatch(AssertionError):
    """Raised when the summed objective disagrees with its closed form."""


class CapExceeded(RuntimeError):
    """Raised when the exact solver faces more optional edges than its cap."""


class ProvenanceMismatch(ValueError):
    """Raised when report inputs come from different instances."""


# --- the transfer map -------------------------------------------------------


@dataclass(frozen=True)
class PhiMap:
    variant: str  # "directed" | "undirected" | "steiner"
    images: dict  # edge id -> pair id or None; outer edges absent


def phi_map(inst: SpannerInstance) -> PhiMap:
    """Edge-to-pair transfer table.

    Spanner variants: connector edges map to their label endpoint's pair,
    star/path/projection edges map to nothing (they are picked
    integrally), outer edges are outside the domain. Steiner variants:
    projection edges map to their left pair, connectors to their own
    side's pair."""
    variant = {
        "directed-spanner": "directed",
        "basic-spanner": "undirected",
        "dsn": "steiner",
        "slsn": "steiner",
    }[inst.kind]
    images: dict[str, str | None] = {}
    for (u, v) in inst.edges:
        eid = inst.edge_id(u, v)
        cls = inst.edge_class[eid]
        if cls == "outer":
            continue
        if cls in ("left-conn", "right-conn"):
            (gv, s), = inst.label_endpoints(eid)
            images[eid] = pair_id(gv, s)
        elif variant == "steiner" and cls == "mid-proj":
            pairs = dict(inst.label_endpoints(eid))
            left = next(gv for gv in pairs if gv.startswith("c"))
            images[eid] = pair_id(left, pairs[left])
        else:
            images[eid] = None
    return PhiMap(variant=variant, images=images)


def phi_of_set(phi: PhiMap, S) -> tuple[str, ...] | None:
    """Combined image of an edge set; None when S leaves the domain."""
    out = set()
    for e in S:
        if e not in phi.images:
            return None
        img = phi.images[e]
        if img is not None:
            out.add(img)
    return canon(out)


# --- fractional solution ----------------------------------------------------


def build_fractional(
    inst: SpannerInstance, proj: ProjSolution, r: int, check_samples: int = 200
) -> LasserreVector:
    """Lift a certified game solution onto the instance edges at level
    r+1. With a mixture-backed game vector the result is the mixture of
    the per-assignment integral edge sets; the defining formula
    (0 on outer-touching sets, y* of the Phi image otherwise) is
    re-verified exhaustively at depth 2 and on random larger sets."""
    y_star = proj.vector
    if y_star.level < r + 2:
        raise DepthInsufficient(
            f"game solution level {y_star.level}, need {r + 2} for r={r}"
        )
    phi = phi_map(inst)
    ground = GroundSet(inst.edge_ids)

    def formula(S: tuple[str, ...]) -> Rational:
        img = phi_of_set(phi, S)
        if img is None:
            return Fraction(0)
        return y_star.value(img)

    if y_star.mixture is not None and not y_star.values:
        support = []
        for X_pairs, w in zip(y_star.mixture.sets, y_star.mixture.weights):
            X_edges = frozenset(
                e
                for e, img in phi.images.items()
                if img is None or img in X_pairs
            )
            support.append((X_edges, w))
        y_prime = mixture_lift(ground, r + 1, support)
    else:
        y_prime = LasserreVector(
            ground=ground, level=r + 1, values={}, default="zero", backing=formula
        )

    # formula cross-check: all sets up to size 2, random sets to full depth
    ids = list(inst.edge_ids)
    assert y_prime.value(()) == 1
    for e in ids:
        assert y_prime.value((e,)) == formula((e,)), e
    for a, b in itertools.combinations(ids, 2):
        S = canon((a, b))
        assert y_prime.value(S) == formula(S), S
    rng = np.random.default_rng(20_000 + r)
    depth = 2 * (r + 2)
    for _ in range(check_samples):
        size = int(rng.integers(3, depth + 1))
        S = canon(rng.choice(ids, size=min(size, len(ids)), replace=False))
        assert y_prime.value(S) == formula(S), S
    return y_prime


# --- objective --------------------------------------------------------------


def fractional_objective(inst: SpannerInstance, y: LasserreVector) -> dict:
    """Sum of singleton values, cross-checked against the per-kind closed
    form. Returns both numbers; a mismatch raises."""
    summed = sum((y.value((e,)) for e in inst.edge_ids), Fraction(0))
    counts = {c: len(ids) for c, ids in inst.classes().items()}
    game = inst.game
    if game is None:
        raise ValueError("instance has no attached game")
    sigma = game.sigma
    K = inst.K
    m, n = game.m, game.n
    if inst.kind == "directed-spanner":
        integral = (
            counts.get("left-star", 0)
            + counts.get("mid-proj", 0)
            + counts.get("right-star", 0)
        )
        closed = Fraction(integral + inst.k * K * sigma * (m + n))
    elif inst.kind == "basic-spanner":
        integral = (
            counts.get("left-path", 0)
            + counts.get("left-star", 0)
            + counts.get("mid-proj", 0)
            + counts.get("right-star", 0)
            + counts.get("right-path", 0)
        )
        closed = Fraction(integral + K * sigma * (m + n))
    else:
        closed = Fraction(2 * K * m + K * n)
    if summed != closed:
        raise ClosedFormMismatch(f"summed {summed} != closed form {closed}")
    return {"summed": summed, "closed_form": closed}


# --- integral optimum -------------------------------------------------------


def _catalogs(inst: SpannerInstance, cap: int = 10**6):
    return {
        demand: enumerate_stretch_paths(inst, demand[0], demand[1], cap)
        for demand in inst.demands
    }


def _served(paths, chosen: frozenset) -> bool:
    return any(all(e in chosen for e in P) for P in paths)


def _greedy_cover(demands, catalogs, start: frozenset) -> frozenset:
    chosen = set(start)
    for demand in demands:
        if _served(catalogs[demand], chosen):
            continue
        best = min(
            catalogs[demand],
            key=lambda P: (sum(1 for e in P if e not in chosen), P),
        )
        chosen.update(best)
    assert all(_served(catalogs[d], chosen) for d in demands)
    return frozenset(chosen)


def _joint_flow_lp(inst, demands, catalogs, mandatory) -> Fraction | None:
    """Exact LP lower bound: minimize total edge mass supporting a unit
    flow per demand, mandatory edges fixed at 1. Skipped (None) when the
    tableau would be too large for the exact solver."""
    support = sorted(
        {e for d in demands for P in catalogs[d] for e in P} - mandatory
    )
    fvars = [(d, P) for d in demands for P in catalogs[d]]
    rows = len(demands) + sum(
        len({e for P in catalogs[d] for e in P}) for d in demands
    )
    if rows > 500 or len(support) + len(fvars) > 500:
        return None
    xpos = {e: i for i, e in enumerate(support)}
    fpos = {dp: len(support) + i for i, dp in enumerate(fvars)}
    ncols = len(support) + len(fvars)
    A = []
    b = []
    for d in demands:
        row = [Fraction(0)] * ncols
        for P in catalogs[d]:
            row[fpos[(d, P)]] = Fraction(1)
        A.append(row)
        b.append(Fraction(1))
    for d in demands:
        edges_d = sorted({e for P in catalogs[d] for e in P})
        for e in edges_d:
            row = [Fraction(0)] * ncols
            rhs = Fraction(0)
            if e in xpos:
                row[xpos[e]] = Fraction(1)
            else:
                rhs = Fraction(-1)  # mandatory capacity 1 moves to the rhs
            for P in catalogs[d]:
                if e in P:
                    row[fpos[(d, P)]] = Fraction(-1)
            A.append(row)
            b.append(rhs)
    c = [Fraction(1)] * len(support) + [Fraction(0)] * len(fvars)
    res = solve_lp_exact(A, b, c, sense="min")
    if res.status != "optimal":
        return None
    return res.value + len(mandatory)


def solve_integral(inst: SpannerInstance, cap: int = 40, mode: str = "exact") -> dict:
    """Minimum edge count serving all demands.

    Demands with a single route force all its edges in; branch and bound
    runs over the remaining optional edges (path-at-a-time, reuse-first
    order) against a greedy upper bound and an exact flow-LP lower
    bound. mode="bounds" skips the exact search."""
    catalogs = _catalogs(inst)
    demands = sorted(inst.demands)
    mandatory: set[str] = set()
    for d in demands:
        if len(catalogs[d]) == 1:
            mandatory.update(catalogs[d][0])
    usable = {e for d in demands for P in catalogs[d] for e in P}
    optional = sorted(usable - mandatory)
    greedy = _greedy_cover(demands, catalogs, frozenset(mandatory))
    lp_lower = _joint_flow_lp(inst, demands, catalogs, frozenset(mandatory))
    result = {
        "instance_digest": instance_digest(inst),
        "mandatory": len(mandatory),
        "optional": len(optional),
        "greedy_upper": len(greedy),
        "lp_lower": lp_lower,
        "lp_lower_ceil": None if lp_lower is None else -(-lp_lower.numerator // lp_lower.denominator),
    }
    if mode == "bounds":
        return result
    if len(optional) > cap:
        raise CapExceeded(f"{len(optional)} optional edges over the cap {cap}")

    best_size = len(greedy)
    best_set = tuple(sorted(greedy))
    base = frozenset(mandatory)

    def rec(chosen: frozenset) -> None:
        nonlocal best_size, best_set
        pending = [d for d in demands if not _served(catalogs[d], chosen)]
        if not pending:
            cand = tuple(sorted(chosen))
            if (len(chosen), cand) < (best_size, best_set):
                best_size, best_set = len(chosen), cand
            return
        d = pending[0]
        min_new = min(
            sum(1 for e in P if e not in chosen) for P in catalogs[d]
        )
        if len(chosen) + max(min_new, 1) > best_size:
            return
        options = sorted(
            catalogs[d],
            key=lambda P: (sum(1 for e in P if e not in chosen), P),
        )
        for P in options:
            rec(chosen | frozenset(P))

    rec(base)
    if lp_lower is not None:
        assert result["lp_lower_ceil"] <= best_size <= result["greedy_upper"]
    result["optimum"] = best_size
    result["optimal_set"] = best_set
    return result


# --- reporting --------------------------------------------------------------


def _canon_json(obj):
    if isinstance(obj, Fraction):
        return format_rational(obj)
    if isinstance(obj, dict):
        return {str(k): _canon_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canon_json(v) for v in obj]
    if isinstance(obj, (set, frozenset)):
        return sorted(_canon_json(v) for v in obj)
    return obj


def canonical_json(obj) -> str:
    return json.dumps(_canon_json(obj), sort_keys=True, separators=(",", ":"))


def report_digest(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


def instance_digest(inst: SpannerInstance) -> str:
    from .reductions import write_instance

    return hashlib.sha256(write_instance(inst).encode()).hexdigest()


def symbolic_formulas(kind: str) -> tuple[str, ...]:
    """Asymptotic gap expressions, reported alongside measured ratios but
    never asserted at desk scale."""
    if kind == "directed-spanner":
        return ("n*k*K*|Sigma|*sqrt(K) / (m*k*K*|Sigma|)",)
    if kind == "basic-spanner":
        # statement and derivation differ by a factor k; both carried
        return (
            "n*k*K*|Sigma|*sqrt(K) / (K*|Sigma|*(|L|+|R|))",
            "n*K*|Sigma|*sqrt(K) / (K*|Sigma|*(|L|+|R|))",
        )
    return ("n*K*sqrt(K) / ((2*|L|+|R|)*K)",)


def gap_report(
    inst: SpannerInstance,
    y: LasserreVector,
    bounds: Mapping,
    certificates: Mapping[str, Mapping] | None = None,
    seed: int | None = None,
) -> dict:
    """Deterministic gap summary: fractional objective both ways, the
    integral bounds or optimum, the exact ratio when available, symbolic
    formulas, and digests binding every input to this instance."""
    digest = instance_digest(inst)
    for name, payload in (("bounds", bounds), *(certificates or {}).items()):
        got = payload.get("instance_digest")
        if got is not None and got != digest:
            raise ProvenanceMismatch(f"{name} was computed for a different instance")
    objective = fractional_objective(inst, y)
    report = {
        "version": __version__,
        "kind": inst.kind,
        "directed": inst.directed,
        "k": inst.k,
        "L_bound": inst.L_bound,
        "counts": {
            "vertices": len(inst.vertices),
            "edges": len(inst.edges),
            "demands": len(inst.demands),
        },
        "params": dict(inst.game.params) if inst.game else {},
        "seed": seed,
        "fractional": objective,
        "integral": {
            k: v for k, v in bounds.items() if k not in ("optimal_set",)
        },
        "symbolic": list(symbolic_formulas(inst.kind)),
        "instance_digest": digest,
        "certificates": {
            name: {"passes": payload.get("passes"), "digest": report_digest(payload)}
            for name, payload in (certificates or {}).items()
        },
    }
    if "optimum" in bounds:
        report["ratio"] = Fraction(bounds["optimum"]) / objective["summed"]
    else:
        lo = bounds.get("lp_lower")
        report["ratio_bounds"] = {
            "lower": None if lo is None else lo / objective["summed"],
            "upper": Fraction(bounds["greedy_upper"]) / objective["summed"],
        }
    return report
