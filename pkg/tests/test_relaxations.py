import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from liftgap.algebra import SizeCapExceeded, psd_check_exact
from liftgap.lasserre_core import GroundSet, LasserreVector, mixture_lift
from liftgap.projection_games import GameParams, ProjectionGame, generate_planted
from liftgap.reductions import (
    build_directed_spanner,
    build_dsn,
    build_undirected_spanner,
    enumerate_stretch_paths,
    remove_outer_edges,
)
from liftgap.relaxations import (
    CutVector,
    NoPathExists,
    PathCapExceeded,
    _block_vertices,
    assemble_spanner_sdp_matrices,
    certify_spanner_sdp,
    cut_support_blocks,
    enumerate_cut_vertices,
    flow_extension,
    is_feasible_integral,
    lp_feasible_cutform,
    path_support,
    separation_oracle,
)


def tiny_game() -> ProjectionGame:
    return ProjectionGame(
        m=1,
        n=2,
        sigma=2,
        projections={
            (1, 1): [(1, 1), (2, 2)],
            (1, 2): [(1, 2), (2, 1)],
        },
        params={"K": 2},
    )


def acyclic_game() -> ProjectionGame:
    return ProjectionGame(
        m=2,
        n=3,
        sigma=3,
        projections={
            (1, 1): [(1, 1), (2, 2), (3, 3)],
            (1, 2): [(1, 2), (2, 3), (3, 1)],
            (2, 2): [(1, 1), (2, 2), (3, 3)],
            (2, 3): [(1, 3), (2, 1), (3, 2)],
        },
        params={"K": 2, "q": 3, "D": 1},
    )


def tiny_dsn():
    return build_dsn(tiny_game())


def indicator(inst, S, level=2):
    ground = GroundSet(inst.edge_ids)
    return mixture_lift(ground, level, [(frozenset(S), Fraction(1))])


def minimal_dsn_solution(inst):
    S = set()
    game = inst.game
    for (i, j) in game.edges:
        sR = game.project(i, j, 1)
        for l in range(1, inst.K + 1):
            S.add(inst.edge_id(f"c{i}^{l}", f"c{i},1"))
            S.add(inst.edge_id(f"c{i},1", f"x{j},{sR}"))
            S.add(inst.edge_id(f"x{j},{sR}", f"x{j}^{l}"))
    return S


# --- feasibility ------------------------------------------------------------


def test_is_feasible_integral():
    inst = tiny_dsn()
    assert is_feasible_integral(inst, set(inst.edge_ids))
    assert not is_feasible_integral(inst, set())
    assert is_feasible_integral(inst, minimal_dsn_solution(inst))
    spanner = build_directed_spanner(tiny_game(), k=2)
    S = remove_outer_edges(spanner, set(spanner.edge_ids))
    assert is_feasible_integral(spanner, S)


# --- separation -------------------------------------------------------------


def test_separation_all_ones_direct_edge():
    inst = build_directed_spanner(tiny_game(), k=2)
    ones = {e: Fraction(1) for e in inst.edge_ids}
    val, path = separation_oracle(inst, ("c1,1", "x1,1"), ones)
    assert val == 1 and path == ("c1,1>x1,1",)


def test_separation_all_zero():
    inst = tiny_dsn()
    val, path = separation_oracle(inst, inst.demands[0], {})
    assert val == 0 and len(path) >= 1


def test_separation_matches_enumeration():
    import random

    rnd = random.Random(7)
    for inst in (tiny_dsn(), build_directed_spanner(tiny_game(), k=2)):
        weights = {
            e: Fraction(rnd.randrange(0, 12), rnd.randrange(1, 5))
            for e in inst.edge_ids
        }
        for demand in inst.demands[:10]:
            best = min(
                sum((weights[e] for e in P), Fraction(0))
                for P in enumerate_stretch_paths(inst, *demand)
            )
            val, path = separation_oracle(inst, demand, weights)
            assert val == best
            assert sum((weights[e] for e in path), Fraction(0)) == val


def test_separation_errors():
    inst = tiny_dsn()
    with pytest.raises(NoPathExists):
        separation_oracle(inst, ("x1^1", "c1^1"), {})
    with pytest.raises(ValueError):
        separation_oracle(inst, inst.demands[0], {inst.edge_ids[0]: Fraction(-1)})


# --- LP pair ----------------------------------------------------------------


def test_lp_pair_all_ones_and_zero():
    inst = tiny_dsn()
    ones = {e: Fraction(1) for e in inst.edge_ids}
    cut = lp_feasible_cutform(inst, ones)
    flow = flow_extension(inst, ones)
    assert cut["feasible"] and flow.feasible
    assert all(v >= 1 for v in cut["optima"].values())
    cut0 = lp_feasible_cutform(inst, {})
    flow0 = flow_extension(inst, {})
    assert not cut0["feasible"] and not flow0.feasible
    demand, z = cut0["violations"][0]
    x0 = {e: Fraction(0) for e in inst.edge_ids}
    assert sum((x0[e] * v for e, v in z.items()), Fraction(0)) < 1


def test_lp_pair_agree_on_random_weights():
    import random

    rnd = random.Random(21)
    inst = tiny_dsn()
    for _ in range(30):
        x = {
            e: Fraction(rnd.randrange(0, 8), rnd.randrange(1, 6))
            for e in rnd.sample(sorted(inst.edge_ids), k=10)
        }
        cut = lp_feasible_cutform(inst, x)
        flow = flow_extension(inst, x)
        assert cut["feasible"] == flow.feasible
        for demand in inst.demands:
            assert cut["optima"][demand] == flow.values[demand]


def test_lp_feasible_on_integral_solution():
    inst = tiny_dsn()
    S = minimal_dsn_solution(inst)
    x = {e: Fraction(1) for e in S}
    assert lp_feasible_cutform(inst, x)["feasible"]
    assert flow_extension(inst, x).feasible


def test_path_cap_exceeded():
    inst = tiny_dsn()
    with pytest.raises(PathCapExceeded):
        lp_feasible_cutform(inst, {}, cap=1)


# --- cut vertices -----------------------------------------------------------


def brute_vertices(paths, support):
    """Independent oracle: enumerate all tight bases of the polytope
    {0 <= z <= 1, path sums >= 1} and keep feasible unique solutions."""
    d = len(support)
    pos = {e: i for i, e in enumerate(support)}
    rows, rhs = [], []
    for i in range(d):
        row = [Fraction(0)] * d
        row[i] = Fraction(1)
        rows.append(row)
        rhs.append(Fraction(0))
    for i in range(d):
        row = [Fraction(0)] * d
        row[i] = Fraction(-1)
        rows.append(row)
        rhs.append(Fraction(-1))
    for P in paths:
        row = [Fraction(0)] * d
        for e in P:
            row[pos[e]] = Fraction(1)
        rows.append(row)
        rhs.append(Fraction(1))

    def solve(sub_rows, sub_rhs):
        n = len(sub_rows)
        M = [r[:] + [sub_rhs[i]] for i, r in enumerate(sub_rows)]
        for col in range(n):
            piv = next((r for r in range(col, n) if M[r][col] != 0), None)
            if piv is None:
                return None
            M[col], M[piv] = M[piv], M[col]
            inv = Fraction(1) / M[col][col]
            M[col] = [v * inv for v in M[col]]
            for r in range(n):
                if r != col and M[r][col] != 0:
                    f = M[r][col]
                    M[r] = [a - f * b for a, b in zip(M[r], M[col])]
        return [M[r][n] for r in range(n)]

    found = set()
    for combo in itertools.combinations(range(len(rows)), d):
        sol = solve([rows[i] for i in combo], [rhs[i] for i in combo])
        if sol is None:
            continue
        point = tuple(sol)
        if all(0 <= v <= 1 for v in point) and all(
            sum((point[pos[e]] for e in P), Fraction(0)) >= 1 for P in paths
        ):
            found.add(point)
    return {
        tuple(sorted((e, v) for e, v in zip(support, point) if v != 0))
        for point in found
    }


def test_cut_vertices_single_edge_path():
    inst = tiny_dsn()
    vertices = enumerate_cut_vertices(inst, ("c1^1", "c1,1"))
    assert len(vertices) == 1
    assert vertices[0].z == ((inst.edge_id("c1^1", "c1,1"), Fraction(1)),)
    assert vertices[0].source == "vertex"


def test_cut_vertices_disjoint_paths_dsn():
    inst = tiny_dsn()
    demand = inst.demands[0]
    vertices = enumerate_cut_vertices(inst, demand)
    # two vertex-disjoint 3-edge paths: 7 corners each, combined freely
    assert len(vertices) == 49
    assert all(cv.source == "vertex" for cv in vertices)
    paths, support = path_support(inst, demand)
    assert {cv.z for cv in vertices} == brute_vertices(paths, support)


def test_cut_vertices_outer_demand_matches_oracle():
    inst = build_directed_spanner(tiny_game(), k=2)
    demand = ("c1^1", "x1^1")
    vertices = enumerate_cut_vertices(inst, demand)
    assert len(vertices) == 49
    paths, support = path_support(inst, demand)
    assert len(support) == 7
    assert {cv.z for cv in vertices} == brute_vertices(paths, support)


def test_block_enumeration_handles_shared_edges():
    # pairwise-overlapping paths give the classic half-integral vertex
    paths = (("a", "b"), ("b", "c"), ("c", "a"))
    verts = _block_vertices(("a", "b", "c"), paths)
    half = (Fraction(1, 2), Fraction(1, 2), Fraction(1, 2))
    assert half in verts
    assert set(verts) == {
        tuple(v for _, v in sorted(zip(("a", "b", "c"), point)))
        for point in [
            (Fraction(1, 2), Fraction(1, 2), Fraction(1, 2)),
        ]
    } | {
        point
        for point in itertools.product([Fraction(0), Fraction(1)], repeat=3)
        if all(point[i] + point[j] >= 1 for i, j in ((0, 1), (1, 2), (2, 0)))
    }
    support = ("a", "b", "c")
    oracle = brute_vertices(paths, support)
    ours = {
        tuple(sorted((e, v) for e, v in zip(support, pt) if v != 0)) for pt in verts
    }
    assert ours == oracle


def test_cut_vertices_undirected_k3_shared_block():
    game = acyclic_game()
    inst = build_undirected_spanner(game, k=3)
    demand = next(d for d in inst.demands if inst.edge_class[inst.edge_id(*d)] == "outer")
    vertices = enumerate_cut_vertices(inst, demand)
    assert all(cv.source == "vertex" for cv in vertices)
    paths, support = path_support(inst, demand)
    assert len(support) == 12
    blocks = cut_support_blocks(paths)
    assert sorted(len(edges) for edges, _ in blocks) == [1, 11]
    # all three 5-edge routes share their first and last edges, which
    # keeps the block integral: 2^11 minus the inclusion-exclusion count
    # of patterns zeroing some route, 3*2^6 - 3*2^3 + 1 = 169
    assert len(vertices) == 2048 - 169
    assert all(all(v == 1 for _, v in cv.z) for cv in vertices)
    for cv in vertices:
        zmap = cv.as_dict()
        for P in paths:
            assert sum((zmap.get(e, Fraction(0)) for e in P), Fraction(0)) >= 1


def test_cut_vertices_sampled_fallback():
    inst = build_directed_spanner(tiny_game(), k=2)
    vertices = enumerate_cut_vertices(inst, ("c1^1", "x1^1"), support_cap=3, samples=8)
    assert vertices
    assert all(cv.source in ("cover", "lp-sample") for cv in vertices)
    covers = [cv for cv in vertices if cv.source == "cover"]
    assert covers and all(all(v == 1 for _, v in cv.z) for cv in covers)


# --- SDP matrices -----------------------------------------------------------


def test_assemble_full_indicator_closed_form():
    inst = tiny_dsn()
    y = indicator(inst, set(inst.edge_ids))
    demand = inst.demands[0]
    cv = enumerate_cut_vertices(inst, demand)[0]
    M = assemble_spanner_sdp_matrices(inst, y, 1, demand, cv)
    total = sum((v for _, v in cv.z), Fraction(0))
    assert all(
        M.entry(i, j) == total - 1 for i in range(M.order) for j in range(M.order)
    )
    assert psd_check_exact(M).is_psd == (total >= 1)
    shallow = assemble_spanner_sdp_matrices(inst, y, 1, demand, {"c1^1>c1,1": Fraction(1, 2)})
    assert shallow.entry(0, 0) == Fraction(-1, 2)
    assert not psd_check_exact(shallow).is_psd


def test_assemble_zero_vector_negative_control():
    inst = tiny_dsn()
    ground = GroundSet(inst.edge_ids)
    y = LasserreVector(ground=ground, level=1, values={(): Fraction(1)}, default="zero")
    demand = inst.demands[0]
    cv = enumerate_cut_vertices(inst, demand)[0]
    M = assemble_spanner_sdp_matrices(inst, y, 1, demand, cv)
    res = psd_check_exact(M)
    assert not res.is_psd


def test_assemble_affine_in_z():
    inst = tiny_dsn()
    y = indicator(inst, minimal_dsn_solution(inst))
    demand = inst.demands[0]
    vs = enumerate_cut_vertices(inst, demand)
    z1, z2 = vs[0].as_dict(), vs[-1].as_dict()
    mid = {e: (z1.get(e, 0) + z2.get(e, 0)) / 2 for e in set(z1) | set(z2)}
    M1 = assemble_spanner_sdp_matrices(inst, y, 1, demand, z1)
    M2 = assemble_spanner_sdp_matrices(inst, y, 1, demand, z2)
    Mm = assemble_spanner_sdp_matrices(inst, y, 1, demand, mid)
    for i in range(M1.order):
        for j in range(M1.order):
            assert Mm.entry(i, j) == (M1.entry(i, j) + M2.entry(i, j)) / 2


def test_assemble_depth_guard():
    from liftgap.lasserre_core import MissingValue

    inst = tiny_dsn()
    y = indicator(inst, set(inst.edge_ids), level=0)
    demand = inst.demands[0]
    cv = enumerate_cut_vertices(inst, demand)[0]
    with pytest.raises(MissingValue):
        assemble_spanner_sdp_matrices(inst, y, 1, demand, cv)


# --- certification ----------------------------------------------------------


def test_certify_full_indicator_passes():
    inst = tiny_dsn()
    y = indicator(inst, set(inst.edge_ids))
    cert = certify_spanner_sdp(inst, y, r=1)
    assert cert["passes"]
    assert cert["moment"]["route"] == "compressed"
    assert set(cert["classes"]) == {"demand"}
    assert cert["classes"]["demand"]["demands"] == 4
    assert not cert["sampled_demands"]
    assert "convex" in cert["convexity_note"]


def test_certify_minimal_integral_solution_passes():
    inst = tiny_dsn()
    y = indicator(inst, minimal_dsn_solution(inst))
    cert = certify_spanner_sdp(inst, y, r=1)
    assert cert["passes"]


def test_certify_spanner_indicator_passes():
    inst = build_directed_spanner(tiny_game(), k=2)
    S = remove_outer_edges(inst, set(inst.edge_ids))
    cert = certify_spanner_sdp(inst, indicator(inst, S), r=1)
    assert cert["passes"]
    assert set(cert["classes"]) == {
        "left-conn",
        "left-star",
        "mid-proj",
        "outer",
        "right-star",
        "right-conn",
    }


def test_certify_zero_vector_fails_with_witness():
    inst = tiny_dsn()
    ground = GroundSet(inst.edge_ids)
    y = LasserreVector(ground=ground, level=1, values={(): Fraction(1)}, default="zero")
    cert = certify_spanner_sdp(inst, y, r=1)
    assert not cert["passes"]
    assert cert["moment"]["psd"]
    failures = cert["classes"]["demand"]["failures"]
    assert failures and failures[0]["witness"]


def test_certify_parallel_matches_serial():
    inst = tiny_dsn()
    y = indicator(inst, minimal_dsn_solution(inst))
    a = certify_spanner_sdp(inst, y, r=1, jobs=1)
    b = certify_spanner_sdp(inst, y, r=1, jobs=2)
    assert a == b


def test_certify_whole_polytope_route_when_enumeration_blocked():
    # support_cap=0 pushes every demand past vertex enumeration; a mixture
    # atom that spans all demands then certifies each whole polytope at
    # once, with no sampling and no per-vertex matrices
    inst = tiny_dsn()
    y = indicator(inst, minimal_dsn_solution(inst))
    cert = certify_spanner_sdp(inst, y, r=1, support_cap=0)
    assert cert["passes"]
    assert not cert["sampled_demands"]
    assert cert["classes"]["demand"]["whole_polytope"] == 4
    assert cert["classes"]["demand"]["matrices"] == 0
    assert "whole cut polytope" in cert["whole_polytope_note"]


def test_certify_whole_polytope_atom_gap_falls_back_and_fails():
    # drop one demand's entire route support from the atom: the witness
    # scan finds no path inside it, the LP confirms the minimum is below
    # one, and the flagged sweep then exhibits non-PSD slack matrices
    inst = tiny_dsn()
    broken = ("c1^1", "x1^1")
    _, support = path_support(inst, broken)
    S = minimal_dsn_solution(inst) - set(support)
    cert = certify_spanner_sdp(inst, indicator(inst, S), r=1, support_cap=0)
    assert not cert["passes"]
    assert broken in [tuple(d) for d in cert["sampled_demands"]]
    failures = cert["classes"]["demand"]["failures"]
    assert failures and failures[0]["witness"]
    assert any(
        f["source"] in ("cover", "lp-sample", "lp-min") for f in failures
    )


def test_certify_antispanner_only_restricts_vertices():
    inst = tiny_dsn()
    y = indicator(inst, set(inst.edge_ids))
    full = certify_spanner_sdp(inst, y, r=1)
    anti = certify_spanner_sdp(inst, y, r=1, antispanner_only=True)
    assert anti["passes"] and anti["antispanner_only"]
    assert anti["classes"]["demand"]["matrices"] <= full["classes"]["demand"]["matrices"]
