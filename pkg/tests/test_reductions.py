import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from liftgap.projection_games import GameParams, ProjectionGame, generate_planted
from liftgap.reductions import (
    BoundExceeded,
    EmptyLabelSet,
    GirthTooSmall,
    InvalidK,
    NotASolution,
    StructureViolation,
    _build_undirected_unchecked,
    attach_game,
    best_slice,
    build_directed_spanner,
    build_dsn,
    build_slsn,
    build_undirected_spanner,
    check_path_structure,
    enumerate_stretch_paths,
    expected_rounded_value,
    extract_assignment,
    read_instance,
    remove_outer_edges,
    round_labels,
    spans_within,
    write_instance,
)


def tiny_game() -> ProjectionGame:
    # one left vertex, two rights, binary labels, identity and swap maps
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


def desk_game() -> ProjectionGame:
    game, _ = generate_planted(GameParams(n=3, m=3, K=2, q=3, D=1), seed=11)
    return game


def acyclic_game() -> ProjectionGame:
    # two lefts sharing exactly one right: the c/x graph has no cycle
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


def four_cycle_game() -> ProjectionGame:
    return ProjectionGame(
        m=2,
        n=2,
        sigma=2,
        projections={
            (1, 1): [(1, 1), (2, 2)],
            (1, 2): [(1, 1), (2, 2)],
            (2, 1): [(1, 2), (2, 1)],
            (2, 2): [(1, 1), (2, 2)],
        },
        params={"K": 2},
    )


def path_vertices(inst, u, path):
    """Vertex sequence of a path given as edge ids, starting at u."""
    seq = [u]
    for eid in path:
        sep = ">" if inst.directed else "~"
        a, b = eid.split(sep)
        if inst.directed:
            assert a == seq[-1]
            seq.append(b)
        else:
            assert seq[-1] in (a, b)
            seq.append(b if seq[-1] == a else a)
    return seq


# --- builders ---------------------------------------------------------------


def test_directed_counts_tiny():
    inst = build_directed_spanner(tiny_game(), k=2)
    counts = {c: len(ids) for c, ids in inst.classes().items()}
    assert counts["outer"] == 16
    assert counts["left-conn"] == 1 * 8 * 2
    assert counts["right-conn"] == 2 * 8 * 2
    assert counts["mid-proj"] == 2 * 2
    assert counts["left-star"] == 2
    assert counts["right-star"] == 4
    assert not any(cls == "mid-path" for cls in inst.vertices.values())
    assert inst.demands == inst.edges


def test_directed_mid_vertices_k3():
    inst = build_directed_spanner(tiny_game(), k=3)
    mids = [v for v, cls in inst.vertices.items() if cls == "mid-path"]
    # 2 middle vertices per (game edge, projection pair)
    assert len(mids) == 2 * 2 * 2
    counts = {c: len(ids) for c, ids in inst.classes().items()}
    assert counts["mid-proj"] == 2 * 2 * 3


def test_directed_desk_totals():
    game = desk_game()
    k2 = build_directed_spanner(game, k=2)
    assert (len(k2.vertices), len(k2.edges)) == (90, 330)
    k3 = build_directed_spanner(game, k=3)
    assert (len(k3.vertices), len(k3.edges)) == (162, 510)


def test_invalid_k():
    with pytest.raises(InvalidK):
        build_directed_spanner(tiny_game(), k=1)
    with pytest.raises(InvalidK):
        build_undirected_spanner(acyclic_game(), k=0)


def test_empty_game_builds_scaffold_only():
    game = ProjectionGame(m=1, n=2, sigma=2, projections={}, params={"K": 2})
    inst = build_directed_spanner(game, k=2)
    counts = {c: len(ids) for c, ids in inst.classes().items()}
    assert "mid-proj" not in counts and "outer" not in counts
    assert counts["left-conn"] == 16


def test_undirected_counts():
    inst = build_undirected_spanner(acyclic_game(), k=2)
    counts = {c: len(ids) for c, ids in inst.classes().items()}
    assert counts == {
        "left-conn": 36,
        "left-star": 4,
        "mid-proj": 12,
        "outer": 24,
        "right-conn": 54,
        "right-star": 6,
    }
    assert len(inst.edges) == 136
    k3 = build_undirected_spanner(acyclic_game(), k=3)
    counts3 = {c: len(ids) for c, ids in k3.classes().items()}
    assert counts3["left-path"] == 12 and counts3["right-path"] == 18
    assert len(k3.edges) == 166 and len(k3.vertices) == 75


def test_undirected_girth_guard():
    with pytest.raises(GirthTooSmall):
        build_undirected_spanner(four_cycle_game(), k=2)


def test_steiner_counts_and_demands():
    dsn = build_dsn(tiny_game())
    slsn = build_slsn(tiny_game())
    for inst in (dsn, slsn):
        counts = {c: len(ids) for c, ids in inst.classes().items()}
        assert counts == {"left-conn": 4, "mid-proj": 4, "right-conn": 8}
        assert len(inst.demands) == 4
    assert dsn.directed and not slsn.directed
    assert slsn.L_bound == 3 and slsn.hop_cap() == 3
    assert ("c1^1", "x1^1") in dsn.demands


# --- path enumeration -------------------------------------------------------


def test_single_edge_demand_path():
    inst = build_directed_spanner(tiny_game(), k=2)
    u, v = "c1,1", "x1,1"
    paths = enumerate_stretch_paths(inst, u, v)
    assert ("c1,1>x1,1",) in paths


def test_outer_catalog_size_directed():
    inst = build_directed_spanner(tiny_game(), k=2)
    paths = enumerate_stretch_paths(inst, "c1^1", "x1^1")
    assert len(paths) == 1 + 2
    for p in paths:
        seq = path_vertices(inst, "c1^1", p)
        assert seq[-1] == "x1^1"
        assert len(set(seq)) == len(seq)
        assert len(p) <= 2 * inst.k - 1


def test_paths_deterministic_and_cached():
    inst = build_directed_spanner(desk_game(), k=2)
    a = enumerate_stretch_paths(inst, "c1^1", "x1^1")
    b = enumerate_stretch_paths(inst, "c1^1", "x1^1")
    assert a is b
    fresh = build_directed_spanner(desk_game(), k=2)
    assert enumerate_stretch_paths(fresh, "c1^1", "x1^1") == a


def test_path_cap():
    inst = build_directed_spanner(tiny_game(), k=2)
    with pytest.raises(BoundExceeded):
        enumerate_stretch_paths(inst, "c1^1", "x1^1", cap=2)


def test_dsn_demand_catalog():
    inst = build_dsn(tiny_game())
    for (u, v) in inst.demands:
        paths = enumerate_stretch_paths(inst, u, v)
        assert len(paths) == 2  # |pi| three-edge label routes
        assert all(len(p) == 3 for p in paths)
    slsn = build_slsn(tiny_game())
    for (u, v) in slsn.demands:
        assert len(enumerate_stretch_paths(slsn, u, v)) == 2


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_enumerated_paths_are_simple_bounded_valid(data):
    inst = build_undirected_spanner(acyclic_game(), k=2)
    u, v = data.draw(st.sampled_from(inst.demands))
    all_ids = set(inst.edge_ids)
    for p in enumerate_stretch_paths(inst, u, v):
        assert set(p) <= all_ids
        assert len(p) <= inst.hop_cap()
        seq = path_vertices(inst, u, p)
        assert seq[0] == u and seq[-1] == v
        assert len(set(seq)) == len(seq)


# --- path structure ---------------------------------------------------------


def test_structure_directed_k2_k3():
    for k in (2, 3):
        inst = build_directed_spanner(desk_game(), k=k)
        report = check_path_structure(inst)
        assert report["passes"]
        assert set(report["per_edge_counts"].values()) == {1 + 3}


def test_structure_undirected_pruned():
    for k in (2, 3):
        inst = build_undirected_spanner(acyclic_game(), k=k)
        report = check_path_structure(inst)
        assert set(report["per_edge_counts"].values()) == {1 + 3}


def test_structure_violation_on_cyclic_game():
    inst = _build_undirected_unchecked(four_cycle_game(), k=2)
    with pytest.raises(StructureViolation) as err:
        check_path_structure(inst)
    assert "unexpected path" in str(err.value)


def test_structure_rejects_steiner_kind():
    with pytest.raises(ValueError):
        check_path_structure(build_dsn(tiny_game()))


# --- feasibility, outer removal ---------------------------------------------


def test_spans_within():
    inst = build_directed_spanner(tiny_game(), k=2)
    S = set(inst.edge_ids)
    assert spans_within(inst, S, "c1^1", "x1^1")
    assert spans_within(inst, S - {"c1^1>x1^1"}, "c1^1", "x1^1")
    assert not spans_within(inst, set(), "c1^1", "x1^1")


def test_remove_outer_full_solution():
    inst = build_directed_spanner(tiny_game(), k=2)
    S = set(inst.edge_ids)
    out = remove_outer_edges(inst, S)
    outer = {e for e in S if inst.edge_class[e] == "outer"}
    assert out == frozenset(S - outer)


def test_remove_outer_noop_without_outer():
    inst = build_directed_spanner(tiny_game(), k=2)
    S = {e for e in inst.edge_ids if inst.edge_class[e] != "outer"}
    assert remove_outer_edges(inst, S) == frozenset(S)


def test_remove_outer_rejects_bad_input():
    inst = build_directed_spanner(tiny_game(), k=2)
    with pytest.raises(NotASolution):
        remove_outer_edges(inst, {"c1^1>c1,1"})
    with pytest.raises(NotASolution):
        remove_outer_edges(inst, set(inst.edge_ids) | {"bogus>edge"})


def test_remove_outer_lex_least_replacement():
    inst = build_directed_spanner(tiny_game(), k=2)
    # least pair on edge (1,1) is (1,1): path c1^1 -> c1,1 -> x1,1 -> x1^1
    least_path = {"c1^1>c1,1", "c1,1>x1,1", "x1,1>x1^1"}
    S = (set(inst.edge_ids) - least_path) | {"c1^1>x1^1"}
    out = remove_outer_edges(inst, S)
    assert least_path <= out
    assert "c1^1>x1^1" not in out


def test_remove_outer_repair_adds_demand_edge():
    inst = build_undirected_spanner(acyclic_game(), k=2)
    # the projection demand c1,2 ~ x1,2 keeps only outer-mediated routes
    # once its own edge and the star detour are gone; the removal pass
    # must then re-add the edge itself
    e_m = inst.edge_id("c1,2", "x1,2")
    star = inst.edge_id("c1,1", "c1,2")
    S = set(inst.edge_ids) - {e_m, star}
    missing = [d for d in inst.demands if not spans_within(inst, S, *d)]
    assert not missing
    out = remove_outer_edges(inst, S)
    assert e_m in out
    assert not any(inst.edge_class[e] == "outer" for e in out)


@settings(max_examples=25, deadline=None)
@given(drop=st.sets(st.integers(min_value=0, max_value=135), max_size=12))
def test_remove_outer_random_feasible(drop):
    from hypothesis import assume

    inst = build_undirected_spanner(acyclic_game(), k=2)
    ids = sorted(inst.edge_ids)
    S = set(ids) - {ids[i] for i in drop}
    try:
        out = remove_outer_edges(inst, S)
    except NotASolution:
        assume(False)
        return
    assert not any(inst.edge_class[e] == "outer" for e in out)
    assert len(out) <= 2 * len(S)
    assert all(spans_within(inst, out, u, v) for (u, v) in inst.demands)


# --- extraction and rounding ------------------------------------------------


def planted_solution(inst, assignment):
    """Stars, all projection edges, and the connector slices that match
    one perfect assignment."""
    S = set()
    for (u, v) in inst.edges:
        eid = inst.edge_id(u, v)
        cls = inst.edge_class[eid]
        if cls in ("left-star", "right-star", "mid-proj", "left-path", "right-path"):
            S.add(eid)
        elif cls in ("left-conn", "right-conn"):
            (gv, s), = inst.label_endpoints(eid)
            if assignment[gv] == s:
                S.add(eid)
    return S


def test_extract_planted_assignment():
    game, alpha = generate_planted(GameParams(n=3, m=3, K=2, q=3, D=1), seed=11)
    inst = build_directed_spanner(game, k=2)
    S = planted_solution(inst, alpha)
    assert not any(inst.edge_class[e] == "outer" for e in S)
    assert all(spans_within(inst, S, u, v) for (u, v) in inst.demands)
    multi = extract_assignment(inst, S)
    assert multi == {v: (alpha[v],) for v in multi}
    rounded = round_labels(multi, seed=5)
    assert rounded == alpha
    assert expected_rounded_value(game, multi) == Fraction(len(game.edges))


def test_extract_two_overlaid_assignments():
    from liftgap.projection_games import shift_orbit

    game, alpha = generate_planted(GameParams(n=3, m=3, K=2, q=3, D=1), seed=11)
    orbit = shift_orbit(game, alpha)
    inst = build_directed_spanner(game, k=2)
    S = planted_solution(inst, orbit[0]) | planted_solution(inst, orbit[1])
    multi = extract_assignment(inst, S)
    assert all(1 <= len(v) <= 2 for v in multi.values())
    # projections are bijections, so only the two aligned pairs satisfy
    assert expected_rounded_value(game, multi) == Fraction(2 * len(game.edges), 4)


def test_extract_full_solution_all_labels():
    inst = build_directed_spanner(tiny_game(), k=2)
    S = remove_outer_edges(inst, set(inst.edge_ids))
    multi = extract_assignment(inst, S)
    assert all(v == (1, 2) for v in multi.values())
    assert expected_rounded_value(inst.game, multi) == Fraction(2 * 2, 4)


def test_best_slice_prefers_light_then_small():
    inst = build_dsn(tiny_game())
    S = {inst.edge_id("c1^1", "c1,1")}
    assert best_slice(inst, S) == 2
    assert best_slice(inst, set()) == 1


def test_rounding_statistics_match_expectation():
    import statistics

    game, alpha = generate_planted(GameParams(n=2, m=2, K=2, q=3, D=1), seed=3)
    from liftgap.projection_games import shift_orbit

    orbit = shift_orbit(game, alpha)
    inst = build_directed_spanner(game, k=2)
    S = planted_solution(inst, orbit[0]) | planted_solution(inst, orbit[1])
    multi = extract_assignment(inst, S)
    from liftgap.projection_games import evaluate

    mu = expected_rounded_value(game, multi)
    vals = [evaluate(game, round_labels(multi, seed=s)) for s in range(500)]
    mean = statistics.fmean(vals)
    sd = statistics.stdev(vals)
    assert abs(mean - float(mu)) <= 3 * sd / (500**0.5) + 1e-9


def test_empty_label_set_errors():
    with pytest.raises(EmptyLabelSet):
        round_labels({"c1": ()}, seed=0)
    game = tiny_game()
    with pytest.raises(EmptyLabelSet):
        expected_rounded_value(game, {"c1": (), "x1": (1,), "x2": (1,)})


# --- files ------------------------------------------------------------------


@pytest.mark.parametrize(
    "build",
    [
        lambda: build_directed_spanner(tiny_game(), k=2),
        lambda: build_directed_spanner(tiny_game(), k=3),
        lambda: build_undirected_spanner(acyclic_game(), k=3),
        lambda: build_dsn(tiny_game()),
        lambda: build_slsn(tiny_game()),
    ],
)
def test_instance_file_round_trip(build):
    inst = build()
    text = write_instance(inst)
    back = read_instance(text)
    assert write_instance(back) == text
    assert back.game is None
    assert back.kind == inst.kind and back.directed == inst.directed


def test_attach_game_validates():
    inst = build_dsn(tiny_game())
    parsed = read_instance(write_instance(inst))
    rebuilt = attach_game(parsed, tiny_game())
    assert rebuilt.game is not None
    assert write_instance(rebuilt) == write_instance(inst)
    with pytest.raises(ValueError):
        attach_game(parsed, four_cycle_game())


def test_read_rejects_garbage():
    with pytest.raises(ValueError):
        read_instance("graph kind=x\n")
