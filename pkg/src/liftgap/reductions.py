"""Graph constructions from projection games: directed and undirected
spanner instances, Steiner network instances (directed and length-bounded
undirected), bounded path enumeration, path-structure checks, outer-edge
removal, and label extraction from integral solutions.

Vertex naming: left dups c<i>^<l> (directed/Steiner) or c<i>^<pos>,<l>
(undirected spanners), left labels c<i>,<s>, chain vertices
w<i>,<j>,<sL>,<sR>,<t>, right side mirrored with x. Edge ids are
"u>v" (directed) or "u~v" with sorted endpoints (undirected).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .algebra import Rational
from .projection_games import ProjectionGame, girth

__all__ = [
    "InvalidK",
    "GirthTooSmall",
    "BoundExceeded",
    "StructureViolation",
    "NotASolution",
    "EmptyLabelSet",
    "SpannerInstance",
    "build_directed_spanner",
    "build_undirected_spanner",
    "build_dsn",
    "build_slsn",
    "enumerate_stretch_paths",
    "check_path_structure",
    "spans_within",
    "best_slice",
    "remove_outer_edges",
    "extract_assignment",
    "round_labels",
    "expected_rounded_value",
    "write_instance",
    "read_instance",
    "attach_game",
]


class InvalidK(ValueError):
    """Raised when a stretch parameter below 2 is requested."""


class GirthTooSmall(ValueError):
    """Raised when an undirected build gets a game with a short cycle."""


class BoundExceeded(RuntimeError):
    """Raised when path enumeration exceeds its cap."""


class StructureViolation(AssertionError):
    """Raised when the path catalog of an outer demand is not the
    expected one; carries a witness description."""


class NotASolution(ValueError):
    """Raised when an edge set claimed feasible is not."""


class EmptyLabelSet(ValueError):
    """Raised when rounding meets a vertex with no candidate labels."""


# --- naming -----------------------------------------------------------------


def dup_name(side: str, i: int, l: int) -> str:
    return f"{side}{i}^{l}"


def pos_dup_name(side: str, i: int, pos: int, l: int) -> str:
    return f"{side}{i}^{pos},{l}"


def label_name(side: str, i: int, s: int) -> str:
    return f"{side}{i},{s}"


def mid_name(i: int, j: int, sL: int, sR: int, t: int) -> str:
    return f"w{i},{j},{sL},{sR},{t}"


def parse_vertex(vid: str) -> dict:
    """Decode a vertex id into its structural fields."""
    if vid.startswith("w"):
        i, j, sL, sR, t = (int(x) for x in vid[1:].split(","))
        return {"kind": "mid", "i": i, "j": j, "sL": sL, "sR": sR, "t": t}
    side = vid[0]
    body = vid[1:]
    if "^" in body:
        idx, rest = body.split("^")
        if "," in rest:
            pos, l = rest.split(",")
            return {"kind": "posdup", "side": side, "i": int(idx), "pos": int(pos), "l": int(l)}
        return {"kind": "dup", "side": side, "i": int(idx), "l": int(rest)}
    idx, s = body.split(",")
    return {"kind": "label", "side": side, "i": int(idx), "s": int(s)}


# --- instance model ---------------------------------------------------------


@dataclass
class SpannerInstance:
    kind: str  # directed-spanner | basic-spanner | dsn | slsn
    directed: bool
    k: int | None
    L_bound: int | None
    vertices: dict[str, str]  # id -> vertex class
    edges: tuple[tuple[str, str], ...]
    edge_class: dict[str, str]  # edge id -> edge class
    demands: tuple[tuple[str, str], ...]
    game: ProjectionGame | None
    K: int | None  # dup parameter recorded at build, before any pruning
    _adj: dict | None = field(default=None, repr=False)
    _path_cache: dict = field(default_factory=dict, repr=False)

    def edge_id(self, u: str, v: str) -> str:
        if self.directed:
            return f"{u}>{v}"
        a, b = sorted((u, v))
        return f"{a}~{b}"

    @property
    def edge_ids(self) -> tuple[str, ...]:
        return tuple(self.edge_id(u, v) for u, v in self.edges)

    def classes(self) -> dict[str, tuple[str, ...]]:
        out: dict[str, list[str]] = {}
        for (u, v) in self.edges:
            eid = self.edge_id(u, v)
            out.setdefault(self.edge_class[eid], []).append(eid)
        return {c: tuple(ids) for c, ids in sorted(out.items())}

    def adjacency(self) -> dict[str, list[tuple[str, str]]]:
        """Neighbor lists (target, edge id), sorted for determinism.
        Directed instances expose out-neighbors only."""
        if self._adj is None:
            adj: dict[str, list[tuple[str, str]]] = {v: [] for v in self.vertices}
            for u, v in self.edges:
                eid = self.edge_id(u, v)
                adj[u].append((v, eid))
                if not self.directed:
                    adj[v].append((u, eid))
            for v in adj:
                adj[v].sort()
            self._adj = adj
        return self._adj

    def stretch_bound(self) -> int | None:
        if self.kind in ("directed-spanner", "basic-spanner"):
            return 2 * self.k - 1
        if self.kind == "slsn":
            return self.L_bound
        return None  # dsn: any path length

    def hop_cap(self) -> int:
        b = self.stretch_bound()
        return b if b is not None else len(self.vertices) - 1

    def conn_slice(self, eid: str) -> tuple[str, int] | None:
        """(side, slice index) for label-to-dup connector edges."""
        cls = self.edge_class[eid]
        if cls not in ("left-conn", "right-conn"):
            return None
        sep = ">" if self.directed else "~"
        for vid in eid.split(sep):
            info = parse_vertex(vid)
            if info["kind"] in ("dup", "posdup"):
                return ("left" if info["side"] == "c" else "right", info["l"])
        raise ValueError(f"connector edge {eid} has no dup endpoint")

    def label_endpoints(self, eid: str) -> tuple[tuple[str, int], ...]:
        """(game vertex, label) for each label-vertex endpoint of an edge."""
        sep = ">" if self.directed else "~"
        out = []
        for vid in eid.split(sep):
            info = parse_vertex(vid)
            if info["kind"] == "label":
                out.append((f"{info['side']}{info['i']}", info["s"]))
        return tuple(out)

    def outer_game_edge(self, eid: str) -> tuple[int, int, int]:
        """(i, j, l) for an outer edge."""
        sep = ">" if self.directed else "~"
        u, v = eid.split(sep)
        iu, iv = parse_vertex(u), parse_vertex(v)
        left = iu if iu["side"] == "c" else iv
        right = iv if left is iu else iu
        return left["i"], right["i"], left["l"]


def _desc(counts: Mapping[str, int], expect: Mapping[str, int]) -> None:
    for cls, want in expect.items():
        got = counts.get(cls, 0)
        assert got == want, f"class {cls}: built {got}, closed form {want}"


# --- builders ---------------------------------------------------------------


def build_directed_spanner(game: ProjectionGame, k: int) -> SpannerInstance:
    """Directed stretch-(2k-1) spanner instance.

    Per left vertex: labels and k*K*sigma dups wired to every label; star
    edges in both directions between label 1 and the others. Per game
    edge and projection pair: a chain of 2k-3 edges from the left label
    to the right label (a single direct edge when k=2). Outer edges
    connect equal-slice dups across each game edge. Every edge is its
    own demand.
    """
    if k < 2:
        raise InvalidK(f"need k >= 2, got {k}")
    K = game.params.get("K") or max(
        (game.left_degree(i) for i in range(1, game.m + 1)), default=0
    )
    sigma = game.sigma
    n_dups = k * K * sigma
    vertices: dict[str, str] = {}
    edges: list[tuple[str, str]] = []
    eclass: dict[str, str] = {}

    def add_edge(u: str, v: str, cls: str) -> None:
        edges.append((u, v))
        eclass[f"{u}>{v}"] = cls

    for i in range(1, game.m + 1):
        for s in range(1, sigma + 1):
            vertices[label_name("c", i, s)] = "left-label"
        for l in range(1, n_dups + 1):
            vertices[dup_name("c", i, l)] = "left-dup"
    for j in range(1, game.n + 1):
        for s in range(1, sigma + 1):
            vertices[label_name("x", j, s)] = "right-label"
        for l in range(1, n_dups + 1):
            vertices[dup_name("x", j, l)] = "right-dup"

    for i in range(1, game.m + 1):
        for l in range(1, n_dups + 1):
            for s in range(1, sigma + 1):
                add_edge(dup_name("c", i, l), label_name("c", i, s), "left-conn")
        for s in range(2, sigma + 1):
            add_edge(label_name("c", i, 1), label_name("c", i, s), "left-star")
            add_edge(label_name("c", i, s), label_name("c", i, 1), "left-star")
    for (i, j) in game.edges:
        for sL, sR in game.projections[(i, j)]:
            if k == 2:
                add_edge(label_name("c", i, sL), label_name("x", j, sR), "mid-proj")
            else:
                chain = [label_name("c", i, sL)]
                for t in range(1, 2 * k - 3):
                    w = mid_name(i, j, sL, sR, t)
                    vertices[w] = "mid-path"
                    chain.append(w)
                chain.append(label_name("x", j, sR))
                for u, v in zip(chain, chain[1:]):
                    add_edge(u, v, "mid-proj")
        for l in range(1, n_dups + 1):
            add_edge(dup_name("c", i, l), dup_name("x", j, l), "outer")
    for j in range(1, game.n + 1):
        for s in range(2, sigma + 1):
            add_edge(label_name("x", j, 1), label_name("x", j, s), "right-star")
            add_edge(label_name("x", j, s), label_name("x", j, 1), "right-star")
        for l in range(1, n_dups + 1):
            for s in range(1, sigma + 1):
                add_edge(label_name("x", j, s), dup_name("x", j, l), "right-conn")

    inst = SpannerInstance(
        kind="directed-spanner",
        directed=True,
        k=k,
        L_bound=None,
        vertices=vertices,
        edges=tuple(edges),
        edge_class=eclass,
        demands=tuple((u, v) for u, v in edges),
        game=game,
        K=K,
    )
    counts = {c: len(ids) for c, ids in inst.classes().items()}
    E = len(game.edges)
    _desc(
        counts,
        {
            "left-conn": game.m * n_dups * sigma,
            "left-star": game.m * 2 * (sigma - 1),
            "mid-proj": E * sigma * (2 * k - 3),
            "outer": E * n_dups,
            "right-star": game.n * 2 * (sigma - 1),
            "right-conn": game.n * n_dups * sigma,
        },
    )
    return inst


def build_undirected_spanner(game: ProjectionGame, k: int) -> SpannerInstance:
    """Undirected stretch-(2k-1) spanner instance.

    Requires game girth at least 2k+2 (GirthTooSmall otherwise). Per left
    vertex: labels, and K*sigma dup paths of k-1 vertices each; position
    1 connects to every label, position k-1 carries the outer edges.
    Projection pairs become single label-label edges; stars are single
    undirected edges.
    """
    if k < 2:
        raise InvalidK(f"need k >= 2, got {k}")
    g = girth(game)
    if g < 2 * k + 2:
        raise GirthTooSmall(f"game girth {g} < 2k+2 = {2 * k + 2}")
    return _build_undirected_unchecked(game, k)


def _build_undirected_unchecked(game: ProjectionGame, k: int) -> SpannerInstance:
    """Construction body without the girth guard; the guard exists
    because short game cycles create extra outer-to-outer stretch paths."""
    K = game.params.get("K") or max(
        (game.left_degree(i) for i in range(1, game.m + 1)), default=0
    )
    sigma = game.sigma
    n_dups = K * sigma
    vertices: dict[str, str] = {}
    edges: list[tuple[str, str]] = []
    eclass: dict[str, str] = {}

    def add_edge(u: str, v: str, cls: str) -> None:
        a, b = sorted((u, v))
        edges.append((a, b))
        eclass[f"{a}~{b}"] = cls

    for side, cls_label, count in (("c", "left", game.m), ("x", "right", game.n)):
        for i in range(1, count + 1):
            for s in range(1, sigma + 1):
                vertices[label_name(side, i, s)] = f"{cls_label}-label"
            for pos in range(1, k):
                for l in range(1, n_dups + 1):
                    vertices[pos_dup_name(side, i, pos, l)] = f"{cls_label}-dup"

    for side, cls_label, count in (("c", "left", game.m), ("x", "right", game.n)):
        for i in range(1, count + 1):
            for l in range(1, n_dups + 1):
                for s in range(1, sigma + 1):
                    add_edge(
                        pos_dup_name(side, i, 1, l),
                        label_name(side, i, s),
                        f"{cls_label}-conn",
                    )
                for pos in range(1, k - 1):
                    add_edge(
                        pos_dup_name(side, i, pos, l),
                        pos_dup_name(side, i, pos + 1, l),
                        f"{cls_label}-path",
                    )
            for s in range(2, sigma + 1):
                add_edge(label_name(side, i, 1), label_name(side, i, s), f"{cls_label}-star")
    for (i, j) in game.edges:
        for sL, sR in game.projections[(i, j)]:
            add_edge(label_name("c", i, sL), label_name("x", j, sR), "mid-proj")
        for l in range(1, n_dups + 1):
            add_edge(
                pos_dup_name("c", i, k - 1, l),
                pos_dup_name("x", j, k - 1, l),
                "outer",
            )

    inst = SpannerInstance(
        kind="basic-spanner",
        directed=False,
        k=k,
        L_bound=None,
        vertices=vertices,
        edges=tuple(edges),
        edge_class=eclass,
        demands=tuple((u, v) for u, v in edges),
        game=game,
        K=K,
    )
    counts = {c: len(ids) for c, ids in inst.classes().items()}
    E = len(game.edges)
    _desc(
        counts,
        {
            "left-conn": game.m * n_dups * sigma,
            "left-path": game.m * n_dups * (k - 2),
            "left-star": game.m * (sigma - 1),
            "mid-proj": E * sigma,
            "outer": E * n_dups,
            "right-star": game.n * (sigma - 1),
            "right-path": game.n * n_dups * (k - 2),
            "right-conn": game.n * n_dups * sigma,
        },
    )
    return inst


def _build_steiner(game: ProjectionGame, directed: bool) -> SpannerInstance:
    K = game.params.get("K") or max(
        (game.left_degree(i) for i in range(1, game.m + 1)), default=0
    )
    sigma = game.sigma
    vertices: dict[str, str] = {}
    edges: list[tuple[str, str]] = []
    eclass: dict[str, str] = {}

    def add_edge(u: str, v: str, cls: str) -> None:
        if directed:
            edges.append((u, v))
            eclass[f"{u}>{v}"] = cls
        else:
            a, b = sorted((u, v))
            edges.append((a, b))
            eclass[f"{a}~{b}"] = cls

    for i in range(1, game.m + 1):
        for s in range(1, sigma + 1):
            vertices[label_name("c", i, s)] = "left-label"
        for l in range(1, K + 1):
            vertices[dup_name("c", i, l)] = "left-dup"
    for j in range(1, game.n + 1):
        for s in range(1, sigma + 1):
            vertices[label_name("x", j, s)] = "right-label"
        for l in range(1, K + 1):
            vertices[dup_name("x", j, l)] = "right-dup"

    for i in range(1, game.m + 1):
        for l in range(1, K + 1):
            for s in range(1, sigma + 1):
                add_edge(dup_name("c", i, l), label_name("c", i, s), "left-conn")
    for (i, j) in game.edges:
        for sL, sR in game.projections[(i, j)]:
            add_edge(label_name("c", i, sL), label_name("x", j, sR), "mid-proj")
    for j in range(1, game.n + 1):
        for l in range(1, K + 1):
            for s in range(1, sigma + 1):
                add_edge(label_name("x", j, s), dup_name("x", j, l), "right-conn")

    demands = []
    for (i, j) in game.edges:
        for l in range(1, K + 1):
            demands.append((dup_name("c", i, l), dup_name("x", j, l)))

    inst = SpannerInstance(
        kind="dsn" if directed else "slsn",
        directed=directed,
        k=None,
        L_bound=None if directed else 3,
        vertices=vertices,
        edges=tuple(edges),
        edge_class=eclass,
        demands=tuple(demands),
        game=game,
        K=K,
    )
    counts = {c: len(ids) for c, ids in inst.classes().items()}
    _desc(
        counts,
        {
            "left-conn": game.m * K * sigma,
            "mid-proj": len(game.edges) * sigma,
            "right-conn": game.n * K * sigma,
        },
    )
    return inst


def build_dsn(game: ProjectionGame) -> SpannerInstance:
    """Directed Steiner network instance: K dups per side, label paths of
    length 3, one demand per game edge and slice."""
    return _build_steiner(game, directed=True)


def build_slsn(game: ProjectionGame) -> SpannerInstance:
    """Undirected length-bounded (L=3) Steiner network instance on the
    same vertex set as the directed one."""
    return _build_steiner(game, directed=False)


# --- path enumeration -------------------------------------------------------


def enumerate_stretch_paths(
    inst: SpannerInstance, u: str, v: str, cap: int = 10**6
) -> tuple[tuple[str, ...], ...]:
    """All simple u-v paths within the instance's hop bound, as tuples of
    edge ids in traversal order, lexicographic by construction. Raises
    BoundExceeded past `cap` paths. Results are memoized per instance."""
    key = (u, v)
    if key in inst._path_cache:
        return inst._path_cache[key]
    bound = inst.hop_cap()
    adj = inst.adjacency()
    out: list[tuple[str, ...]] = []
    path_edges: list[str] = []
    visited = {u}

    def dfs(cur: str, depth: int) -> None:
        if cur == v:
            out.append(tuple(path_edges))
            if len(out) > cap:
                raise BoundExceeded(f"more than {cap} paths for {u} -> {v}")
            return
        if depth == bound:
            return
        for nxt, eid in adj[cur]:
            if nxt in visited:
                continue
            visited.add(nxt)
            path_edges.append(eid)
            dfs(nxt, depth + 1)
            path_edges.pop()
            visited.remove(nxt)

    dfs(u, 0)
    result = tuple(out)
    inst._path_cache[key] = result
    return result


def _expected_outer_catalog(inst: SpannerInstance, eid: str) -> set[tuple[str, ...]]:
    """The prescribed stretch paths for an outer demand: the edge itself
    plus one label path per projection pair."""
    game = inst.game
    i, j, l = inst.outer_game_edge(eid)
    k = inst.k
    expected = {(eid,)}
    for sL, sR in game.projections[(i, j)]:
        if inst.directed:
            path = [inst.edge_id(dup_name("c", i, l), label_name("c", i, sL))]
            if k == 2:
                path.append(inst.edge_id(label_name("c", i, sL), label_name("x", j, sR)))
            else:
                chain = [label_name("c", i, sL)]
                chain += [mid_name(i, j, sL, sR, t) for t in range(1, 2 * k - 3)]
                chain.append(label_name("x", j, sR))
                path += [inst.edge_id(a, b) for a, b in zip(chain, chain[1:])]
            path.append(inst.edge_id(label_name("x", j, sR), dup_name("x", j, l)))
        else:
            path = []
            for pos in range(k - 1, 1, -1):
                path.append(
                    inst.edge_id(
                        pos_dup_name("c", i, pos, l), pos_dup_name("c", i, pos - 1, l)
                    )
                )
            path.append(inst.edge_id(pos_dup_name("c", i, 1, l), label_name("c", i, sL)))
            path.append(inst.edge_id(label_name("c", i, sL), label_name("x", j, sR)))
            path.append(inst.edge_id(label_name("x", j, sR), pos_dup_name("x", j, 1, l)))
            for pos in range(1, k - 1):
                path.append(
                    inst.edge_id(
                        pos_dup_name("x", j, pos, l), pos_dup_name("x", j, pos + 1, l)
                    )
                )
        expected.add(tuple(path))
    return expected


def check_path_structure(inst: SpannerInstance, cap: int = 10**6) -> dict:
    """Verify that every outer demand has exactly the prescribed catalog:
    the outer edge itself plus one label path per projection pair (so
    1 + |pi| paths). Raises StructureViolation with a witness on any
    mismatch. Only meaningful for spanner kinds."""
    if inst.kind not in ("directed-spanner", "basic-spanner"):
        raise ValueError("path-structure check applies to spanner instances")
    if inst.game is None:
        raise ValueError("instance has no attached game")
    per_edge = {}
    for (u, v) in inst.edges:
        eid = inst.edge_id(u, v)
        if inst.edge_class[eid] != "outer":
            continue
        found = set(enumerate_stretch_paths(inst, u, v, cap))
        expected = _expected_outer_catalog(inst, eid)
        if found != expected:
            extra = sorted(found - expected)
            missing = sorted(expected - found)
            raise StructureViolation(
                f"outer demand {eid}: "
                + (f"unexpected path {extra[0]}" if extra else f"missing path {missing[0]}")
            )
        i, j, _ = inst.outer_game_edge(eid)
        want = 1 + len(inst.game.projections[(i, j)])
        assert len(found) == want
        per_edge[eid] = len(found)
    return {"passes": True, "outer_edges": len(per_edge), "per_edge_counts": per_edge}


# --- feasibility and outer-edge removal -------------------------------------


def spans_within(
    inst: SpannerInstance, S: Iterable[str], u: str, v: str, bound: int | None = None
) -> bool:
    """BFS inside the edge subset S: is v reachable from u within the
    instance's hop bound (or an explicit one)?"""
    if bound is None:
        bound = inst.hop_cap()
    S = S if isinstance(S, (set, frozenset)) else set(S)
    adj = inst.adjacency()
    frontier = {u}
    seen = {u}
    for _ in range(bound):
        nxt = set()
        for w in frontier:
            for t, eid in adj[w]:
                if eid in S and t not in seen:
                    if t == v:
                        return True
                    seen.add(t)
                    nxt.add(t)
        if not nxt:
            break
        frontier = nxt
    return v in seen


def _unspanned_demands(inst: SpannerInstance, S: set[str]) -> list[tuple[str, str]]:
    return [(u, v) for (u, v) in inst.demands if not spans_within(inst, S, u, v)]


def best_slice(inst: SpannerInstance, S: Iterable[str]) -> int:
    """Slice minimizing the connector edges of S it contains, ties to the
    smallest index."""
    S = set(S)
    weight: dict[int, int] = {}
    slices = set()
    for (u, v) in inst.edges:
        eid = inst.edge_id(u, v)
        info = inst.conn_slice(eid)
        if info is None:
            continue
        slices.add(info[1])
        if eid in S:
            weight[info[1]] = weight.get(info[1], 0) + 1
    return min(sorted(slices), key=lambda l: (weight.get(l, 0), l))


def remove_outer_edges(inst: SpannerInstance, S: Iterable[str]) -> frozenset:
    """Replace every outer edge of a feasible solution with the label
    path of the lexicographically least projection pair, then add the
    demand edge itself for any demand this disconnects. The result is
    re-verified feasible and outer-free."""
    S = set(S)
    unknown = S - set(inst.edge_ids)
    if unknown:
        raise NotASolution(f"unknown edges in S: {sorted(unknown)[:3]}")
    missing = _unspanned_demands(inst, S)
    if missing:
        raise NotASolution(f"input does not span demand {missing[0]}")
    out = set(S)
    for (u, v) in inst.edges:
        eid = inst.edge_id(u, v)
        if inst.edge_class[eid] != "outer" or eid not in S:
            continue
        out.discard(eid)
        i, j, _ = inst.outer_game_edge(eid)
        pair = min(inst.game.projections[(i, j)])
        catalog = _expected_outer_catalog(inst, eid)
        replacement = next(
            p for p in sorted(catalog) if len(p) > 1 and _pair_of_path(inst, p) == pair
        )
        out.update(replacement)
    for (u, v) in inst.demands:
        if not spans_within(inst, out, u, v):
            out.add(inst.edge_id(u, v))
    assert not any(inst.edge_class[e] == "outer" for e in out)
    final_missing = _unspanned_demands(inst, out)
    assert not final_missing, f"removal left demand {final_missing[:1]} unspanned"
    factor = 3 if inst.directed else 2
    assert len(out) <= factor * len(S), (
        f"replacement grew {len(S)} edges to {len(out)}, over the {factor}x bound"
    )
    return frozenset(out)


def _pair_of_path(inst: SpannerInstance, path: tuple[str, ...]) -> tuple[int, int]:
    """(sL, sR) of a label path in an outer catalog."""
    sL = sR = None
    for eid in path:
        for gv, s in inst.label_endpoints(eid):
            if gv.startswith("c"):
                sL = s
            else:
                sR = s
    return (sL, sR)


# --- extraction and rounding ------------------------------------------------


def extract_assignment(
    inst: SpannerInstance, S: Iterable[str], l: int | None = None
) -> dict[str, tuple[int, ...]]:
    """Label sets read off slice l of the connector edges in S.

    For a feasible outer-free S, every game edge acquires at least one
    satisfying pair in the extracted sets; this is asserted. Defaults to
    the lightest slice."""
    S = set(S)
    if inst.game is None:
        raise ValueError("instance has no attached game")
    if l is None:
        l = best_slice(inst, S)
    labels: dict[str, set[int]] = {
        v: set() for v in inst.game.left_names + inst.game.right_names
    }
    for eid in S:
        info = inst.conn_slice(eid)
        if info is None or info[1] != l:
            continue
        for gv, s in inst.label_endpoints(eid):
            labels[gv].add(s)
    for (i, j) in inst.game.edges:
        ci, xj = inst.game.left_name(i), inst.game.right_name(j)
        ok = any(
            sL in labels[ci] and sR in labels[xj]
            for sL, sR in inst.game.projections[(i, j)]
        )
        assert ok, f"game edge ({i},{j}) unsatisfied by slice {l} labels"
    return {v: tuple(sorted(s)) for v, s in labels.items()}


def round_labels(multi: Mapping[str, Sequence[int]], seed: int) -> dict[str, int]:
    """Uniform independent choice per vertex, deterministic under seed."""
    rng = np.random.default_rng(seed)
    out = {}
    for v in sorted(multi):
        options = sorted(multi[v])
        if not options:
            raise EmptyLabelSet(v)
        out[v] = options[int(rng.integers(len(options)))]
    return out


def expected_rounded_value(
    game: ProjectionGame, multi: Mapping[str, Sequence[int]]
) -> Rational:
    """Exact expected number of satisfied edges under uniform independent
    rounding of the label sets."""
    total = Fraction(0)
    for (i, j) in game.edges:
        ci, xj = game.left_name(i), game.right_name(j)
        A, B = set(multi[ci]), set(multi[xj])
        if not A or not B:
            raise EmptyLabelSet(ci if not A else xj)
        hits = sum(1 for sL, sR in game.projections[(i, j)] if sL in A and sR in B)
        total += Fraction(hits, len(A) * len(B))
    return total


# --- files ------------------------------------------------------------------


def write_instance(inst: SpannerInstance) -> str:
    k = inst.k if inst.k is not None else 0
    header = f"spanner kind={inst.kind} k={k} directed={1 if inst.directed else 0}"
    if inst.L_bound is not None:
        header += f" L={inst.L_bound}"
    lines = [header]
    for vid in sorted(inst.vertices):
        lines.append(f"v {vid} class={inst.vertices[vid]}")
    for (u, v) in sorted(inst.edges):
        eid = inst.edge_id(u, v)
        lines.append(f"e {eid} {u} {v} class={inst.edge_class[eid]}")
    for (u, v) in sorted(inst.demands):
        lines.append(f"d {u} {v}")
    return "\n".join(lines) + "\n"


def read_instance(text: str) -> SpannerInstance:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("spanner "):
        raise ValueError("not a spanner instance file")
    header = dict(tok.split("=") for tok in lines[0].split()[1:])
    kind = header["kind"]
    directed = header["directed"] == "1"
    k = int(header["k"]) or None
    L = int(header["L"]) if "L" in header else None
    vertices: dict[str, str] = {}
    edges: list[tuple[str, str]] = []
    eclass: dict[str, str] = {}
    demands: list[tuple[str, str]] = []
    for raw in lines[1:]:
        parts = raw.split()
        if parts[0] == "v":
            vertices[parts[1]] = parts[2].split("=", 1)[1]
        elif parts[0] == "e":
            eid, u, v = parts[1], parts[2], parts[3]
            edges.append((u, v))
            want = f"{u}>{v}" if directed else f"{min(u, v)}~{max(u, v)}"
            if eid != want:
                raise ValueError(f"edge id {eid} does not match endpoints {u}, {v}")
            eclass[eid] = parts[4].split("=", 1)[1]
        elif parts[0] == "d":
            demands.append((parts[1], parts[2]))
        else:
            raise ValueError(f"unknown record {parts[0]!r}")
    return SpannerInstance(
        kind=kind,
        directed=directed,
        k=k,
        L_bound=L,
        vertices=vertices,
        edges=tuple(edges),
        edge_class=eclass,
        demands=tuple(demands),
        game=None,
        K=None,
    )


def attach_game(inst: SpannerInstance, game: ProjectionGame) -> SpannerInstance:
    """Rebuild the instance from the game and verify it matches the
    parsed one byte for byte; returns the game-carrying rebuild."""
    builders = {
        "directed-spanner": lambda: build_directed_spanner(game, inst.k),
        "basic-spanner": lambda: build_undirected_spanner(game, inst.k),
        "dsn": lambda: build_dsn(game),
        "slsn": lambda: build_slsn(game),
    }
    rebuilt = builders[inst.kind]()
    if write_instance(rebuilt) != write_instance(inst):
        raise ValueError("instance does not match a rebuild from this game")
    return rebuilt
