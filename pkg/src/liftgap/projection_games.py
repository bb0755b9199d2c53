"""Bipartite projection games: data model, seeded generators built on
Reed-Solomon codes, brute-force optimization, and girth pruning.

A game has left vertices c1..cm, right vertices x1..xn, a label set
Sigma = {1..sigma}, and for each edge a projection pi: every left label
maps to exactly one right label; the edge is satisfied when the chosen
pair lies in pi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import networkx as nx
import numpy as np

from .algebra import is_prime, rs_code_generate

__all__ = [
    "InvalidParams",
    "MissingLabel",
    "CapExceeded",
    "GameParams",
    "ProjectionGame",
    "derive_params",
    "generate_random",
    "generate_planted",
    "evaluate",
    "brute_force_opt",
    "count_short_cycles",
    "girth",
    "girth_prune",
    "write_game",
    "read_game",
]


class InvalidParams(ValueError):
    """Raised when generator parameters are inconsistent."""


class MissingLabel(KeyError):
    """Raised when an assignment omits a vertex it must label."""


class CapExceeded(RuntimeError):
    """Raised when a brute-force search would exceed its configured cap."""


@dataclass(frozen=True)
class GameParams:
    """Generator parameters. sigma is always q**D."""

    n: int  # right vertices
    m: int  # left vertices
    K: int  # neighbors per left vertex
    q: int  # field size (prime)
    D: int  # code dimension
    eps: float | None = None

    @property
    def sigma(self) -> int:
        return self.q**self.D

    def validate(self) -> None:
        if self.n < 1 or self.m < 1:
            raise InvalidParams("need n >= 1 and m >= 1")
        if not is_prime(self.q):
            raise InvalidParams(f"q={self.q} is not prime")
        if not (1 <= self.D <= self.q - 1):
            raise InvalidParams(f"need 1 <= D <= q-1, got D={self.D}, q={self.q}")
        if not (1 <= self.K <= self.n):
            raise InvalidParams(f"need 1 <= K <= n, got K={self.K}, n={self.n}")
        if self.K > self.q - 1:
            # Pair tables read the j-th coordinate of a length q-1 codeword.
            raise InvalidParams(f"need K <= q-1, got K={self.K}, q={self.q}")


class ProjectionGame:
    """Immutable projection game instance."""

    def __init__(
        self,
        m: int,
        n: int,
        sigma: int,
        projections: Mapping[tuple[int, int], Iterable[tuple[int, int]]],
        params: Mapping | None = None,
    ):
        if m < 1 or n < 1 or sigma < 1:
            raise InvalidParams("need m, n, sigma >= 1")
        self.m = m
        self.n = n
        self.sigma = sigma
        proj: dict[tuple[int, int], tuple[tuple[int, int], ...]] = {}
        for (i, j), pairs in projections.items():
            if not (1 <= i <= m and 1 <= j <= n):
                raise InvalidParams(f"edge ({i},{j}) outside vertex ranges")
            pairs = tuple(sorted((int(a), int(b)) for a, b in pairs))
            firsts = [a for a, _ in pairs]
            if sorted(firsts) != list(range(1, sigma + 1)):
                raise InvalidParams(
                    f"projection on edge ({i},{j}) is not a total function: "
                    f"left labels {sorted(set(firsts))}"
                )
            if any(not (1 <= b <= sigma) for _, b in pairs):
                raise InvalidParams(f"projection on edge ({i},{j}) has label out of range")
            proj[(i, j)] = pairs
        self.projections = proj
        self.edges = tuple(sorted(proj))
        self.params = dict(params or {})
        self._pair_sets = {e: frozenset(p) for e, p in proj.items()}

    # -- names and adjacency -------------------------------------------------

    def left_name(self, i: int) -> str:
        return f"c{i}"

    def right_name(self, j: int) -> str:
        return f"x{j}"

    @property
    def left_names(self) -> list[str]:
        return [self.left_name(i) for i in range(1, self.m + 1)]

    @property
    def right_names(self) -> list[str]:
        return [self.right_name(j) for j in range(1, self.n + 1)]

    def neighbors_left(self, i: int) -> tuple[int, ...]:
        return tuple(j for (a, j) in self.edges if a == i)

    def left_degree(self, i: int) -> int:
        return len(self.neighbors_left(i))

    def right_degree(self, j: int) -> int:
        return sum(1 for (_, b) in self.edges if b == j)

    def has_pair(self, i: int, j: int, sL: int, sR: int) -> bool:
        return (sL, sR) in self._pair_sets[(i, j)]

    def project(self, i: int, j: int, sL: int) -> int:
        """The unique right label paired with sL on edge (i, j)."""
        for a, b in self.projections[(i, j)]:
            if a == sL:
                return b
        raise KeyError(sL)

    def __repr__(self) -> str:
        return (
            f"ProjectionGame(m={self.m}, n={self.n}, sigma={self.sigma}, "
            f"edges={len(self.edges)})"
        )


# --- parameter derivation ---------------------------------------------------


def _next_prime(x: int) -> int:
    p = max(2, x)
    while not is_prime(p):
        p += 1
    return p


def derive_params(
    n: int,
    eps: float,
    k: int | None = None,
    mode: str = "directed",
) -> tuple[GameParams, list[str]]:
    """Asymptotic parameter schedule scaled down to a concrete n.

    m = round(n^(1+eps)), q = smallest prime >= ceil(n^((1-eps)/5)), D = 3,
    K = q-1 (directed) or min(q-1, floor(n^((1-eps)/(2k-1)))) (undirected,
    which needs k). Desk-scale degeneracies (D > q-1, K > n) are reported
    as warnings, not errors; callers may override fields before use.
    """
    if mode not in ("directed", "undirected"):
        raise InvalidParams("mode must be 'directed' or 'undirected'")
    if mode == "undirected" and k is None:
        raise InvalidParams("undirected derivation needs k")
    warnings: list[str] = []
    m = max(1, round(n ** (1 + eps)))
    q = _next_prime(math.ceil(n ** ((1 - eps) / 5)))
    D = 3
    if mode == "directed":
        K = q - 1
    else:
        K = min(q - 1, math.floor(n ** ((1 - eps) / (2 * k - 1))))
    if D > q - 1:
        warnings.append(
            f"degenerate: D=3 exceeds q-1={q - 1}; override D before generating"
        )
    if K > n:
        warnings.append(f"degenerate: K={K} exceeds n={n}; override K before generating")
    if K < 1:
        warnings.append(f"degenerate: K={K} < 1; override K before generating")
    return GameParams(n=n, m=m, K=K, q=q, D=D, eps=eps), warnings


# --- generators -------------------------------------------------------------


def _topology(params: GameParams, rng) -> list[tuple[int, ...]]:
    """K distinct sorted right neighbors for each left vertex."""
    return [
        tuple(sorted(int(j) + 1 for j in rng.choice(params.n, size=params.K, replace=False)))
        for _ in range(params.m)
    ]


def _pairs_from_shift(code, q: int, coord: int, shift: int) -> list[tuple[int, int]]:
    """Pair table for one edge: left label sL maps to the right label whose
    field value is codeword_{sL}[coord] - shift."""
    out = []
    for sL_index, word in enumerate(code.codewords):
        val = (word[coord] - shift) % q
        out.append((sL_index + 1, val + 1))
    return out


def generate_random(params: GameParams, seed: int) -> ProjectionGame:
    """Seeded random game: random topology and uniform random shifts."""
    params.validate()
    rng = np.random.default_rng(seed)
    code = rs_code_generate(params.q, params.D)
    neighbors = _topology(params, rng)
    projections = {}
    for i0, nbrs in enumerate(neighbors):
        shifts = [int(s) for s in rng.integers(0, params.q, size=params.K)]
        for j0, (j, b) in enumerate(zip(nbrs, shifts)):
            projections[(i0 + 1, j)] = _pairs_from_shift(code, params.q, j0, b)
    meta = {"n": params.n, "m": params.m, "K": params.K, "q": params.q, "D": params.D}
    if params.eps is not None:
        meta["eps"] = params.eps
    return ProjectionGame(params.m, params.n, params.sigma, projections, meta)


def generate_planted(params: GameParams, seed: int) -> tuple[ProjectionGame, dict[str, int]]:
    """Seeded game with a planted perfect assignment.

    Topology is random; shifts are solved so that random labels
    (left uniform in [q^D], right uniform in the image [q]) satisfy
    every edge. Returns the game and the planted assignment.
    """
    params.validate()
    rng = np.random.default_rng(seed)
    code = rs_code_generate(params.q, params.D)
    neighbors = _topology(params, rng)
    left_labels = [int(x) + 1 for x in rng.integers(0, params.sigma, size=params.m)]
    right_labels = [int(x) + 1 for x in rng.integers(0, params.q, size=params.n)]
    projections = {}
    for i0, nbrs in enumerate(neighbors):
        word = code.codewords[left_labels[i0] - 1]
        for j0, j in enumerate(nbrs):
            # Solve for the shift that makes the planted pair land in pi.
            shift = (word[j0] - (right_labels[j - 1] - 1)) % params.q
            projections[(i0 + 1, j)] = _pairs_from_shift(code, params.q, j0, shift)
    meta = {"n": params.n, "m": params.m, "K": params.K, "q": params.q, "D": params.D}
    if params.eps is not None:
        meta["eps"] = params.eps
    game = ProjectionGame(params.m, params.n, params.sigma, projections, meta)
    assignment = {game.left_name(i + 1): left_labels[i] for i in range(params.m)}
    assignment.update(
        {game.right_name(j + 1): right_labels[j] for j in range(params.n)}
    )
    assert evaluate(game, assignment) == len(game.edges), "planting failed"
    return game, assignment


def shift_orbit(game: ProjectionGame, assignment: Mapping[str, int]) -> list[dict[str, int]]:
    """The q assignments obtained from a perfect assignment by adding a
    constant delta to every label (right labels cycle in the image [q];
    left labels move to the codeword shifted by the constant polynomial).

    Requires generator metadata (q, D) on the game. Every returned
    assignment is verified perfect; delta = 0 reproduces the input.
    """
    q = game.params.get("q")
    if q is None:
        raise InvalidParams("shift_orbit needs generator metadata (q)")
    out = []
    for delta in range(q):
        shifted: dict[str, int] = {}
        for v, lab in assignment.items():
            if v.startswith("c"):
                idx = lab - 1
                d0 = idx % q
                shifted[v] = idx - d0 + (d0 + delta) % q + 1
            else:
                shifted[v] = (lab - 1 + delta) % q + 1
        assert evaluate(game, shifted) == len(game.edges), "orbit member not perfect"
        out.append(shifted)
    return out


# --- evaluation and optimization --------------------------------------------


def evaluate(game: ProjectionGame, assignment: Mapping[str, int]) -> int:
    """Number of edges satisfied by a full assignment."""
    total = 0
    for i, j in game.edges:
        ci, xj = game.left_name(i), game.right_name(j)
        if ci not in assignment:
            raise MissingLabel(ci)
        if xj not in assignment:
            raise MissingLabel(xj)
        if game.has_pair(i, j, assignment[ci], assignment[xj]):
            total += 1
    return total


def brute_force_opt(
    game: ProjectionGame, cap: int = 10**7
) -> tuple[dict[str, int], int]:
    """Exact optimum by enumerating right labelings; left labels decouple
    and are chosen greedily per left vertex (ties to the smallest label).

    Work is sigma^n * m * K * sigma; raises CapExceeded beyond `cap`.
    Returns (an optimal assignment, its satisfied-edge count).
    """
    import itertools

    work = game.sigma**game.n * max(1, len(game.edges)) * game.sigma
    if work > cap:
        raise CapExceeded(f"brute force work {work} exceeds cap {cap}")
    by_left: dict[int, list[tuple[int, int]]] = {}
    for i, j in game.edges:
        by_left.setdefault(i, []).append((i, j))
    best_val = -1
    best: dict[str, int] = {}
    for rho in itertools.product(range(1, game.sigma + 1), repeat=game.n):
        val = 0
        left_choice = {}
        for i, edges in by_left.items():
            counts = [0] * (game.sigma + 1)
            for (_, j) in edges:
                rj = rho[j - 1]
                for a, b in game.projections[(i, j)]:
                    if b == rj:
                        counts[a] += 1
            sL = max(range(1, game.sigma + 1), key=lambda a: (counts[a], -a))
            left_choice[i] = sL
            val += counts[sL]
        if val > best_val:
            best_val = val
            best = {game.right_name(j + 1): rho[j] for j in range(game.n)}
            for i in range(1, game.m + 1):
                best[game.left_name(i)] = left_choice.get(i, 1)
    return best, best_val


# --- cycles, girth, pruning -------------------------------------------------


def _nx_graph(game: ProjectionGame) -> nx.Graph:
    G = nx.Graph()
    G.add_nodes_from(game.left_names)
    G.add_nodes_from(game.right_names)
    G.add_edges_from(
        (game.left_name(i), game.right_name(j)) for i, j in game.edges
    )
    return G


def count_short_cycles(game: ProjectionGame, k: int) -> int:
    """Number of simple cycles of length at most 2k in the game graph."""
    G = _nx_graph(game)
    return sum(1 for _ in nx.simple_cycles(G, length_bound=2 * k))


def girth(game: ProjectionGame) -> float:
    """Length of a shortest cycle; math.inf for forests."""
    return nx.girth(_nx_graph(game))


def girth_prune(game: ProjectionGame, k: int) -> ProjectionGame:
    """Delete edges until no cycle of length <= 2k remains.

    Deterministic: repeatedly take the shortest cycle whose sorted edge
    tuple is lexicographically least and delete its least edge. The
    result is re-verified with count_short_cycles.
    """
    edges = set(game.edges)
    while True:
        G = nx.Graph()
        G.add_edges_from(
            (game.left_name(i), game.right_name(j)) for i, j in edges
        )
        cycles = [c for c in nx.simple_cycles(G, length_bound=2 * k)]
        if not cycles:
            break
        shortest = min(len(c) for c in cycles)
        best_cycle = None
        for nodes in cycles:
            if len(nodes) != shortest:
                continue
            cyc_edges = []
            for a, b in zip(nodes, nodes[1:] + nodes[:1]):
                left, right = (a, b) if a.startswith("c") else (b, a)
                cyc_edges.append((int(left[1:]), int(right[1:])))
            key = tuple(sorted(cyc_edges))
            if best_cycle is None or key < best_cycle:
                best_cycle = key
        edges.discard(best_cycle[0])
    pruned = ProjectionGame(
        game.m,
        game.n,
        game.sigma,
        {e: game.projections[e] for e in edges},
        {**game.params, "pruned_edges": len(game.edges) - len(edges)},
    )
    assert count_short_cycles(pruned, k) == 0
    return pruned


# --- files ------------------------------------------------------------------


def write_game(game: ProjectionGame) -> str:
    K = game.params.get("K")
    if K is None:
        K = max((game.left_degree(i) for i in range(1, game.m + 1)), default=0)
    lines = [f"projection n={game.n} m={game.m} sigma={game.sigma} K={K}"]
    for i, j in game.edges:
        pairs = " ".join(f"({a},{b})" for a, b in game.projections[(i, j)])
        lines.append(f"c{i} x{j} : {pairs}")
    return "\n".join(lines) + "\n"


def read_game(text: str) -> ProjectionGame:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("projection "):
        raise ValueError("not a projection game file")
    header = dict(tok.split("=") for tok in lines[0].split()[1:])
    n, m = int(header["n"]), int(header["m"])
    sigma, K = int(header["sigma"]), int(header["K"])
    projections = {}
    for raw in lines[1:]:
        head, _, rest = raw.partition(":")
        left, right = head.split()
        i, j = int(left[1:]), int(right[1:])
        pairs = []
        for tok in rest.split():
            if not (tok.startswith("(") and tok.endswith(")")):
                raise ValueError(f"malformed pair token {tok!r}")
            a, b = tok[1:-1].split(",")
            pairs.append((int(a), int(b)))
        projections[(i, j)] = pairs
    return ProjectionGame(m, n, sigma, projections, {"n": n, "m": m, "K": K})
