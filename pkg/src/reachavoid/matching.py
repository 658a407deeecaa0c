"""Coalition-to-evader assignment as constrained bipartite matching.

One side of the graph holds every pursuit coalition of up to three
pursuers, the other side the evaders; an edge means the coalition wins
against that evader while every proper subcoalition loses.  Two edges
conflict when their coalitions share a pursuer, so a valid assignment is a
matching that additionally uses each pursuer at most once.  Finding the
largest such matching is NP-hard (pair-only instances encode 3-dimensional
matching), hence both an exact branch-and-bound search and the three-stage
sequential approximation are provided.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass

from .geometry import EvaderSpec, PursuerSpec
from .interception import (
    GameKind,
    InterceptionResult,
    Region,
    UNBOUNDED,
    classify_result,
    solve_interception,
    validate_coalition,
)

Coalition = tuple[int, ...]
#: An assignment: sorted ``(coalition_index, evader_id)`` pairs.
Matching = tuple[tuple[int, int], ...]

#: Instances with more edges than this are refused by the exact search.
EXACT_EDGE_GUARD = 64


class SizeGuardExceeded(RuntimeError):
    """The exact matcher refused an instance above its size guard."""


@dataclass(frozen=True)
class GameGraph:
    """Bipartite coalition-evader graph with an implicit conflict relation.

    ``edges`` reference coalitions by index into ``coalitions``; two edges
    conflict exactly when their coalitions differ but share a pursuer.
    """

    coalitions: tuple[Coalition, ...]
    evaders: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        coalitions = tuple(validate_coalition(c) for c in self.coalitions)
        evaders = tuple(int(e) for e in self.evaders)
        evader_set = set(evaders)
        edges = []
        for ci, ej in self.edges:
            ci = int(ci)
            ej = int(ej)
            if not 0 <= ci < len(coalitions):
                raise ValueError(f"edge references unknown coalition index {ci}")
            if ej not in evader_set:
                raise ValueError(f"edge references unknown evader id {ej}")
            edges.append((ci, ej))
        object.__setattr__(self, "coalitions", coalitions)
        object.__setattr__(self, "evaders", evaders)
        object.__setattr__(self, "edges", tuple(sorted(set(edges))))

    def edge_key(self, edge: tuple[int, int]) -> tuple[Coalition, int]:
        """Deterministic (members, evader) sort key for an edge."""
        return (self.coalitions[edge[0]], edge[1])


def edges_conflict(s: Coalition, p: Coalition) -> bool:
    """Whether two coalitions cannot be assigned simultaneously."""
    return s != p and bool(set(s) & set(p))


def is_conflict_free(graph: GameGraph, matching) -> bool:
    """Validate a matching: edges of the graph, distinct evaders and
    coalitions, no shared pursuer."""
    edge_set = set(graph.edges)
    used_evaders: set[int] = set()
    used_coalitions: set[int] = set()
    used_pursuers: set[int] = set()
    for ci, ej in matching:
        if (ci, ej) not in edge_set:
            return False
        if ej in used_evaders or ci in used_coalitions:
            return False
        members = set(graph.coalitions[ci])
        if members & used_pursuers:
            return False
        used_evaders.add(ej)
        used_coalitions.add(ci)
        used_pursuers |= members
    return True


def coalition_count(num_pursuers: int) -> int:
    """Number of coalitions of size one to three among ``num_pursuers``."""
    n = int(num_pursuers)
    if n < 1:
        raise ValueError(f"num_pursuers must be >= 1, got {n}")
    return n + n * (n - 1) // 2 + n * (n - 1) * (n - 2) // 6


def all_coalitions(num_pursuers: int) -> tuple[Coalition, ...]:
    """Every coalition of size one to three, sorted by size then members."""
    n = int(num_pursuers)
    singles = [(i,) for i in range(n)]
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    triples = [
        (i, j, k)
        for i in range(n)
        for j in range(i + 1, n)
        for k in range(j + 1, n)
    ]
    return tuple(singles + pairs + triples)


def build_graph(pursuers: list[PursuerSpec], evaders: list[EvaderSpec],
                region: Region = UNBOUNDED, *, evader_ids=None) -> GameGraph:
    """Build the coalition-evader graph from player geometry.

    An edge joins a coalition to an evader when the coalition does not lose
    (win or tie) while every proper subcoalition loses outright, so edges
    carry exactly the minimal winning coalitions.  Coalitions are examined
    by increasing size, which lets losing-subcoalition checks prune most
    pair and triple solves.
    """
    graph, _ = build_graph_with_results(
        pursuers, evaders, region, evader_ids=evader_ids
    )
    return graph


def build_graph_with_results(pursuers, evaders, region: Region = UNBOUNDED, *,
                             evader_ids=None):
    """As :func:`build_graph`, also returning the per-pair solve results.

    The second return value maps ``(coalition, evader_id)`` to the
    :class:`~reachavoid.interception.InterceptionResult` computed for it;
    the simulation engine reuses these to avoid duplicate solves.
    """
    coalitions = all_coalitions(len(pursuers))
    index_of = {c: i for i, c in enumerate(coalitions)}
    if evader_ids is None:
        evader_ids = tuple(range(len(evaders)))
    else:
        evader_ids = tuple(int(i) for i in evader_ids)
        if len(evader_ids) != len(evaders):
            raise ValueError("evader_ids must align with evaders")

    results: dict[tuple[Coalition, int], InterceptionResult] = {}
    edges: list[tuple[int, int]] = []
    for evader, ej in zip(evaders, evader_ids):
        def kind_of(members: Coalition) -> GameKind:
            key = (members, ej)
            result = results.get(key)
            if result is None:
                result = solve_interception(members, evader, pursuers, region)
                results[key] = result
            return classify_result(result, evader, pursuers, region)

        losing_singles = set()
        for i in range(len(pursuers)):
            if kind_of((i,)) is GameKind.EVADER_WINS:
                losing_singles.add(i)
            else:
                edges.append((index_of[(i,)], ej))
        losing_pairs = set()
        for members in all_coalitions(len(pursuers)):
            if len(members) == 2 and set(members) <= losing_singles:
                if kind_of(members) is GameKind.EVADER_WINS:
                    losing_pairs.add(members)
                else:
                    edges.append((index_of[members], ej))
        for members in all_coalitions(len(pursuers)):
            if len(members) != 3 or not set(members) <= losing_singles:
                continue
            sub_pairs = [
                tuple(sorted(pair))
                for pair in ((members[0], members[1]),
                             (members[0], members[2]),
                             (members[1], members[2]))
            ]
            if all(pair in losing_pairs for pair in sub_pairs):
                if kind_of(members) is not GameKind.EVADER_WINS:
                    edges.append((index_of[members], ej))
    graph = GameGraph(coalitions=coalitions, evaders=evader_ids, edges=tuple(edges))
    return graph, results


def max_bipartite_matching(left_ids, right_ids, edges) -> tuple[tuple, ...]:
    """Maximum-cardinality matching of a plain bipartite graph.

    Hopcroft-Karp: repeated breadth-first layering followed by layered
    augmenting depth-first searches.  Vertices may be any hashable ids;
    adjacency is visited in sorted order so results are deterministic.

    Returns sorted ``(left, right)`` pairs.
    """
    left_ids = sorted(set(left_ids))
    right_set = set(right_ids)
    adjacency: dict = {left: [] for left in left_ids}
    for left, right in edges:
        if left not in adjacency or right not in right_set:
            raise ValueError(f"edge ({left!r}, {right!r}) references unknown vertex")
        adjacency[left].append(right)
    for left in left_ids:
        adjacency[left] = sorted(set(adjacency[left]))

    match_left: dict = {}
    match_right: dict = {}
    INF = float("inf")

    def bfs() -> bool:
        distance = {}
        queue = deque()
        for left in left_ids:
            if left not in match_left:
                distance[left] = 0
                queue.append(left)
        found = INF
        while queue:
            left = queue.popleft()
            if distance[left] >= found:
                continue
            for right in adjacency[left]:
                other = match_right.get(right)
                if other is None:
                    found = min(found, distance[left] + 1)
                elif other not in distance:
                    distance[other] = distance[left] + 1
                    queue.append(other)
        bfs.distance = distance
        return found is not INF

    def dfs(left) -> bool:
        for right in adjacency[left]:
            other = match_right.get(right)
            if other is None or (
                bfs.distance.get(other) == bfs.distance[left] + 1 and dfs(other)
            ):
                match_left[left] = right
                match_right[right] = left
                return True
        bfs.distance[left] = INF
        return False

    while bfs():
        for left in left_ids:
            if left not in match_left:
                dfs(left)
    return tuple(sorted(match_left.items()))


def _greedy_conflict_free(graph: GameGraph, edges) -> list[tuple[int, int]]:
    chosen: list[tuple[int, int]] = []
    used_pursuers: set[int] = set()
    used_evaders: set[int] = set()
    for edge in sorted(edges, key=graph.edge_key):
        members = set(graph.coalitions[edge[0]])
        if edge[1] in used_evaders or members & used_pursuers:
            continue
        chosen.append(edge)
        used_pursuers |= members
        used_evaders.add(edge[1])
    return chosen


def _exact_conflict_free(graph: GameGraph, edges) -> list[tuple[int, int]]:
    """Exact maximum conflict-free matching by depth-first branch and bound.

    Edges are explored grouped by evader, rarest evader first; the bound is
    the count of distinct unassigned evaders still reachable.
    """
    edges = list(edges)
    if not edges:
        return []
    by_evader: dict[int, list[tuple[int, int]]] = {}
    for edge in edges:
        by_evader.setdefault(edge[1], []).append(edge)
    evader_order = sorted(by_evader, key=lambda e: (len(by_evader[e]), e))
    for e in evader_order:
        by_evader[e].sort(key=graph.edge_key)

    best: list[tuple[int, int]] = []
    chosen: list[tuple[int, int]] = []
    used_pursuers: set[int] = set()

    def walk(pos: int) -> None:
        nonlocal best
        if len(chosen) + (len(evader_order) - pos) <= len(best):
            return
        if pos == len(evader_order):
            if len(chosen) > len(best):
                best = list(chosen)
            return
        evader = evader_order[pos]
        for edge in by_evader[evader]:
            members = set(graph.coalitions[edge[0]])
            if members & used_pursuers:
                continue
            chosen.append(edge)
            used_pursuers.update(members)
            walk(pos + 1)
            used_pursuers.difference_update(members)
            chosen.pop()
        walk(pos + 1)  # leave this evader unassigned

    walk(0)
    return best


def exact_mbmc(graph: GameGraph, *, max_edges: int = EXACT_EDGE_GUARD) -> Matching:
    """Optimal conflict-free matching, for instances within the size guard.

    Raises :class:`SizeGuardExceeded` beyond ``max_edges`` edges; callers
    needing an answer anyway should fall back to
    :func:`sequential_matching`.
    """
    if len(graph.edges) > max_edges:
        raise SizeGuardExceeded(
            f"exact matching refused: {len(graph.edges)} edges exceed the "
            f"guard of {max_edges}"
        )
    return tuple(sorted(_exact_conflict_free(graph, graph.edges)))


def sequential_matching(graph: GameGraph) -> Matching:
    """Three-stage approximate conflict-free matching.

    Stage one matches single-pursuer coalitions by maximum bipartite
    matching; stage two matches pair coalitions drawn only from the still
    unmatched pursuers and evaders; stage three does the same for triples.
    Each stage output is conflict-free, so the union is too.  The result is
    within a factor three of optimal.

    Stage two and three subproblems must themselves avoid sharing pursuers
    between pair/triple coalitions, which plain bipartite matching cannot
    express; they are solved exactly by the branch-and-bound search (these
    stage subgraphs are small), with a greedy maximal fallback above the
    size guard.
    """
    singles = [e for e in graph.edges if len(graph.coalitions[e[0]]) == 1]
    stage1 = max_bipartite_matching(
        sorted({e[0] for e in singles}),
        sorted({e[1] for e in singles}),
        singles,
    )
    matched: list[tuple[int, int]] = list(stage1)
    used_pursuers = {
        i for ci, _ in matched for i in graph.coalitions[ci]
    }
    used_evaders = {ej for _, ej in matched}

    for size in (2, 3):
        stage_edges = [
            e for e in graph.edges
            if len(graph.coalitions[e[0]]) == size
            and e[1] not in used_evaders
            and not set(graph.coalitions[e[0]]) & used_pursuers
        ]
        if len(stage_edges) <= EXACT_EDGE_GUARD:
            stage = _exact_conflict_free(graph, stage_edges)
        else:
            stage = _greedy_conflict_free(graph, stage_edges)
        matched.extend(stage)
        for ci, ej in stage:
            used_pursuers |= set(graph.coalitions[ci])
            used_evaders.add(ej)
    return tuple(sorted(matched))


# --------------------------------------------------------------------------
# hard-instance generation from 3-dimensional matching


@dataclass(frozen=True)
class ThreeDMInstance:
    """A 3-dimensional matching instance over three m-element index sets."""

    m: int
    triples: tuple[tuple[int, int, int], ...]

    def __post_init__(self) -> None:
        m = int(self.m)
        if m < 1:
            raise ValueError(f"instance size must be >= 1, got {m}")
        triples = tuple(
            (int(i), int(j), int(k)) for i, j, k in self.triples
        )
        for triple in triples:
            if any(not 0 <= v < m for v in triple):
                raise ValueError(f"triple {triple} out of range for m={m}")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "triples", tuple(sorted(set(triples))))


def reduce_3dm(instance: ThreeDMInstance) -> GameGraph:
    """Encode a 3-dimensional matching instance as a matching-with-conflicts
    instance.

    Elements of the first two index sets become pursuers (the second set
    offset by ``m``); each triple ``(i, j, k)`` becomes an edge from the
    pair coalition ``{i, m+j}`` to evader ``k``.  The shared-pursuer
    conflict rule then forbids exactly the pairs of triples that agree in
    either of the first two coordinates, so the instance has a complete
    conflict-free matching exactly when the original has a perfect
    3-dimensional matching.
    """
    m = instance.m
    pair_coalitions = sorted({(i, m + j) for i, j, _ in instance.triples})
    index_of = {c: idx for idx, c in enumerate(pair_coalitions)}
    edges = sorted(
        (index_of[(i, m + j)], k) for i, j, k in instance.triples
    )
    return GameGraph(
        coalitions=tuple(pair_coalitions),
        evaders=tuple(range(m)),
        edges=tuple(edges),
    )


# --------------------------------------------------------------------------
# plain-document graph exchange, so matching runs without the geometry stack


def graph_to_json(graph: GameGraph) -> str:
    doc = {
        "coalitions": [list(c) for c in graph.coalitions],
        "evaders": list(graph.evaders),
        "edges": [list(e) for e in graph.edges],
    }
    return json.dumps(doc, sort_keys=True)


def graph_from_json(text: str) -> GameGraph:
    doc = json.loads(text)
    try:
        return GameGraph(
            coalitions=tuple(tuple(c) for c in doc["coalitions"]),
            evaders=tuple(doc["evaders"]),
            edges=tuple(tuple(e) for e in doc["edges"]),
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed graph document: {exc}") from exc
