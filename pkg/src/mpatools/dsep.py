"""d-separation queries and path listing.

Verdicts come from a reachability sweep (Bayes-ball style): a trail is
active when every interior non-collider lies outside the conditioning set
and every interior collider is in it or is an ancestor of one of its
members. Witness paths for failed queries come from a shortest-first
search over open simple path prefixes; exhaustive enumeration is exposed
separately for small graphs.

Twin networks carry an honesty caveat: plain d-separation on a twin network
can miss independences that hold by counterfactual semantics, so ``holds =
False`` verdicts on twin networks are tagged ``caution =
"incomplete_twin_dsep"`` and should be read as "not verifiable", not
"disproved".
"""

from collections import deque
from dataclasses import dataclass

from .errors import PathLimitError, QueryError
from .graph import CausalGraph

PATH_GUARD = 100_000

TWIN_CAUTION = "incomplete_twin_dsep"


@dataclass(frozen=True)
class PathReport:
    """One undirected simple path between two query nodes.

    ``nodes`` and ``arrows`` interleave (``arrows[i]`` joins ``nodes[i]`` to
    ``nodes[i+1]`` and is ``"->"`` or ``"<-"``). ``blocked_at`` lists
    ``(node, reason)`` pairs with reason ``"non-collider-conditioned"`` or
    ``"collider-unconditioned"``; ``opening_colliders`` lists
    ``(collider, via)`` pairs with via ``"in-set"`` or ``"descendant-in-set"``.
    """

    nodes: tuple[str, ...]
    arrows: tuple[str, ...]
    is_open: bool
    blocked_at: tuple[tuple[str, str], ...] = ()
    opening_colliders: tuple[tuple[str, str], ...] = ()

    def render(self) -> str:
        parts = [self.nodes[0]]
        for arrow, node in zip(self.arrows, self.nodes[1:]):
            parts.append(arrow)
            parts.append(node)
        text = " ".join(parts)
        if self.is_open:
            return f"{text} [open]"
        return f"{text} [blocked @{self.blocked_at[0][0]}]"


@dataclass(frozen=True)
class QueryVerdict:
    """Outcome of one conditional-independence query.

    ``witnesses`` holds the open paths when ``holds`` is False (and witness
    collection was requested). ``assumption``/``pattern`` are filled in by
    the assumption checker; plain queries leave them None. ``trivial`` marks
    vacuously-true verdicts (nothing to check for the pattern).
    """

    statement: str
    holds: bool
    a: str
    b: str
    conditioned_on: tuple[str, ...]
    witnesses: tuple[PathReport, ...] = ()
    assumption: str | None = None
    pattern: str | None = None
    caution: str | None = None
    trivial: bool = False

    def to_payload(self) -> dict:
        return {
            "assumption": self.assumption,
            "pattern": self.pattern,
            "holds": self.holds,
            "statement": self.statement,
            "conditioned_on": list(self.conditioned_on),
            "witnesses": [w.render() for w in self.witnesses],
            "caution": self.caution,
            "trivial": self.trivial,
        }


def render_statement(a: str, b: str, cond: tuple[str, ...]) -> str:
    if cond:
        return f"{a} ⟂ {b} | {', '.join(cond)}"
    return f"{a} ⟂ {b}"


def _check_query(graph: CausalGraph, a: str, b: str, cond: tuple[str, ...]) -> None:
    known = set(graph.nodes)
    for n in (a, b, *cond):
        if n not in known:
            raise QueryError(f"unknown node {n!r}")
    if a == b:
        raise QueryError(f"query endpoints must differ, got {a!r} twice")
    if a in cond or b in cond:
        raise QueryError("query endpoints cannot appear in the conditioning set")
    latents = [n for n in cond if graph.role(n).kind == "latent"]
    if latents:
        raise QueryError(
            f"cannot condition on latent node(s) {', '.join(sorted(latents))}: "
            "latent variables are unmeasured by definition"
        )


def _dedupe(cond) -> tuple[str, ...]:
    seen: set[str] = set()
    out: list[str] = []
    for n in cond:
        if n not in seen:
            seen.add(n)
            out.append(n)
    return tuple(out)


def reachable_nodes(graph: CausalGraph, source: str, cond=()) -> frozenset[str]:
    """Nodes d-connected to ``source`` given ``cond`` (reachability sweep).

    Every node with an active trail from ``source`` is included; ``source``
    itself and conditioned nodes are not. No role checks are applied here;
    use :func:`d_separated` for validated queries.
    """
    parents = graph.parents_map
    children = graph.children_map
    cond_set = frozenset(cond)
    # conditioned nodes and their ancestors: these activate colliders
    anc = set(cond_set)
    stack = [p for z in cond_set for p in parents[z]]
    while stack:
        n = stack.pop()
        if n not in anc:
            anc.add(n)
            stack.extend(parents[n])

    reached: set[str] = set()
    # direction: True = arrived via an edge pointing into the node,
    # False = arrived from a child (or starting fresh at the source)
    visited: set[tuple[str, bool]] = set()
    agenda: list[tuple[str, bool]] = [(source, False)]
    while agenda:
        node, came_down = agenda.pop()
        if (node, came_down) in visited:
            continue
        visited.add((node, came_down))
        if node not in cond_set:
            reached.add(node)
        if not came_down:
            if node in cond_set:
                continue
            for p in parents[node]:
                agenda.append((p, False))
            for c in children[node]:
                agenda.append((c, True))
        else:
            if node not in cond_set:
                for c in children[node]:
                    agenda.append((c, True))
            if node in anc:
                for p in parents[node]:
                    agenda.append((p, False))
    reached.discard(source)
    return frozenset(reached)


def is_d_separated(graph: CausalGraph, a: str, b: str, cond=()) -> bool:
    """Fast boolean d-separation check (no witness collection)."""
    cond = _dedupe(cond)
    _check_query(graph, a, b, cond)
    return b not in reachable_nodes(graph, a, cond)


def d_separated(
    graph: CausalGraph,
    a: str,
    b: str,
    cond=(),
    collect_witnesses: bool = True,
) -> QueryVerdict:
    """Full d-separation verdict.

    When the query fails and ``collect_witnesses`` is set, the verdict
    carries one shortest open path as a :class:`PathReport` witness
    (exhaustive listings are the job of :func:`list_paths`). On twin
    networks a failed query is additionally tagged with
    :data:`TWIN_CAUTION`.
    """
    cond = _dedupe(cond)
    _check_query(graph, a, b, cond)
    holds = b not in reachable_nodes(graph, a, cond)
    witnesses: tuple[PathReport, ...] = ()
    if not holds and collect_witnesses:
        witness = find_open_path(graph, a, b, cond)
        witnesses = (witness,) if witness is not None else ()
    on_twin = graph.provenance == "twin" or graph.restricted_from == "twin"
    caution = TWIN_CAUTION if (not holds and on_twin) else None
    return QueryVerdict(
        statement=render_statement(a, b, cond),
        holds=holds,
        a=a,
        b=b,
        conditioned_on=cond,
        witnesses=witnesses,
        caution=caution,
    )


def _cond_closure(graph: CausalGraph, cond_set: frozenset) -> set:
    """Conditioning set plus its ancestors (activates colliders)."""
    parents = graph.parents_map
    anc = set(cond_set)
    stack = [p for z in cond_set for p in parents[z]]
    while stack:
        n = stack.pop()
        if n not in anc:
            anc.add(n)
            stack.extend(parents[n])
    return anc


def _sorted_neighbors(graph: CausalGraph) -> dict:
    """Neighbor lists tagged with the arrow as seen walking a -> ... -> b."""
    parents = graph.parents_map
    children = graph.children_map
    neighbors: dict[str, list[tuple[str, str]]] = {}
    for n in graph.nodes:
        nbrs = [(c, "->") for c in children[n]] + [(p, "<-") for p in parents[n]]
        nbrs.sort()
        neighbors[n] = nbrs
    return neighbors


def _classify(nodes, arrows, cond_set, anc) -> PathReport:
    blocked: list[tuple[str, str]] = []
    opening: list[tuple[str, str]] = []
    for i in range(1, len(nodes) - 1):
        v = nodes[i]
        is_collider = arrows[i - 1] == "->" and arrows[i] == "<-"
        if is_collider:
            if v in cond_set:
                opening.append((v, "in-set"))
            elif v in anc:
                opening.append((v, "descendant-in-set"))
            else:
                blocked.append((v, "collider-unconditioned"))
        elif v in cond_set:
            blocked.append((v, "non-collider-conditioned"))
    return PathReport(
        nodes=tuple(nodes),
        arrows=tuple(arrows),
        is_open=not blocked,
        blocked_at=tuple(blocked),
        opening_colliders=tuple(opening),
    )


def list_paths(graph: CausalGraph, a: str, b: str, cond=()) -> tuple[PathReport, ...]:
    """All undirected simple paths between ``a`` and ``b``, classified.

    Paths come out in lexicographic order of their node sequences. Raises
    :class:`PathLimitError` when the count would exceed ``PATH_GUARD``.
    """
    cond = _dedupe(cond)
    _check_query(graph, a, b, cond)
    cond_set = frozenset(cond)
    anc = _cond_closure(graph, cond_set)
    neighbors = _sorted_neighbors(graph)

    reports: list[PathReport] = []
    path_nodes: list[str] = [a]
    path_arrows: list[str] = []
    on_path: set[str] = {a}

    def dfs(node: str) -> None:
        for nxt, arrow in neighbors[node]:
            if nxt in on_path:
                continue
            path_nodes.append(nxt)
            path_arrows.append(arrow)
            if nxt == b:
                if len(reports) >= PATH_GUARD:
                    raise PathLimitError(
                        f"more than {PATH_GUARD} simple paths between {a!r} and {b!r}; "
                        "the graph is too dense for exhaustive path listing"
                    )
                reports.append(_classify(path_nodes, path_arrows, cond_set, anc))
            else:
                on_path.add(nxt)
                dfs(nxt)
                on_path.discard(nxt)
            path_nodes.pop()
            path_arrows.pop()

    dfs(a)
    return tuple(reports)


def find_open_path(graph: CausalGraph, a: str, b: str, cond=()):
    """One shortest open path between ``a`` and ``b``, or None.

    Breadth-first search over open simple path prefixes: a prefix whose
    latest interior triple is blocked can never extend to an open path,
    so only open prefixes are kept. The first completion is therefore a
    shortest open path (ties broken lexicographically). Returns None
    when no open path exists, or if the search exceeds ``PATH_GUARD``
    prefix expansions on a pathologically dense graph.
    """
    cond = _dedupe(cond)
    _check_query(graph, a, b, cond)
    cond_set = frozenset(cond)
    anc = _cond_closure(graph, cond_set)
    neighbors = _sorted_neighbors(graph)

    queue = deque([((a,), ())])
    expansions = 0
    while queue:
        nodes, arrows = queue.popleft()
        last = nodes[-1]
        for nxt, arrow in neighbors[last]:
            if nxt in nodes:
                continue
            if len(nodes) > 1:
                # only the newly completed interior triple needs checking;
                # earlier triples were open when the prefix was enqueued
                v = nodes[-1]
                is_collider = arrows[-1] == "->" and arrow == "<-"
                if is_collider:
                    if v not in anc:
                        continue
                elif v in cond_set:
                    continue
            if nxt == b:
                return _classify(nodes + (nxt,), arrows + (arrow,), cond_set, anc)
            expansions += 1
            if expansions > PATH_GUARD:
                return None
            queue.append((nodes + (nxt,), arrows + (arrow,)))
    return None
