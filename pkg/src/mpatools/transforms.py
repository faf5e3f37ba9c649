"""Graph transforms: treatment splitting, twin networks, pattern restriction.

``to_swit`` splits the treatment into its natural (incoming edges) and
intervened (outgoing edges) halves and relabels every descendant of the
intervened half as a potential-world node. Plain d-separation on the result
answers counterfactual independence queries, except when the treatment or
the outcome causes missingness of a confounder: then the split graph would
contain a potential missingness indicator while the analysis conditions on
the factual one, and the query needs ``to_twin_network`` instead, which
keeps both worlds and ties each factual/counterfactual pair through a
shared latent error node.

``restrict_to_pattern`` applies an analyst's assertion about one
missingness pattern: which confounder arrows are absent in the subgroup
with the stated observation bits.
"""

from dataclasses import dataclass

from .errors import TransformError
from .graph import CausalGraph, NodeRole

POTENTIAL_SUFFIX_JOIN = "_"


def intervened_name(graph: CausalGraph) -> str:
    """Lowercased treatment name used for the intervened node."""
    z = graph.treatment
    if z is None:
        raise TransformError("graph declares no treatment node")
    name = z.lower()
    if name == z:
        raise TransformError(
            f"treatment {z!r} is already lowercase; cannot derive a distinct intervened node name"
        )
    if name in set(graph.nodes):
        raise TransformError(f"intervened node name {name!r} collides with an existing node")
    return name


def _potential_name(node: str, z_lower: str) -> str:
    return f"{node}{POTENTIAL_SUFFIX_JOIN}{z_lower}"


def _potential_role(role: NodeRole, factual: str) -> NodeRole:
    if role.kind == "outcome":
        return NodeRole("potential_outcome", counterpart=factual)
    if role.kind == "confounder":
        return NodeRole(
            "confounder", observability=role.observability, potential=True, counterpart=factual
        )
    if role.kind == "missingness_indicator":
        return NodeRole(
            "missingness_indicator", target=role.target, potential=True, counterpart=factual
        )
    return NodeRole("auxiliary", potential=True, counterpart=factual)


def requires_twin_network(graph: CausalGraph) -> bool:
    """True when plain treatment splitting cannot support the assumption checks.

    That happens when a missingness indicator is caused by the treatment
    (directly or through descent) or by the outcome, or when a partial
    confounder descends from the treatment: the factual node the checks
    condition on (or query) would not exist in the split graph.
    """
    graph.require_causal_roles()
    if graph.intervened_treatment is not None:
        # Already split: the caller vouches this is the analysis graph. If it
        # contains potential indicators or confounders the factual nodes the
        # checks condition on are gone, and no twin can be built from it.
        if swit_has_potential_factuals(graph):
            raise TransformError(
                "graph contains potential missingness indicators or confounders;"
                " supply the factual (unsplit) graph so a twin network can be built"
            )
        return False
    z = graph.treatment
    y = graph.outcome
    desc_z = graph.descendants(z) if z is not None else frozenset()
    for r in graph.indicators():
        if r in desc_z:
            return True
        if z is not None and graph.has_edge(z, r):
            return True
        if y is not None and graph.has_edge(y, r):
            return True
    for c in graph.confounders():
        if c in desc_z:
            return True
    return False


def to_swit(graph: CausalGraph) -> CausalGraph:
    """Split the treatment and relabel its descendants as potential nodes.

    The treatment keeps its incoming edges; a new lowercase intervened node
    (no incoming edges) takes over the outgoing ones. Every descendant ``V``
    of the intervened node is renamed ``V_<z>`` and marked potential (the
    outcome becomes the potential outcome).
    """
    if graph.provenance != "raw":
        raise TransformError(f"can only split a raw graph, got provenance {self_prov(graph)}")
    graph.require_causal_roles()
    if graph.intervened_treatment is not None:
        # Input arrived pre-split (e.g. a diagram drawn directly with the
        # treatment halves); accept it unchanged after the same guard as
        # requires_twin_network.
        if swit_has_potential_factuals(graph):
            raise TransformError(
                "graph contains potential missingness indicators or confounders;"
                " supply the factual (unsplit) graph so a twin network can be built"
            )
        return graph
    z = graph.treatment
    if z is None:
        raise TransformError("treatment splitting requires a factual treatment node")
    y = graph.outcome
    if y is not None and z in graph.descendants(y):
        raise TransformError(f"treatment {z!r} is a descendant of the outcome {y!r}")
    z_low = intervened_name(graph)

    desc = graph.descendants(z)
    rename = {v: _potential_name(v, z_low) for v in desc}
    collisions = sorted(set(rename.values()) & set(graph.nodes))
    if collisions:
        raise TransformError(f"potential-node names collide with existing nodes: {', '.join(collisions)}")

    def ren(v: str) -> str:
        return rename.get(v, v)

    edges = []
    for a, b in graph.edges:
        if a == z:
            edges.append((z_low, ren(b)))
        else:
            edges.append((ren(a), ren(b)))

    roles: dict[str, NodeRole] = {}
    for n in graph.nodes:
        if n in rename:
            roles[rename[n]] = _potential_role(graph.roles[n], n)
        else:
            roles[n] = graph.roles[n]
    roles[z_low] = NodeRole("intervened_treatment", counterpart=z)

    nodes = {ren(n) for n in graph.nodes} | {z_low}
    return CausalGraph.build(edges, roles, nodes=nodes, provenance="swit")


def swit_has_potential_factuals(graph: CausalGraph) -> bool:
    """True when a split graph contains potential indicators or confounders
    (the cases where twin-network analysis is required)."""
    return any(
        r.potential and r.kind in ("missingness_indicator", "confounder")
        for r in graph.roles.values()
    )


def to_twin_network(graph: CausalGraph) -> CausalGraph:
    """Join the factual world with its counterfactual copy.

    Every descendant ``V`` of the treatment gets a counterfactual copy
    ``V_<z>`` driven by the intervened treatment node; the pair shares a
    fresh latent error node ``e_V`` with edges into both copies.
    Non-descendants of the treatment are shared between the worlds.
    """
    if graph.provenance != "raw":
        raise TransformError(f"can only build a twin network from a raw graph, got {self_prov(graph)}")
    graph.require_causal_roles()
    if graph.intervened_treatment is not None:
        raise TransformError(
            "cannot build a twin network from an already split graph;"
            " supply the factual (unsplit) graph"
        )
    z = graph.treatment
    if z is None:
        raise TransformError("twin network construction requires a factual treatment node")
    y = graph.outcome
    if y is not None and z in graph.descendants(y):
        raise TransformError(f"treatment {z!r} is a descendant of the outcome {y!r}")
    z_low = intervened_name(graph)

    desc = sorted(graph.descendants(z))
    copy_name = {v: _potential_name(v, z_low) for v in desc}
    error_name = {v: f"e_{v}" for v in desc}
    taken = set(graph.nodes) | {z_low}
    for new in list(copy_name.values()) + list(error_name.values()):
        if new in taken:
            raise TransformError(f"twin construction name {new!r} collides with an existing node")
        taken.add(new)

    def cf(v: str) -> str:
        if v == z:
            return z_low
        return copy_name.get(v, v)

    edges = list(graph.edges)
    for a, b in graph.edges:
        if b in copy_name:
            edges.append((cf(a), cf(b)))
    for v in desc:
        edges.append((error_name[v], v))
        edges.append((error_name[v], copy_name[v]))

    roles: dict[str, NodeRole] = dict(graph.roles)
    roles[z_low] = NodeRole("intervened_treatment", counterpart=z)
    for v in desc:
        roles[copy_name[v]] = _potential_role(graph.roles[v], v)
        roles[error_name[v]] = NodeRole("latent")

    nodes = set(graph.nodes) | {z_low} | set(copy_name.values()) | set(error_name.values())
    return CausalGraph.build(edges, roles, nodes=nodes, provenance="twin")


def self_prov(graph: CausalGraph) -> str:
    if graph.provenance == "pattern_restricted":
        return f"pattern_restricted({graph.pattern_id})"
    return graph.provenance


@dataclass(frozen=True)
class PatternModification:
    """Analyst assertion for one missingness pattern.

    ``pattern`` maps each partial confounder to its observation bit
    (1 = observed), stored sorted by confounder name. ``removed_edges`` are
    raw-graph arrows out of unobserved confounders asserted absent in the
    subgroup with this pattern.
    """

    pattern: tuple[tuple[str, int], ...]
    removed_edges: tuple[tuple[str, str], ...] = ()

    @staticmethod
    def build(pattern, removed_edges=()) -> "PatternModification":
        items = tuple(sorted((str(k), int(v)) for k, v in dict(pattern).items()))
        for name, bit in items:
            if bit not in (0, 1):
                raise TransformError(f"pattern bit for {name!r} must be 0 or 1, got {bit}")
        edges = tuple((str(a), str(b)) for a, b in removed_edges)
        return PatternModification(pattern=items, removed_edges=edges)

    @property
    def bits(self) -> dict[str, int]:
        return dict(self.pattern)

    @property
    def unobserved(self) -> tuple[str, ...]:
        return tuple(name for name, bit in self.pattern if bit == 0)

    @property
    def observed(self) -> tuple[str, ...]:
        return tuple(name for name, bit in self.pattern if bit == 1)

    def pattern_id(self, graph: CausalGraph) -> str:
        """Render the pattern through the graph's indicator names, e.g.
        ``"Rckd=0,Reth=1"``."""
        parts = []
        for name, bit in self.pattern:
            ind = graph.indicator_of(name) or _any_indicator_of(graph, name)
            if ind is None:
                raise TransformError(f"graph has no missingness indicator for confounder {name!r}")
            parts.append(f"{ind}={bit}")
        return ",".join(parts)


def _any_indicator_of(graph: CausalGraph, confounder: str) -> str | None:
    for n in graph.nodes:
        r = graph.roles[n]
        if r.kind == "missingness_indicator" and r.target == confounder:
            return n
    return None


def _factual_partials(graph: CausalGraph) -> tuple[str, ...]:
    return tuple(
        n
        for n in graph.nodes
        if graph.roles[n].kind == "confounder"
        and graph.roles[n].observability == "partial"
        and not graph.roles[n].potential
    )


def restrict_to_pattern(graph: CausalGraph, mod: PatternModification) -> CausalGraph:
    """Remove the asserted arrows for one missingness pattern.

    The input must be a split graph or twin network (or the identical
    restriction applied again, which is a no-op). Removed edges are stated
    in raw-graph names; when the head was relabeled into the potential
    world, or the graph holds factual and counterfactual instances of the
    arrow, every instance is removed: an absent dependence is absent in
    both worlds.
    """
    pid = mod.pattern_id(graph)
    if graph.provenance == "pattern_restricted":
        if graph.pattern_id == pid and not _instances_present(graph, mod):
            return graph
        raise TransformError(
            f"graph is already restricted to pattern {graph.pattern_id}; cannot restrict to {pid}"
        )
    already_split = graph.provenance == "raw" and graph.intervened_treatment is not None
    if graph.provenance not in ("swit", "twin") and not already_split:
        raise TransformError(
            f"pattern restriction applies to split graphs or twin networks, got {self_prov(graph)}"
        )

    partials = set(_factual_partials(graph))
    bits = mod.bits
    if set(bits) != partials:
        raise TransformError(
            "pattern does not match the graph's partial confounders: "
            f"pattern names {sorted(bits)}, graph has {sorted(partials)}"
        )
    for a, b in mod.removed_edges:
        if a not in partials:
            raise TransformError(
                f"cannot remove edge {a} -> {b}: only arrows out of a partial confounder "
                "can be pattern-modified"
            )
        if bits[a] != 0:
            raise TransformError(
                f"cannot remove edge {a} -> {b}: {a!r} is observed in pattern {pid}"
            )

    to_remove = set()
    for a, b in mod.removed_edges:
        instances = [
            (ai, bi)
            for ai in _instances(graph, a)
            for bi in _instances(graph, b)
            if graph.has_edge(ai, bi)
        ]
        if not instances:
            raise TransformError(f"removed edge {a} -> {b} is not present in the graph")
        to_remove.update(instances)

    edges = [e for e in graph.edges if e not in to_remove]
    return CausalGraph.build(
        edges,
        graph.roles,
        nodes=graph.nodes,
        provenance="pattern_restricted",
        pattern_id=pid,
        restricted_from=graph.provenance,
    )


def _instances(graph: CausalGraph, raw_name: str) -> list[str]:
    """All nodes standing for ``raw_name``: itself and/or potential copies.

    Copies are found through ``counterpart`` metadata, with a name-based
    fallback (``<raw>_<z>``) for graphs that went through serialization.
    """
    out = []
    if raw_name in set(graph.nodes):
        out.append(raw_name)
    for n in graph.nodes:
        r = graph.roles[n]
        if r.counterfactual and (r.counterpart == raw_name):
            if n not in out:
                out.append(n)
    zi = graph.intervened_treatment
    if zi is not None:
        cand = _potential_name(raw_name, zi)
        if cand in set(graph.nodes) and graph.role(cand).counterfactual and cand not in out:
            out.append(cand)
    return out


def _instances_present(graph: CausalGraph, mod: PatternModification) -> bool:
    for a, b in mod.removed_edges:
        for ai in _instances(graph, a):
            for bi in _instances(graph, b):
                if graph.has_edge(ai, bi):
                    return True
    return False
