"""Causal diagrams: a small dagitty-compatible DSL, node roles, and ancestry.

A graph file holds one ``dag { ... }`` block with whitespace-separated edge
statements (``A -> B``, ``B <- C``, chains like ``Z <- X -> Y``), optionally
followed by one ``roles { ... }`` block assigning causal roles to nodes::

    dag {
      X -> Z
      X -> Y
      Z -> Y
      U_Z -> R  U_Z -> Z
    }
    roles {
      treatment Z
      outcome Y
      confounder X partial
      missing R of X
      latent U_Z
    }

``#`` starts a line comment. Node names match ``[A-Za-z][A-Za-z0-9_]*`` and
are case-sensitive. Undeclared nodes default to the ``auxiliary`` role.
Bidirected edges (``<->``) are rejected: latent common causes must be written
as explicit latent nodes with two outgoing edges.
"""

import re
from dataclasses import dataclass, field, replace
from functools import cached_property

from .errors import GraphSyntaxError, GraphValidationError

ROLE_KINDS = (
    "treatment",
    "intervened_treatment",
    "outcome",
    "potential_outcome",
    "confounder",
    "missingness_indicator",
    "latent",
    "auxiliary",
)

PROVENANCES = ("raw", "swit", "twin", "pattern_restricted")

NAME_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*")

AUXILIARY = None  # set after NodeRole is defined


@dataclass(frozen=True)
class NodeRole:
    """Causal role of a node.

    Parameters
    ----------
    kind : str
        One of :data:`ROLE_KINDS`.
    target : str, optional
        For ``missingness_indicator``: the partial confounder it tracks.
    observability : str, optional
        For ``confounder``: ``"full"`` or ``"partial"``.
    potential : bool
        True for nodes living in the counterfactual world of a transformed
        graph (relabeled descendants of the intervened treatment, or twin
        copies). The intervened treatment itself and ``potential_outcome``
        nodes are counterfactual by kind and need not set this.
    counterpart : str, optional
        Factual node this one was derived from during a transform. Not
        serialized; informational only.
    """

    kind: str = "auxiliary"
    target: str | None = None
    observability: str | None = None
    potential: bool = False
    counterpart: str | None = None

    def __post_init__(self):
        if self.kind not in ROLE_KINDS:
            raise GraphValidationError(f"unknown role kind {self.kind!r}")
        if self.kind == "confounder":
            if self.observability not in ("full", "partial"):
                raise GraphValidationError(
                    f"confounder observability must be 'full' or 'partial', got {self.observability!r}"
                )
        elif self.observability is not None:
            raise GraphValidationError(f"observability is only valid for confounders, not {self.kind}")
        if self.kind == "missingness_indicator" and self.target is None:
            raise GraphValidationError("missingness indicator needs a target confounder")
        if self.kind != "missingness_indicator" and self.target is not None:
            raise GraphValidationError(f"target is only valid for missingness indicators, not {self.kind}")

    @property
    def counterfactual(self) -> bool:
        """True if the node belongs to the counterfactual world."""
        return self.potential or self.kind in ("intervened_treatment", "potential_outcome")


AUXILIARY = NodeRole()


@dataclass(frozen=True)
class CausalGraph:
    """Immutable directed acyclic graph with node roles.

    ``nodes`` is lexicographically sorted and ``edges`` is a sorted tuple of
    ``(tail, head)`` pairs, so iteration order (and everything downstream,
    including serialized output) is deterministic. ``roles`` holds an entry
    for every node; use :meth:`role` rather than indexing to get the
    ``auxiliary`` default.

    ``provenance`` records how the graph came to be: ``raw`` (parsed or
    built), ``swit`` (treatment split), ``twin`` (factual + counterfactual
    worlds), or ``pattern_restricted``. Pattern-restricted graphs also carry
    ``pattern_id`` and ``restricted_from``.
    """

    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]
    roles: dict[str, NodeRole] = field(default_factory=dict)
    provenance: str = "raw"
    pattern_id: str | None = None
    restricted_from: str | None = None

    @staticmethod
    def build(
        edges,
        roles=None,
        nodes=(),
        provenance: str = "raw",
        pattern_id: str | None = None,
        restricted_from: str | None = None,
    ) -> "CausalGraph":
        """Construct and validate a graph from edge pairs and a role mapping."""
        edge_tuple = tuple(sorted({(str(a), str(b)) for a, b in edges}))
        node_set = {n for e in edge_tuple for n in e} | set(nodes)
        roles = dict(roles or {})
        unknown = sorted(set(roles) - node_set)
        if unknown:
            raise GraphValidationError(f"roles declared for unknown nodes: {', '.join(unknown)}")
        full_roles = {n: roles.get(n, AUXILIARY) for n in node_set}
        g = CausalGraph(
            nodes=tuple(sorted(node_set)),
            edges=edge_tuple,
            roles=full_roles,
            provenance=provenance,
            pattern_id=pattern_id,
            restricted_from=restricted_from,
        )
        g.validate()
        return g

    # -- adjacency ---------------------------------------------------------

    @cached_property
    def parents_map(self) -> dict[str, tuple[str, ...]]:
        m: dict[str, list[str]] = {n: [] for n in self.nodes}
        for a, b in self.edges:
            m[b].append(a)
        return {n: tuple(v) for n, v in m.items()}

    @cached_property
    def children_map(self) -> dict[str, tuple[str, ...]]:
        m: dict[str, list[str]] = {n: [] for n in self.nodes}
        for a, b in self.edges:
            m[a].append(b)
        return {n: tuple(v) for n, v in m.items()}

    def parents(self, node: str) -> tuple[str, ...]:
        return self.parents_map[node]

    def children(self, node: str) -> tuple[str, ...]:
        return self.children_map[node]

    def has_edge(self, tail: str, head: str) -> bool:
        return head in self.children_map.get(tail, ())

    def role(self, node: str) -> NodeRole:
        return self.roles.get(node, AUXILIARY)

    # -- role lookups ------------------------------------------------------

    def nodes_of_kind(self, *kinds: str) -> tuple[str, ...]:
        return tuple(n for n in self.nodes if self.roles[n].kind in kinds)

    @property
    def treatment(self) -> str | None:
        found = self.nodes_of_kind("treatment")
        return found[0] if found else None

    @property
    def intervened_treatment(self) -> str | None:
        found = self.nodes_of_kind("intervened_treatment")
        return found[0] if found else None

    @property
    def outcome(self) -> str | None:
        """The factual outcome if present, else the potential outcome."""
        found = self.nodes_of_kind("outcome")
        if found:
            return found[0]
        found = self.nodes_of_kind("potential_outcome")
        return found[0] if found else None

    @property
    def outcome_query_node(self) -> str | None:
        """The outcome-family node representing Y(z): the potential outcome
        when one exists, else the factual outcome."""
        found = self.nodes_of_kind("potential_outcome")
        if found:
            return found[0]
        found = self.nodes_of_kind("outcome")
        return found[0] if found else None

    @property
    def latents(self) -> tuple[str, ...]:
        return self.nodes_of_kind("latent")

    def confounders(self, observability: str | None = None) -> tuple[str, ...]:
        return tuple(
            n
            for n in self.nodes
            if self.roles[n].kind == "confounder"
            and (observability is None or self.roles[n].observability == observability)
        )

    def indicators(self, factual_only: bool = True) -> tuple[str, ...]:
        """Missingness indicators, by default only the factual ones."""
        return tuple(
            n
            for n in self.nodes
            if self.roles[n].kind == "missingness_indicator"
            and not (factual_only and self.roles[n].potential)
        )

    def indicator_of(self, confounder: str) -> str | None:
        for n in self.nodes:
            r = self.roles[n]
            if r.kind == "missingness_indicator" and not r.potential and r.target == confounder:
                return n
        return None

    # -- ancestry ----------------------------------------------------------

    def ancestors(self, node: str) -> frozenset[str]:
        """Strict ancestors of ``node`` (the node itself is excluded)."""
        return self._closure(node, self.parents_map)

    def descendants(self, node: str) -> frozenset[str]:
        """Strict descendants of ``node`` (the node itself is excluded)."""
        return self._closure(node, self.children_map)

    def _closure(self, node: str, step: dict[str, tuple[str, ...]]) -> frozenset[str]:
        if node not in step:
            raise GraphValidationError(f"unknown node {node!r}")
        seen: set[str] = set()
        stack = list(step[node])
        while stack:
            n = stack.pop()
            if n not in seen:
                seen.add(n)
                stack.extend(step[n])
        seen.discard(node)
        return frozenset(seen)

    # -- validation --------------------------------------------------------

    def validate(self) -> None:
        """Check structural and role invariants; raise GraphValidationError."""
        node_set = set(self.nodes)
        if len(self.nodes) != len(node_set):
            raise GraphValidationError("duplicate node names")
        for a, b in self.edges:
            if a == b:
                raise GraphValidationError(f"self-loop on {a!r}")
            if a not in node_set or b not in node_set:
                raise GraphValidationError(f"edge {a!r} -> {b!r} references an undeclared node")
        for n in self.nodes:
            if not NAME_RE.fullmatch(n):
                raise GraphValidationError(f"invalid node name {n!r}")
        if set(self.roles) != node_set:
            raise GraphValidationError("roles mapping must cover exactly the node set")
        if self.provenance not in PROVENANCES:
            raise GraphValidationError(f"unknown provenance {self.provenance!r}")

        cycle = self._find_cycle()
        if cycle:
            raise GraphValidationError("graph has a cycle: " + " -> ".join(cycle))

        for kind in ("treatment", "intervened_treatment", "outcome", "potential_outcome"):
            found = self.nodes_of_kind(kind)
            if len(found) > 1:
                raise GraphValidationError(f"more than one {kind} node: {', '.join(found)}")

        confs = {n: self.roles[n] for n in self.confounders()}
        factual_indicator: dict[str, str] = {}
        indicated: set[str] = set()
        for n in self.nodes:
            r = self.roles[n]
            if r.kind != "missingness_indicator":
                continue
            if r.target not in confs:
                raise GraphValidationError(
                    f"indicator {n!r} tracks {r.target!r}, which is not a declared confounder"
                )
            if confs[r.target].observability != "partial":
                raise GraphValidationError(
                    f"indicator {n!r} tracks {r.target!r}, which is not partially observed"
                )
            indicated.add(r.target)
            if not r.potential:
                if r.target in factual_indicator:
                    raise GraphValidationError(
                        f"confounder {r.target!r} has two indicators: "
                        f"{factual_indicator[r.target]!r} and {n!r}"
                    )
                factual_indicator[r.target] = n
        for c, r in confs.items():
            if r.observability == "partial" and not r.potential and c not in indicated:
                raise GraphValidationError(f"partial confounder {c!r} has no missingness indicator")

        zi = self.intervened_treatment
        if zi is not None and self.parents_map[zi]:
            raise GraphValidationError(
                f"intervened treatment {zi!r} must have no incoming edges"
            )

    def _find_cycle(self) -> list[str] | None:
        WHITE, GRAY, BLACK = 0, 1, 2
        color = {n: WHITE for n in self.nodes}
        stack_path: list[str] = []

        def dfs(n: str) -> list[str] | None:
            color[n] = GRAY
            stack_path.append(n)
            for c in self.children_map[n]:
                if color[c] == GRAY:
                    i = stack_path.index(c)
                    return stack_path[i:] + [c]
                if color[c] == WHITE:
                    found = dfs(c)
                    if found:
                        return found
            stack_path.pop()
            color[n] = BLACK
            return None

        for n in self.nodes:
            if color[n] == WHITE:
                found = dfs(n)
                if found:
                    return found
        return None

    def require_causal_roles(self) -> None:
        """Raise unless the graph names a treatment and an outcome-family node."""
        if self.treatment is None and self.intervened_treatment is None:
            raise GraphValidationError("graph declares no treatment node")
        if self.outcome_query_node is None:
            raise GraphValidationError("graph declares no outcome or potential outcome node")

    # -- edits -------------------------------------------------------------

    def with_roles(self, updates: dict[str, NodeRole]) -> "CausalGraph":
        """Copy of the graph with some roles replaced."""
        roles = dict(self.roles)
        for n, r in updates.items():
            if n not in roles:
                raise GraphValidationError(f"unknown node {n!r}")
            roles[n] = r
        g = replace(self, roles=roles)
        g.validate()
        return g

    # -- serialization -----------------------------------------------------

    def serialize(self) -> str:
        """Canonical DSL text: sorted node lines, then sorted edge lines,
        then the roles block. Transformed graphs get a provenance comment."""
        lines: list[str] = []
        if self.provenance != "raw":
            tag = self.provenance
            if self.pattern_id is not None:
                tag += f" pattern={self.pattern_id}"
            lines.append(f"# provenance: {tag}")
        lines.append("dag {")
        for n in self.nodes:
            lines.append(f"  {n}")
        for a, b in self.edges:
            lines.append(f"  {a} -> {b}")
        lines.append("}")
        role_lines = []
        for n in self.nodes:
            r = self.roles[n]
            if r.kind == "auxiliary" and not r.potential:
                continue
            role_lines.append("  " + _role_line(n, r))
        if role_lines:
            lines.append("roles {")
            lines.extend(role_lines)
            lines.append("}")
        return "\n".join(lines) + "\n"


def _role_line(node: str, r: NodeRole) -> str:
    if r.kind == "treatment":
        return f"treatment {node}"
    if r.kind == "intervened_treatment":
        return f"intervened {node}"
    if r.kind == "outcome":
        return f"outcome {node}"
    if r.kind == "potential_outcome":
        return f"potential_outcome {node}"
    if r.kind == "confounder":
        line = f"confounder {node} {r.observability}"
    elif r.kind == "missingness_indicator":
        line = f"missing {node} of {r.target}"
    elif r.kind == "latent":
        return f"latent {node}"
    else:
        line = f"auxiliary {node}"
    if r.potential:
        line += " potential"
    return line


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<comment>#[^\n]*)"
    r"|(?P<bidir><->)"
    r"|(?P<left><-)"
    r"|(?P<right>->)"
    r"|(?P<lbrace>\{)"
    r"|(?P<rbrace>\})"
    r"|(?P<name>[A-Za-z][A-Za-z0-9_]*)"
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    line: int
    column: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise GraphSyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        chunk = m.group()
        if kind == "bidir":
            raise GraphSyntaxError(
                "bidirected edges are not supported; add an explicit latent node "
                "with two outgoing edges instead",
                line,
                col,
            )
        if kind not in ("ws", "comment"):
            tokens.append(_Token(kind, chunk, line, col))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            col = len(chunk) - chunk.rfind("\n")
        else:
            col += len(chunk)
        pos = m.end()
    tokens.append(_Token("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.i = 0

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def next(self) -> _Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, kind: str, what: str) -> _Token:
        t = self.next()
        if t.kind != kind:
            raise GraphSyntaxError(f"expected {what}, found {t.text or 'end of input'!r}", t.line, t.column)
        return t

    def expect_name(self, what: str = "a node name") -> _Token:
        return self.expect("name", what)

    def fail(self, msg: str) -> None:
        t = self.peek()
        raise GraphSyntaxError(msg, t.line, t.column)


def parse_graph(text: str) -> CausalGraph:
    """Parse DSL text into a validated :class:`CausalGraph`.

    The result always has ``provenance="raw"``; provenance comments in the
    input are treated as ordinary comments. Duplicate edge statements
    collapse to one edge (set semantics, as in dagitty).
    """
    parser = _Parser(_tokenize(text))
    nodes: set[str] = set()
    edges: set[tuple[str, str]] = set()
    roles: dict[str, NodeRole] = {}
    saw_dag = False
    saw_roles = False

    while parser.peek().kind != "eof":
        t = parser.expect_name("'dag' or 'roles'")
        if t.text == "dag":
            if saw_dag:
                raise GraphSyntaxError("more than one dag block", t.line, t.column)
            saw_dag = True
            _parse_dag_block(parser, nodes, edges)
        elif t.text == "roles":
            if not saw_dag:
                raise GraphSyntaxError("roles block before dag block", t.line, t.column)
            if saw_roles:
                raise GraphSyntaxError("more than one roles block", t.line, t.column)
            saw_roles = True
            _parse_roles_block(parser, nodes, roles)
        else:
            raise GraphSyntaxError(f"expected 'dag' or 'roles', found {t.text!r}", t.line, t.column)

    if not saw_dag:
        t = parser.peek()
        raise GraphSyntaxError("no dag block found", t.line, t.column)

    return CausalGraph.build(edges, roles, nodes=nodes)


def _parse_dag_block(parser: _Parser, nodes: set[str], edges: set[tuple[str, str]]) -> None:
    parser.expect("lbrace", "'{'")
    while True:
        t = parser.next()
        if t.kind == "rbrace":
            return
        if t.kind == "eof":
            raise GraphSyntaxError("unterminated dag block", t.line, t.column)
        if t.kind != "name":
            raise GraphSyntaxError(f"expected a node name, found {t.text!r}", t.line, t.column)
        current = t.text
        nodes.add(current)
        # chain of arrows: A -> B <- C -> D ...
        while parser.peek().kind in ("left", "right"):
            arrow = parser.next()
            nxt = parser.expect_name()
            nodes.add(nxt.text)
            if arrow.kind == "right":
                edge = (current, nxt.text)
            else:
                edge = (nxt.text, current)
            if edge[0] == edge[1]:
                raise GraphSyntaxError(f"self-loop on {edge[0]!r}", arrow.line, arrow.column)
            edges.add(edge)
            current = nxt.text


_ROLE_KEYWORDS = (
    "treatment",
    "intervened",
    "outcome",
    "potential_outcome",
    "confounder",
    "missing",
    "latent",
    "auxiliary",
)


def _parse_roles_block(parser: _Parser, nodes: set[str], roles: dict[str, NodeRole]) -> None:
    parser.expect("lbrace", "'{'")
    while True:
        t = parser.next()
        if t.kind == "rbrace":
            return
        if t.kind == "eof":
            raise GraphSyntaxError("unterminated roles block", t.line, t.column)
        if t.kind != "name" or t.text not in _ROLE_KEYWORDS:
            raise GraphSyntaxError(
                f"expected a role keyword ({', '.join(_ROLE_KEYWORDS)}), found {t.text!r}",
                t.line,
                t.column,
            )
        keyword = t.text
        name_tok = parser.expect_name()
        node = name_tok.text
        if node not in nodes:
            raise GraphSyntaxError(f"role declared for unknown node {node!r}", name_tok.line, name_tok.column)
        if node in roles:
            raise GraphSyntaxError(f"node {node!r} declared twice in roles block", name_tok.line, name_tok.column)

        if keyword == "treatment":
            roles[node] = NodeRole("treatment")
        elif keyword == "intervened":
            roles[node] = NodeRole("intervened_treatment")
        elif keyword == "outcome":
            roles[node] = NodeRole("outcome")
        elif keyword == "potential_outcome":
            roles[node] = NodeRole("potential_outcome")
        elif keyword == "latent":
            roles[node] = NodeRole("latent")
        elif keyword == "confounder":
            observability = "full"
            if parser.peek().kind == "name" and parser.peek().text in ("partial", "full"):
                observability = parser.next().text
            roles[node] = NodeRole("confounder", observability=observability, potential=_maybe_potential(parser))
        elif keyword == "missing":
            of_tok = parser.expect_name("'of'")
            if of_tok.text != "of":
                raise GraphSyntaxError(f"expected 'of', found {of_tok.text!r}", of_tok.line, of_tok.column)
            target_tok = parser.expect_name()
            if target_tok.text not in nodes:
                raise GraphSyntaxError(
                    f"indicator target {target_tok.text!r} is not a node in the dag block",
                    target_tok.line,
                    target_tok.column,
                )
            roles[node] = NodeRole(
                "missingness_indicator", target=target_tok.text, potential=_maybe_potential(parser)
            )
        else:  # auxiliary
            roles[node] = NodeRole("auxiliary", potential=_maybe_potential(parser))


def _maybe_potential(parser: _Parser) -> bool:
    if parser.peek().kind == "name" and parser.peek().text == "potential":
        parser.next()
        return True
    return False
