"""d-separation tests: fixtures, witnesses, and an independent oracle.

The oracle below decides separation by the classical moralization route
(ancestral subgraph of {a, b} ∪ S, moralize, undirected reachability
avoiding S). It shares no code with the library's reachability
algorithm, so agreement is meaningful evidence.
"""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mpatools.dsep import (
    PATH_GUARD,
    d_separated,
    find_open_path,
    is_d_separated,
    list_paths,
    reachable_nodes,
    render_statement,
)
from mpatools.errors import PathLimitError, QueryError
from mpatools.graph import CausalGraph, NodeRole, parse_graph
from mpatools.transforms import to_swit, to_twin_network

from conftest import linear_sem_sample, random_dag


def moralized_separation(graph, a: str, b: str, cond) -> bool:
    """Independent oracle: ancestral subgraph, moralize, block on cond."""
    keep = {a, b, *cond}
    for v in list(keep):
        keep |= set(graph.ancestors(v))
    undirected = {v: set() for v in keep}
    for x, y in graph.edges:
        if x in keep and y in keep:
            undirected[x].add(y)
            undirected[y].add(x)
    for v in keep:  # marry parents
        parents = [p for p in graph.parents(v) if p in keep]
        for p, q in itertools.combinations(parents, 2):
            undirected[p].add(q)
            undirected[q].add(p)
    blocked = set(cond)
    frontier, seen = [a], {a}
    while frontier:
        v = frontier.pop()
        if v == b:
            return False
        for w in undirected[v]:
            if w not in seen and w not in blocked:
                seen.add(w)
                frontier.append(w)
    return True


class TestFixtures:
    def test_adjusted_confounder_separates(self, fig1):
        s = to_swit(fig1)
        assert is_d_separated(s, "Z", "Y_z", {"X", "z"})

    def test_conditioning_on_collider_opens(self, fig1):
        s = to_swit(fig1)
        verdict = d_separated(s, "Z", "Y_z", {"X", "R", "z"})
        assert not verdict.holds
        assert len(verdict.witnesses) == 1
        witness = verdict.witnesses[0]
        assert witness.nodes == ("Z", "U_Z", "R", "U_Y", "Y_z")
        assert witness.render() == "Z <- U_Z -> R <- U_Y -> Y_z [open]"
        assert ("R", "in-set") in witness.opening_colliders

    def test_measuring_either_latent_restores_separation(self, fig1):
        # a latent can only enter the conditioning set once re-roled as measured
        for repaired in ("U_Z", "U_Y"):
            s = to_swit(fig1.with_roles({repaired: NodeRole("auxiliary")}))
            assert is_d_separated(s, "Z", "Y_z", {"X", "R", "z", repaired})

    def test_isolated_nodes_are_separated(self):
        g = CausalGraph.build([("A", "B")], nodes=["A", "B", "C"])
        assert is_d_separated(g, "A", "C", ())
        assert list_paths(g, "A", "C", ()) == ()

    def test_twin_network_descendant_of_collider(self, fig6):
        t = to_twin_network(fig6)
        verdict = d_separated(t, "Z", "Y_z", {"X", "R", "z"})
        assert not verdict.holds
        rendered = [w.render() for w in verdict.witnesses]
        assert "Z -> Y <- e_Y -> Y_z [open]" in rendered
        witness = verdict.witnesses[rendered.index("Z -> Y <- e_Y -> Y_z [open]")]
        assert ("Y", "descendant-in-set") in witness.opening_colliders


class TestListPaths:
    def test_two_paths_lexicographic(self, fig1):
        s = to_swit(fig1)
        reports = list_paths(s, "Z", "Y_z", {"X", "R", "z"})
        assert len(reports) == 2
        assert [r.nodes for r in reports] == [
            ("Z", "U_Z", "R", "U_Y", "Y_z"),
            ("Z", "X", "Y_z"),
        ]
        assert [r.is_open for r in reports] == [True, False]
        assert reports[1].render() == "Z <- X -> Y_z [blocked @X]"

    def test_chain_blocked_by_middle(self):
        g = parse_graph("dag { A -> B B -> C }")
        reports = list_paths(g, "A", "C", {"B"})
        assert len(reports) == 1
        assert not reports[0].is_open
        assert reports[0].blocked_at == (("B", "non-collider-conditioned"),)

    def test_open_iff_no_blockers(self, fig1):
        s = to_swit(fig1)
        for cond in ({"z"}, {"X", "z"}, {"X", "R", "z"}):
            for r in list_paths(s, "Z", "Y_z", cond):
                assert r.is_open == (len(r.blocked_at) == 0)

    def test_colliders_partition(self, fig1):
        # every collider lands in exactly one of blocked_at / opening_colliders
        s = to_swit(fig1)
        for cond in ({"z"}, {"X", "R", "z"}):
            for r in list_paths(s, "Z", "Y_z", cond):
                colliders = {
                    r.nodes[i]
                    for i in range(1, len(r.nodes) - 1)
                    if r.arrows[i - 1] == "->" and r.arrows[i] == "<-"
                }
                blocked = {n for n, why in r.blocked_at if why == "collider-unconditioned"}
                opened = {n for n, _ in r.opening_colliders}
                assert blocked | opened >= colliders
                assert not (blocked & opened)

    def test_path_guard_trips(self):
        # complete DAG on 19 nodes: >> 100,000 undirected simple paths
        names = [f"N{i:02d}" for i in range(19)]
        edges = [(names[i], names[j]) for i in range(19) for j in range(i + 1, 19)]
        g = CausalGraph.build(edges)
        with pytest.raises(PathLimitError, match=str(PATH_GUARD)):
            list_paths(g, names[0], names[-1], ())

    def test_statement_rendering(self):
        assert render_statement("Z", "Y_z", ("X", "z")) == "Z ⟂ Y_z | X, z"


class TestQueryValidation:
    def test_unknown_node(self, fig1):
        with pytest.raises(QueryError, match="unknown"):
            is_d_separated(fig1, "Z", "Nope", ())

    def test_same_endpoints(self, fig1):
        with pytest.raises(QueryError):
            is_d_separated(fig1, "Z", "Z", ())

    def test_endpoint_in_conditioning_set(self, fig1):
        with pytest.raises(QueryError):
            is_d_separated(fig1, "Z", "Y", {"Z"})

    def test_latent_unconditionable(self, fig1):
        with pytest.raises(QueryError, match="latent"):
            is_d_separated(fig1, "Z", "Y", {"U_Z"})


class TestProperties:
    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=120, deadline=None)
    def test_oracle_agreement_and_symmetry(self, seed):
        rng = np.random.default_rng(seed)
        g = random_dag(rng)
        nodes = list(g.nodes)
        for _ in range(8):
            a, b = rng.choice(nodes, size=2, replace=False)
            rest = [n for n in nodes if n not in (a, b)]
            k = int(rng.integers(0, min(3, len(rest)) + 1))
            cond = tuple(rng.choice(rest, size=k, replace=False)) if k else ()
            got = is_d_separated(g, a, b, cond)
            assert got == moralized_separation(g, a, b, cond), (a, b, cond)
            assert got == is_d_separated(g, b, a, cond)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=60, deadline=None)
    def test_verdict_matches_path_enumeration(self, seed):
        rng = np.random.default_rng(seed)
        g = random_dag(rng, max_nodes=8)
        nodes = list(g.nodes)
        a, b = rng.choice(nodes, size=2, replace=False)
        rest = [n for n in nodes if n not in (a, b)]
        k = int(rng.integers(0, min(3, len(rest)) + 1))
        cond = tuple(rng.choice(rest, size=k, replace=False)) if k else ()
        reports = list_paths(g, a, b, cond)
        assert is_d_separated(g, a, b, cond) == (not any(r.is_open for r in reports))

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=60, deadline=None)
    def test_witness_search_consistent(self, seed):
        rng = np.random.default_rng(seed)
        g = random_dag(rng, max_nodes=8)
        nodes = list(g.nodes)
        a, b = rng.choice(nodes, size=2, replace=False)
        rest = [n for n in nodes if n not in (a, b)]
        k = int(rng.integers(0, min(3, len(rest)) + 1))
        cond = tuple(rng.choice(rest, size=k, replace=False)) if k else ()
        witness = find_open_path(g, a, b, cond)
        if is_d_separated(g, a, b, cond):
            assert witness is None
        else:
            assert witness is not None and witness.is_open
            open_paths = [r for r in list_paths(g, a, b, cond) if r.is_open]
            assert witness.nodes in [r.nodes for r in open_paths]
            assert len(witness.nodes) == min(len(r.nodes) for r in open_paths)

    def test_reachable_nodes_matches_pointwise_queries(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            g = random_dag(rng)
            nodes = list(g.nodes)
            a = nodes[int(rng.integers(len(nodes)))]
            rest = [n for n in nodes if n != a]
            k = int(rng.integers(0, min(3, len(rest)) + 1))
            cond = tuple(rng.choice(rest, size=k, replace=False)) if k else ()
            reach = reachable_nodes(g, a, cond)
            for b in rest:
                if b in cond:
                    continue
                assert (b not in reach) == is_d_separated(g, a, b, cond)


class TestSoundnessOnData:
    def test_separation_implies_zero_partial_correlation(self):
        rng = np.random.default_rng(20260818)
        checked = 0
        for _ in range(50):
            g = random_dag(rng, max_nodes=8)
            cols = linear_sem_sample(rng, g, 50_000)
            nodes = list(g.nodes)
            for _ in range(4):
                a, b = rng.choice(nodes, size=2, replace=False)
                rest = [n for n in nodes if n not in (a, b)]
                k = int(rng.integers(0, min(3, len(rest)) + 1))
                cond = tuple(rng.choice(rest, size=k, replace=False)) if k else ()
                if not is_d_separated(g, a, b, cond):
                    continue
                x, y = cols[a], cols[b]
                if cond:
                    design = np.column_stack(
                        [np.ones(len(x))] + [cols[c] for c in cond]
                    )
                    x = x - design @ np.linalg.lstsq(design, x, rcond=None)[0]
                    y = y - design @ np.linalg.lstsq(design, y, rcond=None)[0]
                r = float(np.corrcoef(x, y)[0, 1])
                assert abs(r) < 0.02, (a, b, cond, r)
                checked += 1
        assert checked >= 30
