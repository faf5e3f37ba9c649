"""Shared fixtures: canonical graph sources and a random-DAG helper."""

import numpy as np
import pytest

from mpatools.graph import CausalGraph, NodeRole, parse_graph

# confounded treatment/outcome pair where the confounder X is recorded only
# when R = 1, and two latent traits drive both recording and Z / Y
FIG1_TEXT = """
dag {
  X -> Z
  X -> Y
  Z -> Y
  U_Z -> Z
  U_Z -> R
  U_Y -> Y
  U_Y -> R
}
roles {
  treatment Z
  outcome Y
  confounder X partial
  missing R of X
  latent U_Z
  latent U_Y
}
"""

# missingness driven by the confounder itself; when X is unrecorded the
# prescriber cannot have used it, so X -> Z is absent in the R=0 subgroup
FIG2_TEXT = """
dag {
  X -> Z
  X -> Y
  Z -> Y
  X -> R
}
roles {
  treatment Z
  outcome Y
  confounder X partial
  missing R of X
}
"""

# outcome causes missingness: the twin-network territory
FIG6_TEXT = """
dag {
  X -> Z
  X -> Y
  Z -> Y
  Y -> R
}
roles {
  treatment Z
  outcome Y
  confounder X partial
  missing R of X
}
"""


@pytest.fixture
def fig1():
    return parse_graph(FIG1_TEXT)


@pytest.fixture
def fig2():
    return parse_graph(FIG2_TEXT)


@pytest.fixture
def fig6():
    return parse_graph(FIG6_TEXT)


def random_dag(rng: np.random.Generator, max_nodes: int = 10, p_edge: float = 0.3):
    """Random DAG over nodes N0..Nk with forward edges in a shuffled order.

    Role-free (all auxiliary), so any node may be conditioned on.
    """
    n = int(rng.integers(3, max_nodes + 1))
    names = [f"N{i}" for i in range(n)]
    order = list(rng.permutation(n))
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p_edge:
                edges.append((names[order[i]], names[order[j]]))
    return CausalGraph.build(edges, nodes=names)


def topological_order(graph: CausalGraph) -> list[str]:
    order, ready = [], sorted(n for n in graph.nodes if not graph.parents(n))
    seen = set()
    while ready:
        node = ready.pop(0)
        order.append(node)
        seen.add(node)
        for child in graph.children(node):
            if child not in seen and all(p in seen for p in graph.parents(child)):
                ready.append(child)
        ready.sort()
    return order


def linear_sem_sample(rng: np.random.Generator, graph: CausalGraph, n: int):
    """Linear-Gaussian draws from a DAG with random coefficients in +-[0.5, 1.5]."""
    cols = {}
    for node in topological_order(graph):
        value = rng.standard_normal(n)
        for parent in graph.parents(node):
            coef = float(rng.uniform(0.5, 1.5) * rng.choice((-1.0, 1.0)))
            value = value + coef * cols[parent]
        cols[node] = value
    return cols
