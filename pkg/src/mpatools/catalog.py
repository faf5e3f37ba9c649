"""Catalog of admissibility fixtures: violation structures and their repairs.

Each row is a small annotated graph targeting one assumption, with the
expected verdict, whether twin-network analysis is required, and (when one
exists) the conditioning repair: the latent cause that, once measured and
added to ``extra_conditioning``, restores the assumption. Rows whose
violation runs through the treatment or the outcome causing missingness of
the confounder have no repair.

The rows double as structural templates for the simulator's scenario
library, so every cataloged violation can also be demonstrated on data.
"""

from dataclasses import dataclass

from .graph import CausalGraph, NodeRole
from .transforms import PatternModification


@dataclass(frozen=True)
class CatalogRow:
    name: str
    assumption: str  # 'mSITA' | 'CIT' | 'CIO'
    description: str
    graph: CausalGraph
    mods: tuple[PatternModification, ...]
    expected_holds: bool
    fix: tuple[str, ...] | None  # extra conditioning that repairs; None = no fix
    twin: bool  # twin network required (false verdicts carry a caution)
    group: str  # 'grid' | 'A' | 'B' | 'special'


def triangle_graph(
    extra_edges=(),
    latents=(),
    x_to_z: bool = True,
    x_to_y: bool = True,
) -> CausalGraph:
    """Confounding triangle with a partially observed confounder.

    X (partial, indicator R) confounds treatment Z and outcome Y; the
    ``x_to_z``/``x_to_y`` switches drop an arm when the association runs
    through a latent instead.
    """
    edges = [("Z", "Y")]
    if x_to_z:
        edges.append(("X", "Z"))
    if x_to_y:
        edges.append(("X", "Y"))
    edges.extend(extra_edges)
    roles = {
        "Z": NodeRole("treatment"),
        "Y": NodeRole("outcome"),
        "X": NodeRole("confounder", observability="partial"),
        "R": NodeRole("missingness_indicator", target="X"),
    }
    for u in latents:
        roles[u] = NodeRole("latent")
    return CausalGraph.build(edges, roles, nodes=set(roles) | {"R"})


def _mod(bits, removed=()) -> tuple[PatternModification, ...]:
    return (PatternModification.build(bits, removed),)


def catalog_rows() -> tuple[CatalogRow, ...]:
    rows: list[CatalogRow] = []

    # -- mSITA grid: how missingness can tie to the treatment side and the
    #    outcome side, in every combination -------------------------------
    rows.append(
        CatalogRow(
            name="msita_treat_direct_outcome_direct",
            assumption="mSITA",
            description="treatment and outcome both cause missingness",
            graph=triangle_graph([("Z", "R"), ("Y", "R")]),
            mods=(),
            expected_holds=False,
            fix=None,
            twin=True,
            group="grid",
        )
    )
    rows.append(
        CatalogRow(
            name="msita_treat_direct_outcome_latent",
            assumption="mSITA",
            description="treatment causes missingness; latent links outcome and missingness",
            graph=triangle_graph([("Z", "R"), ("U_Y", "R"), ("U_Y", "Y")], latents=("U_Y",)),
            mods=(),
            expected_holds=False,
            fix=("U_Y",),
            twin=True,
            group="grid",
        )
    )
    rows.append(
        CatalogRow(
            name="msita_treat_latent_outcome_direct",
            assumption="mSITA",
            description="latent links treatment and missingness; outcome causes missingness",
            graph=triangle_graph([("U_Z", "R"), ("U_Z", "Z"), ("Y", "R")], latents=("U_Z",)),
            mods=(),
            expected_holds=False,
            fix=None,
            twin=True,
            group="grid",
        )
    )
    rows.append(
        CatalogRow(
            name="msita_treat_latent_outcome_latent",
            assumption="mSITA",
            description="two latents tie missingness to both treatment and outcome",
            graph=triangle_graph(
                [("U_Z", "R"), ("U_Z", "Z"), ("U_Y", "R"), ("U_Y", "Y")],
                latents=("U_Z", "U_Y"),
            ),
            mods=(),
            expected_holds=False,
            fix=("U_Z",),
            twin=False,
            group="grid",
        )
    )
    rows.append(
        CatalogRow(
            name="msita_outcome_direct_alone",
            assumption="mSITA",
            description="outcome causes missingness; sufficient on its own",
            graph=triangle_graph([("Y", "R")]),
            mods=(),
            expected_holds=False,
            fix=None,
            twin=True,
            group="grid",
        )
    )
    rows.append(
        CatalogRow(
            name="msita_missingness_causes_outcome",
            assumption="mSITA",
            description="treatment causes missingness and missingness affects the outcome",
            graph=triangle_graph([("Z", "R"), ("R", "Y")]),
            mods=(),
            expected_holds=False,
            fix=None,
            twin=True,
            group="special",
        )
    )

    # -- CIT: why the treatment can stay tied to an unobserved confounder --
    rows.append(
        CatalogRow(
            name="cit_direct_retained",
            assumption="CIT",
            description="confounder-to-treatment arrow persists when unobserved",
            graph=triangle_graph(),
            mods=_mod({"X": 0}),
            expected_holds=False,
            fix=None,
            twin=False,
            group="A",
        )
    )
    rows.append(
        CatalogRow(
            name="cit_latent_link",
            assumption="CIT",
            description="latent common cause of confounder and treatment",
            graph=triangle_graph([("U_XZ", "X"), ("U_XZ", "Z")], latents=("U_XZ",), x_to_z=False),
            mods=_mod({"X": 0}),
            expected_holds=False,
            fix=("U_XZ",),
            twin=False,
            group="A",
        )
    )
    rows.append(
        CatalogRow(
            name="cit_collider_both_direct",
            assumption="CIT",
            description="confounder and treatment both cause the missingness (no repair)",
            graph=triangle_graph([("X", "R"), ("Z", "R")]),
            mods=_mod({"X": 0}, [("X", "Z")]),
            expected_holds=False,
            fix=None,
            twin=True,
            group="B",
        )
    )
    rows.append(
        CatalogRow(
            name="cit_collider_latent_treatment",
            assumption="CIT",
            description="confounder causes missingness; latent links treatment to it",
            graph=triangle_graph([("X", "R"), ("U_Z", "R"), ("U_Z", "Z")], latents=("U_Z",)),
            mods=_mod({"X": 0}, [("X", "Z")]),
            expected_holds=False,
            fix=("U_Z",),
            twin=False,
            group="B",
        )
    )
    rows.append(
        CatalogRow(
            name="cit_collider_latent_confounder",
            assumption="CIT",
            description="latent drives confounder and missingness; treatment causes missingness",
            graph=triangle_graph([("U_X", "X"), ("U_X", "R"), ("Z", "R")], latents=("U_X",)),
            mods=_mod({"X": 0}, [("X", "Z")]),
            expected_holds=False,
            fix=("U_X",),
            twin=True,
            group="B",
        )
    )
    rows.append(
        CatalogRow(
            name="cit_collider_both_latent",
            assumption="CIT",
            description="latents drive both collider arms at the missingness indicator",
            graph=triangle_graph(
                [("U_X", "X"), ("U_X", "R"), ("U_Z", "R"), ("U_Z", "Z")],
                latents=("U_X", "U_Z"),
            ),
            mods=_mod({"X": 0}, [("X", "Z")]),
            expected_holds=False,
            fix=("U_X",),
            twin=False,
            group="B",
        )
    )

    # -- CIO: mirrored rows with the outcome in the treatment's place ------
    rows.append(
        CatalogRow(
            name="cio_direct_retained",
            assumption="CIO",
            description="confounder-to-outcome arrow persists when unobserved",
            graph=triangle_graph(),
            mods=_mod({"X": 0}),
            expected_holds=False,
            fix=None,
            twin=False,
            group="A",
        )
    )
    rows.append(
        CatalogRow(
            name="cio_latent_link",
            assumption="CIO",
            description="latent common cause of confounder and outcome",
            graph=triangle_graph([("U_XY", "X"), ("U_XY", "Y")], latents=("U_XY",), x_to_y=False),
            mods=_mod({"X": 0}),
            expected_holds=False,
            fix=("U_XY",),
            twin=False,
            group="A",
        )
    )
    rows.append(
        CatalogRow(
            name="cio_collider_both_direct",
            assumption="CIO",
            description="confounder and outcome both cause the missingness (no repair)",
            graph=triangle_graph([("X", "R"), ("Y", "R")]),
            mods=_mod({"X": 0}, [("X", "Y")]),
            expected_holds=False,
            fix=None,
            twin=True,
            group="B",
        )
    )
    rows.append(
        CatalogRow(
            name="cio_collider_latent_outcome",
            assumption="CIO",
            description="confounder causes missingness; latent links outcome to it",
            graph=triangle_graph([("X", "R"), ("U_Y", "R"), ("U_Y", "Y")], latents=("U_Y",)),
            mods=_mod({"X": 0}, [("X", "Y")]),
            expected_holds=False,
            fix=("U_Y",),
            twin=False,
            group="B",
        )
    )
    rows.append(
        CatalogRow(
            name="cio_collider_latent_confounder",
            assumption="CIO",
            # No repair: conditioning on R activates the collider at the
            # factual outcome (an ancestor of R via Y -> R), and the error
            # node bridging Y to its counterfactual copy is unmeasurable.
            description="latent drives confounder and missingness; outcome causes missingness",
            graph=triangle_graph([("U_X", "X"), ("U_X", "R"), ("Y", "R")], latents=("U_X",)),
            mods=_mod({"X": 0}, [("X", "Y")]),
            expected_holds=False,
            fix=None,
            twin=True,
            group="B",
        )
    )
    rows.append(
        CatalogRow(
            name="cio_collider_both_latent",
            assumption="CIO",
            description="latents drive both collider arms at the missingness indicator",
            graph=triangle_graph(
                [("U_X", "X"), ("U_X", "R"), ("U_Y", "R"), ("U_Y", "Y")],
                latents=("U_X", "U_Y"),
            ),
            mods=_mod({"X": 0}, [("X", "Y")]),
            expected_holds=False,
            fix=("U_Y",),
            twin=False,
            group="B",
        )
    )

    return tuple(rows)


def catalog_row(name: str) -> CatalogRow:
    for row in catalog_rows():
        if row.name == name:
            return row
    raise KeyError(name)
