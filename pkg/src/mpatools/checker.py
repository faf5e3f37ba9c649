"""Mechanical admissibility checks for pattern-wise propensity analysis.

Three conditional independences decide whether per-pattern propensity
modeling identifies the average treatment effect:

* mSITA: treatment independent of the potential outcome given confounders
  and missingness indicators,
* CIT: treatment independent of the unobserved confounders given the
  observed ones and the indicators, within each missingness pattern,
* CIO: the potential outcome independent of the unobserved confounders,
  likewise per pattern.

Identification needs mSITA together with CIT or CIO in every pattern.
``run_framework`` wires the full workflow: echo the analyst's per-pattern
assertions, screen for known killer structures, check mSITA on the split
graph (twin network when treatment or outcome drives missingness), then
check CIT/CIO per asserted pattern.
"""

import itertools
from dataclasses import dataclass, replace

from .dsep import QueryVerdict, d_separated, render_statement
from .errors import CheckError
from .graph import CausalGraph, NodeRole
from .transforms import (
    PatternModification,
    requires_twin_network,
    restrict_to_pattern,
    to_swit,
    to_twin_network,
)

MAX_PARTIALS = 16


@dataclass(frozen=True)
class AssumptionSpec:
    """One admissibility question: a raw annotated graph, the analyst's
    per-pattern structural assertions, and optional extra conditioning
    variables (latents asserted measurable are re-roled before checking)."""

    graph: CausalGraph
    pattern_mods: tuple[PatternModification, ...] = ()
    extra_conditioning: tuple[str, ...] = ()

    def __post_init__(self):
        if self.graph.provenance != "raw":
            raise CheckError("assumption checks start from a raw graph")
        self.graph.require_causal_roles()
        seen = set()
        for mod in self.pattern_mods:
            if mod.pattern in seen:
                raise CheckError(f"duplicate pattern modification for bits {dict(mod.pattern)}")
            seen.add(mod.pattern)
        known = set(self.graph.nodes)
        for n in self.extra_conditioning:
            if n not in known:
                raise CheckError(f"extra conditioning names unknown node {n!r}")


@dataclass(frozen=True)
class _Prepared:
    raw: CausalGraph
    base: CausalGraph
    twin: bool
    extra: tuple[str, ...]


def _prepare(spec: AssumptionSpec) -> _Prepared:
    raw = spec.graph
    extra = tuple(dict.fromkeys(spec.extra_conditioning))
    remeasured = {
        n: NodeRole("auxiliary") for n in extra if raw.role(n).kind == "latent"
    }
    if remeasured:
        raw = raw.with_roles(remeasured)
    twin = requires_twin_network(raw)
    base = to_twin_network(raw) if twin else to_swit(raw)
    return _Prepared(raw=raw, base=base, twin=twin, extra=extra)


def _conditioning(base: CausalGraph, extra, observed_partials=None) -> tuple[str, ...]:
    """Deterministic conditioning set: indicators, (observed) partial
    confounders, full confounders, extras, and the intervened treatment."""
    inds = sorted(base.indicators(factual_only=True))
    partials = [
        n
        for n in base.nodes
        if base.roles[n].kind == "confounder"
        and base.roles[n].observability == "partial"
        and not base.roles[n].potential
    ]
    if observed_partials is not None:
        partials = [n for n in partials if n in set(observed_partials)]
    fulls = [
        n
        for n in base.nodes
        if base.roles[n].kind == "confounder"
        and base.roles[n].observability == "full"
        and not base.roles[n].potential
    ]
    cond = list(inds) + sorted(partials) + sorted(fulls)
    for e in extra:
        if e not in cond:
            cond.append(e)
    zi = base.intervened_treatment
    if zi is not None:
        cond.append(zi)
    return tuple(cond)


def check_msita(spec: AssumptionSpec) -> QueryVerdict:
    """Is the treatment separated from the potential outcome given all
    confounders and missingness indicators?"""
    prep = _prepare(spec)
    z = prep.base.treatment
    yq = prep.base.outcome_query_node
    cond = _conditioning(prep.base, prep.extra)
    verdict = d_separated(prep.base, z, yq, cond)
    return replace(verdict, assumption="mSITA")


def _pattern_checks(spec: AssumptionSpec, query_from: str) -> tuple[QueryVerdict, ...]:
    prep = _prepare(spec)
    assumption = "CIT" if query_from == "treatment" else "CIO"
    z = prep.base.treatment
    yq = prep.base.outcome_query_node
    a = z if query_from == "treatment" else yq
    out = []
    for mod in spec.pattern_mods:
        pid = mod.pattern_id(prep.base)
        unobserved = mod.unobserved
        if not unobserved:
            out.append(
                QueryVerdict(
                    statement=f"pattern {pid}: every partial confounder is observed",
                    holds=True,
                    a=a,
                    b="",
                    conditioned_on=(),
                    assumption=assumption,
                    pattern=pid,
                    trivial=True,
                )
            )
            continue
        restricted = restrict_to_pattern(prep.base, mod)
        cond = _conditioning(restricted, prep.extra, observed_partials=mod.observed)
        sub = [d_separated(restricted, a, w, cond) for w in sorted(unobserved)]
        out.append(
            QueryVerdict(
                statement="; ".join(v.statement for v in sub),
                holds=all(v.holds for v in sub),
                a=a,
                b=",".join(sorted(unobserved)),
                conditioned_on=cond,
                witnesses=tuple(w for v in sub for w in v.witnesses),
                assumption=assumption,
                pattern=pid,
                caution=next((v.caution for v in sub if v.caution), None),
            )
        )
    return tuple(out)


def check_cit(spec: AssumptionSpec) -> tuple[QueryVerdict, ...]:
    """Per pattern: treatment separated from each unobserved confounder
    given the observed ones, the indicators, and the intervened treatment."""
    return _pattern_checks(spec, "treatment")


def check_cio(spec: AssumptionSpec) -> tuple[QueryVerdict, ...]:
    """Per pattern: potential outcome separated from each unobserved
    confounder given the observed ones and the indicators."""
    return _pattern_checks(spec, "outcome")


# ---------------------------------------------------------------------------
# Structural screening
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScenarioFlag:
    scenario: str  # 'I', 'II', or 'III'
    detail: str
    decisive: bool

    def to_payload(self) -> dict:
        return {"scenario": self.scenario, "detail": self.detail, "decisive": self.decisive}


def screen_scenarios(
    graph: CausalGraph, pattern_mods: tuple[PatternModification, ...] = ()
) -> tuple[ScenarioFlag, ...]:
    """Match the three killer structures on the raw graph.

    Scenario I (outcome causes missingness) is decisive: it is sufficient
    for an mSITA violation on its own. Scenarios II (latent common causes
    linking both treatment and outcome to missingness) and III (a
    confounder and the treatment both drive that confounder's missingness
    while its association with the outcome persists) are flags that defer
    to the separation checks.
    """
    flags: list[ScenarioFlag] = []
    z = graph.treatment
    y = graph.outcome
    indicators = graph.indicators()
    latents = graph.latents

    for r in indicators:
        if y is not None and graph.has_edge(y, r):
            flags.append(
                ScenarioFlag(
                    "I",
                    f"outcome {y} causes missingness ({y} -> {r}): "
                    "no conditioning can restore mSITA",
                    decisive=True,
                )
            )

    z_side = sorted(
        (u, r) for u in latents for r in indicators if graph.has_edge(u, r) and graph.has_edge(u, z)
    )
    y_side = sorted(
        (u, r)
        for u in latents
        for r in indicators
        if y is not None and graph.has_edge(u, r) and graph.has_edge(u, y)
    )
    if z_side and y_side:
        uz, rz = z_side[0]
        uy, ry = y_side[0]
        flags.append(
            ScenarioFlag(
                "II",
                f"latent {uz} links treatment and missingness ({uz} -> {z}, {uz} -> {rz}) "
                f"while latent {uy} links outcome and missingness ({uy} -> {y}, {uy} -> {ry}); "
                "conditioning on the pattern can open a non-causal treatment-outcome path",
                decisive=False,
            )
        )

    mods_by_bits = {mod.pattern: mod for mod in pattern_mods}
    for r in indicators:
        x = graph.roles[r].target
        if not (graph.has_edge(x, r) and z is not None and graph.has_edge(z, r)):
            continue
        retained = []
        if y is not None and graph.has_edge(x, y):
            removed_everywhere = bool(mods_by_bits) and all(
                (x, y) in mod.removed_edges
                for mod in pattern_mods
                if mod.bits.get(x) == 0
            ) and any(mod.bits.get(x) == 0 for mod in pattern_mods)
            if not removed_everywhere:
                retained.append(f"direct edge {x} -> {y}")
        for u in latents:
            if graph.has_edge(u, x) and y is not None and graph.has_edge(u, y):
                retained.append(f"latent common cause {u} of {x} and {y}")
        if retained:
            flags.append(
                ScenarioFlag(
                    "III",
                    f"{x} and treatment {z} both cause missingness of {x} "
                    f"({x} -> {r}, {z} -> {r}) and the {x}-outcome association persists "
                    f"({'; '.join(retained)}); whether the association truly persists in the "
                    "unobserved subgroup is a substantive judgement",
                    decisive=False,
                )
            )
    return tuple(flags)


# ---------------------------------------------------------------------------
# Framework
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PatternReport:
    pattern: str
    assessed: bool
    trivial: bool = False
    cit: QueryVerdict | None = None
    cio: QueryVerdict | None = None

    @property
    def admissible(self) -> bool | None:
        if not self.assessed:
            return None
        if self.trivial:
            return True
        return bool((self.cit and self.cit.holds) or (self.cio and self.cio.holds))

    @property
    def route(self) -> str | None:
        if not self.assessed or self.trivial:
            return None
        cit_ok = bool(self.cit and self.cit.holds)
        cio_ok = bool(self.cio and self.cio.holds)
        if cit_ok and cio_ok:
            return "CIT+CIO"
        if cit_ok:
            return "CIT"
        if cio_ok:
            return "CIO"
        return None

    def to_payload(self) -> dict:
        return {
            "pattern": self.pattern,
            "assessed": self.assessed,
            "trivial": self.trivial,
            "cit": self.cit.to_payload() if self.cit else None,
            "cio": self.cio.to_payload() if self.cio else None,
            "admissible": self.admissible,
            "route": self.route,
        }


@dataclass(frozen=True)
class FrameworkReport:
    """Full admissibility workflow result (machine payload + narrative)."""

    treatment: str
    outcome: str
    assertions: tuple[str, ...]
    scenario_flags: tuple[ScenarioFlag, ...]
    msita: QueryVerdict
    patterns: tuple[PatternReport, ...]
    admissible: bool
    route: str | None
    decided_at_step: int | None
    notes: tuple[str, ...] = ()

    def to_payload(self) -> dict:
        checks = [self.msita.to_payload()]
        for p in self.patterns:
            if p.cit is not None:
                checks.append(p.cit.to_payload())
            if p.cio is not None:
                checks.append(p.cio.to_payload())
        return {
            "treatment": self.treatment,
            "outcome": self.outcome,
            "assertions": list(self.assertions),
            "scenario_flags": [f.to_payload() for f in self.scenario_flags],
            "checks": checks,
            "patterns": [p.to_payload() for p in self.patterns],
            "admissible": self.admissible,
            "route": self.route,
            "decided_at_step": self.decided_at_step,
            "notes": list(self.notes),
        }

    def verdict_line(self) -> str:
        if self.admissible:
            if self.route in ("CIT", "CIO"):
                return f"admissible via {self.route}"
            if self.route == "mixed":
                return "admissible via CIT/CIO (mixed)"
            return "admissible"
        if self.decided_at_step == 2:
            return "inadmissible (scenario I: the outcome causes missingness)"
        if self.decided_at_step == 3:
            return "inadmissible (mSITA violated)"
        failing = [p.pattern for p in self.patterns if p.assessed and p.admissible is False]
        unassessed = [p.pattern for p in self.patterns if not p.assessed]
        if failing:
            return f"inadmissible (pattern {failing[0]}: neither CIT nor CIO holds)"
        if unassessed:
            return f"inadmissible (unassessed patterns: {', '.join(unassessed)})"
        return "inadmissible"

    def narrative(self) -> str:
        lines = [
            f"admissibility check: treatment {self.treatment}, outcome {self.outcome}",
            "",
            "step 1: asserted pattern structure",
        ]
        if self.assertions:
            lines.extend(f"  - {a}" for a in self.assertions)
        else:
            lines.append("  - none asserted")
        lines.append("step 2: structural screening")
        if self.scenario_flags:
            for f in self.scenario_flags:
                kind = "decisive" if f.decisive else "flag"
                lines.append(f"  - scenario {f.scenario} ({kind}): {f.detail}")
        else:
            lines.append("  - no killer structures detected")
        lines.append("step 3: mSITA")
        lines.append(f"  - {self.msita.statement}: {'holds' if self.msita.holds else 'violated'}")
        for w in self.msita.witnesses:
            lines.append(f"    witness: {w.render()}")
        if self.msita.caution:
            lines.append(f"    caution: {self.msita.caution}")
        lines.append("step 4: per-pattern CIT / CIO")
        if not self.patterns:
            lines.append("  - no partial confounders; nothing to check per pattern")
        for p in self.patterns:
            if not p.assessed:
                lines.append(f"  - pattern {p.pattern}: unassessed (no structural assertion given)")
                continue
            if p.trivial:
                lines.append(f"  - pattern {p.pattern}: all partial confounders observed (trivially fine)")
                continue
            cit = "holds" if (p.cit and p.cit.holds) else "violated"
            cio = "holds" if (p.cio and p.cio.holds) else "violated"
            tail = f" -> admissible via {p.route}" if p.route else " -> neither holds"
            lines.append(f"  - pattern {p.pattern}: CIT {cit}, CIO {cio}{tail}")
            for v in (p.cit, p.cio):
                if v is None or v.holds:
                    continue
                for w in v.witnesses:
                    lines.append(f"    {v.assumption} witness: {w.render()}")
        for n in self.notes:
            lines.append(f"note: {n}")
        lines.append(self.verdict_line())
        return "\n".join(lines) + "\n"


def run_framework(spec: AssumptionSpec) -> FrameworkReport:
    """Run the four-step admissibility workflow on one assumption spec."""
    prep = _prepare(spec)
    raw = prep.raw
    z = raw.treatment
    y = raw.outcome

    assertions = []
    for mod in spec.pattern_mods:
        pid = mod.pattern_id(raw)
        if mod.removed_edges:
            removed = ", ".join(f"{a} -> {b}" for a, b in mod.removed_edges)
            assertions.append(f"pattern {pid}: absent arrows {removed}")
        else:
            assertions.append(f"pattern {pid}: structure unchanged")

    flags = screen_scenarios(raw, spec.pattern_mods)
    decisive = any(f.decisive for f in flags)

    msita = check_msita(spec)
    cit = check_cit(spec)
    cio = check_cio(spec)

    partials = sorted(raw.confounders("partial"))
    if len(partials) > MAX_PARTIALS:
        raise CheckError(f"more than {MAX_PARTIALS} partial confounders")
    mods_by_pid = {mod.pattern_id(raw): mod for mod in spec.pattern_mods}
    cit_by_pid = {v.pattern: v for v in cit}
    cio_by_pid = {v.pattern: v for v in cio}

    patterns: list[PatternReport] = []
    if partials:
        for bits in itertools.product((1, 0), repeat=len(partials)):
            mod_bits = dict(zip(partials, bits))
            pid = PatternModification.build(mod_bits).pattern_id(raw)
            if all(b == 1 for b in bits):
                patterns.append(PatternReport(pattern=pid, assessed=True, trivial=True))
                continue
            if pid in cit_by_pid:
                patterns.append(
                    PatternReport(
                        pattern=pid,
                        assessed=True,
                        trivial=cit_by_pid[pid].trivial,
                        cit=cit_by_pid[pid],
                        cio=cio_by_pid[pid],
                    )
                )
            else:
                patterns.append(PatternReport(pattern=pid, assessed=False))

    all_assessed = all(p.assessed for p in patterns)
    all_pass = all(p.admissible for p in patterns if p.assessed)
    admissible = (not decisive) and msita.holds and all_assessed and all_pass

    route: str | None = None
    if admissible:
        nontrivial = [p for p in patterns if not p.trivial]
        if nontrivial:
            if all(p.cit and p.cit.holds for p in nontrivial):
                route = "CIT"
            elif all(p.cio and p.cio.holds for p in nontrivial):
                route = "CIO"
            else:
                route = "mixed"

    decided_at_step: int | None = None
    if decisive:
        decided_at_step = 2
    elif not msita.holds:
        decided_at_step = 3
    elif not (all_assessed and all_pass):
        decided_at_step = 4

    notes = []
    if prep.twin:
        notes.append(
            "treatment or outcome drives missingness: checks ran on the twin network; "
            "negative verdicts there are not conclusive (incomplete_twin_dsep)"
        )
    unassessed = [p.pattern for p in patterns if not p.assessed]
    if unassessed:
        notes.append(f"patterns without structural assertions: {', '.join(unassessed)}")

    return FrameworkReport(
        treatment=z,
        outcome=y if y is not None else raw.outcome_query_node,
        assertions=tuple(assertions),
        scenario_flags=flags,
        msita=msita,
        patterns=tuple(patterns),
        admissible=admissible,
        route=route,
        decided_at_step=decided_at_step,
        notes=tuple(notes),
    )
