"""Command-line entry point: ``mpa check | estimate | simulate | paths``.

Exit codes: 0 = success (for ``check``: method admissible), 2 = method
inadmissible (``check`` only, so pipelines can branch on the verdict),
1 = any operational error (parse failures, unknown scenarios, estimator
guard rails).

All analytical output is byte-deterministic given equal inputs and
seeds; the wall-clock timestamp goes to standard error only.
"""

from __future__ import annotations

import argparse
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import io as mio
from .checker import AssumptionSpec, run_framework
from .dsep import list_paths, render_statement
from .errors import MpaError
from .estimators import AteResult, estimate_ate
from .graph import parse_graph
from .simulator import generate, scenario

FORMATS = ("text", "json")


class _Parser(argparse.ArgumentParser):
    # usage errors must exit 1: this tool reserves exit 2 for "inadmissible"
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _split_names(values) -> tuple[str, ...]:
    out: list[str] = []
    for chunk in values or ():
        out.extend(name for name in (p.strip() for p in chunk.split(",")) if name)
    return tuple(out)


def _read_graph(graph_path, roles=None):
    """Parse the graph file, appending a roles block given inline or as a file."""
    try:
        text = Path(graph_path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise MpaError(f"{graph_path}: file not found") from None
    inputs = {"graph": graph_path}
    if roles is not None:
        if Path(roles).is_file():
            text = text + "\n" + Path(roles).read_text(encoding="utf-8")
            inputs["roles"] = roles
        else:
            text = text + "\n" + roles
    return parse_graph(text), inputs


def _emit(text: str, out_path) -> None:
    sys.stdout.write(text)
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")


def _manifest_text(manifest: dict) -> str:
    lines = ["run manifest"]
    lines.append(f"  command  {manifest['command']}")
    for name, entry in sorted(manifest["inputs"].items()):
        lines.append(f"  input    {name}: sha256 {entry['sha256']} ({entry['path']})")
    for key, value in sorted(manifest["params"].items()):
        lines.append(f"  param    {key} = {value}")
    tool = manifest["tool"]
    lines.append(f"  tool     {tool['name']} {tool['version']}")
    return "\n".join(lines) + "\n"


# -- check ---------------------------------------------------------------------


def cmd_check(args) -> int:
    graph, inputs = _read_graph(args.graph, args.roles)
    mods = mio.load_pattern_mods(args.mods) if args.mods else ()
    if args.mods:
        inputs["mods"] = args.mods
    cond = _split_names(args.condition_on)
    report = run_framework(
        AssumptionSpec(graph, pattern_mods=mods, extra_conditioning=cond)
    )
    manifest = mio.build_manifest(
        "check", inputs, {"condition_on": list(cond), "format": args.format}
    )
    if args.format == "json":
        payload = {
            "manifest": manifest,
            "report": report.to_payload(),
            "narrative": report.narrative(),
        }
        _emit(mio.dump_json(payload), args.out)
    else:
        _emit(report.narrative() + "\n" + _manifest_text(manifest), args.out)
    return 0 if report.admissible else 2


# -- estimate --------------------------------------------------------------------


def _fmt_ci(low: float, high: float, scale: float = 1.0, digits: int = 4) -> str:
    return f"{scale * low:.{digits}f} to {scale * high:.{digits}f}"


def _render_balance(result: AteResult) -> list[str]:
    before = result.balance_before
    after = result.balance_after
    lines = [
        "covariate balance (standardized differences, %)",
        f"  {'covariate':<20} {'level':<12} {'unweighted':>10} {'weighted':>10}",
    ]
    after_rows = {
        (r.covariate, r.level): r for r in (after.rows if after is not None else ())
    }
    for row in before.rows:
        raw = "n/a" if row.degenerate else f"{row.value:.1f}"
        mate = after_rows.get((row.covariate, row.level))
        if mate is None:
            wtd = "-"
        elif mate.degenerate:
            wtd = "n/a"
        else:
            wtd = f"{mate.value:.1f}"
        lines.append(f"  {row.covariate:<20} {row.level:<12} {raw:>10} {wtd:>10}")
    def flag_line(kind, table):
        names = [
            f"{r.covariate}[{r.level}]" if r.level else r.covariate
            for r in table.imbalanced()
        ]
        return f"  {kind} imbalance > 10%: {', '.join(names) or 'none'}"

    lines.append(flag_line("unweighted", before))
    if after is not None:
        lines.append(flag_line("weighted", after))
    return lines


def _render_estimate(result: AteResult) -> str:
    lines = [
        f"risk-difference estimate (method: {result.method})",
        f"  {'rows used':<24} {result.n_used}",
        f"  {'risk difference':<24} {result.estimate:.4f}",
        f"  {'per 1000 patients':<24} {1000.0 * result.estimate:.2f}",
    ]
    if result.b_requested > 0:
        lines.append(
            f"  {'bootstrap':<24} B={result.b_requested}, failed={result.b_failed}"
        )
        lines.append(f"  {'bootstrap SE':<24} {result.se:.4f}")
        lines.append(f"  {'95% CI':<24} {_fmt_ci(result.ci_low, result.ci_high)}")
        lines.append(
            f"  {'95% CI per 1000':<24} "
            f"{_fmt_ci(result.ci_low, result.ci_high, scale=1000.0, digits=2)}"
        )
        if result.percentile is not None:
            lines.append(
                f"  {'percentile 95% CI':<24} {_fmt_ci(*result.percentile)}"
            )
    lines.append("")
    lines.extend(_render_balance(result))
    if result.propensity is not None:
        lines.append("")
        lines.append(f"propensity models ({result.propensity.method})")
        lines.append(f"  {'pattern':<24} {'n':>8} {'treated':>8}  notes")
        for fit in result.propensity.patterns:
            notes = []
            if not fit.converged:
                notes.append("not converged")
            if fit.separation:
                notes.append("separation suspected")
            if fit.dropped:
                notes.append(f"dropped: {', '.join(fit.dropped)}")
            lines.append(
                f"  {fit.label:<24} {fit.n:>8} {fit.treated:>8}  {'; '.join(notes) or '-'}"
            )
    return "\n".join(lines) + "\n"


def cmd_estimate(args) -> int:
    config = mio.load_config(args.config)
    config = mio.apply_overrides(
        config, method=args.method, bootstrap=args.bootstrap, seed=args.seed
    )
    data = mio.read_dataset(args.data, config)
    result = estimate_ate(data, config.spec)
    manifest = mio.build_manifest(
        "estimate",
        {"config": args.config, "data": args.data},
        {
            "method": config.spec.method,
            "bootstrap": config.spec.bootstrap,
            "seed": config.spec.seed,
            "format": args.format,
        },
    )
    if args.format == "json":
        payload = {"manifest": manifest, "result": result.to_payload()}
        _emit(mio.dump_json(payload), args.out)
    else:
        _emit(_render_estimate(result) + "\n" + _manifest_text(manifest), args.out)
    return 0


# -- simulate --------------------------------------------------------------------


def cmd_simulate(args) -> int:
    inputs = {}
    if args.scenario.endswith(".toml") or Path(args.scenario).is_file():
        spec = mio.load_scenario(args.scenario)
        inputs["scenario"] = args.scenario
    else:
        spec = scenario(args.scenario)
    sim = generate(spec, args.n, seed=args.seed)

    prefix = Path(args.out)
    data_path = prefix.with_name(prefix.name + ".csv")
    oracle_path = prefix.with_name(prefix.name + ".oracle.csv")
    manifest_path = prefix.with_name(prefix.name + ".manifest.json")
    config_path = prefix.with_name(prefix.name + ".config.toml")

    mio.write_dataset(
        data_path, sim.dataset, treatment=spec.graph.treatment, outcome=spec.graph.outcome
    )
    mio.write_oracle(oracle_path, sim)
    config_path.write_text(mio.scenario_config_text(spec), encoding="utf-8")
    manifest = mio.build_manifest(
        "simulate",
        inputs,
        {"scenario": spec.name, "n": args.n, "seed": args.seed},
    )
    manifest_path.write_text(mio.dump_json(manifest), encoding="utf-8")

    codes, counts = np.unique(sim.dataset.pattern_codes, return_counts=True)
    occupancy = [
        (sim.dataset.pattern_label(int(c)), int(k))
        for c, k in sorted(zip(codes, counts), reverse=True)
    ]
    if args.format == "json":
        payload = {
            "manifest": manifest,
            "scenario": spec.name,
            "n": sim.n,
            "seed": sim.seed,
            "true_ate": sim.true_ate,
            "clipped": sim.clipped,
            "patterns": [{"pattern": p, "rows": k} for p, k in occupancy],
            "files": {
                "data": str(data_path),
                "oracle": str(oracle_path),
                "config": str(config_path),
                "manifest": str(manifest_path),
            },
        }
        sys.stdout.write(mio.dump_json(payload))
    else:
        lines = [
            f"scenario {spec.name}: n={sim.n}, seed={sim.seed}",
            f"  true risk difference    {sim.true_ate:.6f}",
            f"  per 1000 patients       {1000.0 * sim.true_ate:.2f}",
            f"  propensity rows clipped {sim.clipped}",
            "  occupied patterns",
        ]
        lines.extend(f"    {p:<24} {k}" for p, k in occupancy)
        lines.append("  files written")
        for path in (data_path, oracle_path, config_path, manifest_path):
            lines.append(f"    {path}")
        sys.stdout.write("\n".join(lines) + "\n")
    return 0


# -- paths -----------------------------------------------------------------------


def cmd_paths(args) -> int:
    graph, inputs = _read_graph(args.graph, args.roles)
    cond = _split_names(args.condition_on)
    reports = list_paths(graph, args.source, args.target, cond)
    separated = not any(r.is_open for r in reports)
    manifest = mio.build_manifest(
        "paths",
        inputs,
        {
            "from": args.source,
            "to": args.target,
            "given": list(cond),
            "format": args.format,
        },
    )
    statement = render_statement(args.source, args.target, cond)
    if args.format == "json":
        payload = {
            "manifest": manifest,
            "statement": statement,
            "separated": separated,
            "paths": [
                {
                    "nodes": list(r.nodes),
                    "arrows": list(r.arrows),
                    "open": r.is_open,
                    "rendered": r.render(),
                }
                for r in reports
            ],
        }
        _emit(mio.dump_json(payload), args.out)
        return 0
    lines = [statement]
    if not reports:
        lines.append(f"no paths between {args.source} and {args.target}")
    else:
        lines.extend(f"  {r.render()}" for r in reports)
    lines.append(f"d-separated: {'yes' if separated else 'no'}")
    _emit("\n".join(lines) + "\n" + _manifest_text(manifest), args.out)
    return 0


# -- wiring ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="mpa",
        description=(
            "Assess and apply per-pattern propensity weighting for causal "
            "effect estimation with partially missing confounders."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add_common(p, graph=False):
        if graph:
            p.add_argument("--graph", required=True, help="graph DSL file")
            p.add_argument(
                "--roles",
                help="roles block to append: a file path or inline DSL text",
            )
            p.add_argument(
                "--condition-on",
                action="append",
                metavar="NAMES",
                help="extra conditioning variables (comma separated, repeatable)",
            )
        p.add_argument("--out", help="also write the output to this file")
        p.add_argument("--format", choices=FORMATS, default="text")

    p = sub.add_parser("check", help="run the admissibility workflow on a graph")
    add_common(p, graph=True)
    p.add_argument("--mods", help="per-pattern structural assertions (TOML)")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("estimate", help="estimate the risk difference from a dataset")
    p.add_argument("--data", required=True, help="comma-delimited dataset (NA = missing)")
    p.add_argument("--config", required=True, help="estimation config (TOML)")
    p.add_argument(
        "--method",
        help="override the configured method: crude, cra, mpa, or mind",
    )
    p.add_argument("--bootstrap", type=int, help="bootstrap replicate count")
    p.add_argument("--seed", type=int, help="bootstrap seed")
    add_common(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("simulate", help="simulate a dataset with known truth")
    p.add_argument("scenario", help="scenario name or scenario TOML file")
    p.add_argument("--n", type=int, default=1000, help="rows to draw")
    p.add_argument("--seed", type=int, default=0, help="simulation seed")
    p.add_argument("--out", required=True, help="output path prefix")
    p.add_argument("--format", choices=FORMATS, default="text")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("paths", help="list undirected paths and their block status")
    p.add_argument("source", help="path start node")
    p.add_argument("target", help="path end node")
    add_common(p, graph=True)
    p.set_defaults(func=cmd_paths)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        code = args.func(args)
    except MpaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(
        f"# finished at {datetime.now(timezone.utc).isoformat(timespec='seconds')}",
        file=sys.stderr,
    )
    return code


if __name__ == "__main__":
    raise SystemExit(main())
