"""File formats: delimited datasets, TOML configuration, run manifests.

Everything written here is byte-deterministic given the same inputs and
seeds: JSON is dumped with sorted keys, floats are rendered with ``repr``
(shortest round-trip), and no timestamps enter any analytical payload.
Missing values travel as ``NA``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .errors import DataError
from .estimators import COVARIATE_KINDS, METHODS, Covariate, Dataset, ModelSpec
from .graph import parse_graph
from .simulator import Mechanism, ScenarioSpec, SimOutput, scenario_covariates
from .transforms import PatternModification

MISSING_TOKEN = "NA"

# spelled-out and short method names accepted on the command line and in config
METHOD_ALIASES = {
    "crude": "crude",
    "cra": "complete_records",
    "complete_records": "complete_records",
    "mpa": "mpa",
    "mind": "missing_indicator",
    "missing_indicator": "missing_indicator",
}


def resolve_method(name: str) -> str:
    """Canonical estimator name for a config or command-line alias."""
    key = str(name).strip().lower()
    if key not in METHOD_ALIASES:
        raise DataError(
            f"unknown method {name!r}; expected one of {', '.join(sorted(METHOD_ALIASES))}"
        )
    return METHOD_ALIASES[key]


# -- small helpers -----------------------------------------------------------


def sha256_path(path) -> str:
    """Hex sha256 digest of a file's bytes."""
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def dump_json(payload) -> str:
    """Deterministic JSON text: sorted keys, two-space indent, newline at end."""
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def package_version() -> str:
    from importlib.metadata import PackageNotFoundError, version

    try:
        return version("mpatools")
    except PackageNotFoundError:
        return "unknown"


def build_manifest(command: str, inputs=None, params=None) -> dict:
    """Run manifest: command, input digests, parameters, tool version.

    Timestamps stay out on purpose so analytical payloads embedding the
    manifest are byte-identical across reruns with equal inputs and seeds.
    """
    return {
        "command": str(command),
        "inputs": {
            str(name): {"path": str(path), "sha256": sha256_path(path)}
            for name, path in sorted(dict(inputs or {}).items())
        },
        "params": {str(k): v for k, v in sorted(dict(params or {}).items())},
        "tool": {"name": "mpatools", "version": package_version()},
    }


def _table(raw, context: str, allowed: dict):
    """Check a TOML table against allowed keys; return it as a plain dict."""
    if not isinstance(raw, dict):
        raise DataError(f"{context} must be a table")
    unknown = sorted(set(raw) - set(allowed))
    if unknown:
        raise DataError(f"{context} has unknown key(s): {', '.join(unknown)}")
    for key, kinds in allowed.items():
        if key in raw and kinds is not None and not isinstance(raw[key], kinds):
            raise DataError(f"{context}.{key} has the wrong type")
    return dict(raw)


def _load_toml(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise DataError(f"{path}: file not found") from None
    except tomllib.TOMLDecodeError as exc:
        raise DataError(f"{path}: {exc}") from None


# -- estimate configuration --------------------------------------------------


@dataclass(frozen=True)
class EstimateConfig:
    """Parsed estimation configuration: column roles plus model settings."""

    treatment: str
    outcome: str
    covariates: tuple[Covariate, ...]
    spec: ModelSpec


def load_config(path) -> EstimateConfig:
    """Read an estimation config TOML.

    Layout::

        [data]
        treatment = "Z"
        outcome = "Y"

        [[data.covariate]]
        name = "X"
        kind = "continuous"        # binary | categorical | continuous
        observability = "partial"  # optional, default full
        levels = ["a", "b"]        # categorical only; first level = reference

        [model]                    # optional
        terms = [["X"], ["X", "W"]]
        min_pattern_size = 50
        max_iter = 50
        tol = 1e-8

        [method]                   # optional; command-line --method overrides
        name = "mpa"

        [bootstrap]                # optional; --bootstrap/--seed override
        replicates = 500
        seed = 7
        percentile = false
    """
    raw = _table(
        _load_toml(path),
        f"{path}",
        {"data": dict, "model": dict, "method": dict, "bootstrap": dict},
    )
    if "data" not in raw:
        raise DataError(f"{path}: missing [data] table")
    data = _table(
        raw["data"],
        f"{path}: [data]",
        {"treatment": str, "outcome": str, "covariate": list},
    )
    for key in ("treatment", "outcome"):
        if key not in data:
            raise DataError(f"{path}: [data] needs {key!r}")
    covariates = []
    for i, item in enumerate(data.get("covariate", ())):
        cov = _table(
            item,
            f"{path}: [[data.covariate]] #{i + 1}",
            {"name": str, "kind": str, "observability": str, "levels": list},
        )
        for key in ("name", "kind"):
            if key not in cov:
                raise DataError(f"{path}: [[data.covariate]] #{i + 1} needs {key!r}")
        if cov["kind"] not in COVARIATE_KINDS:
            raise DataError(
                f"{path}: covariate {cov['name']!r} has unknown kind {cov['kind']!r}; "
                f"expected one of {', '.join(COVARIATE_KINDS)}"
            )
        covariates.append(
            Covariate(
                cov["name"],
                cov["kind"],
                observability=cov.get("observability", "full"),
                levels=tuple(str(v) for v in cov.get("levels", ())),
            )
        )
    if not covariates:
        raise DataError(f"{path}: [data] declares no covariates")

    model = _table(
        raw.get("model", {}),
        f"{path}: [model]",
        {
            "terms": list,
            "min_pattern_size": int,
            "max_iter": int,
            "tol": (int, float),
            "percentile_ci": bool,
        },
    )
    terms = []
    for j, term in enumerate(model.get("terms", ())):
        if not isinstance(term, list) or not all(isinstance(t, str) for t in term):
            raise DataError(
                f"{path}: [model].terms entry #{j + 1} must be an array of covariate names"
            )
        terms.append(tuple(term))
    method_tbl = _table(raw.get("method", {}), f"{path}: [method]", {"name": str})
    boot = _table(
        raw.get("bootstrap", {}),
        f"{path}: [bootstrap]",
        {"replicates": int, "seed": int, "percentile": bool},
    )
    spec = ModelSpec(
        terms=tuple(terms),
        method=resolve_method(method_tbl.get("name", "mpa")),
        bootstrap=int(boot.get("replicates", 0)),
        seed=int(boot.get("seed", 0)),
        min_pattern_size=int(model.get("min_pattern_size", 50)),
        max_iter=int(model.get("max_iter", 50)),
        tol=float(model.get("tol", 1e-8)),
        percentile_ci=bool(boot.get("percentile", model.get("percentile_ci", False))),
    )
    return EstimateConfig(
        treatment=data["treatment"],
        outcome=data["outcome"],
        covariates=tuple(covariates),
        spec=spec,
    )


def apply_overrides(config: EstimateConfig, method=None, bootstrap=None, seed=None) -> EstimateConfig:
    """Command-line flags win over config file values."""
    spec = config.spec
    if method is not None:
        spec = replace(spec, method=resolve_method(method))
    if bootstrap is not None:
        spec = replace(spec, bootstrap=int(bootstrap))
    if seed is not None:
        spec = replace(spec, seed=int(seed))
    return replace(config, spec=spec)


# -- pattern modification files ----------------------------------------------


def load_pattern_mods(path) -> tuple[PatternModification, ...]:
    """Read pattern assertions from TOML.

    Layout::

        [[pattern]]
        bits = { Ckd = 0, Eth = 0 }
        absent = [["Ckd", "Ace"], ["Eth", "Ace"]]   # optional
    """
    raw = _table(_load_toml(path), f"{path}", {"pattern": list})
    mods = []
    for i, item in enumerate(raw.get("pattern", ())):
        tbl = _table(item, f"{path}: [[pattern]] #{i + 1}", {"bits": dict, "absent": list})
        if "bits" not in tbl:
            raise DataError(f"{path}: [[pattern]] #{i + 1} needs 'bits'")
        removed = []
        for j, edge in enumerate(tbl.get("absent", ())):
            if not (isinstance(edge, list) and len(edge) == 2 and all(isinstance(e, str) for e in edge)):
                raise DataError(
                    f"{path}: [[pattern]] #{i + 1} absent entry #{j + 1} "
                    "must be a two-name array [tail, head]"
                )
            removed.append((edge[0], edge[1]))
        mods.append(PatternModification.build(tbl["bits"], removed))
    if not mods:
        raise DataError(f"{path}: no [[pattern]] entries")
    return tuple(mods)


# -- scenario files -----------------------------------------------------------


def load_scenario(path) -> ScenarioSpec:
    """Read a simulation scenario from TOML.

    Layout::

        name = "custom"
        description = "..."
        ate_mode = "monte_carlo"   # optional

        [graph]
        dag = "dag { X -> Z ... } roles { ... }"   # or dag_file = "g.dag"

        [[mechanism]]
        node = "Z"
        kind = "logistic"          # logistic | gaussian
        intercept = -0.2
        noise_sd = 1.0             # gaussian only
        bands = [-0.8, 0.4]        # gaussian only
        [mechanism.coef]
        X = 1.1
        [mechanism.when_missing.R]
        X = 0.0
    """
    path = Path(path)
    raw = _table(
        _load_toml(path),
        f"{path}",
        {
            "name": str,
            "description": str,
            "ate_mode": str,
            "graph": dict,
            "mechanism": list,
        },
    )
    for key in ("name", "graph"):
        if key not in raw:
            raise DataError(f"{path}: missing {key!r}")
    gtbl = _table(raw["graph"], f"{path}: [graph]", {"dag": str, "dag_file": str})
    if ("dag" in gtbl) == ("dag_file" in gtbl):
        raise DataError(f"{path}: [graph] needs exactly one of 'dag' or 'dag_file'")
    if "dag" in gtbl:
        text = gtbl["dag"]
    else:
        gpath = path.parent / gtbl["dag_file"]
        try:
            text = gpath.read_text(encoding="utf-8")
        except FileNotFoundError:
            raise DataError(f"{path}: dag_file {str(gpath)!r} not found") from None
    graph = parse_graph(text)

    mechanisms = []
    for i, item in enumerate(raw.get("mechanism", ())):
        tbl = _table(
            item,
            f"{path}: [[mechanism]] #{i + 1}",
            {
                "node": str,
                "kind": str,
                "intercept": (int, float),
                "noise_sd": (int, float),
                "bands": list,
                "coef": dict,
                "when_missing": dict,
            },
        )
        for key in ("node", "kind"):
            if key not in tbl:
                raise DataError(f"{path}: [[mechanism]] #{i + 1} needs {key!r}")
        kwargs = {}
        if tbl["kind"] == "gaussian":
            kwargs["noise_sd"] = float(tbl.get("noise_sd", 1.0))
            kwargs["bands"] = tuple(float(b) for b in tbl.get("bands", ()))
        mechanisms.append(
            Mechanism(
                tbl["node"],
                tbl["kind"],
                intercept=float(tbl.get("intercept", 0.0)),
                coef=tbl.get("coef", {}),
                when_missing=tbl.get("when_missing", {}),
                **kwargs,
            )
        )
    spec = ScenarioSpec(
        name=raw["name"],
        graph=graph,
        mechanisms=tuple(mechanisms),
        ate_mode=raw.get("ate_mode", "monte_carlo"),
        description=raw.get("description", ""),
    )
    spec.validate()
    return spec


def scenario_config_text(spec: ScenarioSpec, method: str = "mpa") -> str:
    """Estimation config TOML matching the dataset :func:`generate` emits."""
    lines = [
        "# estimation configuration for datasets simulated from scenario "
        f"{spec.name!r}",
        "[data]",
        f'treatment = "{spec.graph.treatment}"',
        f'outcome = "{spec.graph.outcome}"',
    ]
    for cov in scenario_covariates(spec):
        lines += ["", "[[data.covariate]]", f'name = "{cov.name}"', f'kind = "{cov.kind}"']
        if cov.partial:
            lines.append('observability = "partial"')
        if cov.levels:
            rendered = ", ".join(f'"{level}"' for level in cov.levels)
            lines.append(f"levels = [{rendered}]")
    lines += ["", "[method]", f'name = "{method}"', ""]
    return "\n".join(lines)


# -- delimited data ------------------------------------------------------------


def _format_column(values: np.ndarray) -> list[str]:
    finite = values[~np.isnan(values)]
    integral = finite.size > 0 and np.all(finite == np.round(finite))
    out = []
    for v in values:
        if np.isnan(v):
            out.append(MISSING_TOKEN)
        elif integral:
            out.append(str(int(v)))
        else:
            out.append(repr(float(v)))
    return out


def dataset_text(data: Dataset, treatment: str = "z", outcome: str = "y") -> str:
    """Render a dataset as comma-delimited text with ``NA`` for missing."""
    names = [treatment, outcome] + [c.name for c in data.covariates]
    cols = [_format_column(data.z), _format_column(data.y)]
    cols += [_format_column(data.columns[c.name]) for c in data.covariates]
    lines = [",".join(names)]
    lines += [",".join(row) for row in zip(*cols)]
    return "\n".join(lines) + "\n"


def write_dataset(path, data: Dataset, treatment: str = "z", outcome: str = "y") -> None:
    Path(path).write_text(dataset_text(data, treatment, outcome), encoding="utf-8")


def read_dataset(path, config: EstimateConfig) -> Dataset:
    """Read a delimited dataset using the config's column declarations.

    Requires the treatment, outcome and declared covariate columns;
    ignores any extra columns. ``NA`` or an empty cell is missing.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise DataError(f"{path}: file not found") from None
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    if not lines:
        raise DataError(f"{path}: empty file")
    header = [h.strip() for h in lines[0].split(",")]
    wanted = [config.treatment, config.outcome] + [c.name for c in config.covariates]
    index = {}
    for name in wanted:
        if name not in header:
            raise DataError(f"{path}: missing column {name!r} (header line 1)")
        index[name] = header.index(name)
    n = len(lines) - 1
    if n == 0:
        raise DataError(f"{path}: no data rows")
    raw = {name: np.empty(n) for name in wanted}
    for r, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != len(header):
            raise DataError(
                f"{path}: line {r} has {len(cells)} fields, header has {len(header)}"
            )
        for name in wanted:
            cell = cells[index[name]].strip()
            if cell == MISSING_TOKEN or cell == "":
                raw[name][r - 2] = np.nan
            else:
                try:
                    raw[name][r - 2] = float(cell)
                except ValueError:
                    raise DataError(
                        f"{path}: line {r}, column {name!r}: not a number: {cell!r}"
                    ) from None
    z = raw[config.treatment]
    y = raw[config.outcome]
    columns = {c.name: raw[c.name] for c in config.covariates}
    return Dataset.build(z, y, config.covariates, columns)


# -- oracle sidecar -------------------------------------------------------------


def oracle_text(out: SimOutput) -> str:
    """Render the potential-outcome sidecar of a simulated dataset."""
    head = (
        f"# true_ate={out.true_ate!r} seed={out.seed} n={out.n} clipped={out.clipped}"
    )
    cols = [
        _format_column(out.y0),
        _format_column(out.y1),
        _format_column(out.true_propensity),
    ]
    lines = [head, "y0,y1,true_propensity"]
    lines += [",".join(row) for row in zip(*cols)]
    return "\n".join(lines) + "\n"


def write_oracle(path, out: SimOutput) -> None:
    Path(path).write_text(oracle_text(out), encoding="utf-8")


def read_oracle(path) -> dict:
    """Read an oracle sidecar back into arrays plus its scalar header."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise DataError(f"{path}: file not found") from None
    lines = text.splitlines()
    if len(lines) < 3 or not lines[0].startswith("#"):
        raise DataError(f"{path}: not an oracle sidecar")
    scalars = {}
    for part in lines[0].lstrip("# ").split():
        key, _, value = part.partition("=")
        scalars[key] = float(value)
    header = lines[1].split(",")
    body = [ln.split(",") for ln in lines[2:] if ln]
    arrays = {
        name: np.array([float(row[i]) for row in body])
        for i, name in enumerate(header)
    }
    return {**arrays, **scalars}
