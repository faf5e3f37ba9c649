"""Risk-difference estimation under partially missing confounders.

Implements the estimation half of the toolkit: per-pattern propensity
score models (one logistic fit per missingness pattern, each using only
the confounders observed in that pattern), the pooled missing-indicator
variant, plain and complete-records baselines, Hajek-normalized inverse
probability of treatment weighting, standardized-difference balance
diagnostics, and a nonparametric bootstrap whose replicates re-run the
entire fit pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import qr
from scipy.special import expit

from .errors import (
    BootstrapError,
    ConvergenceError,
    DataError,
    EstimationError,
    PatternSizeError,
    PositivityError,
    SingleArmPatternError,
)

COVARIATE_KINDS = ("binary", "categorical", "continuous")
METHODS = ("crude", "complete_records", "mpa", "missing_indicator")

# IRLS defaults: tolerance on the largest score component, iteration cap,
# and the coefficient magnitude treated as divergence toward separation.
DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 50
SEPARATION_BOUND = 15.0

# Normal-approximation 95% interval multiplier for bootstrap CIs.
NORMAL_95 = 1.96

_LABEL_CHARS = set("=:,*")


@dataclass(frozen=True)
class Covariate:
    """Declared covariate: name, measurement kind, and observability.

    Parameters
    ----------
    name : str
        Column name; must not contain label punctuation (``= : , *``).
    kind : str
        One of ``binary``, ``categorical``, ``continuous``.
    observability : str
        ``full`` (never missing) or ``partial`` (missing cells allowed).
    levels : tuple of str
        Level names for categorical covariates; the first is the
        reference level and is omitted from design matrices and balance
        tables. Stored values are integer codes into this tuple.
    """

    name: str
    kind: str
    observability: str = "full"
    levels: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.name or _LABEL_CHARS & set(self.name):
            raise DataError(f"invalid covariate name {self.name!r}")
        if self.kind not in COVARIATE_KINDS:
            raise DataError(f"unknown covariate kind {self.kind!r}")
        if self.observability not in ("full", "partial"):
            raise DataError(f"unknown observability {self.observability!r}")
        object.__setattr__(self, "levels", tuple(self.levels))
        if self.kind == "categorical":
            if len(self.levels) < 2:
                raise DataError(
                    f"categorical covariate {self.name!r} needs >= 2 levels"
                )
            if len(set(self.levels)) != len(self.levels):
                raise DataError(f"duplicate levels on covariate {self.name!r}")
        elif self.levels:
            raise DataError(f"levels only apply to categorical covariates ({self.name!r})")

    @property
    def partial(self) -> bool:
        return self.observability == "partial"


def _as_binary(arr, what: str) -> np.ndarray:
    out = np.asarray(arr, dtype=float)
    if out.ndim != 1:
        raise DataError(f"{what} must be one-dimensional")
    if not np.all(np.isfinite(out)) or not np.all((out == 0) | (out == 1)):
        raise DataError(f"{what} must be fully observed and coded 0/1")
    return out


@dataclass(frozen=True, eq=False)
class Dataset:
    """Rectangular analysis data with nan-coded missing confounder cells.

    ``z`` and ``y`` are fully observed 0/1 vectors. Covariate columns are
    float arrays: binary columns hold 0/1, categorical columns hold level
    codes, continuous columns hold measurements; ``nan`` marks a missing
    cell and is permitted only on partial covariates. The missingness
    pattern of a row is the bit vector of observed-ness over the partial
    covariates in declaration order.
    """

    z: np.ndarray
    y: np.ndarray
    covariates: tuple[Covariate, ...]
    columns: dict[str, np.ndarray]

    @staticmethod
    def build(z, y, covariates, columns) -> "Dataset":
        """Validate and assemble a Dataset.

        Parameters
        ----------
        z, y : array-like
            Treatment and outcome indicators, 0/1, no missing values.
        covariates : sequence of Covariate
            Declarations; order fixes the pattern bit order.
        columns : mapping of str to array-like
            One column per declared covariate.
        """
        z = _as_binary(z, "treatment column")
        y = _as_binary(y, "outcome column")
        n = z.shape[0]
        if y.shape[0] != n:
            raise DataError("treatment and outcome lengths differ")
        if n == 0:
            raise DataError("empty dataset")
        covariates = tuple(covariates)
        names = [c.name for c in covariates]
        if len(set(names)) != len(names):
            raise DataError("duplicate covariate names")
        if set(columns) != set(names):
            missing = set(names) - set(columns)
            extra = set(columns) - set(names)
            raise DataError(
                f"columns do not match declarations (missing {sorted(missing)},"
                f" undeclared {sorted(extra)})"
            )
        clean: dict[str, np.ndarray] = {}
        for cov in covariates:
            v = np.asarray(columns[cov.name], dtype=float)
            if v.shape != (n,):
                raise DataError(f"column {cov.name!r} has wrong length")
            miss = np.isnan(v)
            if miss.any() and not cov.partial:
                raise DataError(
                    f"missing cells on fully observed covariate {cov.name!r}"
                )
            obs = v[~miss]
            if not np.all(np.isfinite(obs)):
                raise DataError(f"non-finite values in column {cov.name!r}")
            if cov.kind == "binary" and not np.all((obs == 0) | (obs == 1)):
                raise DataError(f"binary covariate {cov.name!r} has values outside 0/1")
            if cov.kind == "categorical":
                codes_ok = np.all(obs == np.rint(obs)) and (
                    obs.size == 0 or (obs.min() >= 0 and obs.max() < len(cov.levels))
                )
                if not codes_ok:
                    raise DataError(
                        f"categorical covariate {cov.name!r} has codes outside"
                        f" 0..{len(cov.levels) - 1}"
                    )
            clean[cov.name] = v
        return Dataset(z=z, y=y, covariates=covariates, columns=clean)

    @property
    def n(self) -> int:
        return int(self.z.shape[0])

    def covariate(self, name: str) -> Covariate:
        for cov in self.covariates:
            if cov.name == name:
                return cov
        raise DataError(f"unknown covariate {name!r}")

    @cached_property
    def partial_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.covariates if c.partial)

    @cached_property
    def observed_mask(self) -> np.ndarray:
        """Boolean (n, k) matrix: True where partial covariate i is observed."""
        if not self.partial_names:
            return np.ones((self.n, 0), dtype=bool)
        return np.column_stack(
            [~np.isnan(self.columns[name]) for name in self.partial_names]
        )

    @cached_property
    def pattern_codes(self) -> np.ndarray:
        """Per-row pattern as a packed integer; bit i set when partial i observed."""
        codes = np.zeros(self.n, dtype=np.int64)
        for i in range(len(self.partial_names)):
            codes |= self.observed_mask[:, i].astype(np.int64) << i
        return codes

    def pattern_label(self, code: int) -> str:
        """Human-readable pattern id, e.g. ``R_age=1,R_ckd=0``."""
        if not self.partial_names:
            return "complete"
        return ",".join(
            f"R_{name}={(code >> i) & 1}" for i, name in enumerate(self.partial_names)
        )

    def pattern_observed(self, code: int) -> frozenset:
        """Names of partial covariates observed under a pattern code."""
        return frozenset(
            name for i, name in enumerate(self.partial_names) if (code >> i) & 1
        )

    @cached_property
    def complete_mask(self) -> np.ndarray:
        return self.observed_mask.all(axis=1)

    def take(self, idx) -> "Dataset":
        """Row subset / resample sharing covariate declarations."""
        idx = np.asarray(idx)
        return Dataset(
            z=self.z[idx],
            y=self.y[idx],
            covariates=self.covariates,
            columns={k: v[idx] for k, v in self.columns.items()},
        )


@dataclass(frozen=True)
class ModelSpec:
    """Estimation request: model terms, method, and fitting options.

    ``terms`` lists main effects (covariate names) and interactions
    (tuples of names, expanded as products of the constituent design
    columns); empty means main effects for every declared covariate.
    """

    terms: tuple = ()
    method: str = "mpa"
    bootstrap: int = 0
    seed: int = 0
    min_pattern_size: int = 50
    max_iter: int = DEFAULT_MAX_ITER
    tol: float = DEFAULT_TOL
    percentile_ci: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise EstimationError(
                f"unknown method {self.method!r}; expected one of {METHODS}"
            )
        if self.bootstrap < 0:
            raise EstimationError("bootstrap replicate count must be >= 0")
        if self.min_pattern_size < 1:
            raise EstimationError("min_pattern_size must be >= 1")
        if self.max_iter < 1 or not self.tol > 0:
            raise EstimationError("invalid IRLS options")
        object.__setattr__(self, "terms", tuple(self.terms))


def resolve_terms(data: Dataset, spec: ModelSpec) -> tuple[tuple[str, ...], ...]:
    """Normalize ModelSpec terms to tuples of covariate names.

    Main effects become one-element tuples; an empty spec expands to a
    main effect per declared covariate. Unknown names and duplicate
    terms are rejected.
    """
    raw = spec.terms or tuple(c.name for c in data.covariates)
    out: list[tuple[str, ...]] = []
    for term in raw:
        parts = (term,) if isinstance(term, str) else tuple(term)
        if not parts or not all(isinstance(p, str) for p in parts):
            raise EstimationError(f"malformed model term {term!r}")
        for p in parts:
            data.covariate(p)
        if len(set(parts)) != len(parts):
            raise EstimationError(f"term {term!r} repeats a covariate")
        if parts in out:
            raise EstimationError(f"duplicate model term {term!r}")
        out.append(parts)
    return tuple(out)


def _expand(data: Dataset, name: str, rows: np.ndarray, mind: bool):
    """Design columns for one covariate on the given rows.

    Returns (columns, names). Without ``mind`` the caller must have
    restricted ``rows`` so the covariate is fully observed there. With
    ``mind`` partial covariates gain a ``missing`` level: categorical
    and binary codes get an explicit missing indicator column, and
    continuous values are zero-filled and paired with their indicator.
    """
    cov = data.covariate(name)
    v = data.columns[name][rows]
    miss = np.isnan(v)
    if not (mind and cov.partial):
        if miss.any():
            raise EstimationError(
                f"covariate {name!r} has missing cells inside a fit that"
                " requires it observed"
            )
        if cov.kind == "categorical":
            cols = [(v == code).astype(float) for code in range(1, len(cov.levels))]
            names = [f"{name}={lev}" for lev in cov.levels[1:]]
            return cols, names
        return [v.astype(float)], [name]
    filled = np.where(miss, 0.0, v)
    if cov.kind == "continuous" or cov.kind == "binary":
        cols = [filled, miss.astype(float)]
        names = [name, f"{name}=missing"]
        return cols, names
    cols = [((filled == code) & ~miss).astype(float) for code in range(1, len(cov.levels))]
    names = [f"{name}={lev}" for lev in cov.levels[1:]]
    cols.append(miss.astype(float))
    names.append(f"{name}=missing")
    return cols, names


def design_matrix(data: Dataset, terms, rows=None, mind: bool = False):
    """Expanded numeric design matrix with an intercept column.

    Parameters
    ----------
    data : Dataset
    terms : sequence of tuple of str
        Normalized terms (see resolve_terms). Interaction terms expand
        to products over the cartesian expansion of their constituents.
    rows : array of int, optional
        Row subset; defaults to all rows.
    mind : bool
        Apply the missing-indicator expansion to partial covariates.

    Returns
    -------
    (X, names) : (ndarray, tuple of str)
    """
    if rows is None:
        rows = np.arange(data.n)
    cols: list[np.ndarray] = [np.ones(rows.shape[0])]
    names: list[str] = ["(intercept)"]
    for term in terms:
        parts = [_expand(data, name, rows, mind) for name in term]
        prod_cols = parts[0][0]
        prod_names = parts[0][1]
        for extra_cols, extra_names in parts[1:]:
            prod_cols = [a * b for a in prod_cols for b in extra_cols]
            prod_names = [f"{na}:{nb}" for na in prod_names for nb in extra_names]
        cols.extend(prod_cols)
        names.extend(prod_names)
    return np.column_stack(cols), tuple(names)


def logistic_loglik(X, y, beta) -> float:
    """Binomial log-likelihood at ``beta`` (canonical logit link)."""
    eta = X @ beta
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)))


def logistic_score(X, y, beta) -> np.ndarray:
    """Score vector (gradient of the log-likelihood) at ``beta``."""
    return X.T @ (y - expit(X @ beta))


@dataclass(frozen=True, eq=False)
class LogisticFit:
    """One converged (or separation-flagged) logistic regression."""

    coef: np.ndarray
    names: tuple[str, ...]
    fitted: np.ndarray
    iterations: int
    deviance: float
    converged: bool
    separation: bool
    dropped: tuple[str, ...]


def _drop_aliased(X: np.ndarray, names):
    """Kept-column indices after removing linearly dependent columns.

    Rank is decided by QR with column pivoting on the max-abs-scaled
    matrix; dropped columns are reported by name so callers can surface
    which terms were aliased.
    """
    n, p = X.shape
    scale = np.max(np.abs(X), axis=0)
    nonzero = scale > 0
    scaled = np.where(nonzero, scale, 1.0)
    _, r, piv = qr(X / scaled, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    if diag.size == 0 or diag[0] == 0:
        raise EstimationError("design matrix is identically zero")
    rank = int(np.sum(diag > diag[0] * max(n, p) * np.finfo(float).eps))
    kept = np.sort(piv[:rank])
    kept = kept[nonzero[kept]]
    dropped = tuple(names[j] for j in range(p) if j not in set(kept.tolist()))
    return kept, dropped


def fit_logistic(
    X,
    y,
    names=None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> LogisticFit:
    """Maximum-likelihood logistic regression by IRLS.

    Convergence is declared when the largest absolute score component
    falls below ``tol``. Aliased (linearly dependent) columns are
    dropped up front and recorded. A coefficient exceeding the
    divergence bound raises the separation flag and stops the fit; the
    flagged fit is returned rather than raised.

    Raises
    ------
    EstimationError
        If the design is malformed or has more columns than rows.
    ConvergenceError
        If IRLS fails to converge within ``max_iter`` iterations.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise EstimationError("design and response shapes do not match")
    n, p = X.shape
    if names is None:
        names = tuple(f"x{j}" for j in range(p))
    names = tuple(names)
    if len(names) != p:
        raise EstimationError("column name count does not match design")
    if n < p:
        raise EstimationError(f"design has more columns than rows (p={p}, n={n})")
    kept, dropped = _drop_aliased(X, names)
    Xk = X[:, kept]
    kept_names = tuple(names[j] for j in kept)
    beta = np.zeros(Xk.shape[1])
    converged = False
    separation = False
    iterations = 0
    for _ in range(max_iter):
        prob = expit(Xk @ beta)
        score = Xk.T @ (y - prob)
        if np.max(np.abs(score), initial=0.0) < tol:
            converged = True
            break
        w = np.maximum(prob * (1.0 - prob), 1e-10)
        hess = Xk.T @ (Xk * w[:, None])
        try:
            step = np.linalg.solve(hess, score)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError(
                "IRLS weighted design became singular; model is not estimable"
            ) from exc
        beta = beta + step
        iterations += 1
        if np.max(np.abs(beta)) > SEPARATION_BOUND:
            separation = True
            break
    if not converged and not separation:
        raise ConvergenceError(
            f"IRLS did not converge in {max_iter} iterations"
            f" (max |score| = {np.max(np.abs(score)):.3e})"
        )
    eta = Xk @ beta
    fitted = expit(eta)
    deviance = 2.0 * float(np.sum(np.logaddexp(0.0, eta) - y * eta))
    return LogisticFit(
        coef=beta,
        names=kept_names,
        fitted=fitted,
        iterations=iterations,
        deviance=deviance,
        converged=converged,
        separation=separation,
        dropped=dropped,
    )


@dataclass(frozen=True, eq=False)
class PatternFit:
    """Diagnostics for one per-pattern (or pooled) propensity model."""

    label: str
    n: int
    treated: int
    names: tuple[str, ...]
    coef: np.ndarray
    iterations: int
    deviance: float
    converged: bool
    separation: bool
    dropped: tuple[str, ...]

    def to_payload(self) -> dict:
        return {
            "pattern": self.label,
            "n": self.n,
            "treated": self.treated,
            "terms": list(self.names),
            "coef": [float(c) for c in self.coef],
            "iterations": self.iterations,
            "deviance": self.deviance,
            "converged": self.converged,
            "separation": self.separation,
            "dropped": list(self.dropped),
        }


@dataclass(frozen=True, eq=False)
class PropensityFit:
    """Rowwise generalized propensity scores plus per-model diagnostics.

    Every row's score comes from the model fitted to its own
    missingness pattern (a single pooled model for the
    missing-indicator variant).
    """

    method: str
    scores: np.ndarray
    patterns: tuple[PatternFit, ...]

    @property
    def separation_any(self) -> bool:
        return any(p.separation for p in self.patterns)

    def to_payload(self) -> dict:
        return {
            "method": self.method,
            "patterns": [p.to_payload() for p in self.patterns],
            "separation": self.separation_any,
        }


def _check_patterns(data: Dataset, min_pattern_size: int):
    """Occupied pattern codes, complete pattern first; size/arm guards."""
    codes, counts = np.unique(data.pattern_codes, return_counts=True)
    order = np.argsort(codes)[::-1]
    codes, counts = codes[order], counts[order]
    for code, count in zip(codes, counts):
        label = data.pattern_label(int(code))
        if count < min_pattern_size:
            raise PatternSizeError(
                f"pattern {label} has {int(count)} rows"
                f" (min_pattern_size is {min_pattern_size})"
            )
        rows = data.pattern_codes == code
        treated = int(data.z[rows].sum())
        if treated == 0 or treated == int(rows.sum()):
            raise SingleArmPatternError(
                f"pattern {label} contains only"
                f" {'treated' if treated else 'control'} rows"
            )
    return codes


def _fit_pattern(data, rows, terms, spec, label):
    X, names = design_matrix(data, terms, rows=rows)
    try:
        fit = fit_logistic(X, data.z[rows], names=names, tol=spec.tol, max_iter=spec.max_iter)
    except EstimationError as exc:
        raise type(exc)(f"pattern {label}: {exc}") from exc
    return fit


def mpa_propensity(data: Dataset, spec: ModelSpec) -> PropensityFit:
    """Per-pattern propensity scores.

    Fits a separate logistic model to each occupied missingness
    pattern, including only the terms whose covariates are observed in
    that pattern (intercept-only when nothing is observed), and
    assembles the per-row score from the row's own pattern model.
    """
    terms = resolve_terms(data, spec)
    codes = _check_patterns(data, spec.min_pattern_size)
    scores = np.full(data.n, np.nan)
    fits: list[PatternFit] = []
    for code in codes:
        label = data.pattern_label(int(code))
        rows = np.flatnonzero(data.pattern_codes == code)
        observed = data.pattern_observed(int(code))
        usable = tuple(
            t
            for t in terms
            if all(not data.covariate(c).partial or c in observed for c in t)
        )
        fit = _fit_pattern(data, rows, usable, spec, label)
        scores[rows] = fit.fitted
        fits.append(
            PatternFit(
                label=label,
                n=rows.size,
                treated=int(data.z[rows].sum()),
                names=fit.names,
                coef=fit.coef,
                iterations=fit.iterations,
                deviance=fit.deviance,
                converged=fit.converged,
                separation=fit.separation,
                dropped=fit.dropped,
            )
        )
    return PropensityFit(method="mpa", scores=scores, patterns=tuple(fits))


def missing_indicator_propensity(data: Dataset, spec: ModelSpec) -> PropensityFit:
    """Pooled missing-indicator propensity scores.

    One logistic fit on all rows: categorical and binary partial
    covariates gain an explicit ``missing`` level, continuous partial
    covariates are zero-filled and paired with their missingness
    indicator.
    """
    terms = resolve_terms(data, spec)
    _check_patterns(data, spec.min_pattern_size)
    X, names = design_matrix(data, terms, mind=True)
    fit = fit_logistic(X, data.z, names=names, tol=spec.tol, max_iter=spec.max_iter)
    pooled = PatternFit(
        label="pooled",
        n=data.n,
        treated=int(data.z.sum()),
        names=fit.names,
        coef=fit.coef,
        iterations=fit.iterations,
        deviance=fit.deviance,
        converged=fit.converged,
        separation=fit.separation,
        dropped=fit.dropped,
    )
    return PropensityFit(
        method="missing_indicator", scores=fit.fitted, patterns=(pooled,)
    )


def iptw_ate(y, z, e) -> float:
    """Hajek-normalized IPTW risk difference.

    Evaluates the weighted difference of outcome means with weights
    z/e and (1-z)/(1-e), each arm normalized by its own weight total.
    Scores must lie strictly inside (0, 1).
    """
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    e = np.asarray(e, dtype=float)
    if not (y.shape == z.shape == e.shape) or y.ndim != 1:
        raise EstimationError("y, z, e must be equal-length vectors")
    bad = ~np.isfinite(e) | (e <= 0.0) | (e >= 1.0)
    if bad.any():
        where = np.flatnonzero(bad)[:10].tolist()
        raise PositivityError(
            f"propensity scores outside (0,1) at rows {where}"
            + ("..." if bad.sum() > 10 else "")
        )
    w1 = z / e
    w0 = (1.0 - z) / (1.0 - e)
    s1 = w1.sum()
    s0 = w0.sum()
    if s1 == 0 or s0 == 0:
        raise EstimationError("a treatment arm is empty")
    return float((y * w1).sum() / s1 - (y * w0).sum() / s0)


@dataclass(frozen=True)
class BalanceRow:
    """One standardized-difference entry (percent scale)."""

    covariate: str
    level: str
    value: float
    degenerate: bool = False

    def to_payload(self) -> dict:
        return {
            "covariate": self.covariate,
            "level": self.level,
            "standardized_difference": self.value,
            "degenerate": self.degenerate,
        }


@dataclass(frozen=True)
class BalanceTable:
    """Per-covariate-level standardized differences between arms."""

    rows: tuple[BalanceRow, ...]

    def imbalanced(self, threshold: float = 10.0) -> tuple[BalanceRow, ...]:
        """Rows whose standardized difference exceeds the threshold."""
        return tuple(r for r in self.rows if r.value > threshold)

    @property
    def max_value(self) -> float:
        return max((r.value for r in self.rows), default=0.0)

    def to_payload(self) -> list:
        return [r.to_payload() for r in self.rows]


def _weighted_moments(v, w):
    total = w.sum()
    if total <= 0:
        return np.nan, np.nan
    m = float((w * v).sum() / total)
    var = float((w * (v - m) ** 2).sum() / total)
    return m, var


def _smd(v, z, w, arm_masks=None):
    """Standardized difference of one numeric column, percent scale."""
    if arm_masks is None:
        arm_masks = (z == 1, z == 0)
    m1, v1 = _weighted_moments(v[arm_masks[0]], w[arm_masks[0]])
    m0, v0 = _weighted_moments(v[arm_masks[1]], w[arm_masks[1]])
    if np.isnan(m1) or np.isnan(m0):
        return 0.0, True
    denom = np.sqrt((v1 + v0) / 2.0)
    if denom == 0.0:
        return 0.0, True
    return float(100.0 * abs(m1 - m0) / denom), False


def standardized_differences(data: Dataset, weights=None) -> BalanceTable:
    """Between-arm balance diagnostics.

    For categorical and binary covariates each non-reference level gets
    a row (missing cells of partial covariates form their own level);
    continuous covariates get a mean-difference row over observed cells
    plus, when partial, a row for the missingness rate itself. Values
    are 100|m1 - m0| / sqrt((v1 + v0)/2) with weighted means and
    population-style weighted variances; degenerate (zero-variance)
    comparisons report 0 and are flagged.
    """
    if weights is None:
        w = np.ones(data.n)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != (data.n,) or not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise EstimationError("weights must be positive and finite, one per row")
    rows: list[BalanceRow] = []
    for cov in data.covariates:
        v = data.columns[cov.name]
        miss = np.isnan(v)
        if cov.kind == "continuous":
            obs1 = (data.z == 1) & ~miss
            obs0 = (data.z == 0) & ~miss
            value, degen = _smd(np.where(miss, 0.0, v), data.z, w, (obs1, obs0))
            rows.append(BalanceRow(cov.name, "", value, degen))
        else:
            levels = cov.levels if cov.kind == "categorical" else ("0", "1")
            for code, level in enumerate(levels):
                if code == 0:
                    continue  # reference level omitted
                ind = np.where(miss, 0.0, (v == code).astype(float))
                value, degen = _smd(ind, data.z, w)
                rows.append(BalanceRow(cov.name, level, value, degen))
        if cov.partial:
            value, degen = _smd(miss.astype(float), data.z, w)
            rows.append(BalanceRow(cov.name, "missing", value, degen))
    return BalanceTable(rows=tuple(rows))


@dataclass(frozen=True, eq=False)
class AteResult:
    """Risk-difference estimate with bootstrap inference and balance."""

    method: str
    estimate: float
    se: float
    ci_low: float
    ci_high: float
    n_used: int
    b_requested: int
    b_failed: int
    balance_before: BalanceTable
    balance_after: BalanceTable | None
    propensity: PropensityFit | None
    percentile: tuple[float, float] | None = None

    def to_payload(self) -> dict:
        out = {
            "method": self.method,
            "estimate": self.estimate,
            "se": self.se,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "n_used": self.n_used,
            "bootstrap": {"requested": self.b_requested, "failed": self.b_failed},
            "balance_before": self.balance_before.to_payload(),
            "balance_after": (
                None if self.balance_after is None else self.balance_after.to_payload()
            ),
            "propensity": None if self.propensity is None else self.propensity.to_payload(),
        }
        if self.percentile is not None:
            out["percentile_ci"] = list(self.percentile)
        return out


def _crude(data: Dataset) -> float:
    t = data.z == 1
    if not t.any() or t.all():
        raise EstimationError("a treatment arm is empty")
    return float(data.y[t].mean() - data.y[~t].mean())


def _point_estimate(data: Dataset, spec: ModelSpec):
    """One full pipeline pass: (estimate, weights, used_data, propensity)."""
    if spec.method == "crude":
        return _crude(data), None, data, None
    if spec.method == "complete_records":
        sub = data.take(np.flatnonzero(data.complete_mask))
        if sub.n == 0:
            raise EstimationError("no complete records")
        terms = resolve_terms(sub, spec)
        X, names = design_matrix(sub, terms)
        fit = fit_logistic(X, sub.z, names=names, tol=spec.tol, max_iter=spec.max_iter)
        pooled = PatternFit(
            label="complete_records",
            n=sub.n,
            treated=int(sub.z.sum()),
            names=fit.names,
            coef=fit.coef,
            iterations=fit.iterations,
            deviance=fit.deviance,
            converged=fit.converged,
            separation=fit.separation,
            dropped=fit.dropped,
        )
        prop = PropensityFit(
            method="complete_records", scores=fit.fitted, patterns=(pooled,)
        )
        ate = iptw_ate(sub.y, sub.z, prop.scores)
    elif spec.method == "mpa":
        sub = data
        prop = mpa_propensity(data, spec)
        ate = iptw_ate(data.y, data.z, prop.scores)
    else:
        sub = data
        prop = missing_indicator_propensity(data, spec)
        ate = iptw_ate(data.y, data.z, prop.scores)
    weights = sub.z / prop.scores + (1.0 - sub.z) / (1.0 - prop.scores)
    return ate, weights, sub, prop


def estimate_ate(data: Dataset, spec: ModelSpec) -> AteResult:
    """Estimate the risk difference by the requested method.

    With ``spec.bootstrap`` > 0, resamples rows with replacement and
    re-runs the full fit pipeline per replicate on an independent
    deterministic substream derived from (seed, replicate index);
    failed replicates are dropped and counted, and more than 5%
    failures aborts. The confidence interval is the Normal
    approximation: estimate +/- 1.96 times the replicate standard
    deviation.
    """
    estimate, weights, used, prop = _point_estimate(data, spec)
    balance_before = standardized_differences(data)
    balance_after = (
        None if weights is None else standardized_differences(used, weights)
    )
    se = float("nan")
    ci_low = float("nan")
    ci_high = float("nan")
    percentile = None
    b_failed = 0
    if spec.bootstrap > 0:
        values = []
        first_failure = None
        for r in range(spec.bootstrap):
            rng = np.random.default_rng([spec.seed, r])
            idx = rng.integers(0, data.n, data.n)
            try:
                value, _, _, _ = _point_estimate(data.take(idx), spec)
            except EstimationError as exc:
                b_failed += 1
                if first_failure is None:
                    first_failure = str(exc)
                continue
            values.append(value)
        if b_failed > 0.05 * spec.bootstrap:
            raise BootstrapError(
                f"{b_failed}/{spec.bootstrap} bootstrap replicates failed (> 5%);"
                f" first failure: {first_failure}"
            )
        if len(values) < 2:
            raise BootstrapError("too few successful bootstrap replicates")
        arr = np.asarray(values)
        se = float(arr.std(ddof=1))
        ci_low = estimate - NORMAL_95 * se
        ci_high = estimate + NORMAL_95 * se
        if spec.percentile_ci:
            lo, hi = np.percentile(arr, [2.5, 97.5])
            percentile = (float(lo), float(hi))
    return AteResult(
        method=spec.method,
        estimate=estimate,
        se=se,
        ci_low=ci_low,
        ci_high=ci_high,
        n_used=used.n,
        b_requested=spec.bootstrap,
        b_failed=b_failed,
        balance_before=balance_before,
        balance_after=balance_after,
        propensity=prop,
        percentile=percentile,
    )
