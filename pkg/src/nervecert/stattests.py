"""Acyclicity tests: rank, parametric, quantile-ratio, and standardized-max.

All upper-tail p-values. Rank ties count against rejection, so a tie can
only make a p-value larger, never smaller. The parametric test keeps the
printed moment conventions (mean over the N-1 draws, squared deviations over
N-2) and rejects through the normal CDF; the quantile-ratio statistic is
compared against the Cauchy distribution, optionally doubled for the
empirical-fit variant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import InputError
from .invariants import InvariantTable, log_transform

METHOD_GENERIC = "generic"
METHOD_NORMAL = "normal"
METHOD_LOG_NORMAL = "log_normal"
METHOD_QUANTILE_T = "quantile_t"
METHOD_GLOBAL_Z = "global_z"
METHOD_GLOBAL_LOGZ = "global_logz"
METHOD_GLOBAL_HISTEQ = "global_histeq"

GLOBAL_METHODS = {
    METHOD_GLOBAL_Z: "z_score",
    METHOD_GLOBAL_LOGZ: "log_z_score",
    METHOD_GLOBAL_HISTEQ: "hist_eq",
}
PARAMETRIC_METHODS = (METHOD_GENERIC, METHOD_NORMAL, METHOD_LOG_NORMAL, METHOD_QUANTILE_T)


def normal_cdf(z: float) -> float:
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


def cauchy_cdf(t: float) -> float:
    """CDF of Student's t with one degree of freedom."""
    return 0.5 + math.atan(t) / math.pi


def rank_upper(x: float, sims) -> tuple[int, float]:
    """Rank of x among x plus sims, ties placed above x (conservative).

    p = (N - r + 1) / N with N the total count, so beating every simulation
    gives p = 1/N.
    """
    sims = [float(s) for s in sims]
    if not sims:
        raise InputError("sims must be nonempty")
    n_total = len(sims) + 1
    r = 1 + sum(1 for s in sims if s < x)
    p = (n_total - r + 1) / n_total
    return r, p


def normal_test(x: float, sims, use_log: bool = False) -> dict:
    """Z-score of x against the simulated moments; p through the normal CDF.

    Returns a dict with p, z, mu, s and the count of dropped missing values.
    Raises InputError when fewer than 3 usable simulations remain or the
    spread is zero.
    """
    sims = list(sims)
    if use_log:
        x = log_transform(x)
        sims = [log_transform(v) for v in sims]
    values = [float(v) for v in sims if v is not None]
    dropped = len(sims) - len(values)
    if x is None:
        raise InputError("data value undefined")
    if len(values) < 3:
        raise InputError("need at least 3 defined simulations")
    mu = float(np.mean(values))
    s2 = float(np.sum((np.asarray(values) - mu) ** 2) / (len(values) - 1))
    if s2 <= 0.0:
        raise InputError("degenerate: zero variance in simulations")
    s = math.sqrt(s2)
    z = (float(x) - mu) / s
    return {"p": 1.0 - normal_cdf(z), "z": z, "mu": mu, "s": s, "dropped": dropped}


def quantile_t_test(x: float, sims, sims2, sims3, double: bool = False) -> dict:
    """Ratio of quantile deviations against the Cauchy distribution.

    The rank of x in the first batch picks matching order statistics y, z
    from the other two; T = (x - z)/(y - z). With double=True the statistic
    2T is used (the empirical-fit variant) and flagged in the result.
    """
    values1 = [float(v) for v in sims if v is not None]
    values2 = sorted(float(v) for v in sims2 if v is not None)
    values3 = sorted(float(v) for v in sims3 if v is not None)
    if x is None:
        raise InputError("data value undefined")
    if not values1 or not values2 or not values3:
        raise InputError("need three nonempty simulation batches")
    r, _ = rank_upper(float(x), values1)
    y = values2[min(r, len(values2)) - 1]
    z = values3[min(r, len(values3)) - 1]
    if y == z:
        return {"p": None, "t": None, "r": r, "reason": "undefined statistic: y == z",
                "doubled": double}
    t = (float(x) - z) / (y - z)
    stat = 2.0 * t if double else t
    return {"p": 1.0 - cauchy_cdf(stat), "t": t, "r": r, "doubled": double}


def fwer_adjusted_pvalues(pvals, method: str) -> list:
    """Adjusted p-values for bonferroni, holm (step-down), hochberg (step-up)."""
    ps = [float(p) for p in pvals]
    for p in ps:
        if not (0.0 <= p <= 1.0):
            raise InputError(f"p-value {p} outside [0, 1]")
    k = len(ps)
    if k == 0:
        return []
    order = sorted(range(k), key=lambda i: ps[i])
    adjusted = [0.0] * k
    if method == "bonferroni":
        for i in range(k):
            adjusted[i] = min(1.0, k * ps[i])
    elif method == "holm":
        running = 0.0
        for pos, i in enumerate(order):
            running = max(running, (k - pos) * ps[i])
            adjusted[i] = min(1.0, running)
    elif method == "hochberg":
        running = math.inf
        for pos in range(k - 1, -1, -1):
            i = order[pos]
            running = min(running, (k - pos) * ps[i])
            adjusted[i] = min(1.0, running)
    else:
        raise InputError(f"unknown FWER method {method!r}")
    return adjusted


def fwer_adjust(pvals, method: str, alpha: float) -> list:
    """Per-test reject decisions at family level alpha."""
    return [p <= alpha for p in fwer_adjusted_pvalues(pvals, method)]


@dataclass(frozen=True)
class TestResult:
    method: str
    p_value: float | None
    alpha: float
    rejected: bool
    r: int | None = None
    n_total: int | None = None
    per_simplex: tuple = ()
    sim_scores: tuple = ()
    metadata: dict = field(default_factory=dict)

    def to_json_obj(self) -> dict:
        return {
            "method": self.method,
            "p_value": self.p_value,
            "alpha": self.alpha,
            "rejected": self.rejected,
            "r": self.r,
            "N": self.n_total,
            "per_simplex": [
                {
                    "simplex": list(entry["simplex"]),
                    "hom_dim": entry["hom_dim"],
                    "score_or_p": entry["score_or_p"],
                }
                for entry in self.per_simplex
            ],
            "metadata": self.metadata,
        }


def _fit_z(sims: list) -> tuple[float, float] | None:
    values = [v for v in sims if v is not None]
    if len(values) < 3:
        return None
    mu = float(np.mean(values))
    s2 = float(np.sum((np.asarray(values) - mu) ** 2) / (len(values) - 1))
    if s2 <= 0.0:
        return None
    return mu, math.sqrt(s2)


def _hist_eq_value(v: float, sorted_sims: np.ndarray) -> float:
    # midrank over the simulations, clipped: a CDF value cannot exceed 1, and
    # the clip keeps a data value that beats every simulation tied with the
    # best simulation instead of strictly above it
    n = len(sorted_sims)
    lo = int(np.searchsorted(sorted_sims, v, side="left"))
    hi = int(np.searchsorted(sorted_sims, v, side="right"))
    return min((lo + (hi - lo + 1) / 2.0) / n, 1.0)


def standardize_row(data_value, sim_values, kind: str):
    """Standardized (data, sims) for one row, or (None, reason) when unusable.

    Fit parameters come from the simulations alone; the data value never
    contributes to its own reference distribution. A row with an undefined
    data value still comes back with standardized simulations and data None.
    """
    if kind in ("z_score", "log_z_score"):
        if kind == "log_z_score":
            data_value = log_transform(data_value)
            sim_values = [log_transform(v) for v in sim_values]
        fit = _fit_z(sim_values)
        if fit is None:
            return None, "degenerate or insufficient simulations"
        mu, s = fit
        data_std = None if data_value is None else (data_value - mu) / s
        sims_std = [None if v is None else (v - mu) / s for v in sim_values]
        return (data_std, sims_std), None
    if kind == "hist_eq":
        defined = np.sort(np.asarray([v for v in sim_values if v is not None], dtype=float))
        if len(defined) == 0:
            return None, "no defined simulations"
        data_std = None if data_value is None else _hist_eq_value(float(data_value), defined)
        sims_std = [None if v is None else _hist_eq_value(float(v), defined) for v in sim_values]
        return (data_std, sims_std), None
    raise InputError(f"unknown standardization kind {kind!r}")


def global_test(table: InvariantTable, std_kind: str, alpha: float) -> TestResult:
    """Standardize per row, take per-draw maxima across rows, rank the data max.

    Each simulation index j contributes y_j = max over rows of its
    standardized value; the data contributes x = max over rows. The p-value
    is the conservative upper rank of x among the y_j.
    """
    method = {v: k for k, v in GLOBAL_METHODS.items()}[std_kind]
    n_sims = table.n_sims
    dropped = []
    excluded_data_rows = 0
    row_scores = []  # (simplex, hom_dim, data_std-or-None, sims_std)
    for row in table.rows:
        result, reason = standardize_row(row.data_value, row.sim_values, std_kind)
        if result is None:
            dropped.append({"simplex": list(row.simplex), "hom_dim": row.hom_dim,
                            "reason": reason})
            continue
        data_std, sims_std = result
        if data_std is None:
            excluded_data_rows += 1
        row_scores.append((row.simplex, row.hom_dim, data_std, sims_std))
    data_rows = [t for t in row_scores if t[2] is not None]
    if not data_rows:
        raise InputError("all rows dropped; nothing to test")

    # rows without a defined data value still feed the simulated maxima;
    # dropping them there would deflate the null and inflate the level
    sim_maxima = []
    undefined_draws = 0
    for j in range(n_sims):
        values = [sims[j] for _, _, _, sims in row_scores if sims[j] is not None]
        if not values:
            undefined_draws += 1
            continue
        sim_maxima.append(max(values))
    if not sim_maxima:
        raise InputError("no defined simulation draws")

    x = max(score for _, _, score, _ in data_rows)
    r, p = rank_upper(x, sim_maxima)
    per_simplex = tuple(
        {"simplex": simplex, "hom_dim": hom_dim, "score_or_p": score}
        for simplex, hom_dim, score, _ in sorted(
            data_rows, key=lambda t: -t[2]
        )
    )
    return TestResult(
        method=method,
        p_value=p,
        alpha=alpha,
        rejected=p <= alpha,
        r=r,
        n_total=len(sim_maxima) + 1,
        per_simplex=per_simplex,
        sim_scores=tuple(sim_maxima),
        metadata={
            "standardization": std_kind,
            "invariant": table.kind,
            "dropped_rows": dropped,
            "excluded_data_rows": excluded_data_rows,
            "undefined_draws": undefined_draws,
        },
    )


def parametric_family_test(
    table: InvariantTable,
    method: str,
    alpha: float,
    fwer_method: str = "hochberg",
    quantile_batches: dict | None = None,
    double_t: bool = False,
) -> TestResult:
    """Per-row p-values joined by an FWER correction into one family verdict.

    generic uses the plain rank p per row; normal / log_normal use the
    parametric Z; quantile_t needs two extra simulation batches per row,
    passed as {(simplex, hom_dim): (batch2, batch3)}.
    """
    if method not in PARAMETRIC_METHODS:
        raise InputError(f"unknown parametric method {method!r}")
    dropped = []
    entries = []
    for row in table.rows:
        key = (row.simplex, row.hom_dim)
        try:
            if method == METHOD_GENERIC:
                sims = row.defined_sims()
                if row.data_value is None or not sims:
                    raise InputError("undefined row")
                _, p = rank_upper(row.data_value, sims)
            elif method in (METHOD_NORMAL, METHOD_LOG_NORMAL):
                res = normal_test(row.data_value, row.sim_values,
                                  use_log=method == METHOD_LOG_NORMAL)
                p = res["p"]
            else:
                if quantile_batches is None or key not in quantile_batches:
                    raise InputError("missing quantile batches")
                batch2, batch3 = quantile_batches[key]
                res = quantile_t_test(row.data_value, row.sim_values, batch2, batch3,
                                      double=double_t)
                if res["p"] is None:
                    raise InputError(res["reason"])
                p = res["p"]
        except InputError as exc:
            dropped.append({"simplex": list(row.simplex), "hom_dim": row.hom_dim,
                            "reason": str(exc)})
            continue
        entries.append((row.simplex, row.hom_dim, p))
    if not entries:
        raise InputError("all rows dropped; nothing to test")
    adjusted = fwer_adjusted_pvalues([p for _, _, p in entries], fwer_method)
    rejected_any = any(a <= alpha for a in adjusted)
    per_simplex = tuple(
        {"simplex": simplex, "hom_dim": hom_dim, "score_or_p": p, "adjusted_p": adj}
        for (simplex, hom_dim, p), adj in sorted(
            zip(entries, adjusted), key=lambda t: t[1]
        )
    )
    return TestResult(
        method=method,
        p_value=min(adjusted),
        alpha=alpha,
        rejected=rejected_any,
        per_simplex=per_simplex,
        metadata={
            "fwer": fwer_method,
            "invariant": table.kind,
            "dropped_rows": dropped,
            "family_size": len(entries),
        },
    )
