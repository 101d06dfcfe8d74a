"""Inference tables derived from a fitted mixed model.

Fixed effects get Type-III F tests with Satterthwaite denominator degrees
of freedom built from estimable marginal contrasts, so factor order and
coding cannot change the results. Random effects get likelihood-ratio
tests with sequential elimination at a configurable error rate.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.stats import chi2
from scipy.stats import f as f_dist
from scipy.stats import t as t_dist

from ..errors import ValidationError
from .longform import LongTable, _level_label
from .reml import FittedLmm, fit_reml
from .terms import ModelSpec, Term, random_term_name, term_name


def _model_factors(fit: FittedLmm) -> list[str]:
    seen: list[str] = []
    for term in fit.design.terms:
        for f in term:
            if f not in seen:
                seen.append(f)
    return seen


def _grid(fit: FittedLmm) -> tuple[list[str], list[dict[str, float]], np.ndarray]:
    """Every combination of the model factors with its model-matrix row."""
    names = _model_factors(fit)
    levels = [fit.long.factors[f].levels for f in names]
    assigns = [dict(zip(names, combo)) for combo in itertools.product(*levels)]
    if not assigns:
        assigns = [{}]
    rows = np.array([fit.design.row(a) for a in assigns])
    return names, assigns, rows


def _require_term(fit: FittedLmm, term: Term) -> Term:
    if term == ():
        return term
    for t in fit.design.terms:
        if set(t) == set(term):
            return t
    raise ValidationError(f"term {term_name(term)} is not in the fixed part of the model")


def _lsmean_contrasts(fit: FittedLmm, term: Term) -> tuple[list[tuple[float, ...]], np.ndarray]:
    """Marginal-mean contrast rows: average the grid over all other factors."""
    names, assigns, rows = _grid(fit)
    if term == ():
        return [()], rows.mean(axis=0, keepdims=True)
    combos = list(itertools.product(*[fit.long.factors[f].levels for f in term]))
    L = np.zeros((len(combos), rows.shape[1]))
    for i, combo in enumerate(combos):
        mask = np.array(
            [all(a[f] == v for f, v in zip(term, combo)) for a in assigns]
        )
        L[i] = rows[mask].mean(axis=0)
    return combos, L


def _combo_label(term: Term, combo: tuple[float, ...]) -> str:
    return " ".join(_level_label(v) for v in combo) if combo else "(overall)"


def ls_means(fit: FittedLmm, term: Term | str) -> list[dict]:
    """Estimated marginal means with Satterthwaite df and 95% CIs."""
    if isinstance(term, str):
        term = (term,)
    term = _require_term(fit, term)
    combos, L = _lsmean_contrasts(fit, term)
    out = []
    for combo, ell in zip(combos, L):
        est = float(ell @ fit.beta)
        se = math.sqrt(float(ell @ fit.beta_cov @ ell))
        df = fit.contrast_df(ell)
        tval = est / se if se > 0 else math.nan
        margin = t_dist.ppf(0.975, df) * se if se > 0 else 0.0
        out.append(
            {
                "term": term_name(term),
                "levels": {f: _level_label(v) for f, v in zip(term, combo)},
                "label": f"{term_name(term)} {_combo_label(term, combo)}".strip(),
                "estimate": est,
                "se": se,
                "df": df,
                "t": tval,
                "lower": est - margin,
                "upper": est + margin,
            }
        )
    return out


def _centering_kron(sizes: list[int]) -> np.ndarray:
    M = np.array([[1.0]])
    for a in sizes:
        C = np.eye(a) - np.ones((a, a)) / a
        M = np.kron(M, C)
    return M


def _term_hypothesis(fit: FittedLmm, term: Term) -> np.ndarray:
    """Orthonormal full-row-rank hypothesis matrix for a Type-III test."""
    combos, M = _lsmean_contrasts(fit, term)
    sizes = [fit.long.factors[f].n_levels for f in term]
    L_full = _centering_kron(sizes) @ M
    q = int(np.prod([a - 1 for a in sizes]))
    _, s, Vt = np.linalg.svd(L_full, full_matrices=False)
    return Vt[:q]


def _f_test(fit: FittedLmm, L: np.ndarray) -> tuple[float, int, float, float]:
    """F statistic, numerator df, Satterthwaite denominator df and p.

    When the Satterthwaite combination degenerates (boundary fits with no
    residual noise), the residual degrees of freedom stand in so the
    p-value stays defined.
    """
    q = L.shape[0]
    Lb = L @ fit.beta
    VL = L @ fit.beta_cov @ L.T
    F = float(Lb @ np.linalg.solve(VL, Lb)) / q
    if q == 1:
        den_df = fit.contrast_df(L[0])
    else:
        lam, P = np.linalg.eigh(VL)
        nus = []
        for i in range(q):
            ell = L.T @ P[:, i]
            nus.append(fit.contrast_df(ell))
        E = sum(nu / (nu - 2.0) for nu in nus if nu > 2.0)
        den_df = 2.0 * E / (E - q) if E > q else math.nan
    if not np.isfinite(den_df) or den_df <= 0:
        den_df = float(fit.n - fit.p)
    p = float(f_dist.sf(F, q, den_df))
    return F, q, den_df, p


def anova_fixed(fit: FittedLmm) -> list[dict]:
    """Type-III tests for every fixed term, in model order.

    Sum Sq uses the ordinary-least-squares metric of the same hypothesis,
    which reproduces the classical ANOVA decomposition on balanced data.
    """
    XtX_inv = np.linalg.inv(fit.core.X.T @ fit.core.X)
    rows = []
    for term in fit.design.terms:
        L = _term_hypothesis(fit, term)
        F, q, den_df, p = _f_test(fit, L)
        Lb = L @ fit.beta
        G = L @ XtX_inv @ L.T
        ss = float(Lb @ np.linalg.solve(G, Lb))
        rows.append(
            {
                "term": term_name(term),
                "sum_sq": ss,
                "mean_sq": ss / q,
                "num_df": q,
                "den_df": den_df,
                "F": F,
                "p": p,
            }
        )
    return rows


def _reml_deviance_no_random(core) -> float:
    beta, *_ = np.linalg.lstsq(core.X, core.y, rcond=None)
    resid = core.y - core.X @ beta
    n, p = core.n, core.p
    sigma2 = float(resid @ resid) / (n - p)
    sign, logdet = np.linalg.slogdet(core.X.T @ core.X)
    return logdet + (n - p) * (1.0 + math.log(2.0 * math.pi * sigma2))


def test_random(
    fit: FittedLmm, alpha: float = 0.1
) -> tuple[list[dict], FittedLmm]:
    """Likelihood-ratio tests with sequential elimination of random terms.

    Each remaining term is re-tested after every drop; the plain consumer
    effect is tested and reported but never eliminated.
    """
    long, spec = fit.long, fit.spec
    current = list(fit.random_terms)
    fit_cur = fit
    last_stats: dict[Term, tuple[float, float]] = {}
    eliminated: list[Term] = []
    while True:
        stats: dict[Term, tuple[float, float]] = {}
        for term in current:
            reduced = [t for t in current if t != term]
            if reduced:
                dev_red = fit_reml(
                    long, spec, random_terms=reduced, precision=fit.precision
                ).deviance
            else:
                dev_red = _reml_deviance_no_random(fit_cur.core)
            chisq = max(0.0, dev_red - fit_cur.deviance)
            pval = float(chi2.sf(chisq, 1))
            stats[term] = (chisq, pval)
            last_stats[term] = (chisq, pval)
        candidates = [t for t in current if t != () and stats[t][1] > alpha]
        if not candidates or current == [()]:
            break
        drop = max(candidates, key=lambda t: stats[t][1])
        current.remove(drop)
        eliminated.append(drop)
        fit_cur = fit_reml(long, spec, random_terms=current, precision=fit.precision)
        if current == [()]:
            break
    ordered = [t for t in fit.random_terms if t != ()] + [()]
    rows = []
    for term in ordered:
        chisq, pval = last_stats.get(term, (math.nan, math.nan))
        rows.append(
            {
                "term": random_term_name(term),
                "chisq": chisq,
                "chi_df": 1,
                "p": pval,
                "eliminated": term in eliminated,
            }
        )
    return rows, fit_cur


def pairwise_differences(fit: FittedLmm, term: Term | str) -> list[dict]:
    """All unordered level-pair contrasts of a term's LS means.

    Adjusted p-values apply the Bonferroni multiplier (number of pairs
    within the term), capped at 1.
    """
    if isinstance(term, str):
        term = (term,)
    term = _require_term(fit, term)
    combos, L = _lsmean_contrasts(fit, term)
    if len(combos) < 2:
        raise ValidationError(f"term {term_name(term)} has fewer than 2 level combinations")
    pairs = list(itertools.combinations(range(len(combos)), 2))
    multiplier = len(pairs)
    rows = []
    for i, j in pairs:
        ell = L[i] - L[j]
        est = float(ell @ fit.beta)
        se = math.sqrt(float(ell @ fit.beta_cov @ ell))
        df = fit.contrast_df(ell)
        tval = est / se if se > 0 else math.nan
        p = float(2.0 * t_dist.sf(abs(tval), df)) if se > 0 else math.nan
        margin = t_dist.ppf(0.975, df) * se if se > 0 else 0.0
        rows.append(
            {
                "term": term_name(term),
                "contrast": f"{term_name(term)} "
                f"{_combo_label(term, combos[i])} - {_combo_label(term, combos[j])}",
                "estimate": est,
                "se": se,
                "df": df,
                "t": tval,
                "lower": est - margin,
                "upper": est + margin,
                "p": p,
                "p_adjusted": min(1.0, p * multiplier) if not math.isnan(p) else math.nan,
            }
        )
    return rows


def effect_plot_payload(fit: FittedLmm, factor_a: str, factor_b: str | None = None) -> dict:
    """Plot series for a main effect or a two-way interaction."""
    if factor_b is None:
        lsm = ls_means(fit, (factor_a,))
        return {
            "kind": "main_effect",
            "factor": factor_a,
            "levels": [r["levels"][factor_a] for r in lsm],
            "estimates": [r["estimate"] for r in lsm],
            "lower": [r["lower"] for r in lsm],
            "upper": [r["upper"] for r in lsm],
        }
    term = _require_term(fit, (factor_a, factor_b))
    lsm = ls_means(fit, term)
    levels_a = fit.long.factors[factor_a].labels()
    levels_b = fit.long.factors[factor_b].labels()
    series = []
    for lb in levels_b:
        pts = [
            r["estimate"]
            for la in levels_a
            for r in lsm
            if r["levels"][factor_a] == la and r["levels"][factor_b] == lb
        ]
        series.append({"label": f"{factor_b}={lb}", "values": pts})
    return {
        "kind": "interaction",
        "x_factor": factor_a,
        "series_factor": factor_b,
        "x_levels": levels_a,
        "series": series,
    }
