"""End-to-end conjoint pipeline: melt, fit, reduce, and assemble tables."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from ..dataset import Dataset
from ..errors import ValidationError
from .inference import (
    anova_fixed,
    effect_plot_payload,
    ls_means,
    pairwise_differences,
    test_random,
)
from .longform import LongTable, melt
from .reml import FittedLmm, fit_reml
from .terms import ModelSpec, Term, build_terms, term_name

FIXED_REDUCTION_ALPHA = 0.05
RANDOM_ELIMINATION_ALPHA = 0.1


def _json_safe(obj):
    """Map non-finite floats (unbounded df, undefined p) to null for the wire."""
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


@dataclass
class ConjointResult:
    response_name: str
    spec: ModelSpec
    fit: FittedLmm
    random_table: list[dict]
    fixed_table: list[dict]
    lsmeans_table: list[dict]
    pairwise_table: list[dict]
    effect_payloads: dict[str, dict]
    warnings: list[str]

    def to_doc(self) -> dict:
        return _json_safe({
            "response": self.response_name,
            "structure": self.spec.structure,
            "fixed_terms": [term_name(t) for t in self.fit.design.terms],
            "variance_components": self.fit.variance_components,
            "loglik": self.fit.loglik,
            "random_effects": self.random_table,
            "fixed_effects": self.fixed_table,
            "ls_means": self.lsmeans_table,
            "pairwise": self.pairwise_table,
            "effect_plots": self.effect_payloads,
            "warnings": self.warnings,
        })


def _reduce_fixed(
    long: LongTable, spec: ModelSpec, random_terms: list[Term], alpha: float
) -> tuple[FittedLmm, list[dict]]:
    """Marginality-respecting backward elimination of fixed terms.

    Only terms not contained in a retained higher-order interaction are
    eligible; the least significant eligible term above alpha is dropped,
    the model refit, and the sequence recorded in elim_num.
    """
    current = list(spec.fixed_terms)
    elim_rows: dict[Term, dict] = {}
    counter = 1
    while True:
        spec_cur = replace(spec, fixed_terms=current)
        fit = fit_reml(long, spec_cur, random_terms=random_terms)
        stats = {tuple(r["term"].split(":")): r for r in anova_fixed(fit)}
        maximal = [
            t for t in current
            if not any(set(t) < set(u) for u in current if u != t)
        ]
        def pval(t: Term) -> float:
            p = stats[t]["p"]
            return 1.0 if isinstance(p, float) and math.isnan(p) else p
        candidates = [t for t in maximal if pval(t) > alpha]
        if not candidates or len(current) == 1:
            final_rows = []
            for t in spec.fixed_terms:
                if t in current:
                    row = dict(stats[t])
                    row["elim_num"] = 0
                    final_rows.append(row)
                else:
                    final_rows.append(elim_rows[t])
            return fit, final_rows
        drop = max(candidates, key=pval)
        row = dict(stats[drop])
        row["elim_num"] = counter
        elim_rows[drop] = row
        counter += 1
        current.remove(drop)


def run_conjoint(
    liking: Dataset,
    design: Dataset,
    characteristics: Dataset | None,
    design_factors: list[str],
    characteristic_factors: list[str],
    structure: str,
    alpha_random: float = RANDOM_ELIMINATION_ALPHA,
    alpha_fixed: float = FIXED_REDUCTION_ALPHA,
) -> ConjointResult:
    """Fit one conjoint model for one liking dataset and derive all tables."""
    for f in design_factors:
        if f not in design.col_labels:
            raise ValidationError(f"design factor {f!r} not found in {design.name!r}")
    for f in characteristic_factors:
        if characteristics is None or f not in characteristics.col_labels:
            raise ValidationError(f"characteristics factor {f!r} not found")
    long = melt(liking, design, characteristics)
    long = _restrict_factors(long, design_factors + characteristic_factors)
    spec = build_terms(design_factors, characteristic_factors, structure, long.factors)

    fit0 = fit_reml(long, spec)
    random_table, fit_reduced = test_random(fit0, alpha=alpha_random)
    kept_random = fit_reduced.random_terms

    if structure == "struct3":
        fit_final, fixed_table = _reduce_fixed(long, spec, kept_random, alpha_fixed)
    else:
        fit_final = fit_reduced
        fixed_table = anova_fixed(fit_final)

    lsmeans_rows = []
    pairwise_rows = []
    payloads: dict[str, dict] = {}
    for term in fit_final.design.terms:
        lsmeans_rows.extend(ls_means(fit_final, term))
        pairwise_rows.extend(pairwise_differences(fit_final, term))
        if len(term) == 1:
            payloads[f"main:{term[0]}"] = effect_plot_payload(fit_final, term[0])
        elif len(term) == 2:
            payloads[f"interaction:{term[0]}:{term[1]}"] = effect_plot_payload(
                fit_final, term[0], term[1]
            )
    return ConjointResult(
        response_name=liking.name,
        spec=spec,
        fit=fit_final,
        random_table=random_table,
        fixed_table=fixed_table,
        lsmeans_table=lsmeans_rows,
        pairwise_table=pairwise_rows,
        effect_payloads=payloads,
        warnings=list(spec.warnings),
    )


def _restrict_factors(long: LongTable, selected: list[str]) -> LongTable:
    """Keep only the selected factors in the long table."""
    missing = [f for f in selected if f not in long.factors]
    if missing:
        raise ValidationError(f"unknown factors: {', '.join(missing)}")
    return LongTable(
        consumer_ids=long.consumer_ids,
        response=long.response,
        factor_values={f: long.factor_values[f] for f in selected},
        factors={f: long.factors[f] for f in selected},
        consumers=long.consumers,
        n_skipped_missing=long.n_skipped_missing,
    )


LSMEANS_HEADERS = [
    "Model parameter", "Estimate", "Standard Error", "DF", "t-value", "Lower CI", "Upper CI",
]
FIXED_HEADERS = ["Model parameters", "Sum Sq", "Mean Sq", "NumDF", "DenDF", "F.value", "Pr(>F)"]
RANDOM_HEADERS = ["Model parameters", "Chi.sq", "Chi.DF", "p.value"]
PAIRWISE_HEADERS = [
    "Model parameters", "Estimate", "Standard Error", "DF", "t-value",
    "Lower CI", "Upper CI", "p-value", "p-value.adjust",
]


def _num(v, nd=6):
    if v is None or (isinstance(v, float) and not math.isfinite(v)):
        return "NA"
    if isinstance(v, float):
        return f"{v:.{nd}g}"
    return str(v)


def tables_as_csv(result: ConjointResult) -> dict[str, str]:
    """The four result tables in the canonical column layout."""
    factor_names = sorted({f for r in result.lsmeans_table for f in r["levels"]})
    lsm_lines = [",".join(LSMEANS_HEADERS[:1] + factor_names + LSMEANS_HEADERS[1:])]
    for r in result.lsmeans_table:
        lsm_lines.append(",".join(
            [r["label"]]
            + [r["levels"].get(f, "NA") for f in factor_names]
            + [_num(r[k]) for k in ("estimate", "se", "df", "t", "lower", "upper")]
        ))
    fixed_headers = list(FIXED_HEADERS)
    has_elim = any("elim_num" in r for r in result.fixed_table)
    if has_elim:
        fixed_headers.append("elim.num")
    fx_lines = [",".join(fixed_headers)]
    for r in result.fixed_table:
        row = [r["term"]] + [_num(r[k]) for k in ("sum_sq", "mean_sq", "num_df", "den_df", "F", "p")]
        if has_elim:
            row.append(str(r.get("elim_num", 0)))
        fx_lines.append(",".join(row))
    rnd_lines = [",".join(RANDOM_HEADERS)]
    for r in result.random_table:
        rnd_lines.append(",".join(
            [r["term"], _num(r["chisq"]), str(r["chi_df"]), _num(r["p"])]
        ))
    pw_lines = [",".join(PAIRWISE_HEADERS)]
    for r in result.pairwise_table:
        pw_lines.append(",".join(
            [r["contrast"]]
            + [_num(r[k]) for k in ("estimate", "se", "df", "t", "lower", "upper", "p", "p_adjusted")]
        ))
    return {
        "lsmeans": "\n".join(lsm_lines) + "\n",
        "fixed": "\n".join(fx_lines) + "\n",
        "random": "\n".join(rnd_lines) + "\n",
        "pairwise": "\n".join(pw_lines) + "\n",
    }
