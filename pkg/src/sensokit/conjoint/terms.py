"""Fixed/random term enumeration for the three conjoint model structures."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from ..errors import ValidationError
from .longform import CONSUMER, Factor

Term = tuple[str, ...]  # fixed factor names; () is the intercept / plain consumer

MAX_RECOMMENDED_FACTORS = 4
MAX_RECOMMENDED_LEVELS = 6


def term_name(term: Term) -> str:
    return ":".join(term) if term else "(Intercept)"


def random_term_name(term: Term) -> str:
    return f"{':'.join(term)}:{CONSUMER}" if term else CONSUMER


@dataclass
class ModelSpec:
    structure: str  # "struct1" | "struct2" | "struct3"
    fixed_terms: list[Term]
    random_terms: list[Term]  # interpreted as Consumer x term; () = plain Consumer
    warnings: list[str] = field(default_factory=list)


def build_terms(
    design_factors: list[str],
    characteristic_factors: list[str],
    structure: str,
    factors: dict[str, Factor] | None = None,
) -> ModelSpec:
    """Enumerate fixed and random terms for the chosen structure.

    Main effects keep the selection order; interactions follow in
    lexicographic order of their constituents. The random side always
    carries the plain consumer effect.
    """
    if structure not in ("struct1", "struct2", "struct3"):
        raise ValidationError(f"unknown structure {structure!r}")
    selected = list(design_factors) + list(characteristic_factors)
    if not design_factors:
        raise ValidationError("at least one design factor must be selected")
    if len(set(selected)) != len(selected):
        raise ValidationError("duplicate factor selected")

    warnings = []
    if len(selected) > MAX_RECOMMENDED_FACTORS:
        warnings.append(
            f"{len(selected)} factors selected; models beyond "
            f"{MAX_RECOMMENDED_FACTORS} get slow and hard to interpret"
        )
    if factors:
        for name in selected:
            f = factors.get(name)
            if f is not None and f.n_levels > MAX_RECOMMENDED_LEVELS:
                warnings.append(
                    f"factor {name!r} has {f.n_levels} levels; consider binning "
                    f"to at most {MAX_RECOMMENDED_LEVELS}"
                )

    mains: list[Term] = [(f,) for f in selected]
    if structure == "struct1":
        fixed = mains
        random = [()] + [(f,) for f in design_factors]
    elif structure == "struct2":
        fixed = mains + [tuple(c) for c in itertools.combinations(selected, 2)]
        random = [()] + list(fixed)
    else:
        fixed = []
        for order in range(1, len(selected) + 1):
            fixed.extend(tuple(c) for c in itertools.combinations(selected, order))
        random = [()] + list(fixed)
    return ModelSpec(structure, fixed, random, warnings)
