"""REML estimation of variance-component mixed models.

The model is y = X beta + sum_i Z_i b_i + e with one independent scalar
variance component per random term (consumer intercept plus consumer x
term groupings) and i.i.d. residuals. Optimization profiles the residual
variance out and searches over log variance ratios with a derivative-free
simplex; ratios collapsing to zero are snapped to an exact zero, and a
vanishing residual triggers a joint refinement on the variance scale so
the boundary limit is reported correctly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import qr
from scipy.optimize import minimize

from ..errors import ConvergenceError, ValidationError
from .longform import Factor, LongTable, _level_label
from .terms import ModelSpec, Term, random_term_name, term_name

LOG_RATIO_CAP = 35.0
SNAP_RATIO = 1e-8
DEGENERATE_RATIO = 1e8
# Floor for a collapsed residual variance, relative to var(y). Small enough
# not to bias the other components, large enough to keep V well conditioned.
RESIDUAL_FLOOR_REL = 1e-5
SNAP_ABS_REL = 1e-10


@dataclass
class FixedDesign:
    """Treatment-coded model matrix builder (first level = reference)."""

    terms: list[Term]
    factors: dict[str, Factor]
    columns: list[tuple[Term, tuple[float, ...]]]
    names: list[str]

    @classmethod
    def build(cls, terms: list[Term], factors: dict[str, Factor]) -> "FixedDesign":
        columns: list[tuple[Term, tuple[float, ...]]] = [((), ())]
        names = ["(Intercept)"]
        for term in terms:
            for f in term:
                if f not in factors:
                    raise ValidationError(f"unknown factor {f!r}")
            nonref = [factors[f].levels[1:] for f in term]
            for combo in itertools.product(*nonref):
                columns.append((term, tuple(combo)))
                names.append(
                    ":".join(f"{f}[{_level_label(v)}]" for f, v in zip(term, combo))
                )
        return cls(terms, factors, columns, names)

    def matrix(self, factor_values: dict[str, np.ndarray], n_rows: int) -> np.ndarray:
        X = np.ones((n_rows, len(self.columns)))
        for j, (term, combo) in enumerate(self.columns):
            for f, lv in zip(term, combo):
                X[:, j] *= factor_values[f] == lv
        return X

    def row(self, assign: dict[str, float]) -> np.ndarray:
        x = np.ones(len(self.columns))
        for j, (term, combo) in enumerate(self.columns):
            for f, lv in zip(term, combo):
                if assign[f] != lv:
                    x[j] = 0.0
                    break
        return x


def _newton_polish(f, x: np.ndarray, f0: float, active: np.ndarray, max_iter: int = 5):
    """A few Newton steps on the active coordinates to pin the optimum.

    The simplex gets close; finite-difference Newton steps make the final
    point reproducible to roughly gradient-noise level, which is what the
    shift- and permutation-invariance guarantees rely on.
    """
    idx = np.flatnonzero(active)
    if idx.size == 0:
        return x, f0
    h = 1.6e-3
    for _ in range(max_iter):
        m = idx.size
        g = np.zeros(m)
        H = np.zeros((m, m))
        for a, i in enumerate(idx):
            ei = np.zeros_like(x)
            ei[i] = h
            fp, fm = f(x + ei), f(x - ei)
            fp2, fm2 = f(x + ei / 2), f(x - ei / 2)
            # Richardson-extrapolated gradient: larger base step for a lower
            # noise floor without the O(h^2) bias
            g[a] = (4.0 * (fp2 - fm2) / h - (fp - fm) / (2 * h)) / 3.0
            H[a, a] = (fp - 2 * f0 + fm) / h**2
        for a, i in enumerate(idx):
            for b in range(a + 1, m):
                j = idx[b]
                e = np.zeros_like(x)
                e[i] = h
                e2 = np.zeros_like(x)
                e2[j] = h
                H[a, b] = H[b, a] = (
                    f(x + e + e2) - f(x + e - e2) - f(x - e + e2) + f(x - e - e2)
                ) / (4 * h * h)
        try:
            eigvals = np.linalg.eigvalsh(H)
            if eigvals.min() <= 0:
                break
            step = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            break
        x_new = x.copy()
        x_new[idx] -= step
        f_new = f(x_new)
        if not np.isfinite(f_new) or f_new > f0 + 2e-9:
            break
        x, f0 = x_new, f_new
        if float(np.max(np.abs(step))) < 1e-12:
            break
    return x, f0


def _check_full_rank(X: np.ndarray, names: list[str]) -> None:
    _, R, piv = qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = diag[0] * max(X.shape) * np.finfo(float).eps if diag.size else 0.0
    bad = [names[piv[i]] for i in range(len(diag)) if diag[i] <= tol]
    if X.shape[1] > len(diag):
        bad += [names[piv[i]] for i in range(len(diag), X.shape[1])]
    if bad:
        raise ValidationError(f"fixed design is rank deficient; aliased columns: {', '.join(bad)}")


def _group_codes(long: LongTable, term: Term) -> tuple[np.ndarray, int]:
    keys = []
    for i in range(long.n_rows):
        key = (long.consumer_ids[i],) + tuple(long.factor_values[f][i] for f in term)
        keys.append(key)
    uniq = sorted(set(keys))
    index = {k: j for j, k in enumerate(uniq)}
    codes = np.array([index[k] for k in keys])
    return codes, len(uniq)


class _RemlCore:
    """Deviance evaluations for one fixed design and a set of random terms.

    Every random grouping is consumer-nested, so the marginal covariance is
    block diagonal over consumers; all linear algebra runs per block.
    """

    def __init__(self, y: np.ndarray, X: np.ndarray, term_codes: list[np.ndarray],
                 consumer_ids: list[str]):
        self.y = y
        self.X = X
        self.n, self.p = X.shape
        blocks: dict[str, list[int]] = {}
        for i, cid in enumerate(consumer_ids):
            blocks.setdefault(cid, []).append(i)

        def canonical(ix: np.ndarray) -> np.ndarray:
            # sort rows within a block by their model-relevant values so the
            # assembled arrays are identical under any input row permutation
            keys = [y[ix]]
            keys += [X[ix, j] for j in range(X.shape[1] - 1, -1, -1)]
            keys += [codes[ix] for codes in reversed(term_codes)]
            return ix[np.lexsort(tuple(keys))]

        # bucket blocks by size so each bucket runs through batched linalg;
        # consumers in label order keep accumulation order-independent too
        by_size: dict[int, list[np.ndarray]] = {}
        for cid in sorted(blocks):
            arr = canonical(np.array(blocks[cid]))
            by_size.setdefault(len(arr), []).append(arr)
        self.buckets = []
        for size, idx_list in sorted(by_size.items()):
            idx = np.stack(idx_list)  # (B, J)
            Xb = X[idx]  # (B, J, p)
            yb = y[idx]  # (B, J)
            Kb = []
            for codes in term_codes:
                c = codes[idx]  # (B, J)
                Kb.append((c[:, :, None] == c[:, None, :]).astype(float))
            self.buckets.append({"idx": idx, "X": Xb, "y": yb, "K": Kb, "eye": np.eye(size)})

    def _sweep(self, weights: np.ndarray, residual: float):
        """Accumulate GLS pieces for V_b = residual*I + sum weights_i K_b,i."""
        p = self.p
        logdet_v = 0.0
        XtViX = np.zeros((p, p))
        XtViy = np.zeros(p)
        inv_cache = []
        for bk in self.buckets:
            B = bk["X"].shape[0]
            V = np.tile(residual * bk["eye"], (B, 1, 1))
            for w, K in zip(weights, bk["K"]):
                if w != 0.0:
                    V += w * K
            L = np.linalg.cholesky(V)  # raises LinAlgError when not PD
            diag = np.diagonal(L, axis1=-2, axis2=-1)
            logdet_v += 2.0 * float(np.sum(np.log(diag)))
            Vinv = np.linalg.inv(V)
            inv_cache.append(Vinv)
            ViX = Vinv @ bk["X"]
            XtViX += np.einsum("bji,bjk->ik", bk["X"], ViX)
            XtViy += np.einsum("bji,bj->i", bk["X"], np.einsum("bjk,bk->bj", Vinv, bk["y"]))
        beta = np.linalg.solve(XtViX, XtViy)
        r2 = 0.0
        for bk, Vinv in zip(self.buckets, inv_cache):
            resid = bk["y"] - bk["X"] @ beta
            r2 += float(np.einsum("bj,bjk,bk->", resid, Vinv, resid))
        sign, logdet_x = np.linalg.slogdet(XtViX)
        if sign <= 0:
            raise np.linalg.LinAlgError("XtViX not positive definite")
        return logdet_v, logdet_x, beta, XtViX, r2

    def profiled_deviance(self, ratios: np.ndarray) -> float:
        try:
            logdet_v, logdet_x, _, _, r2 = self._sweep(ratios, 1.0)
        except np.linalg.LinAlgError:
            return math.inf
        df = self.n - self.p
        if r2 <= 0:
            return math.inf
        sigma2 = r2 / df
        return logdet_v + logdet_x + df * (1.0 + math.log(2.0 * math.pi * sigma2))

    def abs_deviance(self, theta: np.ndarray) -> float:
        try:
            logdet_v, logdet_x, _, _, r2 = self._sweep(theta[:-1], theta[-1])
        except np.linalg.LinAlgError:
            return math.inf
        return logdet_v + logdet_x + r2 + (self.n - self.p) * math.log(2.0 * math.pi)

    def gls_at(self, theta: np.ndarray):
        """beta, its covariance and the deviance at absolute variances theta."""
        logdet_v, logdet_x, beta, XtViX, r2 = self._sweep(theta[:-1], theta[-1])
        C = np.linalg.inv(XtViX)
        dev = logdet_v + logdet_x + r2 + (self.n - self.p) * math.log(2.0 * math.pi)
        return beta, C, dev


@dataclass
class FittedLmm:
    spec: ModelSpec
    random_terms: list[Term]
    vc_names: list[str]  # random term names + "Residual"
    theta: np.ndarray  # variances, residual last
    beta: np.ndarray
    beta_names: list[str]
    beta_cov: np.ndarray
    loglik: float
    deviance: float
    n: int
    p: int
    design: FixedDesign
    long: LongTable
    core: _RemlCore
    residual_floor: float
    residual_boundary: bool
    snapped: list[str]  # names of components snapped to zero
    n_groups: dict[str, int]
    precision: str = "high"
    _satt: dict | None = field(default=None, repr=False)

    @property
    def variance_components(self) -> dict[str, float]:
        return dict(zip(self.vc_names, self.theta))

    @property
    def sigma2_residual(self) -> float:
        return float(self.theta[-1])

    def _theta_internal(self) -> np.ndarray:
        """Variances used for linear algebra; a zero residual sits at its floor."""
        th = self.theta.copy()
        if th[-1] == 0.0:
            th[-1] = self.residual_floor
        return th

    def satt_context(self) -> dict:
        """Finite-difference machinery for Satterthwaite degrees of freedom.

        Computes the asymptotic covariance of the variance components from
        the numerical Hessian of the REML deviance, plus cached covariance
        matrices of beta at stepped variance values for contrast gradients.
        """
        if self._satt is not None:
            return self._satt
        theta = self._theta_internal()
        m1 = len(theta)
        scale = float(theta.sum())
        h = 2e-3 * np.maximum(np.abs(theta), 0.02 * scale)
        # keep every probe inside the positive-definite region: stay well
        # below each positive component, and below the residual for zeros
        pos = theta > 0
        h[pos] = np.minimum(h[pos], 0.49 * theta[pos])
        h[~pos] = np.minimum(h[~pos], 0.25 * theta[-1])
        dev = self.core.abs_deviance

        def second(i: int, j: int, hi: float, hj: float, d0: float) -> float:
            ei = np.zeros(m1)
            ei[i] = hi
            if i == j:
                return (dev(theta + ei) - 2.0 * d0 + dev(theta - ei)) / hi**2
            ej = np.zeros(m1)
            ej[j] = hj
            return (
                dev(theta + ei + ej) - dev(theta + ei - ej)
                - dev(theta - ei + ej) + dev(theta - ei - ej)
            ) / (4.0 * hi * hj)

        dev0 = dev(theta)
        H = np.zeros((m1, m1))
        with np.errstate(invalid="ignore"):
            for i in range(m1):
                for j in range(i, m1):
                    # Richardson step halving lifts the stencil to fourth order
                    coarse = second(i, j, h[i], h[j], dev0)
                    fine = second(i, j, h[i] / 2.0, h[j] / 2.0, dev0)
                    H[i, j] = H[j, i] = (4.0 * fine - coarse) / 3.0
        if not np.isfinite(H).all():
            H = np.where(np.isfinite(H), H, 0.0)
        A = 2.0 * np.linalg.pinv(H)
        hg = 1.22e-4 * np.maximum(np.abs(theta), 0.02 * scale)
        hg[pos] = np.minimum(hg[pos], 0.49 * theta[pos])
        hg[~pos] = np.minimum(hg[~pos], 0.25 * theta[-1])
        C_plus = []
        C_minus = []
        for i in range(m1):
            ei = np.zeros(m1)
            ei[i] = hg[i]
            _, cp, _ = self.core.gls_at(theta + ei)
            _, cm, _ = self.core.gls_at(theta - ei)
            C_plus.append(cp)
            C_minus.append(cm)
        self._satt = {"A": A, "h": hg, "C_plus": C_plus, "C_minus": C_minus}
        return self._satt

    def contrast_df(self, ell: np.ndarray) -> float:
        """Satterthwaite degrees of freedom for one estimable contrast."""
        ctx = self.satt_context()
        var = float(ell @ self.beta_cov @ ell)
        g = np.array(
            [
                (ell @ ctx["C_plus"][i] @ ell - ell @ ctx["C_minus"][i] @ ell)
                / (2.0 * ctx["h"][i])
                for i in range(len(ctx["h"]))
            ]
        )
        denom = float(g @ ctx["A"] @ g)
        if denom <= 0 or not np.isfinite(denom):
            return math.inf
        return 2.0 * var * var / denom


def build_fixed(long: LongTable, spec: ModelSpec) -> tuple[FixedDesign, np.ndarray]:
    design = FixedDesign.build(spec.fixed_terms, long.factors)
    X = design.matrix(long.factor_values, long.n_rows)
    _check_full_rank(X, design.names)
    return design, X


def fit_reml(
    long: LongTable,
    spec: ModelSpec,
    random_terms: list[Term] | None = None,
    precision: str = "high",
) -> FittedLmm:
    """Fit the mixed model by REML.

    ``random_terms`` overrides the spec's random side (used when refitting
    reduced models during likelihood-ratio elimination). ``precision``
    "high" runs a second tight simplex pass for table-grade estimates;
    "standard" is enough for likelihood-ratio screening and much faster.
    """
    terms = spec.random_terms if random_terms is None else random_terms
    design, X = build_fixed(long, spec)
    # centering the response makes the fit exactly invariant to shifts; the
    # sorted sum keeps the offset identical under row permutations too
    y_offset = float(np.sort(long.response).mean())
    y = long.response - y_offset
    term_codes = []
    n_groups = {}
    for term in terms:
        codes, q = _group_codes(long, term)
        if q < 2:
            raise ValidationError(
                f"random grouping {random_term_name(term)} has {q} level(s); needs at least 2"
            )
        term_codes.append(codes)
        n_groups[random_term_name(term)] = q
    core = _RemlCore(y, X, term_codes, long.consumer_ids)
    if core.n <= core.p:
        raise ValidationError("more fixed-effect parameters than observations")

    m = len(terms)
    if m == 0:
        raise ValidationError("the model needs at least the consumer random effect")

    def obj(rho: np.ndarray) -> float:
        g = np.exp(np.clip(rho, -LOG_RATIO_CAP, LOG_RATIO_CAP))
        return core.profiled_deviance(g)

    res = minimize(
        obj,
        np.zeros(m),
        method="Nelder-Mead",
        options={"maxiter": 400 * m, "fatol": 1e-10, "xatol": 1e-6, "adaptive": m > 2},
    )
    if precision == "high":
        active = res.x > -12.0  # skip ratios already collapsing to zero
        # the polished point is kept even when its deviance reads a few
        # 1e-13 higher: that is evaluation noise, and the root is what
        # makes refits reproducible
        res.x, res.fun = _newton_polish(obj, res.x, res.fun, active)
    if not np.isfinite(res.fun):
        raise ConvergenceError("REML optimization failed to find a finite deviance")

    rho = np.clip(res.x, -LOG_RATIO_CAP, LOG_RATIO_CAP)
    g = np.exp(rho)
    g[g < SNAP_RATIO] = 0.0

    y_var = float(np.var(y)) if float(np.var(y)) > 0 else 1.0
    floor = RESIDUAL_FLOOR_REL * y_var
    residual_boundary = bool(g.max(initial=0.0) > DEGENERATE_RATIO)

    if residual_boundary:
        # The ratio path loses the variance scale when the residual collapses;
        # re-optimize the component variances jointly with the residual pinned
        # at a small floor to recover the boundary limit.
        _, _, _, _, r2 = core._sweep(g, 1.0)
        sigma2 = r2 / (core.n - core.p)
        start = np.log(np.maximum(g * sigma2, floor))

        def obj2(lv: np.ndarray) -> float:
            th = np.concatenate([np.exp(np.clip(lv, -700, 700)), [floor]])
            return core.abs_deviance(th)

        r3 = minimize(
            obj2,
            start,
            method="Nelder-Mead",
            options={"maxiter": 600 * m, "fatol": 1e-13, "xatol": 1e-9, "adaptive": m > 2},
        )
        comp = np.exp(np.clip(r3.x, -700, 700))
        comp[comp < SNAP_ABS_REL * y_var] = 0.0
        theta = np.concatenate([comp, [0.0]])
    else:
        _, _, _, _, r2 = core._sweep(g, 1.0)
        sigma2 = r2 / (core.n - core.p)
        theta = np.concatenate([g * sigma2, [sigma2]])

    theta_internal = theta.copy()
    if theta_internal[-1] == 0.0:
        theta_internal[-1] = floor
    beta, C, dev = core.gls_at(theta_internal)
    beta = beta.copy()
    beta[0] += y_offset

    vc_names = [random_term_name(t) for t in terms] + ["Residual"]
    snapped = [vc_names[i] for i in range(m) if theta[i] == 0.0]
    if theta[-1] == 0.0:
        snapped.append("Residual")
    return FittedLmm(
        spec=spec,
        random_terms=list(terms),
        vc_names=vc_names,
        theta=theta,
        beta=beta,
        beta_names=design.names,
        beta_cov=C,
        loglik=-dev / 2.0,
        deviance=dev,
        n=core.n,
        p=core.p,
        design=design,
        long=long,
        core=core,
        residual_floor=floor,
        residual_boundary=theta[-1] == 0.0,
        snapped=snapped,
        n_groups=n_groups,
        precision=precision,
    )
