"""Bilinear latent-variable engine: NIPALS PCA, PLS2 and PCR.

All three models share the same machinery: column preprocessing with
zero-variance exclusion, one-component-at-a-time NIPALS extraction with
deflation, correlation loadings against the original variables, and full
leave-one-out validation with PRESS-based explained variance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, FoldError, ValidationError

NIPALS_TOL = 1e-12
# 500 iterations is not enough for close singular-value gaps that show up
# in ordinary data; the cap exists only to turn true stagnation into an error.
NIPALS_MAX_ITER = 10000
_RANK_EPS = 1e-14  # residual sum-of-squares below this share of the start counts as exhausted

CORR_RING_RADII = (0.7071067811865476, 1.0)  # 50% and 100% explained variance


@dataclass
class PreprocessSpec:
    standardise: bool = False  # centering is always applied


@dataclass
class Preprocessed:
    data: np.ndarray  # centered (and scaled) retained columns
    means: np.ndarray
    stds: np.ndarray  # all ones when not standardising
    kept: list[int]  # original column indices retained
    excluded: list[str]  # labels of zero-variance columns dropped under standardise


def _check_no_missing(M: np.ndarray, what: str) -> None:
    mask = np.isnan(M)
    if mask.any():
        r, c = np.argwhere(mask)[0]
        raise ValidationError(f"missing values present at ({r + 1},{c + 1}) in {what}")


def preprocess(X: np.ndarray, spec: PreprocessSpec, labels: list[str] | None = None) -> Preprocessed:
    """Center columns; under standardise also scale to unit sample std.

    Zero-variance columns cannot be scaled and are excluded, with their
    labels reported so callers can surface a message.
    """
    X = np.asarray(X, dtype=float)
    _check_no_missing(X, "X")
    if labels is None:
        labels = [f"V{i + 1}" for i in range(X.shape[1])]
    means = X.mean(axis=0)
    if not spec.standardise:
        return Preprocessed(X - means, means, np.ones(X.shape[1]), list(range(X.shape[1])), [])
    stds = X.std(axis=0, ddof=1) if X.shape[0] > 1 else np.zeros(X.shape[1])
    kept = [i for i in range(X.shape[1]) if stds[i] > 0]
    if not kept:
        raise ValidationError("all columns have zero variance; nothing can be standardised")
    excluded = [labels[i] for i in range(X.shape[1]) if stds[i] == 0]
    data = (X[:, kept] - means[kept]) / stds[kept]
    return Preprocessed(data, means[kept], stds[kept], kept, excluded)


def _nipals_pca(E0: np.ndarray, n_components: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Extract up to n_components; stops early when the residual is exhausted."""
    E = E0.copy()
    ss0 = float(np.sum(E0 * E0))
    J, K = E.shape
    T = np.zeros((J, n_components))
    P = np.zeros((K, n_components))
    expl = np.zeros(n_components)
    extracted = 0
    for a in range(n_components):
        if ss0 == 0.0 or np.sum(E * E) <= ss0 * _RANK_EPS:
            break
        t = E[:, int(np.argmax(E.var(axis=0)))].copy()
        if float(t @ t) == 0.0:
            nz = np.flatnonzero(np.sum(E * E, axis=0))
            t = E[:, nz[0]].copy()
        ss_old = float(t @ t)
        converged = False
        for _ in range(NIPALS_MAX_ITER):
            p = E.T @ t / (t @ t)
            p /= np.linalg.norm(p)
            t = E @ p
            ss = float(t @ t)
            if abs(ss - ss_old) <= NIPALS_TOL * ss_old:
                converged = True
                break
            ss_old = ss
        if not converged:
            raise ConvergenceError(
                f"NIPALS did not converge for component {a + 1} "
                f"within {NIPALS_MAX_ITER} iterations", component=a + 1,
            )
        # Deflate with the regression loading of the final score so the
        # residual is exactly orthogonal to it; the norm moves to the score.
        # The extra column projection equals the same step at an exact fixed
        # point and keeps the loading columns orthonormal at machine level.
        p = E.T @ t / (t @ t)
        scale = np.linalg.norm(p)
        p /= scale
        t = t * scale
        jmax = int(np.argmax(np.abs(p)))
        if p[jmax] < 0:
            p, t = -p, -t
        E -= np.outer(t, p)
        E -= np.outer(E @ p, p)
        T[:, a], P[:, a] = t, p
        expl[a] = 100.0 * (1.0 - np.sum(E * E) / ss0)
        extracted = a + 1
    return T[:, :extracted], P[:, :extracted], expl[:extracted]


def _nipals_pls2(
    X0: np.ndarray, Y0: np.ndarray, n_components: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """PLS2 extraction alternating between the X and Y residuals."""
    E, F = X0.copy(), Y0.copy()
    ssx0 = float(np.sum(E * E))
    ssy0 = float(np.sum(F * F))
    J, K = E.shape
    L = F.shape[1]
    T = np.zeros((J, n_components))
    W = np.zeros((K, n_components))
    P = np.zeros((K, n_components))
    Q = np.zeros((L, n_components))
    explx = np.zeros(n_components)
    exply = np.zeros(n_components)
    extracted = 0
    for a in range(n_components):
        if ssx0 == 0.0 or ssy0 == 0.0:
            break
        if np.sum(E * E) <= ssx0 * _RANK_EPS or np.sum(F * F) <= ssy0 * _RANK_EPS:
            break
        u = F[:, int(np.argmax(F.var(axis=0)))].copy()
        ss_old = None
        converged = False
        t = w = q = None
        for _ in range(NIPALS_MAX_ITER):
            w = E.T @ u / (u @ u)
            wn = np.linalg.norm(w)
            if wn == 0.0:
                raise ConvergenceError(
                    f"X and Y residuals share no covariance at component {a + 1}",
                    component=a + 1,
                )
            w /= wn
            t = E @ w
            q = F.T @ t / (t @ t)
            u = F @ q / (q @ q)
            ss = float(t @ t)
            if ss_old is not None and abs(ss - ss_old) <= NIPALS_TOL * ss_old:
                converged = True
                break
            ss_old = ss
        if not converged:
            raise ConvergenceError(
                f"NIPALS did not converge for component {a + 1} "
                f"within {NIPALS_MAX_ITER} iterations", component=a + 1,
            )
        p = E.T @ t / (t @ t)
        jmax = int(np.argmax(np.abs(w)))
        if w[jmax] < 0:
            w, t, p, q = -w, -t, -p, -q
        E -= np.outer(t, p)
        F -= np.outer(t, q)
        T[:, a], W[:, a], P[:, a], Q[:, a] = t, w, p, q
        explx[a] = 100.0 * (1.0 - np.sum(E * E) / ssx0)
        exply[a] = 100.0 * (1.0 - np.sum(F * F) / ssy0)
        extracted = a + 1
    s = slice(0, extracted)
    return T[:, s], W[:, s], P[:, s], Q[:, s], explx[s], exply[s]


def _pcr_regress(T: np.ndarray, F0: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Regress Y onto orthogonal PCA scores one component at a time.

    Each score is regressed against the running residual; with orthogonal
    scores this equals regressing against Y itself but it does not let
    rounding in deep components leak into earlier ones.
    """
    A = T.shape[1]
    Q = np.zeros((F0.shape[1], A))
    exply = np.zeros(A)
    ssy0 = float(np.sum(F0 * F0))
    resid = F0.copy()
    for a in range(A):
        t = T[:, a]
        q = resid.T @ t / (t @ t)
        Q[:, a] = q
        resid -= np.outer(t, q)
        exply[a] = 100.0 * (1.0 - np.sum(resid * resid) / ssy0) if ssy0 > 0 else 0.0
    return Q, exply


def _project_scores(xp: np.ndarray, P: np.ndarray, W: np.ndarray | None) -> np.ndarray:
    """Score a preprocessed row by sequential deflation against the model."""
    e = xp.copy()
    A = P.shape[1]
    t = np.zeros(A)
    for a in range(A):
        direction = W[:, a] if W is not None else P[:, a]
        t[a] = e @ direction
        e -= t[a] * P[:, a]
    return t


def correlation_loadings(
    scores: np.ndarray, data: np.ndarray
) -> tuple[np.ndarray, list[int]]:
    """Pearson correlation of each original variable with each score column.

    Zero-variance variables have no defined correlation; their rows are
    emitted as zeros and their column indices returned as flags.
    """
    n = data.shape[0]
    A = scores.shape[1]
    dc = data - data.mean(axis=0)
    tc = scores - scores.mean(axis=0)
    d_ss = np.sum(dc * dc, axis=0)
    t_ss = np.sum(tc * tc, axis=0)
    corr = np.zeros((data.shape[1], A))
    flagged = [k for k in range(data.shape[1]) if d_ss[k] == 0.0]
    for a in range(A):
        if t_ss[a] == 0.0:
            continue
        cov = dc.T @ tc[:, a]
        with np.errstate(invalid="ignore", divide="ignore"):
            r = cov / np.sqrt(d_ss * t_ss[a])
        r[d_ss == 0.0] = 0.0
        corr[:, a] = np.clip(r, -1.0, 1.0)
    return corr, flagged


@dataclass
class LatentModel:
    """Fitted bilinear model with calibration and validation results.

    Matrices are stored over the retained (non-excluded) columns except
    the correlation loadings, which cover every original variable.
    Reconstructions and RMSE are expressed in original data units;
    explained variances on the preprocessed scale.
    """

    kind: str  # "pca" | "plsr" | "pcr"
    n_components: int
    requested_components: int
    row_labels: list[str]
    x_var_labels: list[str]  # retained X columns
    y_var_labels: list[str] | None
    x_scores: np.ndarray  # (J, A)
    x_loadings: np.ndarray  # (K_kept, A)
    x_weights: np.ndarray | None  # (K_kept, A), plsr only
    y_loadings: np.ndarray | None  # (L_kept, A)
    x_corr_loadings: np.ndarray  # (K_all, A)
    y_corr_loadings: np.ndarray | None
    x_corr_flagged: list[str]
    y_corr_flagged: list[str]
    all_x_labels: list[str]
    all_y_labels: list[str] | None
    calib_explvar_x: np.ndarray  # cumulative %
    calib_explvar_y: np.ndarray | None
    valid_explvar_x: np.ndarray | None
    valid_explvar_y: np.ndarray | None
    x_means: np.ndarray
    x_stds: np.ndarray
    y_means: np.ndarray | None
    y_stds: np.ndarray | None
    excluded_x_vars: list[str]
    excluded_y_vars: list[str]
    rmse_calib: np.ndarray  # (n_target_vars, A); X for pca, Y otherwise
    rmse_cv: np.ndarray | None
    recon_x_calib: np.ndarray  # (A, J, K_kept), original units, cumulative
    recon_y_calib: np.ndarray | None
    recon_x_valid: np.ndarray | None
    recon_y_valid: np.ndarray | None
    extra: dict = field(default_factory=dict)

    def scores_payload(self, pcs: tuple[int, int] = (1, 2)) -> dict:
        a, b = pcs
        return {
            "kind": "scores",
            "pcs": [a, b],
            "labels": self.row_labels,
            "x": self.x_scores[:, a - 1].tolist(),
            "y": self.x_scores[:, b - 1].tolist(),
            "explvar": _per_component(self.calib_explvar_x).tolist(),
        }

    def loadings_payload(self, pcs: tuple[int, int] = (1, 2)) -> dict:
        a, b = pcs
        return {
            "kind": "loadings",
            "pcs": [a, b],
            "labels": self.x_var_labels,
            "x": self.x_loadings[:, a - 1].tolist(),
            "y": self.x_loadings[:, b - 1].tolist(),
            "explvar": _per_component(self.calib_explvar_x).tolist(),
        }

    def corr_loadings_payload(self, pcs: tuple[int, int] = (1, 2)) -> dict:
        a, b = pcs
        payload = {
            "kind": "corr_loadings",
            "pcs": [a, b],
            "rings": list(CORR_RING_RADII),
            "x_labels": self.all_x_labels,
            "x_points": self.x_corr_loadings[:, [a - 1, b - 1]].tolist(),
            "x_explained_per_var": (self.x_corr_loadings ** 2).sum(axis=1).tolist(),
            "flagged": list(self.x_corr_flagged),
        }
        if self.y_corr_loadings is not None:
            payload["y_labels"] = self.all_y_labels
            payload["y_points"] = self.y_corr_loadings[:, [a - 1, b - 1]].tolist()
            payload["y_flagged"] = list(self.y_corr_flagged)
        return payload

    def explvar_payload(self) -> dict:
        payload = {
            "kind": "explvar",
            "components": list(range(self.n_components + 1)),
            "calibrated_x": [0.0] + self.calib_explvar_x.tolist(),
        }
        if self.valid_explvar_x is not None:
            payload["validated_x"] = [0.0] + self.valid_explvar_x.tolist()
        if self.calib_explvar_y is not None:
            payload["calibrated_y"] = [0.0] + self.calib_explvar_y.tolist()
        if self.valid_explvar_y is not None:
            payload["validated_y"] = [0.0] + self.valid_explvar_y.tolist()
        return payload

    def payloads(self) -> dict[str, dict]:
        out = {
            "scores": self.scores_payload() if self.n_components >= 2 else self.scores_payload((1, 1)),
            "loadings": self.loadings_payload() if self.n_components >= 2 else self.loadings_payload((1, 1)),
            "corr_loadings": self.corr_loadings_payload() if self.n_components >= 2 else self.corr_loadings_payload((1, 1)),
            "explvar": self.explvar_payload(),
        }
        return out

    def to_doc(self) -> dict:
        def arr(m):
            return None if m is None else np.asarray(m).tolist()

        return {
            "kind": self.kind,
            "n_components": self.n_components,
            "row_labels": self.row_labels,
            "x_var_labels": self.x_var_labels,
            "y_var_labels": self.y_var_labels,
            "x_scores": arr(self.x_scores),
            "x_loadings": arr(self.x_loadings),
            "x_weights": arr(self.x_weights),
            "y_loadings": arr(self.y_loadings),
            "x_corr_loadings": arr(self.x_corr_loadings),
            "y_corr_loadings": arr(self.y_corr_loadings),
            "calib_explvar_x": arr(self.calib_explvar_x),
            "calib_explvar_y": arr(self.calib_explvar_y),
            "valid_explvar_x": arr(self.valid_explvar_x),
            "valid_explvar_y": arr(self.valid_explvar_y),
            "excluded_x_vars": self.excluded_x_vars,
            "excluded_y_vars": self.excluded_y_vars,
            "rmse_calib": arr(self.rmse_calib),
            "rmse_cv": arr(self.rmse_cv),
        }


def _per_component(cumulative: np.ndarray) -> np.ndarray:
    return np.diff(np.concatenate(([0.0], cumulative)))


def _rmse_per_component(target: np.ndarray, recon: np.ndarray) -> np.ndarray:
    """(n_vars, A) RMSE between data and cumulative reconstructions."""
    A = recon.shape[0]
    out = np.zeros((target.shape[1], A))
    for a in range(A):
        out[:, a] = np.sqrt(np.mean((target - recon[a]) ** 2, axis=0))
    return out


def _labels_or_default(labels, n, prefix):
    if labels is None:
        return [f"{prefix}{i + 1}" for i in range(n)]
    if len(labels) != n:
        raise ValidationError(f"{len(labels)} labels for {n} entries")
    return list(labels)


def _fit_core(kind, X, Y, spec_x, spec_y, n_components, row_labels, x_labels, y_labels):
    X = np.asarray(X, dtype=float)
    row_labels = _labels_or_default(row_labels, X.shape[0], "R")
    x_labels = _labels_or_default(x_labels, X.shape[1], "V")
    px = preprocess(X, spec_x, x_labels)
    J = X.shape[0]

    if kind == "pca":
        max_a = min(J, len(px.kept))
    else:
        max_a = min(J - 1, len(px.kept))
    if n_components is None:
        n_components = max_a
    if not 1 <= n_components <= max_a:
        raise ValidationError(
            f"n_components must be between 1 and {max_a} for this data, got {n_components}"
        )

    py = None
    y_labels_all = None
    if kind in ("plsr", "pcr"):
        if Y is None:
            raise ValidationError(f"{kind} needs a Y matrix")
        Y = np.asarray(Y, dtype=float)
        if Y.ndim == 1:
            Y = Y[:, None]
        if Y.shape[0] != J:
            raise ValidationError(f"row counts differ ({J} vs {Y.shape[0]})")
        y_labels_all = _labels_or_default(y_labels, Y.shape[1], "Y")
        py = preprocess(Y, spec_y or PreprocessSpec(), y_labels_all)

    if kind == "pca":
        T, P, explx = _nipals_pca(px.data, n_components)
        W = Q = exply = None
    elif kind == "plsr":
        T, W, P, Q, explx, exply = _nipals_pls2(px.data, py.data, n_components)
    else:
        T, P, explx = _nipals_pca(px.data, n_components)
        W = None
        Q, exply = _pcr_regress(T, py.data)
    A = T.shape[1]
    if A == 0:
        raise ValidationError("data has no variance; no components can be extracted")

    recon_x = np.zeros((A, J, len(px.kept)))
    running = np.zeros((J, len(px.kept)))
    for a in range(A):
        running += np.outer(T[:, a], P[:, a])
        recon_x[a] = running * px.stds + px.means
    recon_y = None
    if Q is not None:
        recon_y = np.zeros((A, J, py.data.shape[1]))
        running_y = np.zeros((J, py.data.shape[1]))
        for a in range(A):
            running_y += np.outer(T[:, a], Q[:, a])
            recon_y[a] = running_y * py.stds + py.means
    xc, xflag = correlation_loadings(T, X)
    if py is not None:
        yc, yflag = correlation_loadings(T, Y)
    else:
        yc, yflag = None, []

    if kind == "pca":
        rmse = _rmse_per_component(X[:, px.kept], recon_x)
    else:
        rmse = _rmse_per_component(Y[:, py.kept], recon_y)

    return LatentModel(
        kind=kind,
        n_components=A,
        requested_components=n_components,
        row_labels=row_labels,
        x_var_labels=[x_labels[i] for i in px.kept],
        y_var_labels=[y_labels_all[i] for i in py.kept] if py is not None else None,
        x_scores=T,
        x_loadings=P,
        x_weights=W,
        y_loadings=Q,
        x_corr_loadings=xc,
        y_corr_loadings=yc,
        x_corr_flagged=[x_labels[i] for i in xflag],
        y_corr_flagged=[y_labels_all[i] for i in yflag] if py is not None else [],
        all_x_labels=x_labels,
        all_y_labels=y_labels_all,
        calib_explvar_x=explx,
        calib_explvar_y=exply,
        valid_explvar_x=None,
        valid_explvar_y=None,
        x_means=px.means,
        x_stds=px.stds,
        y_means=py.means if py is not None else None,
        y_stds=py.stds if py is not None else None,
        excluded_x_vars=px.excluded,
        excluded_y_vars=py.excluded if py is not None else [],
        rmse_calib=rmse,
        rmse_cv=None,
        recon_x_calib=recon_x,
        recon_y_calib=recon_y,
        recon_x_valid=None,
        recon_y_valid=None,
    )


def fit_pca(
    X,
    spec: PreprocessSpec | None = None,
    n_components: int | None = None,
    row_labels=None,
    var_labels=None,
    loo: bool = False,
) -> LatentModel:
    model = _fit_core("pca", X, None, spec or PreprocessSpec(), None, n_components, row_labels, var_labels, None)
    if loo:
        attach_loo(model, X, None, spec or PreprocessSpec(), None)
    return model


def fit_plsr(
    X,
    Y,
    spec_x: PreprocessSpec | None = None,
    spec_y: PreprocessSpec | None = None,
    n_components: int | None = None,
    row_labels=None,
    x_labels=None,
    y_labels=None,
    loo: bool = False,
) -> LatentModel:
    model = _fit_core(
        "plsr", X, Y, spec_x or PreprocessSpec(), spec_y or PreprocessSpec(),
        n_components, row_labels, x_labels, y_labels,
    )
    if loo:
        attach_loo(model, X, Y, spec_x or PreprocessSpec(), spec_y or PreprocessSpec())
    return model


def fit_pcr(
    X,
    Y,
    spec_x: PreprocessSpec | None = None,
    spec_y: PreprocessSpec | None = None,
    n_components: int | None = None,
    row_labels=None,
    x_labels=None,
    y_labels=None,
    loo: bool = False,
) -> LatentModel:
    model = _fit_core(
        "pcr", X, Y, spec_x or PreprocessSpec(), spec_y or PreprocessSpec(),
        n_components, row_labels, x_labels, y_labels,
    )
    if loo:
        attach_loo(model, X, Y, spec_x or PreprocessSpec(), spec_y or PreprocessSpec())
    return model


@dataclass
class LooResult:
    valid_explvar_x: np.ndarray
    valid_explvar_y: np.ndarray | None
    rmse_cv: np.ndarray  # X vars for pca, Y vars otherwise (original units)
    pred_x: np.ndarray  # (A, J, K_kept) original units
    pred_y: np.ndarray | None


def loo_validate(
    kind: str,
    X,
    Y=None,
    spec_x: PreprocessSpec | None = None,
    spec_y: PreprocessSpec | None = None,
    n_components: int | None = None,
) -> LooResult:
    """Full leave-one-out validation.

    Every fold refits preprocessing and the model on the remaining rows,
    scores the left-out row with the fold's statistics and accumulates
    PRESS. Validated explained variance compares against the full-data
    preprocessed matrix; RMSE is reported in original units. Folds whose
    attainable rank is below the requested component count contribute
    their deepest available reconstruction to later components.
    """
    spec_x = spec_x or PreprocessSpec()
    spec_y = spec_y or PreprocessSpec()
    X = np.asarray(X, dtype=float)
    J = X.shape[0]
    if J < 3:
        raise ValidationError("leave-one-out validation needs at least 3 rows")
    full = _fit_core(
        kind, X, Y, spec_x, spec_y, n_components,
        None, None, None,
    )
    A = full.n_components
    px_full = preprocess(X, spec_x)
    Xp_full = px_full.data
    ss_x_full = float(np.sum(Xp_full * Xp_full))
    if Y is not None:
        Y = np.asarray(Y, dtype=float)
        if Y.ndim == 1:
            Y = Y[:, None]
        py_full = preprocess(Y, spec_y)
        Yp_full = py_full.data
        ss_y_full = float(np.sum(Yp_full * Yp_full))

    press_x = np.zeros(A)
    press_y = np.zeros(A) if Y is not None else None
    pred_x = np.zeros((A, J, len(px_full.kept)))
    pred_y = np.zeros((A, J, len(py_full.kept))) if Y is not None else None

    for j in range(J):
        rows = np.r_[0:j, j + 1 : J]
        Xtr = X[rows]
        try:
            ptr = preprocess(Xtr, spec_x)
        except ValidationError as exc:
            raise FoldError(f"fold {j + 1}: {exc}", fold=j + 1) from exc
        a_try = min(n_components or A, A, Xtr.shape[0] if kind == "pca" else Xtr.shape[0] - 1, len(ptr.kept))
        if kind == "pca":
            Ttr, Ptr, _ = _nipals_pca(ptr.data, a_try)
            Wtr, Qtr = None, None
        elif kind == "plsr":
            try:
                pytr = preprocess(Y[rows], spec_y)
            except ValidationError as exc:
                raise FoldError(f"fold {j + 1}: {exc}", fold=j + 1) from exc
            Ttr, Wtr, Ptr, Qtr, _, _ = _nipals_pls2(ptr.data, pytr.data, a_try)
        else:
            try:
                pytr = preprocess(Y[rows], spec_y)
            except ValidationError as exc:
                raise FoldError(f"fold {j + 1}: {exc}", fold=j + 1) from exc
            Ttr, Ptr, _ = _nipals_pca(ptr.data, a_try)
            Wtr = None
            Qtr, _ = _pcr_regress(Ttr, pytr.data)
        a_fold = Ttr.shape[1]

        xj = (X[j, ptr.kept] - ptr.means) / ptr.stds
        t = _project_scores(xj, Ptr, Wtr)
        col_means_tr = Xtr.mean(axis=0)

        xhat_p = np.zeros(len(ptr.kept))
        for a in range(A):
            if a < a_fold:
                xhat_p = xhat_p + t[a] * Ptr[:, a]
            xhat_orig_cols = dict(zip(ptr.kept, xhat_p * ptr.stds + ptr.means))
            xhat_full = np.array(
                [xhat_orig_cols.get(k, col_means_tr[k]) for k in px_full.kept]
            )
            pred_x[a, j] = xhat_full
            diff = (xhat_full - px_full.means) / px_full.stds - Xp_full[j]
            press_x[a] += float(diff @ diff)
        if Y is not None:
            ycol_means_tr = Y[rows].mean(axis=0)
            yhat_p = np.zeros(len(pytr.kept))
            for a in range(A):
                if a < a_fold:
                    yhat_p = yhat_p + t[a] * Qtr[:, a]
                yhat_orig_cols = dict(zip(pytr.kept, yhat_p * pytr.stds + pytr.means))
                yhat_full = np.array(
                    [yhat_orig_cols.get(k, ycol_means_tr[k]) for k in py_full.kept]
                )
                pred_y[a, j] = yhat_full
                diffy = (yhat_full - py_full.means) / py_full.stds - Yp_full[j]
                press_y[a] += float(diffy @ diffy)

    valid_x = 100.0 * (1.0 - press_x / ss_x_full) if ss_x_full > 0 else np.zeros(A)
    valid_y = None
    if Y is not None:
        valid_y = 100.0 * (1.0 - press_y / ss_y_full) if ss_y_full > 0 else np.zeros(A)
    if kind == "pca":
        rmse_cv = _rmse_per_component(X[:, px_full.kept], pred_x)
    else:
        rmse_cv = _rmse_per_component(Y[:, py_full.kept], pred_y)
    return LooResult(valid_x, valid_y, rmse_cv, pred_x, pred_y)


def attach_loo(model: LatentModel, X, Y, spec_x, spec_y) -> LatentModel:
    res = loo_validate(model.kind, X, Y, spec_x, spec_y, model.n_components)
    model.valid_explvar_x = res.valid_explvar_x
    model.valid_explvar_y = res.valid_explvar_y
    model.rmse_cv = res.rmse_cv
    model.recon_x_valid = res.pred_x
    model.recon_y_valid = res.pred_y
    return model
