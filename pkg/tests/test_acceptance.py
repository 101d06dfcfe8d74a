"""Acceptance suite: every criterion at its stated tolerance.

Each test prints one PASS line when its assertions hold; tolerances are
pinned here, not configurable, so this file is the contract.
"""

import json
import math
import time

import numpy as np
import pytest
from click.testing import CliRunner
from conftest import balanced_conjoint, classical_two_factor_oracle
from fastapi.testclient import TestClient

from sensokit.bilinear import PreprocessSpec, fit_pca, fit_pcr, fit_plsr, loo_validate, preprocess
from sensokit.cli import main as cli_main
from sensokit.conjoint import build_terms, fit_reml, melt
from sensokit.conjoint.inference import anova_fixed, ls_means, pairwise_differences
from sensokit.conjoint.inference import test_random as lr_test_random
from sensokit.dataset import Dataset, ImportOptions, export_delimited, import_dataset
from sensokit.errors import ValidationError
from sensokit.prefmap import assign_sectors
from sensokit.service import create_app


def ok(name: str) -> None:
    print(f"ACCEPTANCE {name}: PASS")


def test_nipals_pca_vs_svd_oracle():
    t0 = time.time()
    for i in range(50):
        rng = np.random.default_rng(1000 + i)
        J = int(rng.integers(3, 21))
        K = int(rng.integers(3, 21))
        X = rng.normal(size=(J, K))
        A = min(J, K, 6)
        m = fit_pca(X, n_components=A)
        Xc = X - X.mean(0)
        _, s, Vt = np.linalg.svd(Xc, full_matrices=False)
        ev = 100 * np.cumsum(s**2) / np.sum(s**2)
        for a in range(m.n_components):
            assert abs(m.x_loadings[:, a] @ Vt[a]) >= 1 - 1e-8
        np.testing.assert_allclose(m.calib_explvar_x, ev[: m.n_components], atol=1e-8)
    elapsed = time.time() - t0
    assert elapsed < 5.0, f"PCA oracle run took {elapsed:.2f}s"
    ok(f"nipals-pca-svd-oracle (50 matrices, {elapsed:.2f}s)")


def test_pcr_equals_ols_oracle():
    for seed in range(10):
        rng = np.random.default_rng(seed)
        J = int(rng.integers(10, 20))
        K = int(rng.integers(3, 8))
        L = int(rng.integers(1, 4))
        X = rng.normal(size=(J, K))
        Y = rng.normal(size=(J, L))
        m = fit_pcr(X, Y, n_components=K)
        Xa = np.c_[np.ones(J), X]
        beta, *_ = np.linalg.lstsq(Xa, Y, rcond=None)
        np.testing.assert_allclose(m.recon_y_calib[-1], Xa @ beta, atol=1e-8)
    ok("pcr-full-components-equals-ols")


def test_plsr_first_weight_and_self_regression():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(14, 7))
    y = rng.normal(size=(14, 1))
    m = fit_plsr(X, y, n_components=3)
    Xc = X - X.mean(0)
    yc = (y - y.mean(0))[:, 0]
    ref = Xc.T @ yc
    ref /= np.linalg.norm(ref)
    assert abs(m.x_weights[:, 0] @ ref) >= 1 - 1e-10

    mself = fit_plsr(X, X, n_components=5)
    mpca = fit_pca(X, n_components=5)
    for a in range(5):
        t1, t2 = mself.x_scores[:, a], mpca.x_scores[:, a]
        c = abs(t1 @ t2) / (np.linalg.norm(t1) * np.linalg.norm(t2))
        assert c >= 1 - 1e-9
    ok("plsr-first-weight-and-pca-collapse")


def test_loo_line_data_and_noise_ordering():
    c = np.arange(7.0)
    v = np.array([2.0, -1.0, 0.5, 3.0])
    X = 1.5 + np.outer(c, v)
    res = loo_validate("pca", X, n_components=1)
    assert abs(res.valid_explvar_x[0] - 100.0) < 1e-8

    for seed in range(20):
        rng = np.random.default_rng(400 + seed)
        X = rng.normal(size=(int(rng.integers(8, 14)), int(rng.integers(4, 8))))
        m = fit_pca(X, n_components=min(X.shape[0] - 1, X.shape[1], 5), loo=True)
        assert (m.valid_explvar_x <= m.calib_explvar_x + 1e-9).all()
    ok("loo-line-exact-and-noise-ordering (20 noise matrices)")


def test_zero_variance_exclusion_and_missing_refusal():
    X = np.c_[np.array([1.0, 2, 3, 4]), np.full(4, 7.0), np.array([2.0, 1, 4, 3])]
    p = preprocess(X, PreprocessSpec(True), labels=["a", "const", "b"])
    assert p.excluded == ["const"]
    m = fit_pca(X, PreprocessSpec(True), n_components=2)
    assert m.excluded_x_vars == ["V2"]

    Xm = X.copy()
    Xm[1, 2] = np.nan
    with pytest.raises(ValidationError, match=r"missing values present at \(2,3\)"):
        fit_pca(Xm, n_components=1)
    ok("zero-variance-exclusion-and-missing-refusal")


def test_conjoint_balanced_oracle_and_invariances():
    N, a, b = 100, 4, 2
    liking, design, prods = balanced_conjoint(N=N, a=a, b=b, seed=11)
    t0 = time.time()
    long = melt(liking, design, None)
    spec = build_terms(["A", "B"], [], "struct1", long.factors)
    fit = fit_reml(long, spec)
    fx = {r["term"]: r for r in anova_fixed(fit)}
    lsm_a = np.array([r["estimate"] for r in ls_means(fit, ("A",))])
    lsm_b = np.array([r["estimate"] for r in ls_means(fit, ("B",))])
    elapsed = time.time() - t0
    o = classical_two_factor_oracle(liking.values, prods, a, b, N)
    np.testing.assert_allclose(lsm_a, o["A_means"], atol=1e-9)
    np.testing.assert_allclose(lsm_b, o["B_means"], atol=1e-9)
    assert abs(fx["A"]["F"] - o["F_A"]) < 1e-6
    assert abs(fx["B"]["F"] - o["F_B"]) < 1e-6
    assert abs(fx["A"]["den_df"] - o["df_A"]) < 1e-3
    assert abs(fx["B"]["den_df"] - o["df_B"]) < 1e-3
    assert elapsed < 30.0, f"conjoint fit took {elapsed:.1f}s"

    # shift invariance
    long2 = melt(
        Dataset(id="l2", name="lik", role="liking", values=liking.values + 7.5,
                row_labels=liking.row_labels, col_labels=liking.col_labels),
        design, None,
    )
    fit2 = fit_reml(long2, spec)
    fx2 = {r["term"]: r for r in anova_fixed(fit2)}
    lsm_a2 = np.array([r["estimate"] for r in ls_means(fit2, ("A",))])
    np.testing.assert_allclose(lsm_a2, lsm_a + 7.5, atol=1e-9)
    for t in fx:
        assert abs(fx2[t]["F"] - fx[t]["F"]) < 1e-9
        assert abs(fx2[t]["p"] - fx[t]["p"]) < 1e-9

    # row-permutation invariance
    perm_r = np.arange(liking.shape[0])[::-1]
    perm_c = np.arange(liking.shape[1])[::-1]
    lik3 = Dataset(id="l3", name="lik", role="liking",
                   values=liking.values[np.ix_(perm_r, perm_c)].copy(),
                   row_labels=[liking.row_labels[i] for i in perm_r],
                   col_labels=[liking.col_labels[i] for i in perm_c])
    des3 = Dataset(id="d3", name="des", role="design",
                   values=design.values[perm_r].copy(),
                   row_labels=[design.row_labels[i] for i in perm_r],
                   col_labels=design.col_labels)
    fit3 = fit_reml(melt(lik3, des3, None), spec)
    fx3 = {r["term"]: r for r in anova_fixed(fit3)}
    lsm_a3 = np.array([r["estimate"] for r in ls_means(fit3, ("A",))])
    np.testing.assert_allclose(lsm_a3, lsm_a, atol=1e-9)
    for t in fx:
        assert abs(fx3[t]["F"] - fx[t]["F"]) < 1e-9
    ok(f"conjoint-balanced-oracle-and-invariances (N=100, {elapsed:.1f}s)")


def test_random_effect_elimination_over_seeds():
    successes = 0
    for seed in range(100):
        liking, design, _ = balanced_conjoint(
            N=14, seed=seed, sa=1.2, sb=0.0, sc=0.9, se=0.7,
            alpha_scale=0.8, beta_scale=0.5,
        )
        long = melt(liking, design, None)
        spec = build_terms(["A", "B"], [], "struct1", long.factors)
        fit = fit_reml(long, spec, precision="standard")
        rows, _ = lr_test_random(fit, alpha=0.1)
        r = {row["term"]: row for row in rows}
        if (r["B:Consumer"]["eliminated"] and not r["A:Consumer"]["eliminated"]
                and r["A:Consumer"]["p"] < 0.001):
            successes += 1
    assert successes >= 95, f"only {successes}/100 seeds succeeded"
    ok(f"random-effect-elimination ({successes}/100 seeds)")


def test_bonferroni_multiplier():
    liking, design, _ = balanced_conjoint(N=12, seed=3)
    long = melt(liking, design, None)
    spec = build_terms(["A", "B"], [], "struct1", long.factors)
    fit = fit_reml(long, spec)
    rows = pairwise_differences(fit, ("A",))
    assert len(rows) == 6
    for r in rows:
        assert abs(r["p_adjusted"] - min(1.0, r["p"] * 6)) < 1e-12
    # the documented multiplier pattern from the reference table
    assert abs(min(1.0, 0.0019 * 6) - 0.0114) < 1e-12
    ok("bonferroni-six-contrasts")


def test_sector_counts_and_rotation():
    rng = np.random.default_rng(55)
    pts = rng.normal(size=(81, 2))
    for n in range(2, 13):
        sa = assign_sectors(pts, n)
        assert sum(sa.sector_counts) == 81
        ang = 2 * math.pi / n
        R = np.array([[math.cos(ang), -math.sin(ang)],
                      [math.sin(ang), math.cos(ang)]])
        sb = assign_sectors(pts @ R.T, n)
        assert sb.sector_counts == sa.sector_counts[-1:] + sa.sector_counts[:-1]
    ok("sector-counts-and-rotation (n=2..12)")


def test_roundtrips_and_service_determinism(tmp_path):
    # CSV round trip, bit exact
    rng = np.random.default_rng(9)
    values = rng.normal(size=(6, 4))
    values[2, 1] = np.nan
    d = Dataset(id="rt", name="rt", role="liking", values=values,
                row_labels=[f"P{i}" for i in range(6)],
                col_labels=[f"C{i}" for i in range(4)])
    opts = ImportOptions(delimiter="tab", decimal_mark="comma", dataset_name="rt",
                         role="liking")
    d2 = import_dataset(export_delimited(d, opts), opts)
    np.testing.assert_array_equal(np.nan_to_num(d2.values, nan=-1),
                                  np.nan_to_num(d.values, nan=-1))
    # JSON round trip
    assert Dataset.from_json(d.to_json()).to_json() == d.to_json()

    # CLI golden: identical runs produce identical JSON bytes
    runner = CliRunner()
    f = tmp_path / "desc.csv"
    lines = ["," + ",".join(f"A{i}" for i in range(5))]
    for j in range(5):
        lines.append(f"P{j}," + ",".join(
            f"{v:.4f}" for v in np.random.default_rng(70 + j).uniform(1, 9, 5)))
    f.write_text("\n".join(lines) + "\n")
    sd = str(tmp_path / "cli-session")
    assert runner.invoke(cli_main, ["import", str(f), "--role", "descriptive",
                                    "--name", "desc", "--session-dir", sd]).exit_code == 0
    blobs = []
    for sub in ("g1", "g2"):
        out = tmp_path / sub
        assert runner.invoke(cli_main, [
            "analyze", "pca", "desc", "--components", "2", "--format", "json",
            "--out", str(out), "--session-dir", sd,
        ]).exit_code == 0
        blobs.append((out / "pca.json").read_bytes())
    assert blobs[0] == blobs[1]

    # service restart reproduces the dataset listing byte for byte
    csv_body = f.read_bytes()
    app = create_app(tmp_path / "srv")
    with TestClient(app) as c:
        r = c.post("/datasets", files={"file": ("desc.csv", csv_body, "text/csv")},
                   data={"options": json.dumps({"role": "descriptive",
                                                "delimiter": "comma"})})
        assert r.status_code == 201
        ds_id = r.json()["id"]
        listing1 = c.get("/datasets").content
        req = {"method": "pca", "dataset": ds_id, "components": 2}
        j1 = c.post("/models", json=req).json()["id"]
        j2 = c.post("/models", json=req).json()["id"]
        b1 = c.get(f"/models/{j1}").json()["result"]
        b2 = c.get(f"/models/{j2}").json()["result"]
        assert json.dumps(b1, sort_keys=True) == json.dumps(b2, sort_keys=True)
    with TestClient(create_app(tmp_path / "srv")) as c2:
        listing2 = c2.get("/datasets").content
    assert listing1 == listing2
    ok("roundtrips-and-service-determinism")
