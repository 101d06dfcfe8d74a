import numpy as np
import pytest

from sensokit.dataset import Dataset


def balanced_conjoint(N=20, a=4, b=2, seed=5, sa=0.9, sb=0.5, sc=1.1, se=0.8,
                      alpha_scale=1.0, beta_scale=0.6):
    """Balanced two-design-factor liking data with consumer random effects."""
    rng = np.random.default_rng(seed)
    prods = [(i, j) for i in range(1, a + 1) for j in range(1, b + 1)]
    J = len(prods)
    alpha = rng.normal(0, alpha_scale, a)
    beta = rng.normal(0, beta_scale, b)
    ce = rng.normal(0, sc, N)
    ca = rng.normal(0, sa, (N, a))
    cb = rng.normal(0, sb, (N, b))
    Y = np.zeros((J, N))
    for jj, (ai, bi) in enumerate(prods):
        Y[jj] = 5 + alpha[ai - 1] + beta[bi - 1] + ce + ca[:, ai - 1] + cb[:, bi - 1] \
            + rng.normal(0, se, N)
    liking = Dataset(
        id=f"lik-{seed}", name="liking", role="liking", values=Y,
        row_labels=[f"P{k + 1}" for k in range(J)],
        col_labels=[f"C{n + 1}" for n in range(N)],
    )
    design = Dataset(
        id=f"des-{seed}", name="design", role="design",
        values=np.array(prods, dtype=float),
        row_labels=[f"P{k + 1}" for k in range(J)],
        col_labels=["A", "B"],
    )
    return liking, design, prods


def classical_two_factor_oracle(Y, prods, a, b, N):
    """Balanced mixed-model ANOVA: F against the consumer-interaction MS."""
    y = np.zeros((N, a, b))
    for jj, (ai, bi) in enumerate(prods):
        y[:, ai - 1, bi - 1] = Y[jj, :]
    g = y.mean()
    mi = y.mean(axis=(0, 2))
    mj = y.mean(axis=(0, 1))
    mn = y.mean(axis=(1, 2))
    mni = y.mean(axis=2)
    mnj = y.mean(axis=1)
    SS_A = N * b * np.sum((mi - g) ** 2)
    SS_B = N * a * np.sum((mj - g) ** 2)
    MS_A = SS_A / (a - 1)
    MS_B = SS_B / (b - 1)
    MS_AC = b * np.sum((mni - mn[:, None] - mi[None, :] + g) ** 2) / ((N - 1) * (a - 1))
    MS_BC = a * np.sum((mnj - mn[:, None] - mj[None, :] + g) ** 2) / ((N - 1) * (b - 1))
    return {
        "F_A": MS_A / MS_AC, "F_B": MS_B / MS_BC,
        "df_A": (N - 1) * (a - 1), "df_B": (N - 1) * (b - 1),
        "SS_A": SS_A, "SS_B": SS_B,
        "A_means": mi, "B_means": mj,
    }


@pytest.fixture
def apple_like_datasets():
    """Small liking + descriptive pair with matching product rows."""
    rng = np.random.default_rng(12)
    J, N, K = 5, 16, 6
    liking = Dataset(
        id="apl", name="apple-liking", role="liking",
        values=np.round(rng.uniform(1, 9, size=(J, N))),
        row_labels=[f"P{i + 1}" for i in range(J)],
        col_labels=[f"C{i + 1}" for i in range(N)],
    )
    descriptive = Dataset(
        id="apd", name="apple-descriptive", role="descriptive",
        values=rng.uniform(1, 9, size=(J, K)),
        row_labels=[f"P{i + 1}" for i in range(J)],
        col_labels=[f"Attr{i + 1}" for i in range(K)],
    )
    return liking, descriptive
