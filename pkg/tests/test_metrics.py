import math
from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vflinv import data as D
from vflinv import metrics as M
from vflinv.rng import make_rng

SCHEMA = D.Schema(
    (
        D.Categorical("a", ("x", "y", "z")),
        D.Continuous("b", 0, 10),
        D.Categorical("c", ("p", "q")),
        D.Continuous("d", -5, 5),
        D.Continuous("e", 100, 200),
    )
)


def brute_force(t, r, eps):
    """Direct per-cell loop over the scoring rule on encoded rows; returns the hit matrix and exact score."""
    hits = []
    for i in range(len(t)):
        row = []
        for c, s in SCHEMA.groups():
            if isinstance(c, D.Categorical):
                row.append(int(np.argmax(t[i, s]) == np.argmax(r[i, s])))
            else:
                x, xh = t[i, s.start], min(1.0, max(-1.0, r[i, s.start]))
                row.append(int(x - eps <= xh <= x + eps))
        hits.append(row)
    hits = np.array(hits)
    return hits, float(Fraction(int(hits.sum()), hits.size))


def test_matches_brute_force_on_1000_pairs():
    rng = make_rng(0, "metric")
    t = D.generate_fake(SCHEMA, 1000, 1).X
    r = D.generate_fake(SCHEMA, 1000, 2).X
    # half the reconstructions sit near the truth, a few exactly on the band edge
    close = rng.random(1000) < 0.5
    r[close] = t[close] + rng.uniform(-0.3, 0.3, size=r[close].shape)
    edge = rng.random(1000) < 0.05
    r[edge, 3] = t[edge, 3] + 0.25
    hits, score = brute_force(t, r, 0.25)
    dh, ch = M.cell_hits(t, r, SCHEMA, 0.25)
    cat = [i for i, c in enumerate(SCHEMA.columns) if isinstance(c, D.Categorical)]
    cont = [i for i, c in enumerate(SCHEMA.columns) if isinstance(c, D.Continuous)]
    assert np.array_equal(dh, hits[:, cat]) and np.array_equal(ch, hits[:, cont])
    got = M.tabular_accuracy(t, r, SCHEMA, 0.25)
    assert got.overall == score
    assert got.discrete == float(Fraction(int(hits[:, cat].sum()), hits[:, cat].size))
    assert got.continuous == float(Fraction(int(hits[:, cont].sum()), hits[:, cont].size))
    # raw row sets score the same as their encodings
    assert M.tabular_accuracy(D.decode(t, SCHEMA), D.decode(D.snap(r, SCHEMA), SCHEMA), SCHEMA, 0.25).discrete == got.discrete


def test_identity_and_hand_example():
    t = D.generate_fake(SCHEMA, 50, 0)
    got = M.tabular_accuracy(t.X, t.X, SCHEMA)
    assert (got.overall, got.discrete, got.continuous) == (1.0, 1.0, 1.0)
    two = D.Schema((D.Categorical("k", ("a", "b")), D.Continuous("x", -1, 1)))
    acc = M.tabular_accuracy(np.array([[1, 0, 0.0]]), np.array([[1, 0, 0.3]]), two, 0.2)
    assert acc.overall == 0.5 and acc.discrete == 1.0 and acc.continuous == 0.0


def test_closed_interval_boundary():
    one = D.Schema((D.Continuous("x", -1, 1),))
    assert M.tabular_accuracy(np.array([[0.0]]), np.array([[0.25]]), one, 0.25).overall == 1.0
    assert M.tabular_accuracy(np.array([[0.5]]), np.array([[0.25]]), one, 0.25).overall == 1.0
    assert M.tabular_accuracy(np.array([[0.0]]), np.array([[0.2500001]]), one, 0.25).overall == 0.0


def test_accuracy_errors():
    t = D.generate_fake(SCHEMA, 5, 0)
    with pytest.raises(ValueError):
        M.tabular_accuracy(t.X, t.X[:, :-1], SCHEMA)
    other = D.Schema((D.Continuous("x", 0, 1),))
    with pytest.raises(ValueError):
        M.tabular_accuracy(t, D.generate_fake(other, 5, 0), SCHEMA)
    with pytest.raises(ValueError):
        M.tabular_accuracy(t.X[:0], t.X[:0], SCHEMA)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 30), st.floats(0, 1))
def test_overall_is_weighted_combination(seed, n, eps):
    t = D.generate_fake(SCHEMA, n, seed)
    r = D.generate_fake(SCHEMA, n, seed + 1)
    a = M.tabular_accuracy(t.X, r.X, SCHEMA, eps)
    m, l = a.n_discrete, a.n_continuous
    assert abs(a.overall - (m * a.discrete + l * a.continuous) / (m + l)) < 1e-12
    assert 0 <= a.overall <= 1


def test_random_baseline_near_expectation():
    t = D.generate_fake(SCHEMA, 20000, 5)
    b = M.random_baseline(t.X, SCHEMA, 9)
    # categorical chance 1/k; continuous chance of landing within 0.2 of a uniform point: 0.2 - 0.01
    expected_disc = (1 / 3 + 1 / 2) / 2
    assert abs(b.discrete - expected_disc) < 0.01
    assert abs(b.continuous - (0.2 - 0.01)) < 0.01


# images


def test_psnr_cases():
    a = make_rng(0, "img").random((8, 8))
    assert M.psnr(a, a) == math.inf
    assert M.jsonable({"psnr": M.psnr(a, a)}) == {"psnr": M.PSNR_INF_TOKEN}
    assert M.psnr(np.zeros((4, 4)), np.ones((4, 4)), 1.0) == 0.0
    assert M.psnr(np.zeros((4, 4)), np.full((4, 4), 255.0), 255.0) == 0.0
    with pytest.raises(ValueError):
        M.psnr(np.zeros(3), np.zeros(4))


def test_psnr_monotone_in_noise():
    a = make_rng(1, "img").random((16, 16))
    n = make_rng(2, "img").normal(size=(16, 16))
    vals = [M.psnr(a, a + s * n) for s in (0.01, 0.05, 0.1, 0.5, 1.0)]
    assert all(x > y for x, y in zip(vals, vals[1:]))


@pytest.mark.parametrize("side", [8, 16, 24])
def test_ssim_cases(side):
    rng = make_rng(side, "ssim")
    a = rng.uniform(-1, 1, size=(side, side))
    b = rng.uniform(-1, 1, size=(side, side))
    assert M.ssim(a, a) == pytest.approx(1.0, abs=1e-12)
    assert M.ssim(a, b) == pytest.approx(M.ssim(b, a), abs=1e-15)
    assert -1 <= M.ssim(a, b) <= 1
    for c in (-1.0, -0.5, 0.0):
        assert M.ssim(np.full((side, side), c), np.full((side, side), c + 2.0), 2.0) < 0.1


def test_ssim_constant_images_closed_form():
    # for constants, SSIM reduces to the luminance term (2 mu_a mu_b + C1) / (mu_a^2 + mu_b^2 + C1)
    c1 = (0.01 * 2.0) ** 2
    for c in (-1.0, -0.5, 0.0, 0.5):
        expected = (2 * c * (c + 2) + c1) / (c**2 + (c + 2) ** 2 + c1)
        assert M.ssim(np.full((8, 8), c), np.full((8, 8), c + 2.0), 2.0) == pytest.approx(expected, abs=1e-12)


def test_ssim_window_policy_and_errors():
    rng = make_rng(3, "ssim")
    a = rng.random((16, 16))
    b = a + 0.1 * rng.normal(size=(16, 16))
    assert M.ssim(a, b) == M.ssim(a, b, window=8)
    stack_a, stack_b = np.stack([a, b]), np.stack([b, a])
    assert M.ssim(stack_a, stack_b) == pytest.approx(M.ssim(a, b), abs=1e-12)
    with pytest.raises(ValueError):
        M.ssim(rng.random((6, 6)), rng.random((6, 6)), window=8)
    with pytest.raises(ValueError):
        M.ssim(a, a[:8])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31))
def test_ssim_identity_property(seed):
    a = make_rng(seed, "p").normal(size=(10, 12)) * 5
    assert M.ssim(a, a, 2.0) == pytest.approx(1.0, abs=1e-12)


# auc


def pairwise_auc(s, y):
    pos, neg = s[y == 1], s[y == 0]
    total = sum(1.0 if p > q else 0.5 if p == q else 0.0 for p, q in product(pos, neg))
    return total / (len(pos) * len(neg))


def test_auc_matches_pairwise_oracle():
    for trial in range(30):
        rng = make_rng(trial, "auc")
        n = int(rng.integers(2, 500))
        y = rng.integers(0, 2, size=n)
        y[0], y[1] = 0, 1
        s = rng.integers(0, 20, size=n).astype(float) if trial % 2 else rng.normal(size=n)
        assert abs(M.roc_auc(s, y) - pairwise_auc(s, y)) < 1e-12


def test_auc_cases():
    y = np.array([0, 0, 1, 1])
    assert M.roc_auc([0.1, 0.2, 0.8, 0.9], y) == 1.0
    assert M.roc_auc([0.9, 0.8, 0.2, 0.1], y) == 0.0
    rng = make_rng(0, "indep")
    assert abs(M.roc_auc(rng.random(20000), rng.integers(0, 2, 20000)) - 0.5) < 0.02
    with pytest.raises(ValueError):
        M.roc_auc([0.1, 0.2], [1, 1])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31))
def test_auc_invariant_under_monotone_transform(seed):
    rng = make_rng(seed, "mono")
    s = rng.normal(size=200)
    y = (rng.random(200) < 0.4).astype(int)
    y[:2] = [0, 1]
    assert M.roc_auc(s, y) == M.roc_auc(np.exp(3 * s) + 7, y)
