"""Reconstruction and task metrics.

Tabular accuracy scores every source cell of a row: a categorical cell counts
when the recovered category equals the true one, a continuous cell counts when
the recovered value lies in the closed band ``[x - eps, x + eps]``.  ``eps``
is measured on the encoded ``[-1, 1]`` scale, so the default 0.2 is a tenth of
a column's declared range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.stats import rankdata

from . import data as D

DEFAULT_EPSILON = 0.2
PSNR_INF_TOKEN = "inf"  # how an infinite PSNR is written into JSON reports


@dataclass(frozen=True)
class MetricConfig:
    epsilon: float = DEFAULT_EPSILON
    max_value: float = 2.0  # width of the encoded range [-1, 1]

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        if self.max_value <= 0:
            raise ValueError("max_value must be positive")


@dataclass(frozen=True)
class AccuracyTriple:
    overall: float
    discrete: float
    continuous: float
    n_discrete: int
    n_continuous: int

    def to_dict(self) -> dict:
        return {
            "overall": self.overall,
            "discrete": self.discrete,
            "continuous": self.continuous,
            "n_discrete": self.n_discrete,
            "n_continuous": self.n_continuous,
        }


def _as_encoded(x, schema: D.Schema) -> np.ndarray:
    if isinstance(x, D.RawDataset):
        if x.schema != schema:
            raise ValueError("row set schema does not match the scoring schema")
        return D.encode(x).X
    if isinstance(x, D.EncodedDataset):
        if x.schema != schema:
            raise ValueError("row set schema does not match the scoring schema")
        return x.X
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != schema.encoded_width:
        raise ValueError(f"expected encoded rows of width {schema.encoded_width}, got shape {x.shape}")
    return x


def cell_hits(truth, reconstruction, schema: D.Schema, epsilon: float = DEFAULT_EPSILON):
    """Boolean hit matrices ``(discrete_hits, continuous_hits)``, one column per source column.

    Both inputs may be raw row sets, encoded datasets or encoded matrices.  An
    encoded reconstruction is read the same way ``reconstruct`` decodes it:
    argmax per one-hot group (ties to the lowest index) and clamping of
    continuous entries to ``[-1, 1]``.
    """
    t = _as_encoded(truth, schema)
    r = _as_encoded(reconstruction, schema)
    if t.shape != r.shape:
        raise ValueError(f"truth has shape {t.shape}, reconstruction {r.shape}")
    disc, cont = [], []
    for c, s in schema.groups():
        if isinstance(c, D.Categorical):
            disc.append(np.argmax(t[:, s], axis=1) == np.argmax(r[:, s], axis=1))
        else:
            x, xh = t[:, s.start], np.clip(r[:, s.start], -1.0, 1.0)
            cont.append((x - epsilon <= xh) & (xh <= x + epsilon))
    n = len(t)
    as_mat = lambda cols: np.stack(cols, axis=1) if cols else np.zeros((n, 0), dtype=bool)
    return as_mat(disc), as_mat(cont)


def tabular_accuracy(truth, reconstruction, schema: D.Schema, cfg: MetricConfig | float = DEFAULT_EPSILON) -> AccuracyTriple:
    eps = cfg.epsilon if isinstance(cfg, MetricConfig) else float(cfg)
    if eps < 0:
        raise ValueError("epsilon must be non-negative")
    dh, ch = cell_hits(truth, reconstruction, schema, eps)
    m, l = dh.shape[1], ch.shape[1]
    if len(dh) == 0:
        raise ValueError("cannot score an empty row set")
    # integer hit counts over integer cell counts: one correctly rounded division each
    n = len(dh)
    hd, hc = int(dh.sum()), int(ch.sum())
    disc = hd / (n * m) if m else math.nan
    cont = hc / (n * l) if l else math.nan
    overall = (hd + hc) / (n * (m + l))
    return AccuracyTriple(overall, disc, cont, m, l)


def random_baseline(truth, schema: D.Schema, seed: int, epsilon: float = DEFAULT_EPSILON) -> AccuracyTriple:
    """Score of a guesser that draws every cell uniformly from the schema."""
    t = _as_encoded(truth, schema)
    guess = D.generate_fake(schema, len(t), seed).X
    return tabular_accuracy(t, guess, schema, epsilon)


# ---------------------------------------------------------------------------
# images


def psnr(truth, reconstruction, max_value: float = 2.0) -> float:
    a = np.asarray(truth, dtype=np.float64)
    b = np.asarray(reconstruction, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(max_value**2 / mse)


def _ssim_map(a, b, c1, c2):
    mu_a, mu_b = a.mean(axis=(-2, -1)), b.mean(axis=(-2, -1))
    da = a - mu_a[..., None, None]
    db = b - mu_b[..., None, None]
    va, vb = (da * da).mean(axis=(-2, -1)), (db * db).mean(axis=(-2, -1))
    cov = (da * db).mean(axis=(-2, -1))
    return ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) / ((mu_a**2 + mu_b**2 + c1) * (va + vb + c2))


def ssim(truth, reconstruction, max_value: float = 2.0, window: int | None = None) -> float:
    """Structural similarity of two images (or the mean over a stack of images).

    By default images smaller than 16x16 use one global window and larger ones
    an 8x8 uniform window slid with stride 1; ``window`` forces a sliding
    window of that size.  Statistics use population (``1/N``) moments.
    """
    a = np.asarray(truth, dtype=np.float64)
    b = np.asarray(reconstruction, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if a.ndim == 2:
        a, b = a[None], b[None]
    if a.ndim != 3:
        raise ValueError("ssim expects an image or a stack of images")
    h, w = a.shape[-2:]
    c1, c2 = (0.01 * max_value) ** 2, (0.03 * max_value) ** 2
    if window is None and min(h, w) < 16:
        return float(np.mean(_ssim_map(a, b, c1, c2)))
    win = 8 if window is None else int(window)
    if h < win or w < win:
        raise ValueError(f"image {h}x{w} is smaller than the {win}x{win} window")
    pa = sliding_window_view(a, (win, win), axis=(-2, -1))
    pb = sliding_window_view(b, (win, win), axis=(-2, -1))
    return float(np.mean(_ssim_map(pa, pb, c1, c2)))


# ---------------------------------------------------------------------------
# task quality


def roc_auc(scores, labels) -> float:
    """Mann-Whitney estimate of P(score_pos > score_neg), ties counted as one half."""
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = np.asarray(labels).ravel()
    if s.shape != y.shape:
        raise ValueError("scores and labels differ in length")
    pos = y == 1
    n1, n0 = int(pos.sum()), int((~pos).sum())
    if n1 == 0 or n0 == 0:
        raise ValueError("roc_auc needs both classes present")
    ranks = rankdata(s)
    return float((ranks[pos].sum() - n1 * (n1 + 1) / 2.0) / (n1 * n0))


def jsonable(value):
    """Map non-finite floats to report tokens, recursively."""
    if isinstance(value, dict):
        return {k: jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isinf(v):
            return PSNR_INF_TOKEN if v > 0 else "-inf"
        if math.isnan(v):
            return None
        return v
    if isinstance(value, np.integer):
        return int(value)
    return value
