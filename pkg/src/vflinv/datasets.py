"""Dataset registry: bundled schemas, raw-file preparation, synthetic sets.

The UCI files are not redistributed.  Download them, then run
``python -m vflinv prepare-data <name> --source <file>`` once; the prepared
CSV lands in the data home (``$VFLINV_DATA`` or ``~/.cache/vflinv``).
"""

from __future__ import annotations

import csv
import os
import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from . import data as D
from .rng import make_rng


@dataclass(frozen=True)
class DatasetInfo:
    name: str
    url: str
    source_file: str
    n_rows: int

    @property
    def csv_name(self) -> str:
        return f"{self.name}.csv"


REGISTRY = {
    "bank": DatasetInfo("bank", "https://archive.ics.uci.edu/dataset/222/bank+marketing",
                        "bank-additional/bank-additional-full.csv", 41188),
    "income": DatasetInfo("income", "https://archive.ics.uci.edu/dataset/2/adult", "adult.data", 32561),
    "credit": DatasetInfo("credit", "https://archive.ics.uci.edu/dataset/350/default+of+credit+card+clients",
                          "default of credit card clients.xls (or the Kaggle UCI_Credit_Card.csv)", 30000),
}
TABULAR = ("bank", "income", "credit")


class DatasetUnavailable(FileNotFoundError):
    pass


def data_home() -> Path:
    return Path(os.environ.get("VFLINV_DATA", Path.home() / ".cache" / "vflinv"))


def bundled_schema(name: str) -> D.Schema:
    text = resources.files("vflinv.resources").joinpath(f"{name}.schema.json").read_text(encoding="utf-8")
    import json

    return D.Schema.from_dict(json.loads(text))


def schema_for(name: str) -> D.Schema:
    """The data-home override if ``prepare`` wrote one, else the bundled schema."""
    override = data_home() / f"{name}.schema.json"
    if override.exists():
        return D.Schema.load(override)
    return bundled_schema(name)


def dataset_path(name: str) -> Path:
    return data_home() / REGISTRY[name].csv_name


def is_available(name: str) -> bool:
    if name == "synthetic":
        return True
    return dataset_path(name).exists()


def load(name: str) -> D.RawDataset:
    if name == "synthetic":
        return make_synthetic_tabular()
    if name not in REGISTRY:
        raise KeyError(f"unknown dataset {name!r}; known: {sorted(REGISTRY) + ['synthetic']}")
    path = dataset_path(name)
    if not path.exists():
        info = REGISTRY[name]
        raise DatasetUnavailable(
            f"{name}: prepared file {path} not found. Download {info.source_file} from {info.url} "
            f"and run `python -m vflinv prepare-data {name} --source <file>`."
        )
    return D.load_dataset(path, schema_for(name))


# ---------------------------------------------------------------------------
# preparation of the original UCI distributions


_ADULT_COLUMNS = [
    "age", "workclass", "fnlwgt", "education", "education-num", "marital-status", "occupation",
    "relationship", "race", "sex", "capital-gain", "capital-loss", "hours-per-week", "native-country", "income",
]


def _read_rows(source: Path, delimiter: str = ",", header: bool = True):
    with open(source, newline="", encoding="utf-8") as fh:
        rows = [[c.strip() for c in r] for r in csv.reader(fh, delimiter=delimiter) if r and any(x.strip() for x in r)]
    return (rows[0], rows[1:]) if header else (None, rows)


def _prepare_income(source: Path):
    _, rows = _read_rows(source, header=False)
    return _ADULT_COLUMNS, rows


def _prepare_bank(source: Path):
    return _read_rows(source, delimiter=";")


def _prepare_credit(source: Path):
    if source.suffix.lower() in (".xls", ".xlsx"):
        import pandas as pd  # needs xlrd/openpyxl

        df = pd.read_excel(source, header=1)
        header = [str(c) for c in df.columns]
        rows = [[str(v) for v in r] for r in df.itertuples(index=False)]
    else:
        header, rows = _read_rows(source)
    header = ["default" if h.lower().replace(".", " ") in ("default payment next month",) else h for h in header]
    if "ID" in header:
        j = header.index("ID")
        header = header[:j] + header[j + 1:]
        rows = [r[:j] + r[j + 1:] for r in rows]
    schema = bundled_schema("credit")
    cat_idx = [header.index(c.name) for c in schema.categorical] + [header.index("default")]
    for r in rows:
        for j in cat_idx:
            r[j] = str(int(float(r[j])))
    return header, rows


_PREPARERS = {"income": _prepare_income, "bank": _prepare_bank, "credit": _prepare_credit}


def prepare(name: str, source) -> Path:
    """Convert a downloaded UCI file into the header-row CSV the loader expects."""
    header, rows = _PREPARERS[name](Path(source))
    schema = bundled_schema(name)
    out = dataset_path(name)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter=schema.delimiter)
        w.writerow(header)
        w.writerows(rows)
    try:
        D.load_dataset(out, schema)
    except D.DataError as err:
        inferred = D.infer_schema(out, [c.name for c in schema.categorical], schema.label.name if schema.label else None,
                                  schema.delimiter)
        inferred.save(data_home() / f"{name}.schema.json")
        warnings.warn(f"{name}: bundled schema rejected the file ({err}); wrote an observed-range schema override")
    return out


# ---------------------------------------------------------------------------
# synthetic data for offline use


def make_synthetic_tabular(n: int = 4000, seed: int = 0) -> D.RawDataset:
    """Small mixed-type dataset with skewed columns and a learnable label."""
    rng = make_rng(seed, "synthetic_tabular")
    z = rng.normal(size=(n, 3))
    cols: list[D.Column] = [
        D.Continuous("age", 18, 90),
        D.Categorical("segment", ("a", "b", "c", "d")),
        D.Continuous("balance", 0, 50000),
        D.Categorical("region", ("north", "south", "east", "west", "centre")),
        D.Continuous("tenure", 0, 40),
        D.Categorical("owns_home", ("no", "yes")),
        D.Continuous("visits", 0, 60),
        D.Categorical("channel", ("web", "phone", "branch")),
    ]
    values = {}
    values["age"] = np.clip(45 + 12 * z[:, 0], 18, 90).round()
    seg_logits = np.stack([z[:, 0], -z[:, 0], z[:, 1], np.zeros(n)], axis=1)
    values["segment"] = _sample_logits(rng, seg_logits)
    values["balance"] = np.clip(np.exp(8 + 0.9 * z[:, 1] + 0.3 * z[:, 0]), 0, 50000).round(2)
    values["region"] = rng.choice(5, size=n, p=[0.35, 0.25, 0.2, 0.15, 0.05])
    values["tenure"] = np.clip(np.abs(10 + 8 * z[:, 2]), 0, 40).round()
    values["owns_home"] = (z[:, 0] + 0.5 * z[:, 2] + 0.5 * rng.normal(size=n) > 0).astype(np.int64)
    values["visits"] = np.clip(rng.poisson(np.exp(1.2 + 0.5 * z[:, 2])), 0, 60).astype(float)
    values["channel"] = _sample_logits(rng, np.stack([z[:, 1], np.zeros(n), -z[:, 0]], axis=1))
    score = (0.8 * z[:, 0] - 0.6 * z[:, 1] + 0.7 * z[:, 2] + 0.8 * (values["segment"] == 2)
             - 0.6 * (values["channel"] == 0) + 0.4 * rng.normal(size=n))
    labels = (score > 0.6).astype(np.int64)
    schema = D.Schema(tuple(cols), D.Label("target", ("0", "1")))
    return D.RawDataset(schema, values, labels)


def _sample_logits(rng, logits):
    p = np.exp(logits - logits.max(axis=1, keepdims=True))
    p /= p.sum(axis=1, keepdims=True)
    u = rng.random(len(p))[:, None]
    return np.minimum((p.cumsum(axis=1) < u).sum(axis=1), p.shape[1] - 1).astype(np.int64)


def make_synthetic_image_dataset(side: int = 16, n: int = 2000, seed: int = 0) -> tuple[D.EncodedDataset, D.FeatureAssignment]:
    """Grayscale rectangles on a textured background, flattened to ``side*side`` pixels in [-1, 1].

    The label says whether the brightest rectangle's centre lies in the upper
    half.  The returned assignment gives the left half of every image to the
    active party and the right half to the target.
    """
    if not 8 <= side <= 32:
        raise ValueError("side must lie in [8, 32]")
    rng = make_rng(seed, "synthetic_images")
    imgs = np.empty((n, side, side))
    labels = np.empty(n, dtype=np.int64)
    yy, xx = np.mgrid[0:side, 0:side]
    for i in range(n):
        img = rng.normal(-0.6, 0.08, size=(side, side))
        best, best_cy = -np.inf, 0.0
        for _ in range(rng.integers(1, 4)):
            h, w = rng.integers(side // 4, side // 2 + 1, size=2)
            y0, x0 = rng.integers(0, side - h + 1), rng.integers(0, side - w + 1)
            level = rng.uniform(-0.2, 0.9)
            img[y0:y0 + h, x0:x0 + w] = level + rng.normal(0, 0.05, size=(h, w))
            if level > best:
                best, best_cy = level, y0 + h / 2
        img += 0.1 * np.sin(2 * np.pi * (xx + yy) / side * rng.uniform(0.5, 2))
        imgs[i] = np.clip(img, -1.0, 1.0)
        labels[i] = int(best_cy < side / 2)
    cols = tuple(D.Continuous(f"p{r}_{c}", -1.0, 1.0) for r in range(side) for c in range(side))
    schema = D.Schema(cols, D.Label("upper", ("0", "1")))
    ds = D.EncodedDataset(schema, imgs.reshape(n, -1), labels)
    left = [f"p{r}_{c}" for r in range(side) for c in range(side // 2)]
    right = [f"p{r}_{c}" for r in range(side) for c in range(side // 2, side)]
    return ds, D.FeatureAssignment((tuple(left), tuple(right)))
