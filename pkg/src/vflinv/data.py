"""Schema-driven tabular data: loading, encoding, splitting and sampling.

Encoded layout: categorical columns become one-hot groups, continuous columns
are mapped affinely from their declared ``[lo, hi]`` onto ``[-1, 1]``.  Every
dataset object carries ``row_ids`` pointing back into the loaded file so that
disjointness between training, auxiliary, leaked and attacked rows can be
audited.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from .rng import make_rng

SCHEMA_FORMAT = "vflinv-schema/1"


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class Categorical:
    name: str
    categories: tuple[str, ...]

    kind = "categorical"

    def __post_init__(self):
        cats = tuple(str(c) for c in self.categories)
        if not cats:
            raise DataError(f"categorical column {self.name!r} has no categories")
        if len(set(cats)) != len(cats):
            raise DataError(f"categorical column {self.name!r} has duplicate categories")
        object.__setattr__(self, "categories", cats)

    @property
    def width(self) -> int:
        return len(self.categories)


@dataclass(frozen=True)
class Continuous:
    name: str
    lo: float
    hi: float

    kind = "continuous"

    def __post_init__(self):
        if not float(self.lo) < float(self.hi):
            raise DataError(f"continuous column {self.name!r} needs lo < hi, got [{self.lo}, {self.hi}]")
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))

    @property
    def width(self) -> int:
        return 1


Column = Union[Categorical, Continuous]


@dataclass(frozen=True)
class Label:
    name: str
    classes: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(str(c) for c in self.classes))
        if len(self.classes) < 2:
            raise DataError("a label needs at least two classes")


@dataclass(frozen=True)
class Schema:
    columns: tuple[Column, ...]
    label: Label | None = None
    delimiter: str = ","

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            dup = sorted({n for n in names if names.count(n) > 1})
            raise DataError(f"duplicate column names {dup}")

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    @property
    def categorical(self) -> list[Categorical]:
        return [c for c in self.columns if isinstance(c, Categorical)]

    @property
    def continuous(self) -> list[Continuous]:
        return [c for c in self.columns if isinstance(c, Continuous)]

    @property
    def encoded_width(self) -> int:
        return sum(c.width for c in self.columns)

    def column(self, name: str) -> Column:
        for c in self.columns:
            if c.name == name:
                return c
        raise KeyError(name)

    def groups(self) -> list[tuple[Column, slice]]:
        """Each source column with the slice of encoded columns it occupies."""
        out, start = [], 0
        for c in self.columns:
            out.append((c, slice(start, start + c.width)))
            start += c.width
        return out

    def encoded_source(self) -> np.ndarray:
        """Index of the source column behind every encoded column."""
        return np.repeat(np.arange(len(self.columns)), [c.width for c in self.columns])

    def subset(self, names: Iterable[str]) -> "Schema":
        wanted = list(names)
        missing = set(wanted) - set(self.names)
        if missing:
            raise DataError(f"unknown columns {sorted(missing)}")
        return Schema(tuple(self.column(n) for n in wanted), self.label, self.delimiter)

    # ---- serialization -------------------------------------------------
    def to_dict(self) -> dict:
        cols = []
        for c in self.columns:
            if isinstance(c, Categorical):
                cols.append({"name": c.name, "kind": "categorical", "categories": list(c.categories)})
            else:
                cols.append({"name": c.name, "kind": "continuous", "range": [c.lo, c.hi]})
        d: dict = {"format": SCHEMA_FORMAT, "delimiter": self.delimiter, "columns": cols}
        if self.label is not None:
            d["label"] = {"name": self.label.name, "classes": list(self.label.classes)}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Schema":
        if d.get("format") != SCHEMA_FORMAT:
            raise DataError(f"schema 'format' must be {SCHEMA_FORMAT!r}, got {d.get('format')!r}")
        unknown = set(d) - {"format", "delimiter", "columns", "label", "description"}
        if unknown:
            raise DataError(f"unknown schema keys {sorted(unknown)}")
        cols: list[Column] = []
        for i, c in enumerate(d["columns"]):
            kind = c.get("kind")
            if kind == "categorical":
                cols.append(Categorical(c["name"], tuple(c["categories"])))
            elif kind == "continuous":
                lo, hi = c["range"]
                cols.append(Continuous(c["name"], lo, hi))
            else:
                raise DataError(f"schema column {i} ({c.get('name')!r}) has unknown kind {kind!r}")
        label = None
        if d.get("label") is not None:
            label = Label(d["label"]["name"], tuple(d["label"]["classes"]))
        return cls(tuple(cols), label, d.get("delimiter", ","))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Schema":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass
class RawDataset:
    """Validated raw values: category codes for categoricals, floats for continuous."""

    schema: Schema
    values: dict[str, np.ndarray]
    labels: np.ndarray | None = None
    row_ids: np.ndarray | None = None

    def __post_init__(self):
        n = len(self)
        if self.row_ids is None:
            self.row_ids = np.arange(n)
        for c in self.schema.columns:
            v = self.values[c.name]
            if len(v) != n:
                raise DataError(f"column {c.name!r} has {len(v)} rows, expected {n}")

    def __len__(self) -> int:
        if not self.schema.columns:
            return 0 if self.labels is None else len(self.labels)
        return len(self.values[self.schema.columns[0].name])

    def rows(self) -> list[dict]:
        """Human-readable rows (categories as strings)."""
        out = []
        for i in range(len(self)):
            row = {}
            for c in self.schema.columns:
                v = self.values[c.name][i]
                row[c.name] = c.categories[int(v)] if isinstance(c, Categorical) else float(v)
            out.append(row)
        return out


@dataclass
class EncodedDataset:
    schema: Schema
    X: np.ndarray
    y: np.ndarray | None = None
    row_ids: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        if self.X.ndim != 2 or self.X.shape[1] != self.schema.encoded_width:
            raise DataError(f"feature matrix shape {self.X.shape} does not match schema width {self.schema.encoded_width}")
        if self.row_ids is None:
            self.row_ids = np.arange(len(self.X))
        self.row_ids = np.asarray(self.row_ids)
        if len(self.row_ids) != len(self.X):
            raise DataError("row_ids length does not match feature matrix")
        if self.y is not None and len(self.y) != len(self.X):
            raise DataError("label length does not match feature matrix")

    def __len__(self) -> int:
        return len(self.X)

    @property
    def column_groups(self) -> list[tuple[Column, slice]]:
        return self.schema.groups()

    def take(self, positions) -> "EncodedDataset":
        positions = np.asarray(positions, dtype=np.int64)
        return EncodedDataset(
            self.schema,
            self.X[positions],
            None if self.y is None else self.y[positions],
            self.row_ids[positions],
        )

    def select(self, names: Sequence[str]) -> "EncodedDataset":
        sub = self.schema.subset(names)
        groups = dict((c.name, s) for c, s in self.schema.groups())
        cols = np.concatenate([np.arange(groups[n].start, groups[n].stop) for n in names]) if names else np.zeros(0, int)
        return EncodedDataset(sub, self.X[:, cols], self.y, self.row_ids)

    def positions_of(self, row_ids) -> np.ndarray:
        lookup = {int(r): i for i, r in enumerate(self.row_ids)}
        try:
            return np.array([lookup[int(r)] for r in row_ids], dtype=np.int64)
        except KeyError as e:
            raise DataError(f"row id {e.args[0]} not present") from None


# ---------------------------------------------------------------------------
# loading and encoding


def load_dataset(path, schema: Schema, delimiter: str | None = None) -> RawDataset:
    """Read a header-row delimited file and validate it against ``schema``."""
    delimiter = delimiter or schema.delimiter
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        index = {h: i for i, h in enumerate(header)}
        wanted = schema.names + ([schema.label.name] if schema.label else [])
        for name in wanted:
            if name not in index:
                raise DataError(f"{path}: missing column {name!r}")
        lookups = {c.name: {v: k for k, v in enumerate(c.categories)} for c in schema.categorical}
        label_lookup = {v: k for k, v in enumerate(schema.label.classes)} if schema.label else None
        cols: dict[str, list] = {c.name: [] for c in schema.columns}
        labels: list[int] = []
        for r, row in enumerate(reader):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            for c in schema.columns:
                cell = row[index[c.name]].strip()
                if isinstance(c, Categorical):
                    code = lookups[c.name].get(cell)
                    if code is None:
                        raise DataError(f"row {r}: unknown category {cell!r} for column {c.name!r}")
                    cols[c.name].append(code)
                else:
                    try:
                        v = float(cell)
                    except ValueError:
                        raise DataError(f"row {r}: non-numeric value {cell!r} for column {c.name!r}") from None
                    if not c.lo <= v <= c.hi:
                        raise DataError(f"row {r}: value {v} for column {c.name!r} outside declared range [{c.lo}, {c.hi}]")
                    cols[c.name].append(v)
            if label_lookup is not None:
                cell = row[index[schema.label.name]].strip()
                if cell not in label_lookup:
                    raise DataError(f"row {r}: unknown label {cell!r}")
                labels.append(label_lookup[cell])
    values = {
        c.name: np.asarray(cols[c.name], dtype=np.int64 if isinstance(c, Categorical) else np.float64)
        for c in schema.columns
    }
    return RawDataset(schema, values, np.asarray(labels, dtype=np.int64) if label_lookup is not None else None)


def write_csv(raw: RawDataset, path, delimiter: str = ",") -> None:
    schema = raw.schema
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter=delimiter)
        header = schema.names + ([schema.label.name] if schema.label and raw.labels is not None else [])
        w.writerow(header)
        for i, row in enumerate(raw.rows()):
            cells = [row[n] if isinstance(row[n], str) else repr(row[n]) for n in schema.names]
            if len(header) > len(schema.names):
                cells.append(schema.label.classes[int(raw.labels[i])])
            w.writerow(cells)


def encode(raw: RawDataset) -> EncodedDataset:
    n = len(raw)
    X = np.zeros((n, raw.schema.encoded_width))
    for c, s in raw.schema.groups():
        v = raw.values[c.name]
        if isinstance(c, Categorical):
            X[np.arange(n), s.start + v.astype(np.int64)] = 1.0
        else:
            X[:, s.start] = 2.0 * (v - c.lo) / (c.hi - c.lo) - 1.0
    return EncodedDataset(raw.schema, X, raw.labels, raw.row_ids)


def snap(X: np.ndarray, schema: Schema) -> np.ndarray:
    """Project raw network outputs onto valid encodings.

    One-hot groups become the indicator of their argmax (ties go to the lowest
    index); continuous entries are clamped to ``[-1, 1]``.
    """
    X = np.asarray(X, dtype=np.float64)
    out = np.zeros_like(X)
    rows = np.arange(len(X))
    for c, s in schema.groups():
        if isinstance(c, Categorical):
            out[rows, s.start + np.argmax(X[:, s], axis=1)] = 1.0
        else:
            out[:, s] = np.clip(X[:, s], -1.0, 1.0)
    return out


def decode(X: np.ndarray | EncodedDataset, schema: Schema | None = None) -> RawDataset:
    if isinstance(X, EncodedDataset):
        schema, labels, row_ids, X = X.schema, X.y, X.row_ids, X.X
    else:
        labels, row_ids = None, None
    assert schema is not None
    values = {}
    for c, s in schema.groups():
        block = X[:, s]
        if isinstance(c, Categorical):
            values[c.name] = np.argmax(block, axis=1).astype(np.int64)
        else:
            values[c.name] = (np.clip(block[:, 0], -1.0, 1.0) + 1.0) / 2.0 * (c.hi - c.lo) + c.lo
    return RawDataset(schema, values, labels, row_ids)


def infer_schema(path, categorical: Sequence[str], label: str | None = None, delimiter: str = ",",
                 exclude: Sequence[str] = ()) -> Schema:
    """Build a schema from a file: observed categories, observed min/max ranges."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        header = [h.strip() for h in next(reader)]
        data = [[c.strip() for c in row] for row in reader if row]
    cols: list[Column] = []
    for j, name in enumerate(header):
        if name == label or name in exclude:
            continue
        cells = [row[j] for row in data]
        if name in categorical:
            cols.append(Categorical(name, tuple(sorted(set(cells), key=_natural_key))))
        else:
            v = np.asarray(cells, dtype=np.float64)
            lo, hi = float(v.min()), float(v.max())
            cols.append(Continuous(name, lo, hi if hi > lo else lo + 1.0))
    lab = None
    if label is not None:
        j = header.index(label)
        lab = Label(label, tuple(sorted({row[j] for row in data}, key=_natural_key)))
    return Schema(tuple(cols), lab, delimiter)


def _natural_key(s: str):
    try:
        return (0, float(s), s)
    except ValueError:
        return (1, 0.0, s)


# ---------------------------------------------------------------------------
# splitting and sampling


def split_train_holdout(ds: EncodedDataset, train_fraction: float, seed: int) -> tuple[EncodedDataset, EncodedDataset]:
    if not 0.0 < train_fraction < 1.0:
        raise DataError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    order = make_rng(seed, "split_train_holdout").permutation(len(ds))
    n_train = int(np.floor(train_fraction * len(ds)))
    return ds.take(np.sort(order[:n_train])), ds.take(np.sort(order[n_train:]))


@dataclass(frozen=True)
class FeatureAssignment:
    """Source columns owned by each party, in party order (party 0 is active)."""

    parties: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "parties", tuple(tuple(p) for p in self.parties))

    def validate(self, schema: Schema) -> None:
        if len(self.parties) < 2:
            raise DataError("VFL requires at least two parties")
        seen: dict[str, int] = {}
        for k, cols in enumerate(self.parties):
            if not cols:
                raise DataError(f"party {k} owns no columns")
            for c in cols:
                if c not in schema.names:
                    raise DataError(f"party {k}: unknown column {c!r}")
                if c in seen:
                    raise DataError(f"column {c!r} assigned to parties {seen[c]} and {k}")
                seen[c] = k
        missing = [n for n in schema.names if n not in seen]
        if missing:
            raise DataError(f"columns not assigned to any party: {missing}")

    @classmethod
    def from_ratio(cls, schema: Schema, target_ratio: float = 0.5) -> "FeatureAssignment":
        """Two parties; the target (party 1) gets ``target_ratio`` of each column kind.

        Columns are picked evenly spaced through the schema order, separately
        for categorical and continuous columns, so an equal split alternates.
        """
        if not 0.0 < target_ratio < 1.0:
            raise DataError(f"target_ratio must lie in (0, 1), got {target_ratio}")
        target: list[str] = []
        for group in (schema.categorical, schema.continuous):
            n = len(group)
            k = int(np.floor(target_ratio * n + 0.5))
            for i in range(k):
                target.append(group[int((i + 0.5) * n / k)].name)
        if not target:
            target = [schema.names[-1]]
        if len(target) == len(schema.names):
            target = target[1:]
        active = tuple(n for n in schema.names if n not in target)
        target_t = tuple(n for n in schema.names if n in target)
        return cls((active, target_t))

    @classmethod
    def from_columns(cls, *parties: Sequence[str]) -> "FeatureAssignment":
        return cls(tuple(tuple(p) for p in parties))


@dataclass
class PartyViews:
    views: list[EncodedDataset]
    permutation: np.ndarray  # encoded column index of every column of hstack(views)

    def assemble(self) -> np.ndarray:
        """Reassemble the original encoded matrix from the party views."""
        stacked = np.hstack([v.X for v in self.views])
        out = np.empty_like(stacked)
        out[:, self.permutation] = stacked
        return out


def vertical_split(ds: EncodedDataset, assignment: FeatureAssignment) -> PartyViews:
    assignment.validate(ds.schema)
    groups = {c.name: s for c, s in ds.schema.groups()}
    views, perm = [], []
    for cols in assignment.parties:
        views.append(ds.select(cols))
        for c in cols:
            perm.extend(range(groups[c].start, groups[c].stop))
    return PartyViews(views, np.asarray(perm, dtype=np.int64))


def sample_auxiliary(pool: EncodedDataset, ratio: float, seed: int) -> EncodedDataset:
    if len(pool) == 0:
        raise DataError("cannot sample auxiliary data from an empty pool")
    if not 0.0 < ratio <= 1.0:
        raise DataError(f"auxiliary ratio must lie in (0, 1], got {ratio}")
    size = max(1, int(np.floor(ratio * len(pool))))
    picked = make_rng(seed, "sample_auxiliary").choice(len(pool), size=size, replace=False)
    return pool.take(np.sort(picked))


def generate_fake(schema: Schema, n: int, seed: int) -> EncodedDataset:
    """Pseudo rows from column headers alone.

    Categorical groups get a one-hot vector at a uniformly random category;
    continuous columns are uniform over their encoded range ``[-1, 1]``.
    """
    if n < 0:
        raise DataError("n must be non-negative")
    rng = make_rng(seed, "generate_fake")
    X = np.zeros((n, schema.encoded_width))
    rows = np.arange(n)
    for c, s in schema.groups():
        if isinstance(c, Categorical):
            X[rows, s.start + rng.integers(0, c.width, size=n)] = 1.0
        else:
            X[:, s.start] = rng.uniform(-1.0, 1.0, size=n)
    return EncodedDataset(schema, X, None, -1 - np.arange(n))


def generate_uniform_noise(schema: Schema, n: int, seed: int) -> EncodedDataset:
    """Schema-blind baseline: every encoded entry drawn from U[0, 1)."""
    if n < 0:
        raise DataError("n must be non-negative")
    X = make_rng(seed, "generate_uniform_noise").random((n, schema.encoded_width))
    return EncodedDataset(schema, X, None, -1 - np.arange(n))


@dataclass
class LeakSet:
    positions: np.ndarray  # positions inside the training view
    row_ids: np.ndarray
    x: np.ndarray  # leaked encoded target rows
    features: np.ndarray | None = None  # captured H for those rows

    def __len__(self) -> int:
        return len(self.row_ids)


def sample_leak(train_view: EncodedDataset, n: int, seed: int) -> LeakSet:
    if n > len(train_view):
        raise DataError(f"cannot leak {n} rows from a training view of {len(train_view)}")
    if n < 0:
        raise DataError("n must be non-negative")
    pos = np.sort(make_rng(seed, "sample_leak").choice(len(train_view), size=n, replace=False))
    return LeakSet(pos, train_view.row_ids[pos], train_view.X[pos].copy())
