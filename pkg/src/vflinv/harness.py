"""Config-driven experiments: train the split model, run one attack scenario, write reports.

A config is a JSON object.  Unknown keys are errors so that a typo cannot
silently fall back to a default.  Minimal example::

    {"spec_version": 1, "dataset": "income", "scenario": "QA", "seeds": [0, 1, 2]}

Every other field has a default; see ``DEFAULTS`` for the full tree.
"""

from __future__ import annotations

import copy
import csv
import hashlib
import io
import json
import time
from collections import OrderedDict
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from . import attacks as A
from . import data as D
from . import datasets as DS
from . import metrics as M
from . import nn
from . import vfl as V
from .defense import DefenseConfig

SPEC_VERSION = 1
REPORT_FORMAT = "vflinv-report/1"
SWEEP_AXES = ("aux_ratio", "leak_count", "split_ratio", "noise_ratio", "invernet_depth")

DEFAULTS: dict = {
    "spec_version": SPEC_VERSION,
    "dataset": "synthetic",  # bank | income | credit | synthetic | synthetic-image | path to a CSV
    "schema": None,  # schema file; required when dataset is a path
    "image": {"side": 16, "n": 2000},
    "max_rows": None,  # optional subsample of the loaded rows, for quick runs
    "train_fraction": 0.8,
    "split": {"target_ratio": 0.5, "columns": None},
    "model": {"bottom_hidden": [300, 100], "bottom_out": 100, "top_hidden": [100, 100]},
    "vfl": {"batch_size": 64, "epochs": 30, "learning_rate": 1e-3, "optimizer": "adam", "patience": 5},
    "attack": {"batch_size": 64, "epochs": 30, "learning_rate": 1e-3, "optimizer": "adam", "min_iterations": 2000},
    "scenario": "QA",
    "aux_ratio": 0.25,
    "n_fake": None,
    "leak_count": 64,
    "invernet_depth": 3,
    "use_generator": True,
    "shadow_loss": "task",
    "shadow_context": "row",
    "shadow_hidden": [300, 100],
    "leak_capture": "post_training",
    "query_budget": None,
    "defense": {"kind": "none", "ratio": 0.0, "clip": None},
    "epsilon": 0.2,
    "seeds": [0, 1, 2],
    "out_dir": None,
    "dump_rows": False,
}


class ConfigError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"config field {field!r}: {message}")
        self.field = field


# ---------------------------------------------------------------------------
# config


def _merge(base: dict, over: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        name = f"{path}{k}"
        if k not in base and not (k == "description" and not path):
            raise ConfigError(name, "unknown key")
        if isinstance(base.get(k), dict):
            if not isinstance(v, dict):
                raise ConfigError(name, "expected an object")
            out[k] = _merge(base[k], v, name + ".")
        else:
            out[k] = v
    return out


def _positive_int(cfg: dict, path: str, allow_none: bool = False, allow_zero: bool = False) -> None:
    node, key = _locate(cfg, path)
    v = node[key]
    if v is None and allow_none:
        return
    if isinstance(v, bool) or not isinstance(v, int) or v < (0 if allow_zero else 1):
        raise ConfigError(path, f"expected a {'non-negative' if allow_zero else 'positive'} integer, got {v!r}")


def _number(cfg: dict, path: str, lo: float | None = None, hi: float | None = None, lo_open: bool = False,
            hi_open: bool = False, allow_none: bool = False) -> None:
    node, key = _locate(cfg, path)
    v = node[key]
    if v is None and allow_none:
        return
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(path, f"expected a number, got {v!r}")
    if lo is not None and (v < lo or (lo_open and v == lo)):
        raise ConfigError(path, f"must be {'>' if lo_open else '>='} {lo}, got {v}")
    if hi is not None and (v > hi or (hi_open and v == hi)):
        raise ConfigError(path, f"must be {'<' if hi_open else '<='} {hi}, got {v}")
    node[key] = float(v)


def _locate(cfg: dict, path: str):
    parts = path.split(".")
    node = cfg
    for p in parts[:-1]:
        node = node[p]
    return node, parts[-1]


def _int_list(v, path: str, min_len: int = 1) -> list[int]:
    if not isinstance(v, list) or len(v) < min_len or any(isinstance(x, bool) or not isinstance(x, int) for x in v):
        raise ConfigError(path, f"expected a list of integers, got {v!r}")
    return v


def normalize_config(raw: dict) -> dict:
    """Fill defaults and validate.  Raises :class:`ConfigError` naming the offending field."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    if "spec_version" not in raw:
        raise ConfigError("spec_version", "missing")
    if raw["spec_version"] != SPEC_VERSION:
        raise ConfigError("spec_version", f"unsupported version {raw['spec_version']!r}; expected {SPEC_VERSION}")
    cfg = _merge(DEFAULTS, raw)
    cfg.pop("description", None)

    if not isinstance(cfg["dataset"], str) or not cfg["dataset"]:
        raise ConfigError("dataset", "expected a dataset name or a file path")
    known = set(DS.REGISTRY) | {"synthetic", "synthetic-image"}
    if cfg["dataset"] not in known:
        if cfg["schema"] is None:
            raise ConfigError("dataset", f"{cfg['dataset']!r} is not one of {sorted(known)}; a path needs 'schema'")
    if cfg["schema"] is not None and not isinstance(cfg["schema"], str):
        raise ConfigError("schema", "expected a file path")
    _positive_int(cfg, "image.side")
    if not 8 <= cfg["image"]["side"] <= 32:
        raise ConfigError("image.side", "must lie in [8, 32]")
    _positive_int(cfg, "image.n")
    _positive_int(cfg, "max_rows", allow_none=True)
    _number(cfg, "train_fraction", 0.0, 1.0, lo_open=True, hi_open=True)
    _number(cfg, "split.target_ratio", 0.0, 1.0, lo_open=True, hi_open=True)
    cols = cfg["split"]["columns"]
    if cols is not None:
        if not isinstance(cols, list) or not all(isinstance(p, list) and all(isinstance(c, str) for c in p) for p in cols):
            raise ConfigError("split.columns", "expected a list of column-name lists, one per party")
        if len(cols) < 2:
            raise ConfigError("split.columns", "VFL requires at least two parties")
    _int_list(cfg["model"]["bottom_hidden"], "model.bottom_hidden", 0)
    _int_list(cfg["model"]["top_hidden"], "model.top_hidden", 0)
    _int_list(cfg["shadow_hidden"], "shadow_hidden", 0)
    _positive_int(cfg, "model.bottom_out")
    for sec in ("vfl", "attack"):
        _positive_int(cfg, f"{sec}.batch_size")
        _positive_int(cfg, f"{sec}.epochs", allow_zero=True)
        _number(cfg, f"{sec}.learning_rate", 0.0)
        if cfg[sec]["optimizer"] not in ("adam", "sgd"):
            raise ConfigError(f"{sec}.optimizer", f"expected 'adam' or 'sgd', got {cfg[sec]['optimizer']!r}")
    _positive_int(cfg, "vfl.patience", allow_none=True)
    _positive_int(cfg, "attack.min_iterations", allow_zero=True)
    if cfg["scenario"] not in A.SCENARIOS:
        raise ConfigError("scenario", f"expected one of {list(A.SCENARIOS)}, got {cfg['scenario']!r}")
    _number(cfg, "aux_ratio", 0.0, 1.0, lo_open=True)
    _positive_int(cfg, "n_fake", allow_none=True, allow_zero=True)
    _positive_int(cfg, "leak_count", allow_zero=True)
    if cfg["invernet_depth"] not in (1, 2, 3):
        raise ConfigError("invernet_depth", f"expected 1, 2 or 3, got {cfg['invernet_depth']!r}")
    for key in ("use_generator", "dump_rows"):
        if not isinstance(cfg[key], bool):
            raise ConfigError(key, "expected true or false")
    if cfg["shadow_loss"] not in ("task", "literal"):
        raise ConfigError("shadow_loss", "expected 'task' or 'literal'")
    if cfg["shadow_context"] not in ("row", "mean"):
        raise ConfigError("shadow_context", "expected 'row' or 'mean'")
    if cfg["leak_capture"] not in (V.POST_TRAINING, V.DURING_TRAINING):
        raise ConfigError("leak_capture", f"expected {V.POST_TRAINING!r} or {V.DURING_TRAINING!r}")
    _positive_int(cfg, "query_budget", allow_none=True, allow_zero=True)
    if cfg["defense"]["kind"] not in ("none", "dp_gradient", "gaussian_feature"):
        raise ConfigError("defense.kind", f"expected none, dp_gradient or gaussian_feature, got {cfg['defense']['kind']!r}")
    _number(cfg, "defense.ratio", 0.0)
    _number(cfg, "defense.clip", 0.0, lo_open=True, allow_none=True)
    _number(cfg, "epsilon", 0.0)
    seeds = cfg["seeds"]
    if not isinstance(seeds, list) or not seeds or any(isinstance(s, bool) or not isinstance(s, int) for s in seeds):
        raise ConfigError("seeds", "expected a non-empty list of integers")
    if cfg["out_dir"] is not None and not isinstance(cfg["out_dir"], str):
        raise ConfigError("out_dir", "expected a directory path")
    if cfg["query_budget"] == 0 and A.CAPABILITIES[cfg["scenario"]].can_query:
        raise ConfigError("query_budget", f"scenario {cfg['scenario']} needs queries; a budget of 0 forbids them")
    return cfg


def load_config(path) -> dict:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError("<file>", f"{path} not found") from None
    except json.JSONDecodeError as e:
        raise ConfigError("<file>", f"{path} is not valid JSON: {e}") from None
    return normalize_config(raw)


def config_hash(cfg: dict) -> str:
    body = {k: v for k, v in cfg.items() if k not in ("out_dir", "seeds", "dump_rows")}
    return hashlib.sha256(json.dumps(body, sort_keys=True).encode("utf-8")).hexdigest()[:16]


# ---------------------------------------------------------------------------
# data and sessions


@dataclass
class Prepared:
    train: D.EncodedDataset
    holdout: D.EncodedDataset
    assignment: D.FeatureAssignment
    image_shape: tuple[int, int] | None


_DATA_CACHE: dict = {}
_SESSION_CACHE: "OrderedDict[str, V.VflSession]" = OrderedDict()
SESSION_CACHE_SIZE = 6


def clear_caches() -> None:
    _DATA_CACHE.clear()
    _SESSION_CACHE.clear()


def _load_encoded(cfg: dict) -> tuple[D.EncodedDataset, D.FeatureAssignment | None, tuple[int, int] | None]:
    name = cfg["dataset"]
    key = (name, cfg["schema"], cfg["image"]["side"], cfg["image"]["n"])
    if key not in _DATA_CACHE:
        if name == "synthetic-image":
            side = cfg["image"]["side"]
            ds, assignment = DS.make_synthetic_image_dataset(side, cfg["image"]["n"], 0)
            _DATA_CACHE[key] = (ds, assignment, (side, side // 2))
        elif name in DS.REGISTRY or name == "synthetic":
            _DATA_CACHE[key] = (D.encode(DS.load(name)), None, None)
        else:
            schema = D.Schema.load(cfg["schema"])
            _DATA_CACHE[key] = (D.encode(D.load_dataset(name, schema)), None, None)
    return _DATA_CACHE[key]


def prepare_data(cfg: dict, seed: int) -> Prepared:
    enc, fixed, image_shape = _load_encoded(cfg)
    if cfg["max_rows"] is not None and cfg["max_rows"] < len(enc):
        pick = np.sort(np.random.default_rng([seed, 17]).choice(len(enc), cfg["max_rows"], replace=False))
        enc = enc.take(pick)
    train, holdout = D.split_train_holdout(enc, cfg["train_fraction"], seed)
    if cfg["split"]["columns"] is not None:
        assignment = D.FeatureAssignment.from_columns(*cfg["split"]["columns"])
        try:
            assignment.validate(enc.schema)
        except D.DataError as e:
            raise ConfigError("split.columns", str(e)) from None
    elif fixed is not None:
        assignment = fixed
    else:
        assignment = D.FeatureAssignment.from_ratio(enc.schema, cfg["split"]["target_ratio"])
    return Prepared(train, holdout, assignment, image_shape)


def _hyper(section: dict, **extra) -> nn.TrainHyper:
    return nn.TrainHyper(batch_size=section["batch_size"], epochs=section["epochs"],
                         learning_rate=section["learning_rate"], optimizer=section["optimizer"], **extra)


def session_config(cfg: dict, seed: int) -> V.SessionConfig:
    d = cfg["defense"]
    return V.SessionConfig(
        bottom_hidden=tuple(cfg["model"]["bottom_hidden"]),
        bottom_out=cfg["model"]["bottom_out"],
        top_hidden=tuple(cfg["model"]["top_hidden"]),
        hyper=_hyper(cfg["vfl"]),
        defense=DefenseConfig(d["kind"], d["ratio"], seed, d["clip"]),
        patience=cfg["vfl"]["patience"],
        seed=seed,
    )


def _session_key(cfg: dict, seed: int) -> str:
    keys = ("dataset", "schema", "image", "max_rows", "train_fraction", "split", "model", "vfl", "defense")
    return json.dumps({"seed": seed, **{k: cfg[k] for k in keys}}, sort_keys=True)


def trained_session(cfg: dict, seed: int, prep: Prepared, checkpoint_dir: Path | None = None,
                    watch: np.ndarray | None = None) -> V.VflSession:
    """Build and train, reusing an in-process cache and on-disk checkpoints when the settings match."""
    key = _session_key(cfg, seed)
    ck = None
    if checkpoint_dir is not None:
        ck = Path(checkpoint_dir) / f"{hashlib.sha256(key.encode()).hexdigest()[:16]}.npz"
    if watch is None and key in _SESSION_CACHE:
        _SESSION_CACHE.move_to_end(key)
        session = _SESSION_CACHE[key]
        if ck is not None and not ck.exists():
            ck.parent.mkdir(parents=True, exist_ok=True)
            V.save_checkpoint(session, ck)
        reset_inference_state(session)
        return session
    session = V.session_from_dataset(prep.train, prep.holdout, prep.assignment, session_config(cfg, seed))
    if watch is not None:
        session.watch(1, watch)
    if ck is not None and ck.exists() and watch is None:
        V.load_checkpoint(session, ck)
    else:
        V.train_vfl(session)
        if ck is not None:
            ck.parent.mkdir(parents=True, exist_ok=True)
            V.save_checkpoint(session, ck)
    reset_inference_state(session)
    if watch is None:
        _SESSION_CACHE[key] = session
        while len(_SESSION_CACHE) > SESSION_CACHE_SIZE:
            _SESSION_CACHE.popitem(last=False)
    return session


def reset_inference_state(session: V.VflSession) -> None:
    """Forget per-attack state so that a reused session behaves like a freshly trained one."""
    session.query_count = 0
    session.query_budget = session.config.query_budget
    session.captures = V.CaptureLog() if not session.watched else session.captures
    for p in session.parties:
        p._counters.clear()


# ---------------------------------------------------------------------------
# one run


def _attack_hyper(cfg: dict) -> nn.TrainHyper:
    return _hyper(cfg["attack"], min_iterations=cfg["attack"]["min_iterations"])


def run_seed(cfg: dict, seed: int, checkpoint_dir: Path | None = None) -> dict:
    t0 = time.perf_counter()
    prep = prepare_data(cfg, seed)
    scenario = cfg["scenario"]
    target = 1
    target_cols = prep.assignment.parties[target]
    leak = None
    watch = None
    if scenario == "SA":
        tv = prep.train.select(target_cols)
        leak = D.sample_leak(tv, cfg["leak_count"], seed)
        if cfg["leak_capture"] == V.DURING_TRAINING:
            watch = leak.row_ids
    session = trained_session(cfg, seed, prep, checkpoint_dir, watch)
    t_train = time.perf_counter() - t0
    vfl_metrics = V.evaluate(session, "holdout")
    reset_inference_state(session)
    session.query_budget = cfg["query_budget"]

    aux = None
    attacked = prep.holdout.row_ids
    if scenario in ("QA", "DPA"):
        aux = D.sample_auxiliary(prep.holdout, cfg["aux_ratio"], seed)
        attacked = prep.holdout.row_ids[~np.isin(prep.holdout.row_ids, aux.row_ids)]
        if len(attacked) == 0:
            raise ConfigError("aux_ratio", "the auxiliary sample leaves no holdout rows to attack")
    if scenario in ("DPA", "SA"):
        session.query_budget = 0
    view = V.AttackerView(session, target)
    if leak is not None:
        if cfg["leak_capture"] == V.DURING_TRAINING:
            last = {int(r): max(session.captures.epochs(int(r))) for r in leak.row_ids}
            leak.features = np.stack([session.captures.get([r], V.DURING_TRAINING, last[int(r)])[0] for r in leak.row_ids])
        else:
            leak.features = view.capture(leak.row_ids, "train").H
    ctx = A.AttackContext(
        scenario, view, attacked, prep.assignment, aux=aux, leak=leak, n_fake=cfg["n_fake"],
        use_generator=cfg["use_generator"], invernet_depth=cfg["invernet_depth"],
        shadow_hidden=tuple(cfg["shadow_hidden"]), shadow_loss=cfg["shadow_loss"],
        shadow_context=cfg["shadow_context"], hyper=_attack_hyper(cfg), seed=seed,
    )
    report = A.run_attack(ctx)
    truth = prep.holdout.select(target_cols)
    A.score_report(report, truth, cfg["epsilon"], prep.image_shape)
    truth_rows = truth.take(truth.positions_of(report.row_ids))
    baseline = M.random_baseline(truth_rows.X, truth.schema, seed, cfg["epsilon"])
    result = {
        "seed": seed,
        "n_train": len(prep.train),
        "n_holdout": len(prep.holdout),
        "assignment": [list(p) for p in prep.assignment.parties],
        "vfl": vfl_metrics,
        "vfl_epochs": len(session.history),
        "attack": report.to_dict(),
        "random_baseline": baseline.to_dict(),
        "query_budget_final": session.query_budget,
        "timing": {"train_seconds": t_train, "attack_seconds": report.wall_time},
    }
    result["_report"] = report
    result["_truth"] = truth_rows
    return result


def _agg(values: list[float]) -> dict:
    v = np.asarray([x for x in values if x is not None], dtype=np.float64)
    if v.size == 0:
        return {"mean": None, "std": None}
    return {"mean": float(v.mean()), "std": float(v.std())}


def aggregate(runs: list[dict]) -> dict:
    out = {}
    for key in ("overall", "discrete", "continuous"):
        out[key] = _agg([r["attack"]["accuracy"][key] for r in runs])
    out["random_overall"] = _agg([r["random_baseline"]["overall"] for r in runs])
    for key in ("accuracy", "auc"):
        out[f"vfl_{key}"] = _agg([r["vfl"].get(key) for r in runs])
    out["query_count"] = _agg([r["attack"]["query_count"] for r in runs])
    if runs and runs[0]["attack"].get("image"):
        for key in ("psnr", "ssim", "random_psnr", "random_ssim"):
            vals = [r["attack"]["image"][key] for r in runs]
            out[key] = _agg([None if isinstance(x, str) else x for x in vals])
    return out


def run_experiment(config, out_dir=None, seeds: list[int] | None = None, scenario: str | None = None,
                   write: bool = True, checkpoint_dir=None) -> dict:
    """Run the configured scenario once per seed; return (and optionally write) the report."""
    cfg = load_config(config) if isinstance(config, (str, Path)) else normalize_config(copy.deepcopy(config))
    if seeds is not None:
        if not seeds or any(isinstance(x, bool) or not isinstance(x, int) for x in seeds):
            raise ConfigError("seeds", "expected a non-empty list of integers")
        cfg["seeds"] = list(seeds)
    if scenario is not None:
        if scenario not in A.SCENARIOS:
            raise ConfigError("scenario", f"expected one of {list(A.SCENARIOS)}, got {scenario!r}")
        cfg["scenario"] = scenario
    out = Path(out_dir or cfg["out_dir"]) if (out_dir or cfg["out_dir"]) else None
    t0 = time.perf_counter()
    ck_dir = Path(checkpoint_dir) if checkpoint_dir else (out / "checkpoints" if out else None)
    runs = [run_seed(cfg, s, ck_dir) for s in cfg["seeds"]]
    report = {
        "format": REPORT_FORMAT,
        "library_version": __version__,
        "config_hash": config_hash(cfg),
        "scenario": cfg["scenario"],
        "dataset": cfg["dataset"],
        "seeds": cfg["seeds"],
        "config": cfg,
        "runs": [M.jsonable({k: v for k, v in r.items() if not k.startswith("_") and k != "timing"}) for r in runs],
        "aggregate": M.jsonable(aggregate(runs)),
        "timing": {"total_seconds": time.perf_counter() - t0, "per_seed": [r["timing"] for r in runs]},
    }
    if write and out is not None:
        write_report(report, out, runs if cfg["dump_rows"] else None)
    report["_runs"] = runs
    return report


def public(report: dict) -> dict:
    return {k: v for k, v in report.items() if not k.startswith("_")}


def write_report(report: dict, out: Path, runs: list[dict] | None = None) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"report_{report['scenario']}_{report['config_hash']}.json"
    path.write_text(json.dumps(public(report), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    (out / f"summary_{report['scenario']}_{report['config_hash']}.csv").write_text(summary_table([report]), encoding="utf-8")
    for r in runs or []:
        dump_rows(r["_report"], r["_truth"], out / f"rows_{report['scenario']}_seed{r['seed']}.csv")
    return path


def dump_rows(report: A.AttackReport, truth: D.EncodedDataset, path: Path) -> None:
    """Reconstructed rows next to the ground truth, one line per attacked row."""
    rec = report.reconstruction.decoded.rows()
    true = D.decode(truth.X, truth.schema).rows()
    names = truth.schema.names
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["row_id"] + [f"{n}_reconstructed" for n in names] + [f"{n}_true" for n in names])
        for rid, a, b in zip(report.row_ids, rec, true):
            w.writerow([int(rid)] + [a[n] for n in names] + [b[n] for n in names])


# ---------------------------------------------------------------------------
# sweeps and tables


SUMMARY_COLUMNS = ["dataset", "scenario", "axis", "value", "aux_ratio", "leak_count", "invernet_depth", "target_ratio",
                   "defense", "noise_ratio", "n_seeds", "overall_mean", "overall_std", "discrete_mean",
                   "continuous_mean", "random_mean", "vfl_accuracy_mean", "vfl_auc_mean", "query_count_mean",
                   "ssim_mean", "psnr_mean"]
SCENARIO_ORDER = {s: i for i, s in enumerate(A.SCENARIOS)}


def _row(report: dict, axis: str = "", value="") -> dict:
    agg, cfg = report["aggregate"], report["config"]
    g = lambda k: (agg.get(k) or {}).get("mean")
    return {
        "dataset": report["dataset"], "scenario": report["scenario"], "axis": axis, "value": value,
        "aux_ratio": cfg["aux_ratio"] if report["scenario"] in ("QA", "DPA") else None,
        "leak_count": cfg["leak_count"] if report["scenario"] == "SA" else None,
        "invernet_depth": cfg["invernet_depth"], "target_ratio": cfg["split"]["target_ratio"],
        "defense": cfg["defense"]["kind"], "noise_ratio": cfg["defense"]["ratio"],
        "n_seeds": len(report["seeds"]), "overall_mean": g("overall"), "overall_std": agg["overall"]["std"],
        "discrete_mean": g("discrete"), "continuous_mean": g("continuous"), "random_mean": g("random_overall"),
        "vfl_accuracy_mean": g("vfl_accuracy"), "vfl_auc_mean": g("vfl_auc"), "query_count_mean": g("query_count"),
        "ssim_mean": g("ssim"), "psnr_mean": g("psnr"),
    }


def summary_table(reports: list[dict], axis: str = "", values: list | None = None) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, SUMMARY_COLUMNS, lineterminator="\n")
    w.writeheader()
    rows = [_row(r, axis, "" if values is None else values[i]) for i, r in enumerate(reports)]
    if values is None:
        rows.sort(key=lambda r: (r["dataset"], SCENARIO_ORDER.get(r["scenario"], 99)))
    for r in rows:
        w.writerow({k: ("" if v is None else (f"{v:.6g}" if isinstance(v, float) else v)) for k, v in r.items()})
    return buf.getvalue()


def _apply_axis(cfg: dict, axis: str, value) -> dict:
    c = copy.deepcopy(cfg)
    if axis == "split_ratio":
        c["split"] = {"target_ratio": value, "columns": None}
    elif axis == "noise_ratio":
        c["defense"] = dict(c["defense"], ratio=value)
    else:
        c[axis] = value
    return c


def run_sweep(config, axis: str, values: list, out_dir=None, seeds: list[int] | None = None,
              checkpoint_dir=None) -> dict:
    cfg = load_config(config) if isinstance(config, (str, Path)) else normalize_config(copy.deepcopy(config))
    if axis not in SWEEP_AXES:
        raise ConfigError("axis", f"expected one of {list(SWEEP_AXES)}, got {axis!r}")
    if not values:
        raise ConfigError("values", "sweep needs at least one value")
    scen = cfg["scenario"]
    if axis == "aux_ratio" and scen not in ("QA", "DPA"):
        raise ConfigError("axis", f"aux_ratio sweeps need QA or DPA, not {scen}")
    if axis == "leak_count" and scen != "SA":
        raise ConfigError("axis", f"leak_count sweeps need SA, not {scen}")
    if axis == "noise_ratio" and cfg["defense"]["kind"] == "none":
        raise ConfigError("axis", "noise_ratio sweeps need defense.kind set")
    reports = []
    for v in values:
        c = normalize_config(_apply_axis(cfg, axis, v))
        reports.append(run_experiment(c, out_dir, seeds, write=out_dir is not None, checkpoint_dir=checkpoint_dir))
    table = summary_table(reports, axis, list(values))
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        (Path(out_dir) / f"sweep_{axis}_{scen}.csv").write_text(table, encoding="utf-8")
    return {"axis": axis, "values": list(values), "reports": reports, "table": table}


def collect_reports(directory) -> list[dict]:
    out = []
    for p in sorted(Path(directory).rglob("report_*.json")):
        d = json.loads(p.read_text(encoding="utf-8"))
        if d.get("format") == REPORT_FORMAT:
            out.append(d)
    return out
