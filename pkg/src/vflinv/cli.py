"""Command line entry point: ``python -m vflinv <verb> ...``.

Exit codes: 0 success, 2 configuration error, 3 runtime failure (including
divergence and missing data), 4 capability violation.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import datasets as DS
from . import harness as H
from . import metrics as M
from . import vfl as V

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_CAPABILITY = 0, 2, 3, 4


def _seeds(text: str) -> list[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"seeds must be comma-separated integers, got {text!r}") from None


def _values(text: str) -> list:
    out = []
    for s in text.split(","):
        s = s.strip()
        if not s:
            continue
        try:
            out.append(int(s))
        except ValueError:
            try:
                out.append(float(s))
            except ValueError:
                raise argparse.ArgumentTypeError(f"not a number: {s!r}") from None
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vflinv", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="verb", required=True)

    def common(sp, scenario: bool = True):
        sp.add_argument("--config", required=True, help="experiment config (JSON)")
        sp.add_argument("--seed", type=_seeds, help="comma-separated seeds, overriding the config")
        sp.add_argument("--out", help="output directory, overriding the config")
        if scenario:
            sp.add_argument("--scenario", choices=["QA", "DPA", "IQA", "SA"], help="attack scenario override")

    common(sub.add_parser("train", help="train the split model and save checkpoints"), scenario=False)
    common(sub.add_parser("attack", help="train (or reuse checkpoints) and run the configured attack"))
    sp = sub.add_parser("sweep", help="run one attack across values of a single knob")
    common(sp)
    sp.add_argument("--axis", required=True, choices=list(H.SWEEP_AXES))
    sp.add_argument("--values", required=True, type=_values, help="comma-separated values")
    sp = sub.add_parser("report", help="tabulate reports found under a directory")
    sp.add_argument("--out", required=True, help="directory holding report_*.json files")
    sp.add_argument("--config", help="unused; accepted for symmetry")
    sp = sub.add_parser("validate-config", help="check a config file and print the normalized tree")
    sp.add_argument("--config", required=True)
    sp = sub.add_parser("prepare-data", help="convert a downloaded UCI file into the loader format")
    sp.add_argument("dataset", choices=sorted(DS.REGISTRY))
    sp.add_argument("--source", required=True, help="path of the downloaded file")
    return p


def _load(args) -> dict:
    cfg = H.load_config(args.config)
    if getattr(args, "seed", None):
        cfg["seeds"] = args.seed
    if getattr(args, "out", None):
        cfg["out_dir"] = args.out
    if getattr(args, "scenario", None):
        cfg["scenario"] = args.scenario
    return H.normalize_config(cfg)


def cmd_train(args) -> int:
    cfg = _load(args)
    out = Path(cfg["out_dir"] or ".")
    rows = []
    for seed in cfg["seeds"]:
        prep = H.prepare_data(cfg, seed)
        session = H.trained_session(cfg, seed, prep, out / "checkpoints")
        metrics = V.evaluate(session, "holdout")
        rows.append({"seed": seed, "epochs": len(session.history), **metrics})
        print(f"seed {seed}: " + ", ".join(f"{k}={v:.4f}" for k, v in metrics.items()))
    out.mkdir(parents=True, exist_ok=True)
    (out / f"train_{H.config_hash(cfg)}.json").write_text(
        json.dumps(M.jsonable({"config_hash": H.config_hash(cfg), "config": cfg, "runs": rows}), indent=2) + "\n"
    )
    return EXIT_OK


def cmd_attack(args) -> int:
    cfg = _load(args)
    report = H.run_experiment(cfg, cfg["out_dir"] or ".")
    print(H.summary_table([report]), end="")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load(args)
    res = H.run_sweep(cfg, args.axis, args.values, cfg["out_dir"] or ".")
    print(res["table"], end="")
    return EXIT_OK


def cmd_report(args) -> int:
    reports = H.collect_reports(args.out)
    if not reports:
        print(f"no reports under {args.out}", file=sys.stderr)
        return EXIT_RUNTIME
    print(H.summary_table(reports), end="")
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = H.load_config(args.config)
    print(json.dumps(cfg, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_prepare(args) -> int:
    path = DS.prepare(args.dataset, args.source)
    print(path)
    return EXIT_OK


COMMANDS = {"train": cmd_train, "attack": cmd_attack, "sweep": cmd_sweep, "report": cmd_report,
            "validate-config": cmd_validate, "prepare-data": cmd_prepare}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_CONFIG
    try:
        return COMMANDS[args.verb](args)
    except H.ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except V.CapabilityError as e:
        print(f"capability violation: {e}", file=sys.stderr)
        return EXIT_CAPABILITY
    except (V.DivergenceError, DS.DatasetUnavailable, RuntimeError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
