"""Acceptance criteria.  Each test records a verdict; the terminal summary prints one line per criterion.

Tabular criteria run every dataset in ``DATASETS``.  A dataset that is not prepared locally fails its part
with the loader's message rather than being skipped.
"""
import json
import time

import pytest

import test_attacks
import test_metrics
import test_nn
import test_vfl
from conftest import VERDICTS
from vflinv import datasets as DS
from vflinv import harness as H

pytestmark = pytest.mark.slow

DATASETS = ("bank", "income", "credit")
SEEDS = [0, 1, 2]
SCENARIOS = ("QA", "DPA", "IQA", "SA")
HEADLINE = {
    "QA": {"bank": 0.90, "income": 0.90, "credit": 0.90},
    "DPA": {"bank": 0.85, "income": 0.70, "credit": 0.85},
    "IQA": {"bank": 0.50, "income": 0.80, "credit": 0.35},
    "SA": {"bank": 0.80, "income": 0.60, "credit": 0.80},
}
VFL_TARGETS = {"bank": {"accuracy": 0.88, "auc": 0.78}, "income": {"auc": 0.85}, "credit": {"auc": 0.74}}
AUX_RATIOS = (0.0025, 0.025, 0.125, 0.25)
LEAK_COUNTS = (8, 16, 32, 64)
NOISE_RATIOS = (1.0, 0.5, 0.1, 0.01, 0.001)

_RESULTS: dict[str, dict | Exception] = {}


def check(n: int, part: str, ok: bool, detail: str) -> None:
    VERDICTS.setdefault(n, []).append((part, bool(ok), detail))
    print(f"criterion {n} {part}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"criterion {n} {part}: {detail}"


def experiment(dataset: str, scenario: str, **over) -> dict:
    """3-seed experiment with default settings, memoized across the whole test session."""
    cfg = {"spec_version": 1, "dataset": dataset, "scenario": scenario, "seeds": SEEDS, **over}
    key = json.dumps(cfg, sort_keys=True)
    if key not in _RESULTS:
        try:
            _RESULTS[key] = H.run_experiment(cfg, write=False)
        except DS.DatasetUnavailable as e:
            _RESULTS[key] = e
    res = _RESULTS[key]
    if isinstance(res, Exception):
        raise res
    return res


def mean(report: dict, key: str = "overall") -> float:
    return report["aggregate"][key]["mean"]


def guarded(n: int, part: str):
    """Turn a missing dataset into a recorded failure of this criterion part."""
    class _G:
        def __enter__(self):
            return self

        def __exit__(self, kind, exc, tb):
            if kind is not None and issubclass(kind, DS.DatasetUnavailable):
                check(n, part, False, f"dataset unavailable: {exc}")
            return False

    return _G()


def non_decreasing(values: list[float], tol: float = 0.02) -> bool:
    drops = [a - b for a, b in zip(values, values[1:]) if b < a]
    return not drops or (len(drops) == 1 and drops[0] <= tol)


def pct(values) -> str:
    return "/".join(f"{100 * v:.1f}" for v in values)


def test_criterion_1_gradient_correctness():
    t0 = time.perf_counter()
    worst = 0.0
    for i in range(120):
        model, x, upstream = test_nn.random_case(i)
        _, tape = test_nn.nn.forward(model, x)
        g = test_nn.nn.backward(model, tape, upstream)
        for a, b in zip(g.parameters() + [g.input_gradient], test_nn.numeric_grads(model, x, upstream)):
            worst = max(worst, test_nn.relative_error(a, b))
    split_ok = True
    try:
        test_vfl.test_split_model_gradients_match_finite_differences()
    except AssertionError:
        split_ok = False
    dt = time.perf_counter() - t0
    check(1, "finite differences", worst < 1e-4 and split_ok and dt < 60,
          f"120 random models worst rel err {worst:.1e}; 2-party split model {'ok' if split_ok else 'mismatch'}; {dt:.1f}s")


@pytest.mark.parametrize("dataset", DATASETS)
def test_criterion_2_vfl_quality(dataset):
    with guarded(2, dataset):
        rep = experiment(dataset, "QA")
        got = {k: mean(rep, f"vfl_{k}") for k in VFL_TARGETS[dataset]}
        train_s = max(r["train_seconds"] for r in rep["timing"]["per_seed"])
        ok = all(got[k] >= v for k, v in VFL_TARGETS[dataset].items()) and train_s <= 300
        detail = ", ".join(f"{k} {got[k]:.4f} (need >= {v})" for k, v in VFL_TARGETS[dataset].items())
        check(2, dataset, ok, f"{detail}; slowest training {train_s:.0f}s")


@pytest.mark.parametrize("dataset", DATASETS)
@pytest.mark.parametrize("scenario", SCENARIOS)
def test_criterion_3_headline_accuracy(dataset, scenario):
    part = f"{dataset} {scenario}"
    with guarded(3, part):
        rep = experiment(dataset, scenario)
        need = HEADLINE[scenario][dataset]
        check(3, part, mean(rep) >= need, f"mean {100 * mean(rep):.2f} (need >= {100 * need:.0f})")


@pytest.mark.parametrize("dataset", DATASETS)
def test_criterion_4_beats_random(dataset):
    with guarded(4, dataset):
        gaps = [mean(experiment(dataset, s)) - mean(experiment(dataset, s), "random_overall") for s in SCENARIOS]
        check(4, dataset, min(gaps) >= 0.20, f"gap over random {pct(gaps)} points for {'/'.join(SCENARIOS)}")


@pytest.mark.parametrize("dataset", DATASETS)
def test_criterion_5_discrete_at_least_continuous(dataset):
    with guarded(5, dataset):
        bad = []
        for s in SCENARIOS:
            for run in experiment(dataset, s)["runs"]:
                acc = run["attack"]["accuracy"]
                if acc["discrete"] < acc["continuous"]:
                    bad.append(f"{s}/seed{run['seed']} {100 * acc['discrete']:.1f}<{100 * acc['continuous']:.1f}")
        check(5, dataset, not bad, "; ".join(bad) if bad else "discrete >= continuous in all 12 runs")


@pytest.mark.parametrize("dataset", DATASETS)
def test_criterion_6_generator_ablation(dataset):
    with guarded(6, dataset):
        dg = mean(experiment(dataset, "IQA"))
        noise = mean(experiment(dataset, "IQA", use_generator=False))
        check(6, dataset, dg - noise >= 0.10, f"IQA {100 * dg:.1f} vs uniform noise {100 * noise:.1f}")


@pytest.mark.parametrize("dataset", DATASETS)
def test_criterion_7_aux_ratio_trend(dataset):
    part = f"{dataset} aux ratio"
    with guarded(7, part):
        vals = [mean(experiment(dataset, "QA", aux_ratio=r)) for r in AUX_RATIOS]
        check(7, part, non_decreasing(vals), f"QA {pct(vals)} at {AUX_RATIOS}")


@pytest.mark.parametrize("dataset", DATASETS)
def test_criterion_7_leak_count_trend(dataset):
    part = f"{dataset} leak count"
    with guarded(7, part):
        vals = [mean(experiment(dataset, "SA", leak_count=k)) for k in LEAK_COUNTS]
        check(7, part, non_decreasing(vals), f"SA {pct(vals)} at {LEAK_COUNTS}")


@pytest.mark.parametrize("dataset", DATASETS)
def test_criterion_7_invernet_depth(dataset):
    part = f"{dataset} depth"
    with guarded(7, part):
        d3 = [mean(experiment(dataset, s)) for s in SCENARIOS]
        d1 = [mean(experiment(dataset, s, invernet_depth=1)) for s in SCENARIOS]
        bad = [s for s, a, b in zip(SCENARIOS, d3, d1) if a < b]
        check(7, part, not bad, f"depth3 {pct(d3)} vs depth1 {pct(d1)} for {'/'.join(SCENARIOS)}")


def test_criterion_8_ratio_zero_inert():
    # dataset-independent property, checked where data is present
    dataset = next((d for d in ("bank", "income") if DS.is_available(d)), "synthetic")

    def stripped(rep):
        return [{k: v for k, v in r.items() if k != "timing"} for r in rep["runs"]]

    base = experiment(dataset, "SA")
    for kind in ("dp_gradient", "gaussian_feature"):
        rep = experiment(dataset, "SA", defense={"kind": kind, "ratio": 0.0})
        check(8, f"ratio 0 inert ({kind}, {dataset})", stripped(rep) == stripped(base),
              "identical VFL metrics and reconstructions" if stripped(rep) == stripped(base) else "reports differ")


@pytest.mark.parametrize("kind", ["dp_gradient", "gaussian_feature"])
def test_criterion_8_bank_defense(kind):
    with guarded(8, f"bank {kind}"):
        base = experiment("bank", "SA")
        defended = {r: experiment("bank", "SA", defense={"kind": kind, "ratio": r}) for r in NOISE_RATIOS}
        auc0 = mean(base, "vfl_auc")
        worst_auc = max(abs(mean(d, "vfl_auc") - auc0) for d in defended.values())
        drop = mean(base) - mean(defended[1.0])
        ok = worst_auc <= 0.12 and (kind != "dp_gradient" or drop >= 0.40)
        check(8, f"bank {kind}", ok, f"SA {100 * mean(base):.1f} -> {100 * mean(defended[1.0]):.1f} at ratio 1; "
              f"max AUC shift {worst_auc:.3f}")


def test_criterion_9_metric_oracles():
    fns = [
        test_metrics.test_matches_brute_force_on_1000_pairs,
        test_metrics.test_identity_and_hand_example,
        test_metrics.test_closed_interval_boundary,
        test_metrics.test_psnr_cases,
        test_metrics.test_ssim_constant_images_closed_form,
        test_metrics.test_ssim_window_policy_and_errors,
        test_metrics.test_auc_matches_pairwise_oracle,
        test_metrics.test_auc_cases,
    ] + [lambda s=s: test_metrics.test_ssim_cases(s) for s in (8, 16, 24)]
    failed = []
    for f in fns:
        try:
            f()
        except AssertionError:
            failed.append(getattr(f, "__name__", "ssim case"))
    check(9, "metric oracles", not failed, "; ".join(failed) if failed else f"{len(fns)} oracle checks agree")


def test_criterion_10_capability_audits():
    dataset = next((d for d in DATASETS if DS.is_available(d)), "synthetic")
    problems = []
    for s in SCENARIOS:
        for run in experiment(dataset, s)["runs"]:
            q = run["attack"]["query_count"]
            if s in ("DPA", "SA") and (q != 0 or run["query_budget_final"] != 0):
                problems.append(f"{s} seed{run['seed']} made {q} queries")
            if s == "QA" and q != int(0.25 * run["n_holdout"]):
                problems.append(f"QA seed{run['seed']} counted {q}")
            if s == "IQA" and q != run["n_train"]:
                problems.append(f"IQA seed{run['seed']} counted {q}")
    try:
        test_attacks.test_attack_module_touches_no_private_session_state()
    except AssertionError as e:
        problems.append(f"structural audit: {e}")
    check(10, f"query counts ({dataset}) and structural audit", not problems,
          "; ".join(problems) if problems else "DPA/SA 0 queries, QA/IQA exact, no private access")
