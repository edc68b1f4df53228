"""
Reconstructing a passive party's features
=========================================

The active party trains an inverse network that maps the target party's
intermediate features back to its encoded inputs.  The four scenarios differ
only in what the attacker has to train it with: auxiliary rows plus queries
(QA), auxiliary rows without queries (DPA), generated fake rows plus queries
(IQA), or a handful of leaked training rows (SA).

Runs on Income when it has been prepared (``vflinv prepare-data income``),
otherwise on the bundled synthetic table.
"""

from vflinv import data as D
from vflinv import datasets as DS
from vflinv import harness as H

dataset = "income" if DS.is_available("income") else "synthetic"
cfg = {"spec_version": 1, "dataset": dataset, "seeds": [0]}
if dataset == "synthetic":
    cfg["max_rows"] = 4000

print(f"dataset: {dataset}")
print(f"{'scenario':8s} {'overall':>8s} {'discrete':>9s} {'continuous':>11s} {'random':>7s} {'queries':>8s}")
for scenario in ("QA", "DPA", "IQA", "SA"):
    rep = H.run_experiment(cfg, scenario=scenario, write=False)
    agg, run = rep["aggregate"], rep["runs"][0]
    print(f"{scenario:8s} {100 * agg['overall']['mean']:8.2f} {100 * agg['discrete']['mean']:9.2f} "
          f"{100 * agg['continuous']['mean']:11.2f} {100 * agg['random_overall']['mean']:7.2f} "
          f"{run['attack']['query_count']:8d}")

# one attacked row next to its reconstruction
rep = H.run_experiment(cfg, scenario="QA", write=False)
recon, truth = rep["_runs"][0]["_report"], rep["_runs"][0]["_truth"]
row = 0
print("\nQA, first attacked row (truth -> reconstruction):")
for name in truth.schema.names:
    t = D.decode(truth.take([row]), truth.schema).values[name][0]
    r = recon.reconstruction.decoded.values[name][row]
    col = truth.schema.column(name)
    if hasattr(col, "categories"):
        t, r = col.categories[int(t)], col.categories[int(r)]
    else:
        t, r = f"{t:.6g}", f"{r:.6g}"
    print(f"  {name:16s} {t:>18s} -> {r}")
