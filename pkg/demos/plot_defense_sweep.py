"""
Noise defenses against the stealth attack
=========================================

Two defenses add Gaussian noise whose standard deviation is ``ratio`` times
the empirical standard deviation of the tensor being perturbed: either the
partial gradient a passive party receives (``dp_gradient``) or the features
it sends (``gaussian_feature``).  The sweep shows the trade between the
task AUC and what the stealth attack can still recover.
"""

from vflinv import datasets as DS
from vflinv import harness as H

dataset = "bank" if DS.is_available("bank") else "income" if DS.is_available("income") else "synthetic"
cfg = {"spec_version": 1, "dataset": dataset, "scenario": "SA", "seeds": [0]}
if dataset == "synthetic":
    cfg["max_rows"] = 4000

print(f"dataset: {dataset}, scenario SA with 64 leaked rows")
base = H.run_experiment(cfg, write=False)["aggregate"]
print(f"{'defense':18s} {'ratio':>6s} {'vfl auc':>8s} {'SA acc':>7s}")
print(f"{'none':18s} {0:6g} {base['vfl_auc']['mean']:8.4f} {100 * base['overall']['mean']:7.2f}")
for kind in ("dp_gradient", "gaussian_feature"):
    sweep = H.run_sweep({**cfg, "defense": {"kind": kind}}, "noise_ratio", [0.001, 0.01, 0.1, 0.5, 1.0])
    for rep in sweep["reports"]:
        agg = rep["aggregate"]
        print(f"{kind:18s} {rep['config']['defense']['ratio']:6g} {agg['vfl_auc']['mean']:8.4f} "
              f"{100 * agg['overall']['mean']:7.2f}")

# ratio 0 is exactly the undefended run
zero = H.run_experiment({**cfg, "defense": {"kind": "dp_gradient", "ratio": 0.0}}, write=False)["aggregate"]
print("ratio 0 matches no defense:", zero["overall"] == base["overall"] and zero["vfl_auc"] == base["vfl_auc"])
