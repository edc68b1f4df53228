"""
Reconstructing image halves
===========================

Each synthetic image is split down the middle: the active party holds the
left half and the target party the right half.  After the query attack the
reconstructed right halves are scored with PSNR and SSIM against the truth,
next to a random-image baseline.
"""

import numpy as np

from vflinv import harness as H

cfg = {"spec_version": 1, "dataset": "synthetic-image", "image": {"side": 16, "n": 2000},
       "vfl": {"epochs": 10}, "scenario": "QA", "seeds": [0]}
rep = H.run_experiment(cfg, write=False)
img = rep["runs"][0]["attack"]["image"]
print(f"PSNR {img['psnr']:.2f} dB (random {img['random_psnr']:.2f})")
print(f"SSIM {img['ssim']:.4f} (random {img['random_ssim']:.4f})")

# draw one truth/reconstruction pair as text, darkest to brightest
run = rep["_runs"][0]
truth = run["_truth"].X[0].reshape(16, 8)
recon = run["_report"].reconstruction.encoded[0].reshape(16, 8)
shades = " .:-=+*#%@"


def ascii_rows(a):
    idx = np.clip(((a + 1) / 2 * (len(shades) - 1)).round().astype(int), 0, len(shades) - 1)
    return ["".join(shades[i] for i in row) for row in idx]


print("\ntruth     reconstruction")
for t, r in zip(ascii_rows(truth), ascii_rows(recon)):
    print(f"{t}  {r}")
