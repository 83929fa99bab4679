"""Walkthrough: the evaluation protocol on crafted spectra.

Builds a two-peak ground truth and three predictions of decreasing quality,
then prints every metric the benchmark reports.
"""

import numpy as np

from apsbench import (circular_distance, detect_peaks, hit_at, ple, ple_ccdf,
                      recall_at, reconstruction_metrics)
from apsbench.apslabel import DOMAIN_NORM, ApsSpectrum


def lobe(center_bin, height, width=1.5):
    idx = np.arange(180)
    d = np.minimum(np.abs(idx - center_bin), 180 - np.abs(idx - center_bin))
    return height * np.exp(-d ** 2 / (2 * width ** 2))


def spec(bins):
    return ApsSpectrum(bins=np.clip(bins, 1e-30, 1.0), domain=DOMAIN_NORM)


print(f"circular distance: d(170, -170) = {circular_distance(170, -170)}, "
      f"d(-180, 178) = {circular_distance(-180, 178)}")

gt = spec(lobe(60, 1.0) + lobe(120, 0.55) + 1e-3)
peaks = detect_peaks(gt, dominance_filter=True)
print(f"\nground truth dominant peaks: "
      f"{[(int(b), float(a)) for b, a in zip(peaks.bins[peaks.dominant], peaks.dominant_angles())]}")

candidates = {
    "exact": spec(lobe(60, 1.0) + lobe(120, 0.55) + 1e-3),
    "one bin off, one peak lost": spec(lobe(61, 1.0) + 1e-3),
    "wrong direction": spec(lobe(150, 1.0) + 1e-3),
}
for name, pred in candidates.items():
    rec = reconstruction_metrics(gt, pred)
    print(f"\nprediction: {name}")
    print(f"  MAE {rec['mae']:.4f}  PSNR {rec['psnr_db']:6.1f} dB  "
          f"NMSE {rec['nmse_db']:7.1f} dB  CosSim {rec['cossim']:.4f}  "
          f"angle {rec['spectral_angle_deg']:5.1f} deg")
    print(f"  PLE {ple(gt, pred):5.1f} deg   Hit@2 {hit_at(gt, pred, 2)}  "
          f"Hit@4 {hit_at(gt, pred, 4)}  Recall@2 {recall_at(gt, pred, 2):.2f}  "
          f"Recall@4 {recall_at(gt, pred, 4):.2f}")

ple_values = [0.0, 0.0, 2.0, 4.0, 30.0]
print(f"\nPLE CCDF of {ple_values}:")
for t, frac in ple_ccdf(ple_values, [0.0, 2.0, 4.0, 30.0]):
    print(f"  P(PLE > {t:4.1f}) = {frac:.2f}")
