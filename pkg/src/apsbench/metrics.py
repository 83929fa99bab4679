"""Evaluation protocol: reconstruction, spectral shape, peak localization,
dominant-direction, distributional and latency metrics.

All spectrum metrics are computed in the normalized-linear domain (bins in
(0, 1]) with the PSNR peak fixed at 1; standardized predictions are
destandardized with the manifest statistics before scoring.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.signal import find_peaks, peak_prominences

from .apslabel import (DOMAIN_NORM, DOMAIN_RAW, DOMAIN_STD, N_BINS, ApsSpectrum,
                       destandardize, normalize_db, read_apsl)
from .errors import EvaluationError, MetricError

PROMINENCE_MIN = 0.05   # on the max-normalized spectrum
DOMINANCE_MIN = 0.1     # relative-contribution cutoff r_i
_R_EPS = 1e-12
PSNR_CAP_DB = 300.0
NMSE_FLOOR_DB = -300.0


def circular_distance(a_deg, b_deg):
    """Shortest angular distance on the circle, in [0, 180] degrees."""
    d = np.abs(np.asarray(a_deg, dtype=float) - np.asarray(b_deg, dtype=float)) % 360.0
    out = np.minimum(d, 360.0 - d)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class PeakSet:
    """Detected spectrum peaks in ascending bin order.

    heights are max-normalized values in (0, 1]; dominant flags mark the peaks
    that pass the relative-contribution rule (always all-False when detection
    ran without the dominance filter).
    """

    bins: np.ndarray
    angles_deg: np.ndarray
    heights: np.ndarray
    dominant: np.ndarray

    def dominant_angles(self) -> np.ndarray:
        return self.angles_deg[self.dominant]

    def strongest_angle(self, dominant_only: bool = False) -> float:
        if dominant_only:
            h = self.heights[self.dominant]
            a = self.angles_deg[self.dominant]
        else:
            h, a = self.heights, self.angles_deg
        return float(a[int(np.argmax(h))])


def detect_peaks(aps: ApsSpectrum, dominance_filter: bool = False) -> PeakSet:
    """Circular peak detection with a topographic-prominence threshold.

    The spectrum is max-normalized and rotated so its global minimum sits at
    index 0, then linear local maxima are found (plateaus contribute their
    leftmost bin) and peaks with prominence >= 0.05 are kept.  With the
    dominance filter on, peaks with relative contribution r_i >= 0.1 are
    flagged dominant; if none qualify, the single highest peak is.  A spectrum
    with no qualifying local maximum falls back to its global argmax, so the
    returned set is never empty.
    """
    if aps.domain == DOMAIN_STD:
        raise MetricError("destandardize spectra before peak analysis")
    bins = np.asarray(aps.bins, dtype=float)
    if not bins.max() > 0:
        raise MetricError("spectrum has no positive maximum")
    s = bins / bins.max()

    k0 = int(np.argmin(s))
    rot = np.roll(s, -k0)
    ext = np.append(rot, rot[0])  # index 180 mirrors the wrap back to the minimum
    idx, props = find_peaks(ext, plateau_size=(1, None))
    if idx.size:
        prom = peak_prominences(ext, idx)[0]
        keep = prom >= PROMINENCE_MIN
        left = props["left_edges"][keep]
        heights = ext[idx[keep]]
    else:
        left = np.array([], dtype=int)
        heights = np.array([], dtype=float)

    if left.size == 0:
        pk_bins = np.array([int(np.argmax(s))])
        heights = np.array([1.0])
    else:
        pk_bins = (left + k0) % N_BINS
    order = np.argsort(pk_bins)
    pk_bins = pk_bins[order]
    heights = heights[order]

    dominant = np.zeros(pk_bins.size, dtype=bool)
    if dominance_filter:
        ratios = heights / (heights.sum() + _R_EPS)
        dominant = ratios >= DOMINANCE_MIN
        if not dominant.any():
            dominant[int(np.argmax(heights))] = True

    return PeakSet(bins=pk_bins.astype(int), angles_deg=-180.0 + 2.0 * pk_bins,
                   heights=heights, dominant=dominant)


def ple(gt: ApsSpectrum, pred: ApsSpectrum) -> float:
    """Mean circular distance from each ground-truth dominant peak to the
    nearest predicted candidate peak (prominence filter only on predictions)."""
    gt_angles = detect_peaks(gt, dominance_filter=True).dominant_angles()
    pred_angles = detect_peaks(pred, dominance_filter=False).angles_deg
    dists = [float(np.min(circular_distance(a, pred_angles))) for a in gt_angles]
    return float(np.mean(dists))


def hit_at(gt: ApsSpectrum, pred: ApsSpectrum, delta_deg: float) -> int:
    """1 iff the strongest predicted peak lies within delta (inclusive) of the
    strongest ground-truth dominant peak."""
    gt_top = detect_peaks(gt, dominance_filter=True).strongest_angle(dominant_only=True)
    pred_top = detect_peaks(pred, dominance_filter=False).strongest_angle()
    return int(circular_distance(gt_top, pred_top) <= delta_deg)


def recall_at(gt: ApsSpectrum, pred: ApsSpectrum, delta_deg: float) -> float:
    """Fraction of ground-truth dominant peaks matched by some predicted peak
    within delta degrees (inclusive)."""
    gt_angles = detect_peaks(gt, dominance_filter=True).dominant_angles()
    pred_angles = detect_peaks(pred, dominance_filter=False).angles_deg
    hits = sum(1 for a in gt_angles
               if float(np.min(circular_distance(a, pred_angles))) <= delta_deg)
    return hits / len(gt_angles)


def reconstruction_metrics(gt: ApsSpectrum, pred: ApsSpectrum) -> dict:
    """Point-wise and shape metrics for one sample (normalized-linear domain)."""
    for name, sp in (("gt", gt), ("pred", pred)):
        if sp.domain != DOMAIN_NORM:
            raise MetricError(f"{name} spectrum must be {DOMAIN_NORM}, got {sp.domain}")
    g = np.asarray(gt.bins, dtype=float)
    p = np.asarray(pred.bins, dtype=float)
    e = p - g
    mae = float(np.mean(np.abs(e)))
    mse = float(np.mean(e ** 2))
    psnr = PSNR_CAP_DB if mse < 1e-30 else min(10.0 * np.log10(1.0 / mse), PSNR_CAP_DB)
    sg = float(np.sum(g ** 2))
    se = float(np.sum(e ** 2))
    with np.errstate(divide="ignore"):
        nmse = max(10.0 * np.log10(se / sg) if se > 0 else -np.inf, NMSE_FLOOR_DB)
    ng = float(np.linalg.norm(g))
    npred = float(np.linalg.norm(p))
    if ng == 0.0 or npred == 0.0:
        raise MetricError("zero-norm spectrum: cosine similarity undefined")
    cos = float(np.dot(g, p) / (ng * npred))
    angle = float(np.degrees(np.arccos(np.clip(cos, -1.0, 1.0))))
    return {"mae": mae, "psnr_db": float(psnr), "nmse_db": float(nmse),
            "cossim": cos, "spectral_angle_deg": angle}


@dataclass
class MetricReport:
    mae: float
    psnr_db: float
    nmse_db: float
    cossim: float
    spectral_angle_deg: float
    ple_deg: float
    hit_at: dict
    recall_at: dict
    n_samples: int
    metric_counts: dict
    latency_ms_per_sample: float | None = None
    ple_values: np.ndarray = field(default=None, repr=False)

    def as_dict(self) -> dict:
        doc = {
            "mae": self.mae,
            "psnr_db": self.psnr_db,
            "nmse_db": self.nmse_db,
            "cossim": self.cossim,
            "spectral_angle_deg": self.spectral_angle_deg,
            "ple_deg": self.ple_deg,
            "hit_at": {str(k): v for k, v in self.hit_at.items()},
            "recall_at": {str(k): v for k, v in self.recall_at.items()},
            "n_samples": self.n_samples,
            "metric_counts": {str(k): v for k, v in self.metric_counts.items()},
        }
        if self.latency_ms_per_sample is not None:
            doc["latency_ms_per_sample"] = self.latency_ms_per_sample
        return doc

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n"


def _reconcile_predictions(rows: np.ndarray, domain: str, stats) -> list[ApsSpectrum]:
    out = []
    for row in rows:
        sp = ApsSpectrum(bins=np.asarray(row, dtype=float), domain=domain)
        if domain == DOMAIN_STD:
            if stats is None:
                raise EvaluationError("standardized predictions need manifest stats")
            sp = destandardize(sp, stats)
        elif domain == DOMAIN_RAW:
            sp = normalize_db(sp)
        out.append(sp)
    return out


def evaluate_samples(gt_rows: np.ndarray, pred_rows: np.ndarray, pred_domain: str,
                     stats=None, deltas: Sequence[float] = (2.0, 4.0)) -> MetricReport:
    """Aggregate per-sample metrics by arithmetic mean (dB metrics averaged in
    dB per sample).  Samples whose prediction has zero norm are excluded from
    cossim / spectral angle and counted separately."""
    if gt_rows.shape != pred_rows.shape:
        raise EvaluationError(
            f"prediction rows {pred_rows.shape[0]} do not match ground truth {gt_rows.shape[0]}")
    preds = _reconcile_predictions(pred_rows, pred_domain, stats)
    acc = {k: [] for k in ("mae", "psnr_db", "nmse_db", "cossim", "spectral_angle_deg", "ple")}
    hits = {d: [] for d in deltas}
    recalls = {d: [] for d in deltas}
    n_invalid = 0
    for row, pred in zip(gt_rows, preds):
        gt = ApsSpectrum(bins=np.asarray(row, dtype=float), domain=DOMAIN_NORM)
        try:
            rec = reconstruction_metrics(gt, pred)
        except MetricError:
            n_invalid += 1
            continue
        for k in ("mae", "psnr_db", "nmse_db", "cossim", "spectral_angle_deg"):
            acc[k].append(rec[k])
        acc["ple"].append(ple(gt, pred))
        for d in deltas:
            hits[d].append(hit_at(gt, pred, d))
            recalls[d].append(recall_at(gt, pred, d))
    n = gt_rows.shape[0]
    n_valid = n - n_invalid
    if n_valid == 0:
        raise EvaluationError("no valid samples to evaluate")
    counts = {k: n_valid for k in ("mae", "psnr_db", "nmse_db", "cossim",
                                   "spectral_angle_deg", "ple_deg")}
    counts["invalid"] = n_invalid
    return MetricReport(
        mae=float(np.mean(acc["mae"])),
        psnr_db=float(np.mean(acc["psnr_db"])),
        nmse_db=float(np.mean(acc["nmse_db"])),
        cossim=float(np.mean(acc["cossim"])),
        spectral_angle_deg=float(np.mean(acc["spectral_angle_deg"])),
        ple_deg=float(np.mean(acc["ple"])),
        hit_at={d: float(np.mean(hits[d])) for d in deltas},
        recall_at={d: float(np.mean(recalls[d])) for d in deltas},
        n_samples=n,
        metric_counts=counts,
        ple_values=np.array(acc["ple"]),
    )


def evaluate_run(manifest, pred_file, gt_side: str) -> MetricReport:
    """Score one prediction file against a split side of a built dataset.

    ``manifest`` is a loaded dataset manifest; predictions must have one row
    per valid link of the side, in map-id then link-id order.
    """
    gt_rows, gt_domain = manifest.load_labels(gt_side)
    if gt_domain != DOMAIN_NORM:
        raise EvaluationError(f"label files must be {DOMAIN_NORM}, got {gt_domain}")
    pred_rows, pred_domain = read_apsl(pred_file)
    if pred_rows.shape[0] != gt_rows.shape[0]:
        raise EvaluationError(
            f"prediction file has {pred_rows.shape[0]} rows but the {gt_side} split "
            f"holds {gt_rows.shape[0]} valid samples")
    return evaluate_samples(gt_rows, pred_rows, pred_domain, stats=manifest.stats)


def ple_ccdf(ple_values: Sequence[float], thresholds: Sequence[float]) -> list[tuple[float, float]]:
    """Complementary CDF P(PLE > t) over the given thresholds."""
    v = np.asarray(ple_values, dtype=float)
    if v.size and v.min() < 0:
        raise MetricError("PLE values must be nonnegative")
    return [(float(t), float(np.mean(v > t))) for t in thresholds]


def write_ccdf_csv(path, pairs: Sequence[tuple[float, float]]) -> None:
    with open(path, "w", newline="") as f:
        f.write("threshold_deg,ccdf\n")
        for t, frac in pairs:
            f.write(f"{t!r},{frac!r}\n")


def measure_latency(predictor: Callable, samples: Sequence) -> float:
    """Average wall-clock milliseconds per predictor call; one warm-up call on
    the first sample is excluded from the measurement."""
    if len(samples) < 100:
        raise MetricError("latency measurement needs at least 100 samples")
    predictor(samples[0])
    t0 = time.perf_counter()
    for s in samples:
        predictor(s)
    total = time.perf_counter() - t0
    return total / len(samples) * 1000.0
