"""Independent brute-force references shared by the test modules.

Everything here is written from scratch against the metric definitions
(exhaustive circular neighbor scan, walked prominence, exhaustive matching)
so the production implementations are checked by a second route.
"""

import numpy as np


def oracle_peak_find(spectrum, prominence_min=0.05):
    """Exhaustive circular peak finder with walked topographic prominence."""
    s = np.asarray(spectrum, dtype=float)
    s = s / s.max()
    n = s.size
    gmin = s.min()
    raw = [i for i in range(n) if s[i] > s[(i - 1) % n] and s[i] > s[(i + 1) % n]]
    bins, heights = [], []
    for i in raw:
        h = s[i]
        sides = []
        for step in (-1, 1):
            j = i
            base = h
            for _ in range(n):
                j = (j + step) % n
                if s[j] > h:
                    break
                base = min(base, s[j])
            else:
                base = gmin
            sides.append(base)
        if h - max(sides) >= prominence_min:
            bins.append(i)
            heights.append(h)
    if not bins:
        return [int(np.argmax(s))], [1.0]
    return bins, heights


def oracle_dominant(bins, heights):
    total = sum(heights) + 1e-12
    dom = [(b, h) for b, h in zip(bins, heights) if h / total >= 0.1]
    if not dom:
        k = int(np.argmax(heights))
        dom = [(bins[k], heights[k])]
    return dom


def oracle_dominant_count(spectrum):
    return len(oracle_dominant(*oracle_peak_find(spectrum)))


def oracle_dist(a, b):
    d = abs(a - b) % 360.0
    return min(d, 360.0 - d)


def oracle_angle(b):
    return -180.0 + 2.0 * b


def oracle_ple(gt, pred):
    gt_dom = oracle_dominant(*oracle_peak_find(gt))
    pred_bins, _ = oracle_peak_find(pred)
    dists = [min(oracle_dist(oracle_angle(b), oracle_angle(q)) for q in pred_bins)
             for b, _ in gt_dom]
    return float(np.mean(dists))


def oracle_hit(gt, pred, delta):
    gt_dom = oracle_dominant(*oracle_peak_find(gt))
    top_gt = max(gt_dom, key=lambda bh: bh[1])[0]
    pred_bins, pred_heights = oracle_peak_find(pred)
    top_pred = pred_bins[int(np.argmax(pred_heights))]
    return int(oracle_dist(oracle_angle(top_gt), oracle_angle(top_pred)) <= delta)


def oracle_recall(gt, pred, delta):
    gt_dom = oracle_dominant(*oracle_peak_find(gt))
    pred_bins, _ = oracle_peak_find(pred)
    hits = sum(1 for b, _ in gt_dom
               if min(oracle_dist(oracle_angle(b), oracle_angle(q))
                      for q in pred_bins) <= delta)
    return hits / len(gt_dom)


def random_spectrum(rng):
    """Noise floor plus a few random lobes, always strictly positive."""
    base = rng.uniform(5e-4, 2e-2, 180)
    for _ in range(rng.integers(0, 6)):
        center = rng.uniform(0, 180)
        width = rng.uniform(0.8, 6.0)
        height = rng.uniform(0.05, 1.0)
        idx = np.arange(180)
        d = np.minimum(np.abs(idx - center), 180 - np.abs(idx - center))
        base += height * np.exp(-d ** 2 / (2 * width ** 2))
    return base
