"""Non-learned reference predictors that exercise the metric pipeline.

uniform   every bin = 1 (flat spectrum, lower bound on shape metrics)
los_beam  single-lobe spectrum at the strongest geometric path's azimuth,
          falling back to the straight Tx->Rx bearing when a link has no paths
oracle    re-runs trace + label + normalize, i.e. emits the ground truth

All three write standard APSL prediction files so the evaluator has a single
path, no special cases.
"""

from __future__ import annotations

import math

import numpy as np

from . import apslabel, raytrace, scene
from .apslabel import DOMAIN_NORM, KernelConfig, N_BINS
from .datasetio import Manifest
from .errors import BaselineError
from .raytrace import PathRecord
from .scene import Endpoint

BASELINE_KINDS = ("uniform", "los_beam", "oracle")


def bearing_spectrum(aoa_deg: float, kcfg: KernelConfig) -> np.ndarray:
    """Normalized single-path label whose lobe sits at the given azimuth."""
    rec = PathRecord(tau_s=1e-6, aoa_deg=raytrace.wrap_deg(aoa_deg), power_lin=1.0)
    return apslabel.normalize_db(apslabel.build_aps([rec], kcfg)).bins


def predict_baseline(kind: str, manifest: Manifest, split_side: str) -> np.ndarray:
    """Prediction rows (float32, normalized-linear) for a split side, link order."""
    if kind not in BASELINE_KINDS:
        raise BaselineError(f"unknown baseline kind {kind!r} (choose from {BASELINE_KINDS})")
    kcfg = manifest.params.kernel_config()
    tcfg = manifest.params.trace_config()
    rows = []
    for map_id in manifest.side_ids(split_side):
        entry = manifest.entry(map_id)
        n_rx = len(entry.rx)
        if kind == "uniform":
            rows.append(np.ones((entry.n_valid, N_BINS), dtype=np.float32))
            continue
        paths_path = manifest.root / entry.paths_file
        if not paths_path.exists():
            raise BaselineError(f"missing path records for map {map_id}: {entry.paths_file}")
        if kind == "los_beam":
            records = raytrace.read_paths_csv(paths_path)
            for lid in entry.valid_link_ids():
                recs = records.get(lid)
                if recs:
                    best = max(recs, key=lambda r: r.power_lin)
                    aoa = best.aoa_deg
                else:
                    tx = entry.tx[lid // n_rx]
                    rx = entry.rx[lid % n_rx]
                    aoa = math.degrees(math.atan2(tx[1] - rx[1], tx[0] - rx[0]))
                rows.append(bearing_spectrum(aoa, kcfg).astype(np.float32)[None, :])
        else:  # oracle: recompute the ground truth through the full chain
            m = scene.load_map(manifest.root / entry.map_file)
            for lid in entry.valid_link_ids():
                tx = Endpoint(*entry.tx[lid // n_rx])
                rx = Endpoint(*entry.rx[lid % n_rx])
                paths = raytrace.trace_link(m, tx, rx, tcfg)
                if not paths:
                    raise BaselineError(f"oracle re-trace lost map {map_id} link {lid}")
                label = apslabel.normalize_db(apslabel.build_aps(paths, kcfg))
                rows.append(label.bins.astype(np.float32)[None, :])
    return np.concatenate(rows, axis=0)


def write_baseline(kind: str, manifest: Manifest, split_side: str, out_path) -> int:
    rows = predict_baseline(kind, manifest, split_side)
    apslabel.write_apsl(out_path, rows, DOMAIN_NORM)
    return rows.shape[0]


def condition_predictor(kind: str, manifest: Manifest):
    """Predictor over condition images, for latency benchmarking.

    Only kinds that need nothing but the condition image qualify; los_beam here
    recovers Tx/Rx by heatmap argmax and beams at the straight bearing.
    """
    kcfg = manifest.params.kernel_config()
    res = manifest.params.resolution_m

    if kind == "uniform":
        def predict(cond: scene.ConditionImage) -> np.ndarray:
            return np.ones(N_BINS, dtype=np.float32)
        return predict

    if kind == "los_beam":
        def predict(cond: scene.ConditionImage) -> np.ndarray:
            _, H, W = cond.channels.shape
            ti = np.unravel_index(int(np.argmax(cond.channels[1])), (H, W))
            ri = np.unravel_index(int(np.argmax(cond.channels[2])), (H, W))
            tx = ((ti[1] + 0.5) * res, (ti[0] + 0.5) * res)
            rx = ((ri[1] + 0.5) * res, (ri[0] + 0.5) * res)
            aoa = math.degrees(math.atan2(tx[1] - rx[1], tx[0] - rx[0]))
            return bearing_spectrum(aoa, kcfg).astype(np.float32)
        return predict

    raise BaselineError(f"baseline kind {kind!r} cannot run from condition images alone")
