"""Dataset access for trainer runs, built on the published file contracts only.

Reads `manifest.json`, binary PGM rasters and APSL label files directly and
rebuilds condition images from the recorded geometry (raster + endpoint
coordinates + sigma), so the trainer depends on the dataset format, not on
the toolkit that produced it.  Every file opened is recorded so tests can
audit that training never touched a held-out map.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

N_BINS = 180
_APSL_HEADER = struct.Struct("<4sHBHQ")
_DOMAINS = {0: "raw_linear", 1: "normalized_linear", 2: "standardized"}
_DOMAIN_CODES = {v: k for k, v in _DOMAINS.items()}


def read_apsl(path) -> tuple[np.ndarray, str]:
    blob = Path(path).read_bytes()
    magic, version, code, nbins, count = _APSL_HEADER.unpack_from(blob)
    if magic != b"APSL" or version != 1 or nbins != N_BINS:
        raise ValueError(f"{path}: not a version-1 APSL file with {N_BINS} bins")
    rows = np.frombuffer(blob[_APSL_HEADER.size:], dtype="<f4").reshape(count, N_BINS)
    return rows, _DOMAINS[code]


def write_apsl(path, rows: np.ndarray, domain: str) -> None:
    rows = np.ascontiguousarray(rows, dtype="<f4")
    header = _APSL_HEADER.pack(b"APSL", 1, _DOMAIN_CODES[domain], N_BINS, rows.shape[0])
    with open(path, "wb") as f:
        f.write(header)
        f.write(rows.tobytes())


def read_pgm(path) -> np.ndarray:
    blob = Path(path).read_bytes()
    if not blob.startswith(b"P5"):
        raise ValueError(f"{path}: expected a binary PGM (P5) raster")
    fields, pos = [], 2
    while len(fields) < 3:
        while blob[pos:pos + 1].isspace():
            pos += 1
        start = pos
        while not blob[pos:pos + 1].isspace():
            pos += 1
        fields.append(int(blob[start:pos]))
    pos += 1
    w, h, _maxval = fields
    cells = np.frombuffer(blob[pos:pos + w * h], dtype=np.uint8).reshape(h, w)
    return (cells > 0).astype(np.float32)


def gaussian_heatmap(x_m: float, y_m: float, sigma_px: float, H: int, W: int,
                     resolution_m: float) -> np.ndarray:
    """Peak-normalized heatmap per the dataset contract (pixel-unit distances,
    endpoint pixel exactly 1, tails floored at 1e-30)."""
    px = x_m / resolution_m
    py = y_m / resolution_m
    cols = np.arange(W) + 0.5
    rows = np.arange(H) + 0.5
    d2 = (cols[None, :] - px) ** 2 + (rows[:, None] - py) ** 2
    g = np.exp(-d2 / (2.0 * sigma_px ** 2))
    return np.clip(g / g.max(), 1e-30, None).astype(np.float32)


@dataclass
class SplitData:
    """One split side, fully materialized: conditions, standardized targets."""

    conditions: torch.Tensor       # (n, 3, H, W) float32
    targets: torch.Tensor          # (n, 180) float32, standardized domain
    map_ids: list
    opened_files: list             # relative paths read while materializing

    def __len__(self) -> int:
        return self.targets.shape[0]


class DatasetReader:
    def __init__(self, root):
        self.root = Path(root)
        with open(self.root / "manifest.json") as f:
            self.manifest = json.load(f)
        p = self.manifest["params"]
        self.H = int(p["H"])
        self.W = int(p["W"])
        self.resolution_m = float(p["resolution_m"])
        self.sigma_px = float(p["sigma_px"])
        stats = self.manifest.get("stats")
        if stats is None:
            raise ValueError("dataset has no normalization statistics; "
                             "run the stats step before training")
        self.mu_a = float(stats["mu_a"])
        self.s_a = float(stats["s_a"])

    def side_ids(self, side: str) -> list:
        key = {"train": "train_map_ids", "test": "test_map_ids"}[side]
        ids = self.manifest["split"][key]
        if not ids:
            raise ValueError(f"split side {side!r} is empty")
        return sorted(int(i) for i in ids)

    def _entry(self, map_id: int) -> dict:
        for e in self.manifest["maps"]:
            if int(e["id"]) == map_id:
                return e
        raise KeyError(f"map {map_id} not in manifest")

    def load_split(self, side: str) -> SplitData:
        conds, targets, opened = [], [], []
        ids = self.side_ids(side)
        for map_id in ids:
            entry = self._entry(map_id)
            opened += [entry["raster_file"], entry["labels_file"]]
            raster = read_pgm(self.root / entry["raster_file"])
            rows, domain = read_apsl(self.root / entry["labels_file"])
            if domain != "normalized_linear":
                raise ValueError(f"labels of map {map_id} are {domain}")
            tx = entry["tx"]
            rx = entry["rx"]
            n_rx = len(rx)
            dropped = set(int(d) for d in entry["dropped_links"])
            valid = [lid for lid in range(len(tx) * n_rx) if lid not in dropped]
            if len(valid) != rows.shape[0]:
                raise ValueError(f"map {map_id}: label rows do not match valid links")
            heat_cache: dict[tuple, np.ndarray] = {}

            def heat(pt):
                key = (round(pt[0], 9), round(pt[1], 9))
                if key not in heat_cache:
                    heat_cache[key] = gaussian_heatmap(pt[0], pt[1], self.sigma_px,
                                                       self.H, self.W, self.resolution_m)
                return heat_cache[key]

            for row, lid in zip(rows, valid):
                cond = np.stack([raster, heat(tx[lid // n_rx]), heat(rx[lid % n_rx])])
                conds.append(cond)
                targets.append((row.astype(np.float64) - self.mu_a) / self.s_a)
        return SplitData(
            conditions=torch.from_numpy(np.stack(conds)),
            targets=torch.from_numpy(np.stack(targets).astype(np.float32)),
            map_ids=ids,
            opened_files=opened,
        )


def batches(data: SplitData, batch_size: int, generator: torch.Generator):
    """Seeded shuffled minibatches; order is a pure function of the generator."""
    perm = torch.randperm(len(data), generator=generator)
    for start in range(0, len(data), batch_size):
        idx = perm[start:start + batch_size]
        yield data.conditions[idx], data.targets[idx]
