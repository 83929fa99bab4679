"""Dataset manifests, file layout, split assignment and build orchestration.

Directory layout under the dataset root:

    manifest.json
    maps/<id>.json      building rectangles + dimensions
    rasters/<id>.pgm    binary occupancy (P5, building = 255)
    paths/<id>.csv      per-path records, one file per map
    labels/<id>.apsl    normalized-linear spectra, one row per valid link

link_id = tx_index * n_rx + rx_index; links whose trace returns no path are
recorded in ``dropped_links`` and skipped in the label file, so label row k
corresponds to the k-th surviving link_id in ascending order.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, asdict, field
from pathlib import Path

import numpy as np

from . import apslabel, metrics, raytrace, scene
from .apslabel import DOMAIN_NORM, ApsSpectrum, KernelConfig, NormStats
from .errors import DatasetError, SplitError
from .raytrace import TraceConfig
from .scene import Endpoint, HeatmapConfig, MapGenParams

SCHEMA_VERSION = 1

# Reference statistics reported for the full-scale benchmark test split; the
# in-repo stand-in tracer makes no claim of reproducing them.
FULL_SCALE_MEAN_DOMINANT_PEAKS = 2.28
FULL_SCALE_FRAC_AT_MOST_TWO = 0.75


@dataclass(frozen=True)
class PipelineParams:
    """Every knob that shapes dataset content, recorded in the manifest."""

    h_px: int = 256
    w_px: int = 256
    resolution_m: float = 2.0
    sigma_px: float = 2.0
    fc_hz: float = 3.0e9
    c_mps: float = 3.0e8
    fs_hz: float = 100e6
    n_elements: int = 64
    d_lambda: float = 0.5
    max_order: int = 2
    refl_loss_db: float = 6.0
    delay_oversample: int = 4
    block_m: float = 38.0
    street_m: float = 26.0
    drop_prob: float = 0.5
    size_jitter: float = 0.25

    @property
    def width_m(self) -> float:
        return self.w_px * self.resolution_m

    @property
    def height_m(self) -> float:
        return self.h_px * self.resolution_m

    def map_gen_params(self) -> MapGenParams:
        return MapGenParams(width_m=self.width_m, height_m=self.height_m,
                            resolution_m=self.resolution_m, block_m=self.block_m,
                            street_m=self.street_m, drop_prob=self.drop_prob,
                            size_jitter=self.size_jitter)

    def trace_config(self) -> TraceConfig:
        return TraceConfig(fc_hz=self.fc_hz, c_mps=self.c_mps,
                           max_order=self.max_order, refl_loss_db=self.refl_loss_db)

    def kernel_config(self) -> KernelConfig:
        return KernelConfig(fs_hz=self.fs_hz, n_elements=self.n_elements,
                            d_lambda=self.d_lambda, delay_oversample=self.delay_oversample)

    def heatmap_config(self) -> HeatmapConfig:
        return HeatmapConfig(sigma_px=self.sigma_px)

    def physics_dict(self) -> dict:
        return {"fc_hz": self.fc_hz, "c_mps": self.c_mps, "fs_hz": self.fs_hz,
                "n_elements": self.n_elements, "d_lambda": self.d_lambda,
                "sigma_px": self.sigma_px, "resolution_m": self.resolution_m,
                "H": self.h_px, "W": self.w_px, "max_order": self.max_order,
                "refl_loss_db": self.refl_loss_db,
                "delay_oversample": self.delay_oversample}


@dataclass
class MapEntry:
    id: int
    map_file: str
    raster_file: str
    paths_file: str
    labels_file: str
    tx: list
    rx: list
    dropped_links: list

    @property
    def n_links(self) -> int:
        return len(self.tx) * len(self.rx)

    @property
    def n_valid(self) -> int:
        return self.n_links - len(self.dropped_links)

    def valid_link_ids(self) -> list[int]:
        dropped = set(self.dropped_links)
        return [lid for lid in range(self.n_links) if lid not in dropped]


@dataclass
class Manifest:
    root: Path
    params: PipelineParams
    maps: list[MapEntry]
    train_map_ids: list = field(default_factory=list)
    test_map_ids: list = field(default_factory=list)
    stats: NormStats | None = None
    generation: dict = field(default_factory=dict)

    def entry(self, map_id: int) -> MapEntry:
        for e in self.maps:
            if e.id == map_id:
                return e
        raise DatasetError(f"map id {map_id} not in manifest")

    def side_ids(self, side: str) -> list[int]:
        if side == "train":
            ids = self.train_map_ids
        elif side == "test":
            ids = self.test_map_ids
        else:
            raise DatasetError(f"unknown split side {side!r} (use train/test)")
        if not ids:
            raise DatasetError(f"the {side} side of the split is empty; run the split step first")
        return sorted(ids)

    def n_valid(self, side: str) -> int:
        return sum(self.entry(i).n_valid for i in self.side_ids(side))

    def load_labels(self, side: str) -> tuple[np.ndarray, str]:
        """Concatenated label rows for a split side, map-id then link-id order."""
        chunks = []
        domain = DOMAIN_NORM
        for map_id in self.side_ids(side):
            rows, domain = apslabel.read_apsl(self.root / self.entry(map_id).labels_file)
            chunks.append(rows)
        return np.concatenate(chunks, axis=0), domain

    def save(self) -> None:
        doc = {
            "schema_version": SCHEMA_VERSION,
            "params": self.params.physics_dict(),
            "generation": self.generation,
            "maps": [asdict(e) for e in self.maps],
            "split": {"train_map_ids": sorted(self.train_map_ids),
                      "test_map_ids": sorted(self.test_map_ids)},
        }
        if self.stats is not None:
            doc["stats"] = {"mu_a": self.stats.mu_a, "s_a": self.stats.s_a}
        with open(self.root / "manifest.json", "w") as f:
            json.dump(doc, f, indent=2, sort_keys=True)
            f.write("\n")


def load_manifest(root) -> Manifest:
    """Load and validate a manifest: files must exist and label-file headers
    must agree with the per-map bookkeeping."""
    root = Path(root)
    mpath = root / "manifest.json"
    if not mpath.exists():
        raise DatasetError(f"missing manifest: {mpath}")
    with open(mpath) as f:
        doc = json.load(f)
    p = doc["params"]
    gen = doc.get("generation", {})
    params = PipelineParams(
        h_px=int(p["H"]), w_px=int(p["W"]), resolution_m=float(p["resolution_m"]),
        sigma_px=float(p["sigma_px"]), fc_hz=float(p["fc_hz"]), c_mps=float(p["c_mps"]),
        fs_hz=float(p["fs_hz"]), n_elements=int(p["n_elements"]),
        d_lambda=float(p["d_lambda"]), max_order=int(p["max_order"]),
        refl_loss_db=float(p["refl_loss_db"]), delay_oversample=int(p["delay_oversample"]),
        block_m=float(gen.get("block_m", MapGenParams.block_m)),
        street_m=float(gen.get("street_m", MapGenParams.street_m)),
        drop_prob=float(gen.get("drop_prob", MapGenParams.drop_prob)),
        size_jitter=float(gen.get("size_jitter", MapGenParams.size_jitter)))
    entries = []
    for e in doc["maps"]:
        entry = MapEntry(id=int(e["id"]), map_file=e["map_file"], raster_file=e["raster_file"],
                         paths_file=e["paths_file"], labels_file=e["labels_file"],
                         tx=[tuple(q) for q in e["tx"]], rx=[tuple(q) for q in e["rx"]],
                         dropped_links=[int(d) for d in e["dropped_links"]])
        for rel in (entry.map_file, entry.raster_file, entry.paths_file, entry.labels_file):
            if not (root / rel).exists():
                raise DatasetError(f"manifest references missing file: {rel}")
        n_rows = apslabel.read_apsl_count(root / entry.labels_file)
        if n_rows != entry.n_valid:
            raise DatasetError(
                f"map {entry.id}: label file holds {n_rows} rows but the manifest "
                f"implies {entry.n_valid} valid links")
        entries.append(entry)
    split = doc.get("split", {})
    stats_doc = doc.get("stats")
    stats = NormStats(mu_a=float(stats_doc["mu_a"]), s_a=float(stats_doc["s_a"])) \
        if stats_doc else None
    return Manifest(root=root, params=params, maps=entries,
                    train_map_ids=[int(i) for i in split.get("train_map_ids", [])],
                    test_map_ids=[int(i) for i in split.get("test_map_ids", [])],
                    stats=stats, generation=gen)


def _map_seeds(seed: int, map_id: int) -> tuple[int, int]:
    state = np.random.SeedSequence([seed, map_id]).generate_state(2)
    return int(state[0]), int(state[1])


def _build_one_map(args) -> dict:
    """Generate, rasterize, sample, trace, and label one map; writes its files."""
    root, map_id, seed, n_tx, n_rx, params = args
    root = Path(root)
    map_seed, ep_seed = _map_seeds(seed, map_id)
    m = scene.generate_map(map_seed, params.map_gen_params(), map_id=map_id)
    raster = scene.rasterize(m, params.h_px, params.w_px)
    tx, rx = scene.sample_endpoints(m, n_tx, n_rx, ep_seed)

    tcfg = params.trace_config()
    kcfg = params.kernel_config()
    records = {}
    rows = []
    dropped = []
    for ti, t in enumerate(tx):
        for ri, r in enumerate(rx):
            lid = ti * n_rx + ri
            try:
                paths = raytrace.trace_link(m, t, r, tcfg)
            except Exception as exc:
                raise DatasetError(f"map {map_id} link {lid}: {exc}") from exc
            if not paths:
                dropped.append(lid)
                continue
            records[lid] = paths
            try:
                label = apslabel.normalize_db(apslabel.build_aps(paths, kcfg))
            except Exception as exc:
                raise DatasetError(f"map {map_id} link {lid}: {exc}") from exc
            rows.append(label.bins)

    map_file = f"maps/{map_id}.json"
    raster_file = f"rasters/{map_id}.pgm"
    paths_file = f"paths/{map_id}.csv"
    labels_file = f"labels/{map_id}.apsl"
    scene.save_map(root / map_file, m)
    scene.write_pgm(root / raster_file, raster)
    raytrace.write_paths_csv(root / paths_file, records)
    apslabel.write_apsl(root / labels_file, np.asarray(rows, dtype=np.float32), DOMAIN_NORM)
    return {"id": map_id, "map_file": map_file, "raster_file": raster_file,
            "paths_file": paths_file, "labels_file": labels_file,
            "tx": [(p.x, p.y) for p in tx], "rx": [(p.x, p.y) for p in rx],
            "dropped_links": dropped}


def build_dataset(root, n_maps: int, n_tx: int, n_rx: int, seed: int,
                  params: PipelineParams = PipelineParams(), jobs: int = 1) -> Manifest:
    """Build every map end to end and write the manifest last.

    Fully deterministic in (seed, params): per-map work is a pure function of
    the derived sub-seeds, so the worker count changes wall time only.
    """
    root = Path(root)
    for sub in ("maps", "rasters", "paths", "labels"):
        (root / sub).mkdir(parents=True, exist_ok=True)
    tasks = [(str(root), i, seed, n_tx, n_rx, params) for i in range(n_maps)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_build_one_map, tasks))
    else:
        results = [_build_one_map(t) for t in tasks]
    entries = [MapEntry(**r) for r in sorted(results, key=lambda r: r["id"])]
    manifest = Manifest(root=root, params=params, maps=entries,
                        generation={"seed": seed, "n_tx": n_tx, "n_rx": n_rx,
                                    "block_m": params.block_m, "street_m": params.street_m,
                                    "drop_prob": params.drop_prob,
                                    "size_jitter": params.size_jitter})
    manifest.save()
    return manifest


def make_split(manifest: Manifest, train_ids, test_ids) -> Manifest:
    """Record a cross-map split; train and test map sets must be disjoint."""
    train = sorted(int(i) for i in train_ids)
    test = sorted(int(i) for i in test_ids)
    overlap = set(train) & set(test)
    if overlap:
        raise SplitError(f"train/test map overlap: {sorted(overlap)}")
    known = {e.id for e in manifest.maps}
    unknown = (set(train) | set(test)) - known
    if unknown:
        raise SplitError(f"split references unknown map ids: {sorted(unknown)}")
    manifest.train_map_ids = train
    manifest.test_map_ids = test
    manifest.save()
    return manifest


def compute_split_stats(manifest: Manifest) -> NormStats:
    """Dataset-level (mu, s) from the training split only, stored in the manifest."""
    rows, domain = manifest.load_labels("train")
    labels = [ApsSpectrum(bins=np.asarray(r, dtype=float), domain=domain) for r in rows]
    stats = apslabel.compute_dataset_stats(labels)
    manifest.stats = stats
    manifest.save()
    return stats


def dominant_peak_stats(manifest: Manifest, split_side: str) -> dict:
    """Dominant-peak count statistics over one split side."""
    rows, domain = manifest.load_labels(split_side)
    counts = []
    for row in rows:
        sp = ApsSpectrum(bins=np.asarray(row, dtype=float), domain=domain)
        counts.append(int(metrics.detect_peaks(sp, dominance_filter=True).dominant.sum()))
    counts = np.asarray(counts)
    hist: dict[int, int] = {}
    for c in counts:
        hist[int(c)] = hist.get(int(c), 0) + 1
    return {"mean_peaks": float(counts.mean()),
            "frac_at_most_two": float(np.mean(counts <= 2)),
            "histogram": dict(sorted(hist.items())),
            "n_samples": int(counts.size)}
