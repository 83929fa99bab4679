import filecmp
import json
from pathlib import Path

import numpy as np
import pytest

from oracle_utils import oracle_dominant_count

from apsbench.apslabel import DOMAIN_NORM, read_apsl, write_apsl
from apsbench.datasetio import (Manifest, MapEntry, PipelineParams, build_dataset,
                                compute_split_stats, dominant_peak_stats,
                                load_manifest, make_split)
from apsbench.errors import DatasetError, SplitError

TINY = PipelineParams(h_px=64, w_px=64, resolution_m=8.0)


def build_tiny(root, seed=7, n_maps=2, n_tx=3, n_rx=5, params=TINY, jobs=1):
    manifest = build_dataset(root, n_maps=n_maps, n_tx=n_tx, n_rx=n_rx,
                             seed=seed, params=params, jobs=jobs)
    return manifest


def tree_bytes(root):
    root = Path(root)
    return {str(p.relative_to(root)): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file()}


class TestBuildDataset:
    def test_bookkeeping(self, tmp_path):
        manifest = build_tiny(tmp_path / "d")
        assert len(manifest.maps) == 2
        for e in manifest.maps:
            assert e.n_links == 15
            rows, domain = read_apsl(tmp_path / "d" / e.labels_file)
            assert domain == DOMAIN_NORM
            assert rows.shape[0] == 15 - len(e.dropped_links)
            for rel in (e.map_file, e.raster_file, e.paths_file, e.labels_file):
                assert (tmp_path / "d" / rel).exists()

    def test_deterministic_rebuild_byte_identical(self, tmp_path):
        build_tiny(tmp_path / "a")
        build_tiny(tmp_path / "b")
        a = tree_bytes(tmp_path / "a")
        b = tree_bytes(tmp_path / "b")
        assert a.keys() == b.keys()
        for k in a:
            assert a[k] == b[k], k

    def test_worker_count_does_not_change_bytes(self, tmp_path):
        build_tiny(tmp_path / "a", jobs=1)
        build_tiny(tmp_path / "b", jobs=2)
        a = tree_bytes(tmp_path / "a")
        b = tree_bytes(tmp_path / "b")
        assert a.keys() == b.keys()
        for k in a:
            assert a[k] == b[k], k

    def test_open_map_has_no_dropped_links(self, tmp_path):
        params = PipelineParams(h_px=64, w_px=64, resolution_m=8.0, drop_prob=1.0)
        manifest = build_tiny(tmp_path / "d", n_maps=1, params=params)
        assert manifest.maps[0].dropped_links == []
        rows, _ = read_apsl(tmp_path / "d" / manifest.maps[0].labels_file)
        assert rows.shape[0] == 15

    def test_normalized_label_invariants(self, tmp_path):
        manifest = build_tiny(tmp_path / "d")
        for e in manifest.maps:
            rows, _ = read_apsl(tmp_path / "d" / e.labels_file)
            rows = rows.astype(np.float64)
            assert (rows.max(axis=1) == 1.0).all()
            assert rows.min() >= 1e-30 * (1 - 1e-7)  # float32 storage of 1e-30


class TestManifest:
    def test_load_roundtrip(self, tmp_path):
        built = build_tiny(tmp_path / "d")
        loaded = load_manifest(tmp_path / "d")
        assert [e.id for e in loaded.maps] == [e.id for e in built.maps]
        assert loaded.params == built.params
        assert loaded.stats is None

    def test_missing_file_rejected(self, tmp_path):
        manifest = build_tiny(tmp_path / "d")
        (tmp_path / "d" / manifest.maps[0].paths_file).unlink()
        with pytest.raises(DatasetError, match="missing file"):
            load_manifest(tmp_path / "d")

    def test_label_count_mismatch_rejected(self, tmp_path):
        manifest = build_tiny(tmp_path / "d")
        labels_file = tmp_path / "d" / manifest.maps[0].labels_file
        rows, domain = read_apsl(labels_file)
        write_apsl(labels_file, rows[:-1], domain)
        with pytest.raises(DatasetError, match="valid links"):
            load_manifest(tmp_path / "d")

    def test_side_counts_match_label_headers(self, tmp_path):
        manifest = build_tiny(tmp_path / "d")
        make_split(manifest, [0], [1])
        loaded = load_manifest(tmp_path / "d")
        rows, _ = loaded.load_labels("test")
        assert rows.shape[0] == loaded.n_valid("test")


def dummy_manifest(tmp_path, n_maps):
    entries = [MapEntry(id=i, map_file="x", raster_file="x", paths_file="x",
                        labels_file="x", tx=[], rx=[], dropped_links=[])
               for i in range(n_maps)]
    return Manifest(root=Path(tmp_path), params=PipelineParams(), maps=entries)


class TestMakeSplit:
    def test_full_scale_split_shape(self, tmp_path):
        # the benchmark's published split: 51 maps, train 0-45, test 46-50
        manifest = dummy_manifest(tmp_path, 51)
        make_split(manifest, range(46), range(46, 51))
        assert manifest.train_map_ids == list(range(46))
        assert manifest.test_map_ids == [46, 47, 48, 49, 50]

    def test_overlap_rejected(self, tmp_path):
        manifest = dummy_manifest(tmp_path, 2)
        with pytest.raises(SplitError, match="overlap"):
            make_split(manifest, [0], [0])

    def test_unknown_ids_rejected(self, tmp_path):
        manifest = dummy_manifest(tmp_path, 2)
        with pytest.raises(SplitError, match="unknown"):
            make_split(manifest, [0], [5])

    def test_desk_split_bookkeeping(self, tmp_path):
        manifest = build_tiny(tmp_path / "d", n_maps=4)
        make_split(manifest, [0, 1], [2, 3])
        expected = sum(manifest.entry(i).n_valid for i in (2, 3))
        assert manifest.n_valid("test") == expected

    def test_empty_side_guarded(self, tmp_path):
        manifest = build_tiny(tmp_path / "d")
        with pytest.raises(DatasetError, match="split"):
            manifest.side_ids("train")


class TestStats:
    def test_stats_from_train_side_only(self, tmp_path):
        manifest = build_tiny(tmp_path / "d", n_maps=3)
        make_split(manifest, [0, 1], [2])
        stats = compute_split_stats(manifest)
        rows, _ = manifest.load_labels("train")
        pool = rows.astype(np.float64).ravel()
        assert stats.mu_a == pytest.approx(float(pool.mean()), abs=1e-12)
        assert stats.s_a == pytest.approx(float(pool.std()), abs=1e-12)
        # stored into the manifest on disk
        doc = json.loads((tmp_path / "d" / "manifest.json").read_text())
        assert doc["stats"]["mu_a"] == stats.mu_a

    def test_no_test_map_feeds_stats(self, tmp_path):
        manifest = build_tiny(tmp_path / "d", n_maps=3)
        make_split(manifest, [0, 1], [2])
        before = compute_split_stats(manifest)
        # corrupting the test-side labels must not change the statistics
        e = manifest.entry(2)
        rows, domain = read_apsl(tmp_path / "d" / e.labels_file)
        write_apsl(tmp_path / "d" / e.labels_file, np.ones_like(rows), domain)
        after = compute_split_stats(load_manifest(tmp_path / "d"))
        assert before == after


class TestDominantPeakStats:
    def test_single_peak_dataset(self, tmp_path):
        manifest = build_tiny(tmp_path / "d", n_maps=2)
        make_split(manifest, [0], [1])
        # overwrite the test-side labels with crafted one-peak spectra
        e = manifest.entry(1)
        rows, domain = read_apsl(tmp_path / "d" / e.labels_file)
        crafted = np.full_like(rows, 1e-30)
        for i in range(crafted.shape[0]):
            crafted[i, (7 * i) % 180] = 1.0
        write_apsl(tmp_path / "d" / e.labels_file, crafted, domain)
        report = dominant_peak_stats(load_manifest(tmp_path / "d"), "test")
        assert report["mean_peaks"] == 1.0
        assert report["frac_at_most_two"] == 1.0
        assert report["histogram"] == {1: rows.shape[0]}

    def test_matches_per_sample_oracle_recount(self, tmp_path):
        manifest = build_tiny(tmp_path / "d", n_maps=2, n_tx=3, n_rx=6)
        make_split(manifest, [0], [1])
        report = dominant_peak_stats(manifest, "test")
        rows, _ = manifest.load_labels("test")
        counts = [oracle_dominant_count(r.astype(np.float64)) for r in rows]
        assert report["mean_peaks"] == float(np.mean(counts))
        assert report["frac_at_most_two"] == float(np.mean(np.asarray(counts) <= 2))
        assert report["n_samples"] == len(counts)
