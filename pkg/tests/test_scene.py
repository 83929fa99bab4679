import math

import numpy as np
import pytest

from apsbench.errors import MapGenError, SamplingError, SceneError
from apsbench.scene import (ConditionImage, Endpoint, HeatmapConfig, MapGenParams,
                            Raster, UrbanMap, build_condition, free_fraction,
                            gaussian_heatmap, generate_map, load_map, rasterize,
                            read_pgm, sample_endpoints, save_map, write_pgm)


def empty_map(width=512.0, height=512.0, res=2.0):
    return UrbanMap(id=0, width_m=width, height_m=height, resolution_m=res, buildings=())


class TestGenerateMap:
    def test_deterministic(self):
        a = generate_map(7)
        b = generate_map(7)
        assert a == b

    def test_different_seeds_differ(self):
        assert generate_map(7) != generate_map(8)

    def test_drop_prob_one_gives_empty_map(self):
        m = generate_map(3, MapGenParams(drop_prob=1.0))
        assert m.buildings == ()
        assert free_fraction(m) == 1.0

    def test_invariants(self):
        m = generate_map(7)
        for x0, y0, x1, y1 in m.buildings:
            assert 0.0 <= x0 < x1 <= m.width_m
            assert 0.0 <= y0 < y1 <= m.height_m
        assert free_fraction(m) >= 0.30

    def test_free_fraction_matches_pixel_count_oracle(self):
        # independent per-pixel containment recount at native resolution
        m = generate_map(7)
        H, W = m.native_shape
        occupied = 0
        for r in range(H):
            y = (r + 0.5) * m.resolution_m
            for c in range(W):
                x = (c + 0.5) * m.resolution_m
                if any(x0 <= x < x1 and y0 <= y < y1 for x0, y0, x1, y1 in m.buildings):
                    occupied += 1
        assert free_fraction(m) == 1.0 - occupied / (H * W)

    def test_impossible_free_fraction_raises(self):
        params = MapGenParams(drop_prob=0.0, street_m=4.0, block_m=160.0, size_jitter=0.0)
        with pytest.raises(MapGenError, match="free-area"):
            generate_map(0, params)


class TestRasterize:
    def test_empty_map_all_zero(self):
        r = rasterize(empty_map(), 64, 64)
        assert r.cells.sum() == 0

    def test_full_cover_all_one(self):
        m = UrbanMap(id=0, width_m=512.0, height_m=512.0, resolution_m=2.0,
                     buildings=((0.0, 0.0, 512.0, 512.0),))
        r = rasterize(m, 64, 64)
        assert r.cells.all()

    def test_quarter_rectangle_exact_block(self):
        m = UrbanMap(id=0, width_m=512.0, height_m=512.0, resolution_m=2.0,
                     buildings=((0.0, 0.0, 256.0, 256.0),))
        r = rasterize(m, 256, 256)
        assert r.cells[:128, :128].all()
        assert r.cells.sum() == 128 * 128

    def test_matches_containment_oracle(self):
        m = generate_map(11)
        r = rasterize(m, 64, 64)
        sx = m.width_m / 64
        for row in range(64):
            for col in range(64):
                x = (col + 0.5) * sx
                y = (row + 0.5) * sx
                inside = any(x0 <= x < x1 and y0 <= y < y1 for x0, y0, x1, y1 in m.buildings)
                assert bool(r.cells[row, col]) == inside

    def test_pixel_aligned_rectangle_area_roundtrip(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            c0, r0 = rng.integers(0, 200, 2)
            w, h = rng.integers(1, 56, 2)
            rect = (c0 * 2.0, r0 * 2.0, (c0 + w) * 2.0, (r0 + h) * 2.0)
            m = UrbanMap(id=0, width_m=512.0, height_m=512.0, resolution_m=2.0,
                         buildings=(rect,))
            r = rasterize(m, 256, 256)
            assert int(r.cells.sum()) * 2.0 * 2.0 == w * h * 4.0

    def test_rejects_non_square_pixels(self):
        with pytest.raises(SceneError):
            rasterize(empty_map(), 64, 32)


class TestSampleEndpoints:
    def test_empty_map_any_point_valid(self):
        tx, rx = sample_endpoints(empty_map(), 1, 1, seed=0)
        assert 0 <= tx[0].x <= 512 and 0 <= tx[0].y <= 512

    def test_deterministic(self):
        m = generate_map(7)
        assert sample_endpoints(m, 5, 5, seed=3) == sample_endpoints(m, 5, 5, seed=3)

    def test_all_points_outdoor_by_raster_lookup(self):
        m = generate_map(7)
        tx, rx = sample_endpoints(m, 10, 50, seed=3)
        H, W = m.native_shape
        r = rasterize(m, H, W)
        for p in tx + rx:
            row = min(int(p.y / m.resolution_m), H - 1)
            col = min(int(p.x / m.resolution_m), W - 1)
            assert r.cells[row, col] == 0

    def test_retry_budget_exhaustion(self):
        m = UrbanMap(id=0, width_m=512.0, height_m=512.0, resolution_m=2.0,
                     buildings=((0.0, 0.0, 512.0, 512.0),))
        with pytest.raises(SamplingError):
            sample_endpoints(m, 1, 1, seed=0)


class TestGaussianHeatmap:
    def test_center_pixel_is_one(self):
        g = gaussian_heatmap(Endpoint(101.0, 33.0), HeatmapConfig(), 256, 256, 2.0)
        row, col = int(33.0 / 2.0), int(101.0 / 2.0)
        assert g[row, col] == 1.0
        assert g.max() == 1.0

    def test_value_at_sigma_distance(self):
        # endpoint exactly at a pixel center; a pixel sigma away reads exp(-1/2)
        sigma = 2.0
        p = Endpoint(2.0 * (64 + 0.5), 2.0 * (64 + 0.5))
        g = gaussian_heatmap(p, HeatmapConfig(sigma_px=sigma), 256, 256, 2.0)
        assert g[64, 64] == 1.0  # renormalization keeps the center at 1
        assert g[64, 64 + int(sigma)] == pytest.approx(math.exp(-0.5), abs=1e-12)

    def test_sum_matches_direct_summation_oracle(self):
        p = Endpoint(256.0, 256.0)
        g = gaussian_heatmap(p, HeatmapConfig(sigma_px=2.0), 256, 256, 2.0)
        px, py = p.x / 2.0, p.y / 2.0
        total = 0.0
        peak = 0.0
        for r in range(256):
            for c in range(256):
                v = math.exp(-((c + 0.5 - px) ** 2 + (r + 0.5 - py) ** 2) / (2 * 4.0))
                peak = max(peak, v)
                total += v
        assert g.sum() == pytest.approx(total / peak, abs=1e-9)

    def test_outside_scene_raises(self):
        with pytest.raises(SceneError):
            gaussian_heatmap(Endpoint(-1.0, 0.0), HeatmapConfig(), 64, 64, 2.0)


class TestBuildCondition:
    def test_empty_map_channels(self):
        r = rasterize(empty_map(128.0, 128.0, 2.0), 64, 64)
        c = build_condition(r, Endpoint(10.0, 10.0), Endpoint(100.0, 90.0),
                            HeatmapConfig(), 2.0)
        assert c.channels.shape == (3, 64, 64)
        assert not c.channels[0].any()
        assert c.channels[1].max() == 1.0
        assert c.channels[2].max() == 1.0

    def test_tx_equals_rx_gives_identical_heatmaps(self):
        r = rasterize(empty_map(128.0, 128.0, 2.0), 64, 64)
        p = Endpoint(55.5, 41.25)
        c = build_condition(r, p, p, HeatmapConfig(), 2.0)
        assert np.array_equal(c.channels[1], c.channels[2])

    def test_channel0_binary_and_heatmaps_positive(self):
        m = generate_map(9)
        r = rasterize(m, 256, 256)
        tx, rx = sample_endpoints(m, 1, 1, seed=1)
        c = build_condition(r, tx[0], rx[0], HeatmapConfig(), m.resolution_m)
        assert set(np.unique(c.channels[0])) <= {0.0, 1.0}
        assert (c.channels[1] > 0).all() and (c.channels[2] > 0).all()

    def test_endpoint_in_building_raises(self):
        m = UrbanMap(id=0, width_m=128.0, height_m=128.0, resolution_m=2.0,
                     buildings=((0.0, 0.0, 64.0, 64.0),))
        r = rasterize(m, 64, 64)
        with pytest.raises(SceneError, match="building"):
            build_condition(r, Endpoint(10.0, 10.0), Endpoint(100.0, 100.0),
                            HeatmapConfig(), 2.0)


class TestPersistence:
    def test_map_json_roundtrip(self, tmp_path):
        m = generate_map(4)
        save_map(tmp_path / "m.json", m)
        assert load_map(tmp_path / "m.json") == m

    def test_pgm_roundtrip(self, tmp_path):
        m = generate_map(4)
        r = rasterize(m, 256, 256)
        write_pgm(tmp_path / "r.pgm", r)
        back = read_pgm(tmp_path / "r.pgm")
        assert np.array_equal(back.cells, r.cells)

    def test_pgm_header(self, tmp_path):
        r = Raster(cells=np.eye(4, dtype=np.uint8))
        write_pgm(tmp_path / "r.pgm", r)
        blob = (tmp_path / "r.pgm").read_bytes()
        assert blob.startswith(b"P5\n4 4\n255\n")
        assert set(blob[len(b"P5\n4 4\n255\n"):]) <= {0, 255}
