"""2D specular multipath solver: image method over axis-aligned building walls.

Stands in for a full ray-tracing simulator: line-of-sight plus specular
reflections up to a configurable order, no diffraction or transmission.
Reflection chains are found by mirroring the transmitter across wall lines and
back-tracing from the receiver, then validated segment by segment against the
building rectangles.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from itertools import pairwise

import numpy as np

from .errors import TraceError
from .scene import Endpoint, UrbanMap

_EPS_T = 1e-12  # parametric tolerance on segment spans
_EPS_M = 1e-9   # metric tolerance in meters


@dataclass(frozen=True)
class PathRecord:
    """One propagation path: delay, arrival azimuth at Rx, linear power."""

    tau_s: float
    aoa_deg: float
    power_lin: float


@dataclass(frozen=True)
class TraceConfig:
    fc_hz: float = 3.0e9
    c_mps: float = 3.0e8
    max_order: int = 2
    refl_loss_db: float = 6.0

    def __post_init__(self):
        if not self.fc_hz > 0:
            raise ValueError("fc_hz must be positive")
        if self.max_order < 0:
            raise ValueError("max_order must be >= 0")
        if self.refl_loss_db < 0:
            raise ValueError("refl_loss_db must be >= 0")


def wrap_deg(a: float) -> float:
    """Wrap an angle into [-180, 180)."""
    return (a + 180.0) % 360.0 - 180.0


def _rect_arrays(m: UrbanMap):
    if not m.buildings:
        return None
    b = np.asarray(m.buildings, dtype=float)
    return b[:, 0], b[:, 1], b[:, 2], b[:, 3]


def _interior_hits(ax, ay, bx, by, rx0, ry0, rx1, ry1) -> np.ndarray:
    """Per-rectangle mask: does the open segment (a,b) cross the open interior?

    Liang-Barsky clip against the closed rectangle followed by a strict
    interior test at the clipped midpoint; chords that only graze an edge or
    touch a corner do not count as hits.
    """
    dx = bx - ax
    dy = by - ay
    n = rx0.size
    t0 = np.zeros(n)
    t1 = np.ones(n)
    ok = np.ones(n, dtype=bool)
    for d, a0, lo, hi in ((dx, ax, rx0, rx1), (dy, ay, ry0, ry1)):
        if d > 0:
            t0 = np.maximum(t0, (lo - a0) / d)
            t1 = np.minimum(t1, (hi - a0) / d)
        elif d < 0:
            t0 = np.maximum(t0, (hi - a0) / d)
            t1 = np.minimum(t1, (lo - a0) / d)
        else:
            ok &= (a0 >= lo) & (a0 <= hi)
    ok &= (t1 - t0) > _EPS_T
    tm = 0.5 * (t0 + t1)
    mx = ax + tm * dx
    my = ay + tm * dy
    ok &= (mx > rx0 + _EPS_M) & (mx < rx1 - _EPS_M)
    ok &= (my > ry0 + _EPS_M) & (my < ry1 - _EPS_M)
    return ok


def los_visible(m: UrbanMap, a: Endpoint, b: Endpoint) -> bool:
    """True iff the open segment (a,b) misses every building interior."""
    for p in (a, b):
        if not (0.0 <= p.x <= m.width_m and 0.0 <= p.y <= m.height_m):
            raise TraceError(f"endpoint ({p.x}, {p.y}) outside the scene")
    rects = _rect_arrays(m)
    if rects is None:
        return True
    return not bool(_interior_hits(a.x, a.y, b.x, b.y, *rects).any())


def _inside_any(m: UrbanMap, p: Endpoint) -> bool:
    return any(x0 < p.x < x1 and y0 < p.y < y1 for x0, y0, x1, y1 in m.buildings)


def _walls(m: UrbanMap):
    """Wall segments as arrays: axis (0: line x=c, 1: line y=c), coord, lo, hi."""
    axis, coord, lo, hi = [], [], [], []
    for x0, y0, x1, y1 in m.buildings:
        axis += [0, 0, 1, 1]
        coord += [x0, x1, y0, y1]
        lo += [y0, y0, x0, x0]
        hi += [y1, y1, x1, x1]
    return (np.array(axis, dtype=np.int8), np.array(coord),
            np.array(lo), np.array(hi))


def _mirror(pts: np.ndarray, axis: np.ndarray, coord: np.ndarray) -> np.ndarray:
    out = pts.copy()
    vert = axis == 0
    out[vert, 0] = 2.0 * coord[vert] - pts[vert, 0]
    out[~vert, 1] = 2.0 * coord[~vert] - pts[~vert, 1]
    return out


def _candidate_chains(m: UrbanMap, tx: Endpoint, rx: Endpoint, max_order: int):
    """Yield (order, chain_points, deepest_image) for blocked-checked chains.

    chain_points runs tx -> R_1 -> ... -> R_n -> rx; deepest_image is the
    transmitter mirrored through the whole wall sequence, whose distance to
    rx equals the unfolded path length.
    """
    rects = _rect_arrays(m)
    if rects is None or max_order < 1:
        return
    axis, coord, lo, hi = _walls(m)
    n_walls = axis.size
    seqs = np.arange(n_walls)[:, None]
    imgs = _mirror(np.broadcast_to([[tx.x, tx.y]], (n_walls, 2)).copy(),
                   axis, coord)[:, None, :]
    for order in range(1, max_order + 1):
        if order > 1:
            last = seqs[:, -1]
            nxt = np.broadcast_to(np.arange(n_walls), (seqs.shape[0], n_walls))
            keep = nxt != last[:, None]
            parent = np.repeat(np.arange(seqs.shape[0]), n_walls)[keep.ravel()]
            w_new = np.tile(np.arange(n_walls), seqs.shape[0])[keep.ravel()]
            new_img = _mirror(imgs[parent, -1, :], axis[w_new], coord[w_new])
            seqs = np.concatenate([seqs[parent], w_new[:, None]], axis=1)
            imgs = np.concatenate([imgs[parent], new_img[:, None, :]], axis=1)

        # back-trace from rx through the wall sequence, vectorized over chains
        M = seqs.shape[0]
        pts = np.empty((M, order, 2))
        px = np.full(M, rx.x)
        py = np.full(M, rx.y)
        valid = np.ones(M, dtype=bool)
        for k in range(order, 0, -1):
            w = seqs[:, k - 1]
            ix = imgs[:, k - 1, 0]
            iy = imgs[:, k - 1, 1]
            a = axis[w]
            dxv = ix - px
            dyv = iy - py
            denom = np.where(a == 0, dxv, dyv)
            num = np.where(a == 0, coord[w] - px, coord[w] - py)
            with np.errstate(divide="ignore", invalid="ignore"):
                t = num / denom
            valid &= np.isfinite(t) & (t > _EPS_T) & (t < 1.0 - _EPS_T)
            cx = px + t * dxv
            cy = py + t * dyv
            along = np.where(a == 0, cy, cx)
            # grazing incidence at a wall endpoint is rejected
            valid &= (along > lo[w] + _EPS_M) & (along < hi[w] - _EPS_M)
            pts[:, k - 1, 0] = cx
            pts[:, k - 1, 1] = cy
            px, py = cx, cy

        for i in np.flatnonzero(valid):
            chain = [(tx.x, tx.y)]
            chain += [(pts[i, k, 0], pts[i, k, 1]) for k in range(order)]
            chain.append((rx.x, rx.y))
            blocked = False
            for (x0, y0), (x1, y1) in pairwise(chain):
                if math.hypot(x1 - x0, y1 - y0) < _EPS_M:
                    blocked = True
                    break
                if _interior_hits(x0, y0, x1, y1, *rects).any():
                    blocked = True
                    break
            if not blocked:
                yield order, chain, (imgs[i, -1, 0], imgs[i, -1, 1])


def _make_record(d: float, order: int, last_pt: tuple[float, float],
                 rx: Endpoint, cfg: TraceConfig) -> PathRecord:
    lam = cfg.c_mps / cfg.fc_hz
    power = (lam / (4.0 * math.pi * d)) ** 2 * 10.0 ** (-order * cfg.refl_loss_db / 10.0)
    aoa = wrap_deg(math.degrees(math.atan2(last_pt[1] - rx.y, last_pt[0] - rx.x)))
    return PathRecord(tau_s=d / cfg.c_mps, aoa_deg=aoa, power_lin=power)


def trace_link(m: UrbanMap, tx: Endpoint, rx: Endpoint,
               cfg: TraceConfig = TraceConfig()) -> list[PathRecord]:
    """All LOS + specular paths for one link, sorted by (delay, azimuth).

    Power follows the free-space law on the unfolded length with a fixed
    per-bounce loss; the arrival azimuth points from rx toward the last
    interaction (toward tx for LOS), CCW from +x in [-180, 180).
    """
    if math.hypot(tx.x - rx.x, tx.y - rx.y) < _EPS_M:
        raise TraceError("zero-distance link (tx == rx)")
    for name, p in (("tx", tx), ("rx", rx)):
        if _inside_any(m, p):
            raise TraceError(f"{name} endpoint ({p.x}, {p.y}) lies inside a building")
    paths = []
    if los_visible(m, tx, rx):
        d = math.hypot(tx.x - rx.x, tx.y - rx.y)
        paths.append(_make_record(d, 0, (tx.x, tx.y), rx, cfg))
    for order, chain, _image in _candidate_chains(m, tx, rx, cfg.max_order):
        d = sum(math.hypot(b[0] - a[0], b[1] - a[1]) for a, b in pairwise(chain))
        paths.append(_make_record(d, order, chain[-2], rx, cfg))
    paths.sort(key=lambda p: (p.tau_s, p.aoa_deg))
    return paths


# ---------------------------------------------------------------- persistence

def write_paths_csv(path, records_by_link: dict[int, list[PathRecord]]) -> None:
    """CSV rows `link_id,tau_s,aoa_deg,power_lin`, floats at round-trip precision."""
    with open(path, "w", newline="") as f:
        f.write("link_id,tau_s,aoa_deg,power_lin\n")
        for link_id in sorted(records_by_link):
            for r in records_by_link[link_id]:
                f.write(f"{link_id},{r.tau_s!r},{r.aoa_deg!r},{r.power_lin!r}\n")


def read_paths_csv(path) -> dict[int, list[PathRecord]]:
    out: dict[int, list[PathRecord]] = {}
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        for row in reader:
            rec = PathRecord(tau_s=float(row["tau_s"]), aoa_deg=float(row["aoa_deg"]),
                             power_lin=float(row["power_lin"]))
            out.setdefault(int(row["link_id"]), []).append(rec)
    return out
