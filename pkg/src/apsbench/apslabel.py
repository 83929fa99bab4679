"""Angle-power-spectrum labels: kernel aggregation of path records plus the
normalization chain (dB max-shift -> linear -> dataset standardization).

The spectrum has 180 bins at 2 degree resolution; bin j is centered at
-180 + 2j degrees.  Path contributions are aggregated with a squared
normalized-sinc delay kernel and the squared uniform-linear-array factor, and
each bin keeps the maximum over a discrete delay grid.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import LabelError
from .raytrace import PathRecord

N_BINS = 180
DB_FLOOR = -300.0
LIN_FLOOR = 1e-30

DOMAIN_RAW = "raw_linear"
DOMAIN_NORM = "normalized_linear"
DOMAIN_STD = "standardized"

_DOMAIN_CODE = {DOMAIN_RAW: 0, DOMAIN_NORM: 1, DOMAIN_STD: 2}
_CODE_DOMAIN = {v: k for k, v in _DOMAIN_CODE.items()}


def bin_centers_deg() -> np.ndarray:
    """Centers of the 180 azimuth bins: -180, -178, ..., 178 degrees."""
    return -180.0 + 2.0 * np.arange(N_BINS)


@dataclass(frozen=True)
class KernelConfig:
    fs_hz: float = 100e6
    n_elements: int = 64
    d_lambda: float = 0.5
    delay_oversample: int = 4

    def __post_init__(self):
        if not self.fs_hz > 0:
            raise ValueError("fs_hz must be positive")
        if self.n_elements < 1:
            raise ValueError("n_elements must be >= 1")
        if not self.d_lambda > 0:
            raise ValueError("d_lambda must be positive")
        if self.delay_oversample < 1:
            raise ValueError("delay_oversample must be >= 1")


@dataclass(frozen=True)
class ApsSpectrum:
    """180-bin directional power vector with an explicit domain tag."""

    bins: np.ndarray
    domain: str

    def __post_init__(self):
        if self.domain not in _DOMAIN_CODE:
            raise LabelError(f"unknown spectrum domain {self.domain!r}")
        if np.asarray(self.bins).shape != (N_BINS,):
            raise LabelError(f"spectrum must have exactly {N_BINS} bins")


@dataclass(frozen=True)
class NormStats:
    mu_a: float
    s_a: float

    def __post_init__(self):
        if not self.s_a >= 1e-12:
            raise ValueError("s_a must be >= 1e-12")


def sinc_sq(x):
    """Squared normalized sinc, (sin(pi x) / (pi x))^2 with sinc(0) = 1."""
    return np.sinc(x) ** 2


def array_factor_sq(theta_deg, theta_k_deg, n_elements: int, d_lambda: float):
    """Squared ULA factor [sin(N psi) / (N sin psi)]^2, psi = pi d (sin t - sin tk).

    The removable singularity at sin(psi) -> 0 (broadside match and grating
    lobes alike) evaluates to 1; the limit branch is taken below |sin psi| =
    1e-12.  Because psi depends on sin(theta), the response is front/back
    symmetric and no correction is applied.
    """
    psi = np.pi * d_lambda * (np.sin(np.radians(theta_deg)) - np.sin(np.radians(theta_k_deg)))
    s = np.sin(psi)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.sin(n_elements * psi) / (n_elements * s)
        out = np.where(np.abs(s) < 1e-12, 1.0, ratio ** 2)
    return out if out.ndim else float(out)


def _path_arrays(paths: Sequence[PathRecord]):
    # canonical path order makes the aggregation exactly permutation-invariant
    ordered = sorted(paths, key=lambda p: (p.tau_s, p.aoa_deg, p.power_lin))
    taus = np.array([p.tau_s for p in ordered])
    aoas = np.array([p.aoa_deg for p in ordered])
    powers = np.array([p.power_lin for p in ordered])
    return taus, aoas, powers


def aggregate_q(paths: Sequence[PathRecord], tau_s: float, theta_deg: float,
                cfg: KernelConfig) -> float:
    """Kernel-weighted power sum Q(tau, theta) over the link's paths."""
    if not paths:
        raise LabelError("invalid link: path set is empty")
    taus, aoas, powers = _path_arrays(paths)
    terms = powers * sinc_sq(cfg.fs_hz * (tau_s - taus)) \
        * array_factor_sq(theta_deg, aoas, cfg.n_elements, cfg.d_lambda)
    return float(np.sum(terms))


def delay_grid(paths: Sequence[PathRecord], cfg: KernelConfig) -> np.ndarray:
    """Path delays plus a uniform grid over their span at 1/(oversample*fs)."""
    taus = np.array(sorted(p.tau_s for p in paths))
    step = 1.0 / (cfg.delay_oversample * cfg.fs_hz)
    span = taus[-1] - taus[0]
    n = int(math.floor(span / step))
    return np.union1d(taus, taus[0] + step * np.arange(n + 1))


def build_aps(paths: Sequence[PathRecord], cfg: KernelConfig = KernelConfig()) -> ApsSpectrum:
    """Raw-linear APS label: per bin, the delay-grid maximum of Q(tau, theta)."""
    if not paths:
        raise LabelError("invalid link: path set is empty")
    taus, aoas, powers = _path_arrays(paths)
    grid = delay_grid(paths, cfg)
    S = powers[None, :] * sinc_sq(cfg.fs_hz * (grid[:, None] - taus[None, :]))
    A = array_factor_sq(bin_centers_deg()[:, None], aoas[None, :],
                        cfg.n_elements, cfg.d_lambda)
    q = S @ A.T  # (n_delays, N_BINS)
    return ApsSpectrum(bins=q.max(axis=0), domain=DOMAIN_RAW)


def normalize_db(aps: ApsSpectrum) -> ApsSpectrum:
    """Shift the dB spectrum by its own maximum and return to linear power.

    Zero bins map to the -300 dB floor (linear 1e-30), the maximum bin comes
    out exactly 1, and the whole operation is invariant to positive scaling of
    the input.
    """
    if aps.domain != DOMAIN_RAW:
        raise LabelError(f"normalize_db expects a {DOMAIN_RAW} spectrum, got {aps.domain}")
    bins = np.asarray(aps.bins, dtype=float)
    if not bins.max() > 0:
        raise LabelError("cannot normalize an all-zero spectrum")
    with np.errstate(divide="ignore"):
        db = 10.0 * np.log10(bins)
    db -= db.max()
    db = np.maximum(db, DB_FLOOR)
    # clip so floored bins land exactly on LIN_FLOOR (pow rounds an ulp under)
    return ApsSpectrum(bins=np.clip(10.0 ** (db / 10.0), LIN_FLOOR, 1.0),
                       domain=DOMAIN_NORM)


def compute_dataset_stats(training_labels: Iterable[ApsSpectrum]) -> NormStats:
    """Scalar mean / population std over every bin of the training labels.

    Two sequential passes in sample order, so the result is bit-stable no
    matter how label construction was parallelized.
    """
    labels = list(training_labels)
    if not labels:
        raise LabelError("cannot compute statistics from an empty label set")
    total = 0.0
    count = 0
    for lab in labels:
        if lab.domain != DOMAIN_NORM:
            raise LabelError("dataset statistics are defined over normalized_linear labels")
        total += float(np.sum(lab.bins, dtype=np.float64))
        count += lab.bins.size
    mu = total / count
    ssq = 0.0
    for lab in labels:
        ssq += float(np.sum((np.asarray(lab.bins, dtype=np.float64) - mu) ** 2))
    s = math.sqrt(ssq / count)
    return NormStats(mu_a=mu, s_a=max(s, 1e-12))


def standardize(aps: ApsSpectrum, stats: NormStats) -> ApsSpectrum:
    if aps.domain != DOMAIN_NORM:
        raise LabelError(f"standardize expects {DOMAIN_NORM}, got {aps.domain}")
    return ApsSpectrum(bins=(np.asarray(aps.bins, float) - stats.mu_a) / stats.s_a,
                       domain=DOMAIN_STD)


def destandardize(aps: ApsSpectrum, stats: NormStats) -> ApsSpectrum:
    """Invert the affine map and clamp into [1e-30, 1] so metric-domain
    invariants hold on arbitrary model outputs."""
    if aps.domain != DOMAIN_STD:
        raise LabelError(f"destandardize expects {DOMAIN_STD}, got {aps.domain}")
    lin = np.asarray(aps.bins, float) * stats.s_a + stats.mu_a
    return ApsSpectrum(bins=np.clip(lin, LIN_FLOOR, 1.0), domain=DOMAIN_NORM)


# -------------------------------------------------------------- APSL file IO

_MAGIC = b"APSL"
_VERSION = 1
_HEADER = struct.Struct("<4sHBHQ")


def write_apsl(path, rows: np.ndarray, domain: str) -> None:
    """Little-endian spectrum file: APSL magic, version, domain code, 180-bin
    float32 rows.  Labels and model predictions share this format."""
    rows = np.ascontiguousarray(rows, dtype="<f4")
    if rows.ndim != 2 or rows.shape[1] != N_BINS:
        raise LabelError(f"rows must be (n, {N_BINS}), got {rows.shape}")
    header = _HEADER.pack(_MAGIC, _VERSION, _DOMAIN_CODE[domain], N_BINS, rows.shape[0])
    with open(path, "wb") as f:
        f.write(header)
        f.write(rows.tobytes())


def read_apsl(path) -> tuple[np.ndarray, str]:
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < _HEADER.size:
        raise LabelError(f"{path}: truncated APSL header")
    magic, version, code, nbins, count = _HEADER.unpack_from(blob)
    if magic != _MAGIC:
        raise LabelError(f"{path}: bad magic {magic!r}")
    if version != _VERSION:
        raise LabelError(f"{path}: unsupported version {version}")
    if nbins != N_BINS:
        raise LabelError(f"{path}: expected {N_BINS} bins, got {nbins}")
    if code not in _CODE_DOMAIN:
        raise LabelError(f"{path}: unknown domain code {code}")
    payload = blob[_HEADER.size:]
    expect = count * N_BINS * 4
    if len(payload) != expect:
        raise LabelError(f"{path}: payload is {len(payload)} bytes, expected {expect}")
    rows = np.frombuffer(payload, dtype="<f4").reshape(count, N_BINS)
    return rows, _CODE_DOMAIN[code]


def read_apsl_count(path) -> int:
    """Row count from the header only (cheap manifest validation)."""
    with open(path, "rb") as f:
        head = f.read(_HEADER.size)
    if len(head) < _HEADER.size:
        raise LabelError(f"{path}: truncated APSL header")
    magic, _, _, _, count = _HEADER.unpack(head)
    if magic != _MAGIC:
        raise LabelError(f"{path}: bad magic {magic!r}")
    return int(count)
