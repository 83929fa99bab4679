"""apsbench: deterministic urban-map -> angle-power-spectrum benchmark toolkit.

Builds equal-height urban scenes, traces 2D specular multipath, aggregates
path records into 180-bin APS labels, manages cross-map dataset splits, and
evaluates predictions with reconstruction, shape, peak-localization,
dominant-direction and latency metrics.
"""

from .apslabel import (ApsSpectrum, KernelConfig, NormStats, aggregate_q,
                       array_factor_sq, build_aps, compute_dataset_stats,
                       destandardize, normalize_db, read_apsl, sinc_sq,
                       standardize, write_apsl)
from .baselines import predict_baseline, write_baseline
from .datasetio import (Manifest, PipelineParams, build_dataset,
                        compute_split_stats, dominant_peak_stats,
                        load_manifest, make_split)
from .errors import ApsBenchError
from .metrics import (MetricReport, PeakSet, circular_distance, detect_peaks,
                      evaluate_run, hit_at, measure_latency, ple, ple_ccdf,
                      recall_at, reconstruction_metrics)
from .raytrace import PathRecord, TraceConfig, los_visible, trace_link
from .scene import (ConditionImage, Endpoint, HeatmapConfig, MapGenParams,
                    Raster, UrbanMap, build_condition, free_fraction,
                    gaussian_heatmap, generate_map, rasterize, sample_endpoints)

__version__ = "0.1.0"
