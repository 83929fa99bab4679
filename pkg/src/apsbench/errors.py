"""Exception hierarchy; every error names the pipeline stage it came from."""


class ApsBenchError(Exception):
    stage = "pipeline"


class MapGenError(ApsBenchError):
    stage = "map-generation"


class SamplingError(ApsBenchError):
    stage = "endpoint-sampling"


class SceneError(ApsBenchError):
    stage = "scene"


class TraceError(ApsBenchError):
    stage = "ray-trace"


class LabelError(ApsBenchError):
    stage = "label"


class DatasetError(ApsBenchError):
    stage = "dataset"


class SplitError(ApsBenchError):
    stage = "split"


class BaselineError(ApsBenchError):
    stage = "baseline"


class MetricError(ApsBenchError):
    stage = "metrics"


class EvaluationError(ApsBenchError):
    stage = "evaluate"
