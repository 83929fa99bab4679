"""aps_trainer: multi-scale condition-to-spectrum regression on apsbench datasets.

Trains the reference model (ResNet-18 multi-scale encoder + MLP spectrum
predictor, with an optional training-only compatibility regularizer) and its
three ablation variants, exchanging data with the benchmark toolkit purely
through its published file formats.
"""

from .data import DatasetReader, read_apsl, write_apsl
from .model import CompatibilityScorer, MultiScaleEncoder, SpectrumPredictor, SpectrumRegressor
from .train import (TrainConfig, VARIANTS, build_model, export_predictions,
                    load_checkpoint, predict_split, save_checkpoint, train,
                    train_step)

__version__ = "0.1.0"
