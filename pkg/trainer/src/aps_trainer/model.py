"""Model components: multi-scale ResNet-18 encoder, MLP spectrum predictor,
and the training-only condition/spectrum compatibility scorer.

The deployed model is encoder + predictor; the scorer never enters the
inference graph and its parameters are disjoint from the predictor's.
"""

from __future__ import annotations

import torch
import torch.nn as nn
from torchvision.models import resnet18

N_BINS = 180
STAGE_CHANNELS = (64, 128, 256, 512)
STAGE_POOLS = ((4, 4), (2, 2), (1, 1), (1, 1))
PROJ_WIDTH = 256
FUSED_WIDTH = 512


class MultiScaleEncoder(nn.Module):
    """Four-stage residual backbone with per-stage pooled linear projections.

    With multi_scale=True all four projected stage vectors are concatenated
    before fusion; with multi_scale=False only the deepest stage feeds it.
    """

    def __init__(self, multi_scale: bool = True, pretrained: bool = False):
        super().__init__()
        self.multi_scale = multi_scale
        weights = "IMAGENET1K_V1" if pretrained else None
        backbone = resnet18(weights=weights)
        self.stem = nn.Sequential(backbone.conv1, backbone.bn1, backbone.relu,
                                  backbone.maxpool)
        self.stages = nn.ModuleList([backbone.layer1, backbone.layer2,
                                     backbone.layer3, backbone.layer4])
        self.pools = nn.ModuleList([nn.AdaptiveAvgPool2d(p) for p in STAGE_POOLS])
        self.projections = nn.ModuleList([
            nn.Linear(ch * p[0] * p[1], PROJ_WIDTH)
            for ch, p in zip(STAGE_CHANNELS, STAGE_POOLS)
        ])
        fused_in = PROJ_WIDTH * (4 if multi_scale else 1)
        self.fusion = nn.Sequential(
            nn.Linear(fused_in, FUSED_WIDTH),
            nn.LeakyReLU(),
            nn.Linear(FUSED_WIDTH, FUSED_WIDTH),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = self.stem(x)
        projected = []
        for stage, pool, proj in zip(self.stages, self.pools, self.projections):
            x = stage(x)
            if self.multi_scale or stage is self.stages[-1]:
                projected.append(proj(torch.flatten(pool(x), 1)))
        feats = torch.cat(projected, dim=1) if self.multi_scale else projected[-1]
        return self.fusion(feats)


class SpectrumPredictor(nn.Module):
    """Decodes the fused representation into the 180-bin spectrum.

    Hidden widths 1024, 1024, 512 with LeakyReLU after each hidden layer,
    then a linear 180-wide output.
    """

    def __init__(self):
        super().__init__()
        self.net = nn.Sequential(
            nn.Linear(FUSED_WIDTH, 1024), nn.LeakyReLU(),
            nn.Linear(1024, 1024), nn.LeakyReLU(),
            nn.Linear(1024, 512), nn.LeakyReLU(),
            nn.Linear(512, N_BINS),
        )

    def forward(self, g: torch.Tensor) -> torch.Tensor:
        return self.net(g)


class SpectrumRegressor(nn.Module):
    """The deployable model: encoder + predictor, nothing else."""

    def __init__(self, multi_scale: bool = True, pretrained: bool = False):
        super().__init__()
        self.encoder = MultiScaleEncoder(multi_scale=multi_scale, pretrained=pretrained)
        self.predictor = SpectrumPredictor()

    def forward(self, condition: torch.Tensor) -> torch.Tensor:
        if condition.ndim == 3:
            condition = condition.unsqueeze(0)
        if condition.ndim != 4 or condition.shape[1] != 3:
            raise ValueError(f"condition must be (B, 3, H, W), got {tuple(condition.shape)}")
        return self.predictor(self.encoder(condition))


class CompatibilityScorer(nn.Module):
    """Training-only regularizer: scores condition/spectrum pairs in (0, 1).

    Separate encoders for the condition image (strided 2D convs) and the
    spectrum (strided 1D convs over the 180 bins) feed a small scoring head.
    """

    def __init__(self):
        super().__init__()
        self.cond_encoder = nn.Sequential(
            nn.Conv2d(3, 16, 3, stride=2, padding=1), nn.LeakyReLU(),
            nn.Conv2d(16, 32, 3, stride=2, padding=1), nn.LeakyReLU(),
            nn.Conv2d(32, 64, 3, stride=2, padding=1), nn.LeakyReLU(),
            nn.AdaptiveAvgPool2d(1), nn.Flatten(),
        )
        self.spectrum_encoder = nn.Sequential(
            nn.Conv1d(1, 16, 5, stride=2, padding=2), nn.LeakyReLU(),
            nn.Conv1d(16, 32, 5, stride=2, padding=2), nn.LeakyReLU(),
            nn.AdaptiveAvgPool1d(1), nn.Flatten(),
        )
        self.head = nn.Sequential(
            nn.Linear(64 + 32, 64), nn.LeakyReLU(),
            nn.Linear(64, 1),
        )

    def forward(self, condition: torch.Tensor, spectrum: torch.Tensor) -> torch.Tensor:
        c = self.cond_encoder(condition)
        s = self.spectrum_encoder(spectrum.unsqueeze(1))
        score = torch.sigmoid(self.head(torch.cat([c, s], dim=1))).squeeze(1)
        # numerically safe for BCE targets at exactly 0 / 1
        return score.clamp(1e-7, 1.0 - 1e-7)
