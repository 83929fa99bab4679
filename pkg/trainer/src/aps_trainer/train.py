"""Training loop, losses, checkpointing, and prediction export.

Two optimizers separate the roles: the scorer learns to tell real spectra
from predicted ones (predictions detached), while the predictor minimizes a
weighted L1 reconstruction term plus the score of its own outputs.  Disabling
the regularizer reduces the predictor loss to the weighted L1 term.
"""

from __future__ import annotations

import argparse
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import torch

from .data import DatasetReader, SplitData, batches, write_apsl
from .model import CompatibilityScorer, SpectrumRegressor

VARIANTS = {
    "ms_areg": (True, True),
    "ms_mlp": (True, False),
    "adv_mlp": (False, True),
    "resnet_mlp": (False, False),
}


@dataclass(frozen=True)
class TrainConfig:
    variant: str = "ms_areg"
    epochs: int = 10
    batch_size: int = 64
    lr: float = 2e-4
    betas: tuple = (0.5, 0.999)
    lambda_l1: float = 100.0
    seed: int = 0
    pretrained: bool = False

    def flags(self) -> tuple[bool, bool]:
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r} "
                             f"(choose from {sorted(VARIANTS)})")
        return VARIANTS[self.variant]


def build_model(cfg: TrainConfig):
    """(model, scorer-or-None) for a variant; seeding happens here so equal
    seeds give equal initial weights."""
    torch.manual_seed(cfg.seed)
    multi_scale, regularized = cfg.flags()
    model = SpectrumRegressor(multi_scale=multi_scale, pretrained=cfg.pretrained)
    scorer = CompatibilityScorer() if regularized else None
    return model, scorer


def bce(score: torch.Tensor, target: float) -> torch.Tensor:
    t = torch.full_like(score, target)
    return torch.nn.functional.binary_cross_entropy(score, t)


def train_step(model, scorer, opt_p, opt_r, cond, target, lambda_l1: float) -> dict:
    """One optimization step; returns the losses as floats.

    The scorer update sees predictions detached from the predictor, so it can
    never move a predictor parameter; the predictor update then flows
    gradients only through its own optimizer's parameters.
    """
    losses = {}
    if scorer is not None:
        pred_detached = model(cond).detach()
        loss_r = bce(scorer(cond, target), 1.0) + bce(scorer(cond, pred_detached), 0.0)
        opt_r.zero_grad()
        loss_r.backward()
        opt_r.step()
        losses["loss_r"] = float(loss_r.detach())

    pred = model(cond)
    l1 = (pred - target).abs().sum(dim=1).mean()
    loss_p = lambda_l1 * l1
    if scorer is not None:
        loss_p = loss_p + bce(scorer(cond, pred), 1.0)
    if not torch.isfinite(loss_p):
        raise RuntimeError(f"non-finite predictor loss: l1={float(l1.detach())}, "
                           f"losses so far {losses}")
    opt_p.zero_grad()
    if scorer is not None:
        opt_r.zero_grad()  # discard scorer grads produced by the predictor pass
    loss_p.backward()
    opt_p.step()
    losses["loss_p"] = float(loss_p.detach())
    losses["l1"] = float(l1.detach())
    return losses


@torch.no_grad()
def mean_l1(model, data: SplitData, batch_size: int = 128) -> float:
    """Per-sample L1 vector norm against the targets, averaged over the split."""
    was_training = model.training
    model.eval()
    total = 0.0
    for start in range(0, len(data), batch_size):
        pred = model(data.conditions[start:start + batch_size])
        total += float((pred - data.targets[start:start + batch_size])
                       .abs().sum(dim=1).sum())
    if was_training:
        model.train()
    return total / len(data)


def train(dataset_root, cfg: TrainConfig, out_dir) -> dict:
    """Train one variant on the train split; writes checkpoint + JSON log."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    reader = DatasetReader(dataset_root)
    data = reader.load_split("train")

    model, scorer = build_model(cfg)
    opt_p = torch.optim.Adam(model.parameters(), lr=cfg.lr, betas=cfg.betas)
    opt_r = torch.optim.Adam(scorer.parameters(), lr=cfg.lr, betas=cfg.betas) \
        if scorer is not None else None

    initial_l1 = mean_l1(model, data)  # untrained reference for the smoke gate
    model.train()
    gen = torch.Generator().manual_seed(cfg.seed)
    log = {"config": {**asdict(cfg), "betas": list(cfg.betas)},
           "n_train": len(data), "train_maps": data.map_ids,
           "opened_files": data.opened_files, "initial_l1": initial_l1,
           "epochs": []}
    for epoch in range(cfg.epochs):
        sums = {"loss_p": 0.0, "loss_r": 0.0, "l1": 0.0}
        n_batches = 0
        for cond, target in batches(data, cfg.batch_size, gen):
            out = train_step(model, scorer, opt_p, opt_r, cond, target, cfg.lambda_l1)
            for k, v in out.items():
                sums[k] += v
            n_batches += 1
        entry = {"epoch": epoch,
                 "loss_p": sums["loss_p"] / n_batches,
                 "l1": sums["l1"] / n_batches}
        if scorer is not None:
            entry["loss_r"] = sums["loss_r"] / n_batches
        log["epochs"].append(entry)

    ckpt_path = out_dir / f"{cfg.variant}.pt"
    save_checkpoint(ckpt_path, model, cfg)
    with open(out_dir / f"{cfg.variant}_log.json", "w") as f:
        json.dump(log, f, indent=2, sort_keys=True)
        f.write("\n")
    log["checkpoint"] = str(ckpt_path)
    return log


def save_checkpoint(path, model: SpectrumRegressor, cfg: TrainConfig) -> None:
    """Inference checkpoint: encoder + predictor only, never the scorer."""
    torch.save({
        "encoder": model.encoder.state_dict(),
        "predictor": model.predictor.state_dict(),
        "config": {**asdict(cfg), "betas": list(cfg.betas)},
    }, path)


def load_checkpoint(path) -> tuple[SpectrumRegressor, TrainConfig]:
    blob = torch.load(path, map_location="cpu", weights_only=True)
    params = dict(blob["config"])
    params["betas"] = tuple(params["betas"])
    cfg = TrainConfig(**params)
    multi_scale, _ = cfg.flags()
    model = SpectrumRegressor(multi_scale=multi_scale, pretrained=False)
    model.encoder.load_state_dict(blob["encoder"])
    model.predictor.load_state_dict(blob["predictor"])
    model.eval()
    return model, cfg


@torch.no_grad()
def predict_split(model: SpectrumRegressor, data: SplitData,
                  batch_size: int = 128) -> np.ndarray:
    model.eval()
    rows = []
    for start in range(0, len(data), batch_size):
        out = model(data.conditions[start:start + batch_size])
        rows.append(out.numpy())
    return np.concatenate(rows, axis=0).astype(np.float32)


def export_predictions(checkpoint, dataset_root, split_side: str, out_path) -> int:
    """Standardized-domain APSL rows, one per valid link in link order."""
    model, _cfg = load_checkpoint(checkpoint)
    data = DatasetReader(dataset_root).load_split(split_side)
    rows = predict_split(model, data)
    write_apsl(out_path, rows, "standardized")
    return rows.shape[0]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="aps-trainer")
    sub = parser.add_subparsers(dest="command", required=True)
    t = sub.add_parser("train", help="train one variant")
    t.add_argument("--data", required=True, help="dataset root (manifest.json inside)")
    t.add_argument("--out", required=True, help="checkpoint/log directory")
    t.add_argument("--variant", choices=sorted(VARIANTS), default="ms_areg")
    t.add_argument("--epochs", type=int, default=10)
    t.add_argument("--batch-size", type=int, default=64)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--pretrained", action="store_true")
    e = sub.add_parser("export", help="write an APSL prediction file")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--split", choices=("train", "test"), default="test")
    e.add_argument("--pred", required=True)
    args = parser.parse_args(argv)
    if args.command == "train":
        cfg = TrainConfig(variant=args.variant, epochs=args.epochs,
                          batch_size=args.batch_size, seed=args.seed,
                          pretrained=args.pretrained)
        log = train(args.data, cfg, args.out)
        last = log["epochs"][-1]
        print(f"trained {args.variant}: final epoch l1 {last['l1']:.4f} "
              f"-> {log['checkpoint']}")
    else:
        n = export_predictions(args.checkpoint, args.data, args.split, args.pred)
        print(f"wrote {n} predictions to {args.pred}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
