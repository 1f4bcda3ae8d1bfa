"""Training loop: Adam with stepped learning-rate decay on the toy network."""

from __future__ import annotations

from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np
import torch

from .data import Sample, batches, pyramid
from .losses import multiscale_loss
from .network import NetworkConfig, ScaleRecurrentNet


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 5              # toy default; converged runs use 50
    batch_size: int = 2
    learning_rate: float = 1e-4
    betas: tuple[float, float] = (0.9, 0.999)
    decay_factor: float = 0.1
    decay_every: int = 10        # epochs
    class_weights: tuple[float, float, float] = (1.0, 40.0, 80.0)
    seed: int = 0


def make_optimizer(model: torch.nn.Module, config: TrainConfig):
    opt = torch.optim.Adam(model.parameters(), lr=config.learning_rate,
                           betas=config.betas)
    sched = torch.optim.lr_scheduler.StepLR(opt, step_size=config.decay_every,
                                            gamma=config.decay_factor)
    return opt, sched


def train_step(model: ScaleRecurrentNet, optimizer, image: torch.Tensor,
               labels: torch.Tensor, config: TrainConfig) -> float:
    """One optimizer step on a batch; returns the aggregated loss."""
    model.train()
    optimizer.zero_grad()
    images, truths = pyramid(image, labels, model.config.scale_count)
    preds = model(images)
    loss = multiscale_loss(preds, truths, config.class_weights)
    loss.backward()
    optimizer.step()
    for p in model.parameters():
        if not torch.isfinite(p).all():
            raise FloatingPointError("non-finite parameter after step")
    return float(loss.detach())


def epoch_loss(model: ScaleRecurrentNet, samples: list[Sample],
               config: TrainConfig) -> float:
    """Mean aggregated training loss over the set, parameters untouched.

    Measured with batch statistics (the same quantity the optimizer sees);
    batch-norm momenta are zeroed during measurement so running statistics
    stay exactly as training left them.
    """
    was_training = model.training
    momenta = []
    for module in model.modules():
        if isinstance(module, torch.nn.BatchNorm2d):
            momenta.append((module, module.momentum))
            module.momentum = 0.0
    model.train()
    losses = []
    try:
        with torch.no_grad():
            for image, labels in batches(samples, config.batch_size):
                images, truths = pyramid(image, labels,
                                         model.config.scale_count)
                preds = model(images)
                losses.append(float(multiscale_loss(preds, truths,
                                                    config.class_weights)))
    finally:
        for module, momentum in momenta:
            module.momentum = momentum
        model.train(was_training)
    return float(np.mean(losses))


def train(samples: list[Sample], net_config: NetworkConfig = NetworkConfig(),
          config: TrainConfig = TrainConfig(),
          log=print) -> tuple[ScaleRecurrentNet, list[float]]:
    torch.manual_seed(config.seed)
    model = ScaleRecurrentNet(net_config)
    optimizer, scheduler = make_optimizer(model, config)
    rng = np.random.default_rng(config.seed)
    history = [epoch_loss(model, samples, config)]
    log(f"epoch 0 (init): loss {history[0]:.4f}")
    for epoch in range(1, config.epochs + 1):
        for image, labels in batches(samples, config.batch_size, rng):
            train_step(model, optimizer, image, labels, config)
        scheduler.step()
        history.append(epoch_loss(model, samples, config))
        log(f"epoch {epoch}: loss {history[-1]:.4f}")
    return model, history


def save_checkpoint(path: str | Path, model: ScaleRecurrentNet,
                    config: TrainConfig, history: list[float]) -> None:
    torch.save({"state_dict": model.state_dict(),
                "network_config": asdict(model.config),
                "train_config": asdict(config),
                "history": history}, path)


def load_checkpoint(path: str | Path) -> ScaleRecurrentNet:
    payload = torch.load(path, map_location="cpu", weights_only=False)
    net_config = NetworkConfig(**payload["network_config"])
    model = ScaleRecurrentNet(net_config)
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model
