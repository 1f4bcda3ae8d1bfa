"""Class-weighted multi-scale cross entropy.

Semantics mirror the evaluation toolkit: per scale, the loss is the mean
over pixels of -w[class] * ln(p[class]) with the log clamped at 1e-7, and
scales are summed.
"""

from __future__ import annotations

import torch

LOG_CLAMP = 1e-7
DEFAULT_WEIGHTS = (1.0, 40.0, 80.0)


def weighted_ce(pred: torch.Tensor, truth: torch.Tensor,
                weights=DEFAULT_WEIGHTS) -> torch.Tensor:
    """pred: (B, 3, H, W) softmax probabilities; truth: (B, H, W) class ids."""
    w = torch.as_tensor(weights, dtype=pred.dtype, device=pred.device)
    probs = pred.gather(1, truth[:, None]).squeeze(1)
    return (-w[truth] * torch.log(probs.clamp_min(LOG_CLAMP))).mean()


def multiscale_loss(preds: list[torch.Tensor], truths: list[torch.Tensor],
                    weights=DEFAULT_WEIGHTS) -> torch.Tensor:
    if len(preds) != len(truths):
        raise ValueError("need one truth per scale")
    total = preds[0].new_zeros(())
    for pred, truth in zip(preds, truths):
        total = total + weighted_ce(pred, truth, weights)
    return total
