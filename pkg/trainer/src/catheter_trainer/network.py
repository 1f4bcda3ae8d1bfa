"""Scale-recurrent encoder-decoder segmentation network.

The same encoder-decoder runs once per scale, smallest input first.  A
convolutional LSTM sits at the bottleneck; its state and output features are
carried to the next (twice larger) scale through strided transposed
convolutions, so coarse detections seed the finer passes.  Shuttle (skip)
connections and residual blocks keep gradients flowing.  The last block ends
in a softmax over the three classes {bg, catheter, text}.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn


@dataclass(frozen=True)
class NetworkConfig:
    scale_count: int = 3
    class_count: int = 3
    base_channels: int = 8
    lstm_channels: int = 32      # bottleneck width = 4 * base by default
    res_blocks: int = 1
    init_std: float = 0.02


class ResidualBlock(nn.Module):
    def __init__(self, channels: int):
        super().__init__()
        self.conv1 = nn.Conv2d(channels, channels, 3, padding=1)
        self.bn1 = nn.BatchNorm2d(channels)
        self.conv2 = nn.Conv2d(channels, channels, 3, padding=1)
        self.bn2 = nn.BatchNorm2d(channels)
        self.act = nn.ReLU(inplace=True)

    def forward(self, x):
        out = self.act(self.bn1(self.conv1(x)))
        out = self.bn2(self.conv2(out))
        return self.act(out + x)


class ConvLSTMCell(nn.Module):
    """Single convolutional LSTM step over feature maps."""

    def __init__(self, in_channels: int, hidden_channels: int):
        super().__init__()
        self.hidden_channels = hidden_channels
        self.gates = nn.Conv2d(in_channels + hidden_channels,
                               4 * hidden_channels, 3, padding=1)

    def forward(self, x, state):
        h, c = state
        gates = self.gates(torch.cat([x, h], dim=1))
        i, f, o, g = gates.chunk(4, dim=1)
        i, f, o = torch.sigmoid(i), torch.sigmoid(f), torch.sigmoid(o)
        c = f * c + i * torch.tanh(g)
        h = o * torch.tanh(c)
        return h, (h, c)

    def zero_state(self, batch: int, height: int, width: int, ref: torch.Tensor):
        shape = (batch, self.hidden_channels, height, width)
        zero = torch.zeros(shape, dtype=ref.dtype, device=ref.device)
        return zero, zero.clone()


def _down(cin: int, cout: int) -> nn.Sequential:
    return nn.Sequential(nn.Conv2d(cin, cout, 3, stride=2, padding=1),
                         nn.BatchNorm2d(cout), nn.ReLU(inplace=True))


def _up(cin: int, cout: int) -> nn.Sequential:
    return nn.Sequential(nn.ConvTranspose2d(cin, cout, 4, stride=2, padding=1),
                         nn.BatchNorm2d(cout), nn.ReLU(inplace=True))


class ScaleRecurrentNet(nn.Module):
    def __init__(self, config: NetworkConfig = NetworkConfig()):
        super().__init__()
        self.config = config
        c = config.base_channels
        cl = config.lstm_channels

        self.stem = nn.Sequential(nn.Conv2d(1, c, 3, padding=1),
                                  nn.BatchNorm2d(c), nn.ReLU(inplace=True))
        self.enc1 = nn.Sequential(*[ResidualBlock(c)
                                    for _ in range(config.res_blocks)])
        self.down1 = _down(c, 2 * c)
        self.enc2 = nn.Sequential(*[ResidualBlock(2 * c)
                                    for _ in range(config.res_blocks)])
        self.down2 = _down(2 * c, cl)
        self.enc3 = nn.Sequential(*[ResidualBlock(cl)
                                    for _ in range(config.res_blocks)])

        self.lstm = ConvLSTMCell(cl, cl)
        # carries state and features from the previous, half-sized scale
        self.state_up = nn.ConvTranspose2d(cl, cl, 4, stride=2, padding=1)

        self.dec3 = nn.Sequential(*[ResidualBlock(cl)
                                    for _ in range(config.res_blocks)])
        self.up1 = _up(cl, 2 * c)
        self.dec2 = nn.Sequential(*[ResidualBlock(2 * c)
                                    for _ in range(config.res_blocks)])
        self.up2 = _up(2 * c, c)
        self.dec1 = nn.Sequential(*[ResidualBlock(c)
                                    for _ in range(config.res_blocks)])
        self.head = nn.Conv2d(c, config.class_count, 3, padding=1)
        self.reset_parameters()

    def reset_parameters(self):
        for module in self.modules():
            if isinstance(module, (nn.Conv2d, nn.ConvTranspose2d)):
                nn.init.normal_(module.weight, mean=0.0,
                                std=self.config.init_std)
                if module.bias is not None:
                    nn.init.zeros_(module.bias)

    def forward(self, images: list[torch.Tensor]) -> list[torch.Tensor]:
        """Per-scale softmax likelihood maps, smallest scale first.

        ``images`` must be ordered ascending with a fixed x2 ratio and sides
        divisible by 4.
        """
        if len(images) != self.config.scale_count:
            raise ValueError(f"expected {self.config.scale_count} scales, "
                             f"got {len(images)}")
        for a, b in zip(images, images[1:]):
            if (a.shape[-2] * 2, a.shape[-1] * 2) != (b.shape[-2], b.shape[-1]):
                raise ValueError("scales must grow by exactly x2")

        outputs = []
        state = None
        for image in images:
            feats1 = self.enc1(self.stem(image))
            feats2 = self.enc2(self.down1(feats1))
            bottleneck = self.enc3(self.down2(feats2))
            if state is None:
                state = self.lstm.zero_state(bottleneck.shape[0],
                                             bottleneck.shape[-2],
                                             bottleneck.shape[-1], bottleneck)
            fused, state = self.lstm(bottleneck, state)
            out = self.dec3(fused)
            out = self.dec2(self.up1(out) + feats2)
            out = self.dec1(self.up2(out) + feats1)
            outputs.append(torch.softmax(self.head(out), dim=1))
            state = tuple(self.state_up(s) for s in state)
        return outputs
