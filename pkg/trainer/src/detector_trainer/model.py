"""Per-profile scorer: 2-layer LSTM + 2-layer head, trained with a
binary cross entropy loss on the head logits (the exported format has the
inference engine apply the sigmoid)."""

from __future__ import annotations

import torch
from torch import nn


class ProfileScorer(nn.Module):
    def __init__(self, hidden: int, input_size: int = 6, dropout: float = 0.4):
        super().__init__()
        self.lstm = nn.LSTM(input_size=input_size, hidden_size=hidden,
                            num_layers=2, batch_first=True, dropout=dropout)
        self.head = nn.Sequential(nn.Linear(hidden, hidden), nn.ReLU(),
                                  nn.Linear(hidden, 1))
        # forget-gate bias at +1 keeps early gradients flowing through time
        with torch.no_grad():
            for layer in range(2):
                getattr(self.lstm, f"bias_ih_l{layer}")[hidden:2 * hidden] += 1.0

    def forward(self, x: torch.Tensor, state=None):
        out, state = self.lstm(x, state)
        return self.head(out).squeeze(-1), state


def build_models(hidden: int, n_profiles: int = 4, input_size: int = 6,
                 dropout: float = 0.4) -> list[ProfileScorer]:
    return [ProfileScorer(hidden, input_size, dropout)
            for _ in range(n_profiles)]
