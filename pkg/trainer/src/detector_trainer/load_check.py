"""Trainer-side reader for the weight file, used to regenerate reference
activations for an already-exported file."""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
import torch

from .export import MAGIC, VERSION
from .model import ProfileScorer


def _read(fh, count):
    raw = fh.read(4 * count)
    if len(raw) != 4 * count:
        raise ValueError("truncated weight file")
    return np.frombuffer(raw, dtype="<f4")


def load_for_reference(path: str | Path
                       ) -> tuple[list[ProfileScorer], np.ndarray, np.ndarray]:
    with open(path, "rb") as fh:
        if fh.read(8) != MAGIC:
            raise ValueError("bad magic")
        version, n_profiles, hidden, input_size = struct.unpack("<IIII",
                                                                fh.read(16))
        if version != VERSION:
            raise ValueError(f"unsupported version {version}")
        models = []
        mean = scale = None
        for _ in range(n_profiles):
            mean = _read(fh, input_size).astype(float)
            scale = _read(fh, input_size).astype(float)
            model = ProfileScorer(hidden, input_size, dropout=0.0)
            state = {}
            for layer, in_dim in enumerate((input_size, hidden)):
                state[f"lstm.weight_ih_l{layer}"] = torch.from_numpy(
                    _read(fh, 4 * hidden * in_dim).reshape(4 * hidden, in_dim).copy())
                state[f"lstm.weight_hh_l{layer}"] = torch.from_numpy(
                    _read(fh, 4 * hidden * hidden).reshape(4 * hidden, hidden).copy())
                state[f"lstm.bias_ih_l{layer}"] = torch.from_numpy(
                    _read(fh, 4 * hidden).copy())
                state[f"lstm.bias_hh_l{layer}"] = torch.from_numpy(
                    _read(fh, 4 * hidden).copy())
            state["head.0.weight"] = torch.from_numpy(
                _read(fh, hidden * hidden).reshape(hidden, hidden).copy())
            state["head.0.bias"] = torch.from_numpy(_read(fh, hidden).copy())
            act1 = struct.unpack("<I", fh.read(4))[0]
            state["head.2.weight"] = torch.from_numpy(
                _read(fh, hidden).reshape(1, hidden).copy())
            state["head.2.bias"] = torch.from_numpy(_read(fh, 1).copy())
            act2 = struct.unpack("<I", fh.read(4))[0]
            fh.read(4)  # threshold, unused for reference generation
            if (act1, act2) != (1, 0):
                raise ValueError("reference generation expects relu+linear head")
            model.load_state_dict(state)
            model.eval()
            models.append(model)
    return models, mean, scale
