"""Writers for the RINSWDET weight file and reference-activation CSV.

Layout per docs/detector_weights_format.md in the consumer repo: ASCII
magic, u32 header (version, profile count, hidden, input), then per
profile the normalization constants, per-layer LSTM tensors (gate rows
blocked input/forget/cell/output, two bias vectors), the two head layers
with activation tags, and the detection threshold.  Little-endian f32
throughout.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
import torch

from . import THRESHOLDS
from .model import ProfileScorer

MAGIC = b"RINSWDET"
VERSION = 1
ACT_LINEAR = 0
ACT_RELU = 1


def _tensor_bytes(t: torch.Tensor) -> bytes:
    return np.ascontiguousarray(t.detach().cpu().numpy(),
                                dtype="<f4").tobytes()


def save_weights(path: str | Path, models: list[ProfileScorer],
                 norm_mean: np.ndarray, norm_scale: np.ndarray,
                 thresholds=THRESHOLDS) -> None:
    hidden = models[0].lstm.hidden_size
    input_size = models[0].lstm.input_size
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IIII", VERSION, len(models), hidden, input_size))
        for model, threshold in zip(models, thresholds):
            fh.write(np.asarray(norm_mean, dtype="<f4").tobytes())
            fh.write(np.asarray(norm_scale, dtype="<f4").tobytes())
            for layer in range(2):
                fh.write(_tensor_bytes(getattr(model.lstm, f"weight_ih_l{layer}")))
                fh.write(_tensor_bytes(getattr(model.lstm, f"weight_hh_l{layer}")))
                fh.write(_tensor_bytes(getattr(model.lstm, f"bias_ih_l{layer}")))
                fh.write(_tensor_bytes(getattr(model.lstm, f"bias_hh_l{layer}")))
            fh.write(_tensor_bytes(model.head[0].weight))
            fh.write(_tensor_bytes(model.head[0].bias))
            fh.write(struct.pack("<I", ACT_RELU))
            fh.write(_tensor_bytes(model.head[2].weight))
            fh.write(_tensor_bytes(model.head[2].bias))
            fh.write(struct.pack("<I", ACT_LINEAR))
            fh.write(struct.pack("<f", float(threshold)))


def quantized_double(models: list[ProfileScorer]) -> list[ProfileScorer]:
    """Copies whose parameters went through the f32 quantization the file
    applies, then widened to f64 (what a loader of the file computes with)."""
    out = []
    for model in models:
        clone = ProfileScorer(model.lstm.hidden_size, model.lstm.input_size,
                              dropout=0.0).double()
        state = {k: v.detach().float().double()
                 for k, v in model.state_dict().items()}
        clone.load_state_dict(state)
        clone.eval()
        out.append(clone)
    return out


def reference_scores(models: list[ProfileScorer], norm_mean: np.ndarray,
                     norm_scale: np.ndarray, inputs: np.ndarray) -> np.ndarray:
    """Per-step sigmoid scores over an input sequence from a zero hidden
    state, computed on the f32-quantized weights in f64 arithmetic."""
    norm_mean = np.asarray(norm_mean, dtype="<f4").astype(float)
    norm_scale = np.asarray(norm_scale, dtype="<f4").astype(float)
    x = (inputs - norm_mean) / norm_scale
    batch = torch.from_numpy(x).double().unsqueeze(0)
    scores = []
    with torch.no_grad():
        for model in quantized_double(models):
            logits, _ = model(batch)
            scores.append(torch.sigmoid(logits)[0].numpy())
    return np.stack(scores, axis=1)


def write_reference_csv(path: str | Path, scores: np.ndarray) -> None:
    with open(path, "w") as fh:
        fh.write("# detector-trainer reference scores v1\n")
        fh.write("step,score_vel,score_ang,score_lat,score_up\n")
        for step, row in enumerate(scores):
            fh.write(f"{step}," + ",".join("%.7e" % v for v in row) + "\n")
