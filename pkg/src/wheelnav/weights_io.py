"""Binary detector-weight file ("RINSWDET" format, version 1).

The exact byte layout is specified in docs/detector_weights_format.md;
this module is the reference reader/writer.  The loader validates every
tensor shape and rejects anything inconsistent so that a bad training
export fails at load time, not mid-run.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .detectors import DetectorWeights, ProfileNet, PROFILE_NAMES

MAGIC = b"RINSWDET"
VERSION = 1
RECURRENT_LAYERS = 2


class WeightFormatError(ValueError):
    pass


def _write_array(fh, arr: np.ndarray) -> None:
    fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def _read_array(fh, shape: tuple[int, ...], what: str) -> np.ndarray:
    count = int(np.prod(shape))
    raw = fh.read(4 * count)
    if len(raw) != 4 * count:
        raise WeightFormatError(f"truncated file while reading {what}")
    return np.frombuffer(raw, dtype="<f4").astype(float).reshape(shape)


def _read_u32(fh, what: str) -> int:
    raw = fh.read(4)
    if len(raw) != 4:
        raise WeightFormatError(f"truncated file while reading {what}")
    return struct.unpack("<I", raw)[0]


def save_weights(path: str | Path, weights: DetectorWeights) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IIII", VERSION, len(weights.profiles),
                             weights.hidden_size, weights.input_size))
        for net in weights.profiles:
            _write_array(fh, net.norm_mean)
            _write_array(fh, net.norm_scale)
            for layer in range(RECURRENT_LAYERS):
                _write_array(fh, net.w_input[layer])
                _write_array(fh, net.w_hidden[layer])
                _write_array(fh, net.b_input[layer])
                _write_array(fh, net.b_hidden[layer])
            _write_array(fh, net.head_w1)
            _write_array(fh, net.head_b1)
            fh.write(struct.pack("<I", net.head_act1))
            _write_array(fh, net.head_w2)
            _write_array(fh, net.head_b2)
            fh.write(struct.pack("<I", net.head_act2))
            fh.write(struct.pack("<f", net.threshold))


def load_weights(path: str | Path) -> DetectorWeights:
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != MAGIC:
            raise WeightFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
        version = _read_u32(fh, "version")
        if version != VERSION:
            raise WeightFormatError(f"unsupported format version {version}")
        n_profiles = _read_u32(fh, "profile count")
        if n_profiles != len(PROFILE_NAMES):
            raise WeightFormatError(
                f"expected {len(PROFILE_NAMES)} profiles, file has {n_profiles}")
        hidden = _read_u32(fh, "hidden size")
        inp = _read_u32(fh, "input size")
        if hidden < 1 or inp < 1:
            raise WeightFormatError("hidden/input size must be positive")

        profiles = []
        for name in PROFILE_NAMES:
            norm_mean = _read_array(fh, (inp,), f"{name} norm_mean")
            norm_scale = _read_array(fh, (inp,), f"{name} norm_scale")
            if np.any(norm_scale == 0.0):
                raise WeightFormatError(f"{name}: zero normalization scale")
            w_in, w_hid, b_in, b_hid = [], [], [], []
            for layer, in_dim in enumerate((inp, hidden)):
                w_in.append(_read_array(fh, (4 * hidden, in_dim),
                                        f"{name} w_input[{layer}]"))
                w_hid.append(_read_array(fh, (4 * hidden, hidden),
                                         f"{name} w_hidden[{layer}]"))
                b_in.append(_read_array(fh, (4 * hidden,),
                                        f"{name} b_input[{layer}]"))
                b_hid.append(_read_array(fh, (4 * hidden,),
                                         f"{name} b_hidden[{layer}]"))
            head_w1 = _read_array(fh, (hidden, hidden), f"{name} head_w1")
            head_b1 = _read_array(fh, (hidden,), f"{name} head_b1")
            head_act1 = _read_u32(fh, f"{name} head_act1")
            head_w2 = _read_array(fh, (1, hidden), f"{name} head_w2")
            head_b2 = _read_array(fh, (1,), f"{name} head_b2")
            head_act2 = _read_u32(fh, f"{name} head_act2")
            raw = fh.read(4)
            if len(raw) != 4:
                raise WeightFormatError(f"truncated file at {name} threshold")
            threshold = struct.unpack("<f", raw)[0]
            if head_act1 > 1 or head_act2 > 1:
                raise WeightFormatError(f"{name}: unknown activation tag")
            if not 0.0 < threshold < 1.0:
                raise WeightFormatError(f"{name}: threshold {threshold} not in (0, 1)")
            profiles.append(ProfileNet(
                norm_mean=norm_mean, norm_scale=norm_scale,
                w_input=tuple(w_in), w_hidden=tuple(w_hid),
                b_input=tuple(b_in), b_hidden=tuple(b_hid),
                head_w1=head_w1, head_b1=head_b1, head_act1=head_act1,
                head_w2=head_w2, head_b2=head_b2, head_act2=head_act2,
                threshold=float(threshold)))
        trailing = fh.read(1)
        if trailing:
            raise WeightFormatError("trailing bytes after last profile")
    return DetectorWeights(hidden_size=hidden, input_size=inp,
                           profiles=tuple(profiles))


def zero_weights(hidden_size: int = 4, input_size: int = 6,
                 thresholds=(0.95, 0.95, 0.5, 0.5)) -> DetectorWeights:
    """All-zero network (every score is sigmoid(0) = 0.5); test helper."""
    profiles = []
    for thr in thresholds:
        profiles.append(ProfileNet(
            norm_mean=np.zeros(input_size), norm_scale=np.ones(input_size),
            w_input=(np.zeros((4 * hidden_size, input_size)),
                     np.zeros((4 * hidden_size, hidden_size))),
            w_hidden=(np.zeros((4 * hidden_size, hidden_size)),
                      np.zeros((4 * hidden_size, hidden_size))),
            b_input=(np.zeros(4 * hidden_size), np.zeros(4 * hidden_size)),
            b_hidden=(np.zeros(4 * hidden_size), np.zeros(4 * hidden_size)),
            head_w1=np.zeros((hidden_size, hidden_size)),
            head_b1=np.zeros(hidden_size), head_act1=1,
            head_w2=np.zeros((1, hidden_size)), head_b2=np.zeros(1), head_act2=0,
            threshold=float(thr)))
    return DetectorWeights(hidden_size=hidden_size, input_size=input_size,
                           profiles=tuple(profiles))
