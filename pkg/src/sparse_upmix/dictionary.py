"""Union of MDCT layers used as an overcomplete synthesis dictionary."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .audio_io import MultichannelSignal
from .errors import DimensionError, ValidationError
from .mdct import LayerSpec, mdct_analyze, mdct_synthesize

DEFAULT_FRAME_LENGTHS = (32, 128, 256, 1024, 2048)


@dataclass(frozen=True)
class Dictionary:
    layers: tuple
    signal_length: int

    def __post_init__(self):
        layers = tuple(l if isinstance(l, LayerSpec) else LayerSpec(l) for l in self.layers)
        if not layers:
            raise ValidationError("a dictionary needs at least one layer")
        lengths = [l.frame_length for l in layers]
        if any(b <= a for a, b in zip(lengths, lengths[1:])):
            raise ValidationError(f"layer frame lengths must be strictly increasing, got {lengths}")
        if self.signal_length < 0 or self.signal_length % layers[-1].hop:
            raise DimensionError(f"signal length {self.signal_length} is not a multiple of the "
                                 f"largest hop {layers[-1].hop}")
        object.__setattr__(self, "layers", layers)

    @classmethod
    def from_lengths(cls, frame_lengths: Sequence[int] = DEFAULT_FRAME_LENGTHS,
                     signal_length: int = 0) -> "Dictionary":
        return cls(tuple(LayerSpec(n) for n in sorted(frame_lengths)), signal_length)

    @staticmethod
    def padded_length(n_samples: int, frame_lengths: Sequence[int] = DEFAULT_FRAME_LENGTHS) -> int:
        """Smallest length >= ``n_samples`` that every layer can frame."""
        hop = max(frame_lengths) // 2
        return -(-n_samples // hop) * hop

    @property
    def frame_lengths(self) -> tuple:
        return tuple(l.frame_length for l in self.layers)

    def __len__(self):
        return len(self.layers)

    def layer_shape(self, index: int, n_channels: int) -> tuple:
        spec = self.layers[index]
        return (n_channels, spec.n_frames(self.signal_length), spec.bins)

    def zeros(self, n_channels: int) -> "SparseRepresentation":
        return SparseRepresentation([np.zeros(self.layer_shape(i, n_channels)) for i in range(len(self))])

    def check(self, rep: "SparseRepresentation") -> None:
        if len(rep.layers) != len(self):
            raise DimensionError(f"representation has {len(rep.layers)} layers, dictionary has {len(self)}")
        n_channels = rep.n_channels
        for i, arr in enumerate(rep.layers):
            if arr.shape != self.layer_shape(i, n_channels):
                raise DimensionError(f"layer {i} has shape {arr.shape}, expected "
                                     f"{self.layer_shape(i, n_channels)}")

    def synthesize_layers(self, rep: "SparseRepresentation", workers=None) -> list:
        """Per-layer time-domain contributions, each ``(channels, signal_length)``."""
        self.check(rep)
        return [mdct_synthesize(arr, spec, workers) for arr, spec in zip(rep.layers, self.layers)]

    def synthesize(self, rep: "SparseRepresentation", sample_rate: int = 48000, workers=None) -> MultichannelSignal:
        return MultichannelSignal(self.synthesize_array(rep, workers), sample_rate)

    def synthesize_array(self, rep: "SparseRepresentation", workers=None) -> np.ndarray:
        return sum(self.synthesize_layers(rep, workers))

    def analyze_adjoint(self, signal, workers=None) -> "SparseRepresentation":
        """Adjoint of :meth:`synthesize`: every layer's MDCT analysis of the signal."""
        data = signal.data if isinstance(signal, MultichannelSignal) else np.atleast_2d(np.asarray(signal, float))
        if data.shape[-1] != self.signal_length:
            raise DimensionError(f"signal length {data.shape[-1]} does not match dictionary "
                                 f"length {self.signal_length}")
        return SparseRepresentation([mdct_analyze(data, spec, workers) for spec in self.layers])

    # -- coefficient addressing ---------------------------------------------

    def n_coefficients(self, n_channels: int) -> int:
        return sum(int(np.prod(self.layer_shape(i, n_channels))) for i in range(len(self)))

    def flat_index(self, address: tuple, n_channels: int) -> int:
        layer, channel, frame, bin_ = address
        shape = self.layer_shape(layer, n_channels)
        offset = sum(int(np.prod(self.layer_shape(i, n_channels))) for i in range(layer))
        return offset + int(np.ravel_multi_index((channel, frame, bin_), shape))

    def address(self, flat: int, n_channels: int) -> tuple:
        if not 0 <= flat < self.n_coefficients(n_channels):
            raise DimensionError(f"flat index {flat} out of range")
        for layer in range(len(self)):
            shape = self.layer_shape(layer, n_channels)
            size = int(np.prod(shape))
            if flat < size:
                return (layer,) + tuple(int(i) for i in np.unravel_index(flat, shape))
            flat -= size
        raise AssertionError("unreachable")


class SparseRepresentation:
    """Coefficients per layer, each array shaped ``(channels, frames, bins)``."""

    def __init__(self, layers):
        self.layers = [np.asarray(a, dtype=np.float64) for a in layers]
        n = {a.shape[0] for a in self.layers}
        if len(n) > 1 or any(a.ndim != 3 for a in self.layers):
            raise DimensionError("every layer must be (channels, frames, bins) with a common channel count")

    @property
    def n_channels(self) -> int:
        return self.layers[0].shape[0]

    def copy(self) -> "SparseRepresentation":
        return SparseRepresentation([a.copy() for a in self.layers])

    def scaled(self, c: float) -> "SparseRepresentation":
        return SparseRepresentation([c * a for a in self.layers])

    def flatten(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.layers])

    @classmethod
    def unflatten(cls, flat, dictionary: Dictionary, n_channels: int) -> "SparseRepresentation":
        flat = np.asarray(flat, dtype=np.float64)
        if flat.size != dictionary.n_coefficients(n_channels):
            raise DimensionError(f"flat vector has {flat.size} entries, expected "
                                 f"{dictionary.n_coefficients(n_channels)}")
        out, pos = [], 0
        for i in range(len(dictionary)):
            shape = dictionary.layer_shape(i, n_channels)
            size = int(np.prod(shape))
            out.append(flat[pos:pos + size].reshape(shape))
            pos += size
        return cls(out)

    def l1_norm(self) -> float:
        total = 0.0
        for a in self.layers:
            if np.isnan(a).any():
                raise ValidationError("representation contains NaN")
            total += float(np.abs(a).sum())
        return total

    def layer_energy(self) -> np.ndarray:
        return np.array([float(np.sum(a * a)) for a in self.layers])

    def inner(self, other: "SparseRepresentation") -> float:
        return float(sum(np.vdot(a, b) for a, b in zip(self.layers, other.layers)))

    def write_layer_csvs(self, dictionary: Dictionary, directory, stem: str = "layer",
                         channel: int | None = None) -> list:
        """One CSV per layer: rows are frames, columns bins.

        Values are coefficient magnitudes; with ``channel=None`` the channels
        are combined as the Euclidean norm at each address.
        """
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        paths = []
        for spec, arr in zip(dictionary.layers, self.layers):
            mag = np.sqrt(np.sum(arr * arr, axis=0)) if channel is None else np.abs(arr[channel])
            path = directory / f"{stem}_{spec.frame_length}.csv"
            with open(path, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["frame"] + [f"bin{k}" for k in range(spec.bins)])
                for f, row in enumerate(mag):
                    writer.writerow([f] + [repr(float(v)) for v in row])
            paths.append(path)
        return paths
