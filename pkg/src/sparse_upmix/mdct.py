"""Orthonormal sine-window MDCT with whole-signal framing.

Each frame of length ``N`` is windowed with ``w[n] = sin(pi (n + 0.5) / N)``
and projected on the atoms

    a_k[n] = w[n] * sqrt(4/N) * cos(2 pi / N * (n + 0.5 + N/4) * (k + 0.5))

at hop ``N/2``. The signal is padded with ``N/2`` zeros on both sides, so a
length-``T`` signal gives ``T/(N/2) + 1`` frames and the frame set is a
Parseval frame of the signal space: analysis preserves energy and synthesis
(followed by trimming the pads) is both its adjoint and its left inverse.

All functions operate on the last axis and broadcast over leading axes
(typically channels).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import fft as sp_fft

from .errors import DimensionError, ValidationError


@dataclass(frozen=True)
class LayerSpec:
    """One MDCT resolution: frame length ``N``, hop ``N/2``, sine window."""

    frame_length: int

    def __post_init__(self):
        n = int(self.frame_length)
        if n < 8 or n & (n - 1):
            raise ValidationError(f"frame length must be a power of two >= 8, got {self.frame_length}")
        object.__setattr__(self, "frame_length", n)

    @property
    def hop(self) -> int:
        return self.frame_length // 2

    @property
    def bins(self) -> int:
        return self.frame_length // 2

    @cached_property
    def window(self) -> np.ndarray:
        n = np.arange(self.frame_length)
        return np.sin(np.pi * (n + 0.5) / self.frame_length)

    def n_frames(self, signal_length: int) -> int:
        return signal_length // self.hop + 1

    def atom(self, k: int) -> np.ndarray:
        """Synthesis atom for bin ``k`` by the direct formula (length ``N``)."""
        N = self.frame_length
        n = np.arange(N)
        return self.window * np.sqrt(4.0 / N) * np.cos(2 * np.pi / N * (n + 0.5 + N / 4) * (k + 0.5))


def _frames(padded: np.ndarray, hop: int) -> np.ndarray:
    blocks = padded.reshape(padded.shape[:-1] + (-1, hop))
    return np.concatenate([blocks[..., :-1, :], blocks[..., 1:, :]], axis=-1)


def mdct_analyze(signal, spec: LayerSpec, workers: int | None = None) -> np.ndarray:
    """Coefficients of shape ``(..., frames, N/2)``; signal length must be a multiple of ``N/2``."""
    x = np.asarray(signal, dtype=np.float64)
    M = spec.hop
    if x.shape[-1] % M:
        raise DimensionError(f"signal length {x.shape[-1]} is not a multiple of the hop {M}")
    pad = [(0, 0)] * (x.ndim - 1) + [(M, M)]
    z = _frames(np.pad(x, pad), M) * spec.window
    h = M // 2
    a, b, c, d = z[..., :h], z[..., h:M], z[..., M:M + h], z[..., M + h:]
    folded = np.concatenate([-c[..., ::-1] - d, a - b[..., ::-1]], axis=-1)
    return sp_fft.dct(folded, type=4, norm="ortho", axis=-1, workers=workers)


def mdct_synthesize(coeffs, spec: LayerSpec, workers: int | None = None) -> np.ndarray:
    """Overlap-add synthesis; returns ``(..., (frames - 1) * N/2)`` samples with pads trimmed."""
    X = np.asarray(coeffs, dtype=np.float64)
    M = spec.hop
    if X.ndim < 2 or X.shape[-1] != M or X.shape[-2] < 1:
        raise DimensionError(f"coefficient grid must end in (frames, {M}), got {X.shape}")
    u = sp_fft.dct(X, type=4, norm="ortho", axis=-1, workers=workers)
    h = M // 2
    u1, u2 = u[..., :h], u[..., h:]
    y = np.concatenate([u2, -u2[..., ::-1], -u1[..., ::-1], -u1], axis=-1) * spec.window
    n_frames = X.shape[-2]
    out = np.zeros(X.shape[:-2] + (n_frames + 1, M))
    out[..., :-1, :] += y[..., :M]
    out[..., 1:, :] += y[..., M:]
    return out[..., 1:-1, :].reshape(X.shape[:-2] + ((n_frames - 1) * M,))


def mdct_analyze_naive(signal, spec: LayerSpec) -> np.ndarray:
    """O(N^2)-per-frame reference: explicit inner products with every atom."""
    x = np.asarray(signal, dtype=np.float64)
    M = spec.hop
    if x.ndim != 1 or x.size % M:
        raise DimensionError("naive analysis takes one channel whose length is a multiple of N/2")
    padded = np.concatenate([np.zeros(M), x, np.zeros(M)])
    atoms = np.stack([spec.atom(k) for k in range(M)])
    n_frames = spec.n_frames(x.size)
    out = np.empty((n_frames, M))
    for f in range(n_frames):
        out[f] = atoms @ padded[f * M:f * M + spec.frame_length]
    return out
