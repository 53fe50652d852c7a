"""FOA -> HOA upmixing: MDCT representation, per-bin DOA, SH re-encoding, resynthesis."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import Sequence

import numpy as np

from .audio_io import MultichannelSignal
from .dictionary import DEFAULT_FRAME_LENGTHS, Dictionary, SparseRepresentation
from .errors import DimensionError, ValidationError
from .mdct import mdct_synthesize
from .planewave import FoaRealBin, extract_mdct
from .solver import SolverConfig, solve
from .spherical import n_channels, sh_matrix

log = logging.getLogger(__name__)

MODES = ("linear", "sparse", "sparse_no_alias")
LINEAR_FRAME_LENGTH = 2048
DEFAULT_BLOCK = 32768
DEFAULT_CROSSFADE = 1024


def normalize_mode(mode: str) -> str:
    m = mode.replace("-", "_").lower()
    if m == "sparse_noalias":
        m = "sparse_no_alias"
    if m not in MODES:
        raise ValidationError(f"unknown mode {mode!r}; expected one of {MODES}")
    return m


def decompose(block: np.ndarray, mode: str, frame_lengths: Sequence[int], solver: SolverConfig):
    """Representation of one padded block. Returns ``(dictionary, rep, trace_or_None)``."""
    if mode == "linear":
        dictionary = Dictionary.from_lengths((LINEAR_FRAME_LENGTH,), block.shape[-1])
        return dictionary, dictionary.analyze_adjoint(block, solver.workers), None
    dictionary = Dictionary.from_lengths(frame_lengths, block.shape[-1])
    if mode == "sparse_no_alias":
        solver = replace(solver, alias_weight=0.0)
    rep, trace = solve(block, dictionary, solver)
    return dictionary, rep, trace


def encode_hoa_layer(coeffs: np.ndarray, order: int) -> np.ndarray:
    """Map a ``(4, frames, bins)`` FOA coefficient grid (W, X, Y, Z) to ``(channels, frames, bins)``
    HOA coefficients in ACN/SN3D."""
    est = extract_mdct(FoaRealBin(coeffs[0], coeffs[1], coeffs[2], coeffs[3]))
    dirs = np.where(est.has_direction[..., None], est.direction, np.array([0.0, 0.0, 1.0]))
    gains = est.amp_directional[..., None] * sh_matrix(dirs, order)
    gains[..., 0] += est.amp_omni
    return np.moveaxis(gains, -1, 0)


def encode_hoa(rep: SparseRepresentation, dictionary: Dictionary, order: int, workers=None) -> np.ndarray:
    """Resynthesised HOA block ``(channels, signal_length)``."""
    if rep.n_channels != 4:
        raise DimensionError(f"DOA extraction needs 4 channels, got {rep.n_channels}")
    out = np.zeros((n_channels(order), dictionary.signal_length))
    for spec, coeffs in zip(dictionary.layers, rep.layers):
        out += mdct_synthesize(encode_hoa_layer(coeffs, order), spec, workers)
    return out


def block_starts(n_samples: int, block: int, crossfade: int) -> list:
    if n_samples <= block:
        return [0]
    step = block - crossfade
    starts = list(range(0, n_samples - crossfade, step))
    return starts


def _fade_weights(length: int, crossfade: int, fade_in: bool, fade_out: bool) -> np.ndarray:
    w = np.ones(length)
    ramp = np.sin(0.5 * np.pi * (np.arange(crossfade) + 0.5) / crossfade) ** 2
    if fade_in:
        w[:crossfade] = ramp
    if fade_out:
        w[length - crossfade:] = ramp[::-1]
    return w


def upmix(foa: MultichannelSignal, order: int = 7, mode: str = "sparse",
          frame_lengths: Sequence[int] = DEFAULT_FRAME_LENGTHS, solver: SolverConfig | None = None,
          block: int = DEFAULT_BLOCK, crossfade: int = DEFAULT_CROSSFADE,
          traces: list | None = None, threads: int = 1) -> MultichannelSignal:
    """Upmix a first-order signal in (W, X, Y, Z) order with W = pressure / sqrt(2).

    Returns an ``(order+1)^2``-channel ACN/SN3D signal of the same length.
    Inputs longer than ``block`` samples are processed in blocks that overlap
    by ``crossfade`` samples and are joined with a raised-cosine crossfade.
    Solver traces, one per block, are appended to ``traces`` if given.
    """
    if foa.n_channels != 4:
        raise DimensionError(f"upmix needs a 4-channel FOA signal, got {foa.n_channels}")
    if not 1 <= order <= 7:
        raise ValidationError(f"order must be in 1..7, got {order}")
    mode = normalize_mode(mode)
    solver = solver or SolverConfig()
    lengths = (LINEAR_FRAME_LENGTH,) if mode == "linear" else tuple(frame_lengths)
    hop = max(lengths) // 2
    if block % hop or crossfade >= block or crossfade < 1:
        raise ValidationError(f"block {block} must be a multiple of {hop} and exceed crossfade {crossfade}")

    x = foa.data
    n = x.shape[1]
    starts = block_starts(n, block, crossfade)
    single = len(starts) == 1
    seg_len = Dictionary.padded_length(n, lengths) if single else block

    def run(start):
        seg = x[:, start:start + seg_len]
        seg = np.pad(seg, ((0, 0), (0, seg_len - seg.shape[1])))
        dictionary, rep, trace = decompose(seg, mode, lengths, solver)
        return encode_hoa(rep, dictionary, order, solver.workers), trace

    if threads > 1 and not single:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, starts))
    else:
        results = [run(s) for s in starts]

    out = np.zeros((n_channels(order), max(n, starts[-1] + seg_len)))
    for k, (start, (hoa, trace)) in enumerate(zip(starts, results)):
        if not single:
            hoa = hoa * _fade_weights(seg_len, crossfade, k > 0, k < len(starts) - 1)
        out[:, start:start + seg_len] += hoa
        if traces is not None and trace is not None:
            traces.append(trace)
    return MultichannelSignal(out[:, :n], foa.sample_rate)


def truncate_order(hoa: MultichannelSignal, order: int) -> MultichannelSignal:
    """Keep the first ``(order+1)^2`` channels."""
    c = hoa.n_channels
    have = int(round(np.sqrt(c))) - 1
    if (have + 1) ** 2 != c or have < 1:
        raise DimensionError(f"{c} channels is not a full ambisonic order >= 1")
    if order > have:
        raise DimensionError(f"cannot truncate order-{have} signal to order {order}")
    return hoa.with_data(hoa.data[: n_channels(order)])
