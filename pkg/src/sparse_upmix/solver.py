"""Proximal-gradient solver for a low-L1 multi-layer MDCT representation.

Minimises, per iteration ``i``,

    ||x - D X||^2 + lam * aliasing_loss(X) + alpha(i) * ||X||_1

where ``D`` is the layer-union dictionary and ``alpha(i)`` decays linearly
from ``alpha0`` to zero at 90 % of the run. The L1 term is handled by a
shrinkage step; with ``group_sparsity`` the four channels at one address are
shrunk together so their supports stay aligned.

The aliasing term penalises short-layer content whose analysis in a longer
layer has more energy, bin by bin, than the original signal's analysis in
that layer. It is switched off together with the L1 term for the final
10 % of iterations, which are pure reconstruction.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .audio_io import MultichannelSignal
from .dictionary import Dictionary, SparseRepresentation
from .errors import DimensionError, DivergenceError, ValidationError
from .mdct import mdct_analyze, mdct_synthesize

log = logging.getLogger(__name__)

ANNEAL_FRACTION = 0.9


@dataclass
class SolverConfig:
    """Solver settings. ``None`` for ``step_size``/``alpha0`` selects per-run defaults:
    ``1 / (2 * layers)`` and ``0.1 * max|D^T x|``."""

    iterations: int = 2000
    step_size: float | None = None
    alpha0: float | None = None
    alias_weight: float = 0.5
    group_sparsity: bool = True
    workers: int | None = None

    def __post_init__(self):
        if self.iterations < 1:
            raise ValidationError(f"iterations must be >= 1, got {self.iterations}")
        if self.step_size is not None and not self.step_size > 0:
            raise ValidationError(f"step size must be positive, got {self.step_size}")
        if self.alpha0 is not None and not self.alpha0 >= 0:
            raise ValidationError(f"alpha0 must be non-negative, got {self.alpha0}")
        if not self.alias_weight >= 0:
            raise ValidationError(f"alias weight must be non-negative, got {self.alias_weight}")

    def resolved_step(self, dictionary: Dictionary) -> float:
        step = 1.0 / (2 * len(dictionary)) if self.step_size is None else self.step_size
        if step > 1.0 / len(dictionary) + 1e-15:
            raise ValidationError(f"step size {step} exceeds 1/layers = {1.0 / len(dictionary)}")
        return step


@dataclass
class SolverTrace:
    rec_rms: np.ndarray = field(default_factory=lambda: np.zeros(0))
    l1: np.ndarray = field(default_factory=lambda: np.zeros(0))
    alias: np.ndarray = field(default_factory=lambda: np.zeros(0))
    alpha: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __len__(self):
        return len(self.rec_rms)

    def smoothed_rec_rms(self, width: int = 50) -> np.ndarray:
        """Trailing moving average over complete windows."""
        if len(self.rec_rms) < width:
            return self.rec_rms.copy()
        c = np.cumsum(np.concatenate([[0.0], self.rec_rms]))
        return (c[width:] - c[:-width]) / width

    def write_csv(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iteration", "rec_rms", "l1", "alias", "alpha"])
            for i in range(len(self)):
                writer.writerow([i, repr(float(self.rec_rms[i])), repr(float(self.l1[i])),
                                 repr(float(self.alias[i])), repr(float(self.alpha[i]))])


def alpha_at(iteration: int, config: SolverConfig, alpha0: float | None = None) -> float:
    """L1 weight at ``iteration``: linear decay reaching zero at 90 % of the run."""
    a0 = config.alpha0 if alpha0 is None else alpha0
    if a0 is None:
        raise ValidationError("alpha0 is unresolved; pass it explicitly")
    return a0 * max(0.0, 1.0 - iteration / (ANNEAL_FRACTION * config.iterations))


def default_alpha0(signal: np.ndarray, dictionary: Dictionary, workers=None) -> float:
    rep = dictionary.analyze_adjoint(signal, workers)
    return 0.1 * max(float(np.abs(a).max()) for a in rep.layers)


def shrink(values: np.ndarray, threshold: float, group: bool) -> np.ndarray:
    """Soft threshold; with ``group`` the Euclidean norm over axis 0 is shrunk."""
    if threshold <= 0:
        return values
    if not group:
        return np.sign(values) * np.maximum(np.abs(values) - threshold, 0.0)
    norm = np.sqrt(np.sum(values * values, axis=0, keepdims=True))
    with np.errstate(divide="ignore", invalid="ignore"):
        gain = np.where(norm > threshold, 1.0 - threshold / norm, 0.0)
    return values * gain


class _Aliasing:
    """Aliasing loss and its gradient for a fixed original signal."""

    def __init__(self, original: np.ndarray, dictionary: Dictionary, workers=None):
        self.dictionary = dictionary
        self.workers = workers
        self.orig_energy = [None] + [mdct_analyze(original, spec, workers) ** 2
                                     for spec in dictionary.layers[1:]]
        self.cross = None

    def evaluate(self, layer_synths) -> float:
        """Loss for the given per-layer syntheses; caches what :meth:`gradient` needs."""
        total = 0.0
        short = np.zeros_like(layer_synths[0])
        self.cross = [None]
        for k in range(1, len(self.dictionary)):
            short = short + layer_synths[k - 1]
            c = mdct_analyze(short, self.dictionary.layers[k], self.workers)
            excess = c * c - self.orig_energy[k]
            active = excess > 0
            total += float(np.sum(excess[active]))
            self.cross.append(np.where(active, 2.0 * c, 0.0))
        return total

    def gradient(self) -> list:
        layers = self.dictionary.layers
        grads = [None] * len(layers)
        back = None
        for k in range(len(layers) - 1, 0, -1):
            u = mdct_synthesize(self.cross[k], layers[k], self.workers)
            back = u if back is None else back + u
            grads[k - 1] = mdct_analyze(back, layers[k - 1], self.workers)
        grads[-1] = 0.0
        return grads


def aliasing_loss(rep: SparseRepresentation, original, dictionary: Dictionary) -> float:
    """Summed per-bin excess energy that shorter layers inject into each longer layer."""
    data = original.data if isinstance(original, MultichannelSignal) else np.atleast_2d(original)
    synths = dictionary.synthesize_layers(rep)
    return _Aliasing(data, dictionary).evaluate(synths)


def solve(signal, dictionary: Dictionary, config: SolverConfig | None = None):
    """Run the solver. Returns ``(SparseRepresentation, SolverTrace)``."""
    config = config or SolverConfig()
    x = signal.data if isinstance(signal, MultichannelSignal) else np.atleast_2d(np.asarray(signal, float))
    if x.shape[-1] != dictionary.signal_length:
        raise DimensionError(f"signal length {x.shape[-1]} does not match dictionary "
                             f"length {dictionary.signal_length}")
    workers = config.workers
    step = config.resolved_step(dictionary)
    alpha0 = default_alpha0(x, dictionary, workers) if config.alpha0 is None else config.alpha0
    lam = config.alias_weight
    layers = dictionary.layers
    n_iter = config.iterations
    tail_start = ANNEAL_FRACTION * n_iter

    X = [np.zeros(dictionary.layer_shape(i, x.shape[0])) for i in range(len(layers))]
    synths = [np.zeros_like(x) for _ in layers]
    residual = x.copy()
    alias = _Aliasing(x, dictionary, workers) if lam > 0 else None
    alias_value = alias.evaluate(synths) if alias else 0.0

    trace = SolverTrace(np.zeros(n_iter), np.zeros(n_iter), np.zeros(n_iter), np.zeros(n_iter))
    # overflow is reported as DivergenceError below rather than as numpy warnings
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(n_iter):
            a = alpha_at(i, config, alpha0)
            use_alias = alias is not None and i < tail_start
            alias_grads = alias.gradient() if use_alias else None
            for j, spec in enumerate(layers):
                grad = -2.0 * mdct_analyze(residual, spec, workers)
                if use_alias:
                    grad = grad + lam * alias_grads[j]
                X[j] = shrink(X[j] - step * grad, step * a, config.group_sparsity)
                synths[j] = mdct_synthesize(X[j], spec, workers)
            residual = x - sum(synths)
            rec_rms = float(np.sqrt(np.mean(residual * residual))) if residual.size else 0.0
            if alias is not None:
                alias_value = alias.evaluate(synths)
            l1 = float(sum(np.abs(c).sum() for c in X))
            if not (np.isfinite(rec_rms) and np.isfinite(alias_value) and np.isfinite(l1)):
                raise DivergenceError(f"non-finite loss at iteration {i}", iteration=i)
            trace.rec_rms[i], trace.l1[i], trace.alias[i], trace.alpha[i] = rec_rms, l1, alias_value, a
            if i % 250 == 0:
                log.debug("iter %d rec_rms=%.3e l1=%.4g alias=%.3e alpha=%.3e", i, rec_rms, l1, alias_value, a)
    return SparseRepresentation(X), trace
