"""Directional energy maps of ambisonic signals.

A plane-wave-decomposition beam is steered to every cell of an
azimuth x elevation grid; the cell value is the mean beam power over a
sample window. Beam weights are ``(2l + 1) * Y_n(Omega) / (L + 1)^2`` applied
to SN3D channels, which gives unit gain toward a unit plane wave.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio_io import MultichannelSignal
from .errors import DimensionError, ValidationError
from .spherical import degree_of_channel, direction_from_angles, sh_matrix

DEFAULT_GRID = (72, 36)


def grid_angles(n_az: int, n_el: int):
    """Cell-centre angles in degrees: azimuth from -180 (step 360/n_az), elevation cell centres."""
    az = -180.0 + 360.0 * np.arange(n_az) / n_az
    el = -90.0 + 180.0 * (np.arange(n_el) + 0.5) / n_el
    return az, el


def order_of(n_ch: int) -> int:
    order = int(round(np.sqrt(n_ch))) - 1
    if (order + 1) ** 2 != n_ch:
        raise DimensionError(f"{n_ch} channels is not a full ambisonic order")
    return order


def beam_weights(directions, order: int) -> np.ndarray:
    """``[..., (order+1)^2]`` plane-wave-decomposition weights for SN3D input."""
    l = degree_of_channel(order)
    return sh_matrix(directions, order, check_unit=False) * (2 * l + 1) / (order + 1) ** 2


@dataclass
class EnergyMap:
    values: np.ndarray  # (n_az, n_el)
    azimuths: np.ndarray
    elevations: np.ndarray
    window: tuple = (0, 0)

    @property
    def shape(self):
        return self.values.shape

    def argmax(self) -> tuple:
        i, j = np.unravel_index(np.argmax(self.values), self.values.shape)
        return int(i), int(j)

    def argmax_angles(self) -> tuple:
        i, j = self.argmax()
        return float(self.azimuths[i]), float(self.elevations[j])

    def cells_containing(self, azimuth: float, elevation: float) -> set:
        """Indices ``(i, j)`` of every cell whose closed extent contains the point."""
        d_az = 360.0 / len(self.azimuths)
        d_el = 180.0 / len(self.elevations)
        tol = 1e-9
        rel = (azimuth - self.azimuths + 180.0) % 360.0 - 180.0
        az_hits = np.nonzero(np.abs(rel) <= d_az / 2 + tol)[0]
        el_hits = np.nonzero(np.abs(elevation - self.elevations) <= d_el / 2 + tol)[0]
        return {(int(i), int(j)) for i in az_hits for j in el_hits}

    def peak_to_mean(self) -> float:
        """Peak over the solid-angle-weighted mean (cos(elevation) weights)."""
        w = np.cos(np.radians(self.elevations))[None, :]
        mean = float(np.sum(self.values * w) / (np.sum(w) * self.values.shape[0]))
        return float(self.values.max() / mean) if mean > 0 else float("nan")


def energy_map(hoa: MultichannelSignal, grid: tuple = DEFAULT_GRID, window: tuple | None = None) -> EnergyMap:
    """Mean PWD beam power per grid cell over ``window = (start, stop)`` samples."""
    order = order_of(hoa.n_channels)
    n_az, n_el = grid
    if n_az < 1 or n_el < 1:
        raise DimensionError(f"grid must be positive, got {grid}")
    start, stop = (0, hoa.n_samples) if window is None else window
    if not 0 <= start <= stop <= hoa.n_samples:
        raise DimensionError(f"window {window} outside signal of {hoa.n_samples} samples")
    az, el = grid_angles(n_az, n_el)
    dirs = direction_from_angles(az[:, None], el[None, :])
    weights = beam_weights(dirs, order)  # (n_az, n_el, C)
    seg = hoa.data[:, start:stop]
    if seg.shape[1] == 0:
        values = np.zeros((n_az, n_el))
    else:
        cov = seg @ seg.T / seg.shape[1]
        values = np.einsum("abi,ij,abj->ab", weights, cov, weights)
        values = np.maximum(values, 0.0)
    return EnergyMap(values, az, el, (start, stop))


def write_map(emap: EnergyMap, path, fmt: str | None = None) -> None:
    """Write as CSV (header of azimuths, one row per elevation) or binary PGM (P5)."""
    path = Path(path)
    fmt = (fmt or path.suffix.lstrip(".") or "csv").lower()
    if not np.all(np.isfinite(emap.values)) or np.any(emap.values < 0):
        raise ValidationError("energy map values must be finite and non-negative")
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["elevation\\azimuth"] + [repr(float(a)) for a in emap.azimuths])
            for j, e in enumerate(emap.elevations):
                writer.writerow([repr(float(e))] + [repr(float(v)) for v in emap.values[:, j]])
    elif fmt == "pgm":
        peak = emap.values.max() if emap.values.size else 0.0
        scaled = np.zeros_like(emap.values) if peak <= 0 else emap.values / peak
        pixels = np.round(scaled * 255).astype(np.uint8).T[::-1]  # top row = highest elevation
        n_az, n_el = emap.values.shape
        with open(path, "wb") as fh:
            fh.write(f"P5\n{n_az} {n_el}\n255\n".encode("ascii"))
            fh.write(np.ascontiguousarray(pixels).tobytes())
    else:
        raise ValidationError(f"unknown map format {fmt!r}; use csv or pgm")


def read_map_csv(path) -> EnergyMap:
    with open(Path(path), newline="") as fh:
        rows = list(csv.reader(fh))
    az = np.array([float(v) for v in rows[0][1:]])
    el = np.array([float(r[0]) for r in rows[1:]])
    values = np.array([[float(v) for v in r[1:]] for r in rows[1:]]).T
    return EnergyMap(values.reshape(len(az), len(el)), az, el)
