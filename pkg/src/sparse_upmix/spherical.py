"""Real spherical harmonics in ACN order with SN3D normalisation (AmbiX).

Evaluated in Cartesian form: ``P_l^m(cos theta) / sin(theta)^m`` comes from
the upward Legendre recurrence on ``z`` and ``sin(theta)^m cos(m phi)``,
``sin(theta)^m sin(m phi)`` are the real and imaginary parts of
``(x + i y)^m``. This keeps the first-order block exactly ``(y, z, x)`` and
avoids any division at the poles. No Condon-Shortley phase.
"""

from __future__ import annotations

from math import factorial

import numpy as np

from .errors import ValidationError

MAX_ORDER = 7


def n_channels(order: int) -> int:
    return (order + 1) ** 2


def acn(l: int, m: int) -> int:
    return l * l + l + m


def degree_of_channel(order: int) -> np.ndarray:
    """Degree ``l`` for each ACN channel up to ``order``."""
    return np.concatenate([np.full(2 * l + 1, l) for l in range(order + 1)])


def _check_order(order: int) -> None:
    if not 0 <= order <= MAX_ORDER:
        raise ValidationError(f"order must be in 0..{MAX_ORDER}, got {order}")


def sn3d_norm(l: int, m: int) -> float:
    m = abs(m)
    return np.sqrt((1.0 if m == 0 else 2.0) * factorial(l - m) / factorial(l + m))


def reduced_legendre(order: int, z) -> dict:
    """``{(l, m): P_l^m(z) / (1 - z^2)^(m/2)}`` for ``0 <= m <= l <= order``, without CS phase."""
    z = np.asarray(z, dtype=np.float64)
    out = {}
    pmm = np.ones_like(z)
    for m in range(order + 1):
        if m > 0:
            pmm = pmm * (2 * m - 1)
        out[(m, m)] = pmm
        if m + 1 <= order:
            out[(m + 1, m)] = (2 * m + 1) * z * pmm
        for l in range(m + 2, order + 1):
            out[(l, m)] = ((2 * l - 1) * z * out[(l - 1, m)] - (l + m - 1) * out[(l - 2, m)]) / (l - m)
    return out


def sh_matrix(directions, order: int, check_unit: bool = True) -> np.ndarray:
    """SN3D real SH of unit vectors ``directions[..., 3]``; returns ``[..., (order+1)^2]``."""
    _check_order(order)
    d = np.asarray(directions, dtype=np.float64)
    if d.shape[-1] != 3:
        raise ValidationError(f"directions must end in a 3-vector axis, got shape {d.shape}")
    if check_unit and d.size and np.max(np.abs(np.sum(d * d, axis=-1) - 1.0)) > 2e-9:
        raise ValidationError("direction vectors must have unit length")
    x, y, z = d[..., 0], d[..., 1], d[..., 2]
    legendre = reduced_legendre(order, z)
    xy = x + 1j * y
    powers = [np.ones_like(xy)]
    for _ in range(order):
        powers.append(powers[-1] * xy)
    out = np.empty(d.shape[:-1] + (n_channels(order),))
    for l in range(order + 1):
        for m in range(-l, l + 1):
            am = abs(m)
            trig = powers[am].real if m >= 0 else powers[am].imag
            out[..., acn(l, m)] = sn3d_norm(l, m) * legendre[(l, am)] * trig
    return out


def sh_encode(direction, order: int) -> np.ndarray:
    """Encoding gains of one plane wave from ``direction``."""
    return sh_matrix(direction, order)


def sh_omni(order: int) -> np.ndarray:
    _check_order(order)
    out = np.zeros(n_channels(order))
    out[0] = 1.0
    return out


def sn3d_to_n3d(order: int) -> np.ndarray:
    """Per-channel gains converting SN3D to N3D."""
    return np.sqrt(2.0 * degree_of_channel(order) + 1.0)


def direction_from_angles(azimuth_deg, elevation_deg) -> np.ndarray:
    az = np.radians(azimuth_deg)
    el = np.radians(elevation_deg)
    return np.stack(np.broadcast_arrays(np.cos(el) * np.cos(az), np.cos(el) * np.sin(az), np.sin(el)), axis=-1)


def fejer_grid(n_azimuth: int = 64, n_colatitude: int = 32):
    """Equiangular sphere grid with Fejer-type-1 solid-angle weights (sum 4 pi).

    Integrates products of spherical harmonics exactly up to total degree
    ``n_colatitude - 1`` (and azimuthal order below ``n_azimuth``).
    """
    theta = np.pi * (np.arange(n_colatitude) + 0.5) / n_colatitude
    k = np.arange(1, n_colatitude // 2 + 1)
    w_theta = (2.0 / n_colatitude) * (
        1 - 2 * np.sum(np.cos(2 * np.outer(theta, k)) / (4 * k * k - 1), axis=1))
    phi = 2 * np.pi * np.arange(n_azimuth) / n_azimuth
    T, P = np.meshgrid(theta, phi, indexing="ij")
    dirs = np.stack([np.sin(T) * np.cos(P), np.sin(T) * np.sin(P), np.cos(T)], axis=-1).reshape(-1, 3)
    weights = np.repeat(w_theta, n_azimuth) * (2 * np.pi / n_azimuth)
    return dirs, weights
