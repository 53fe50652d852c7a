"""Per-bin plane-wave extraction from first-order bins.

Two estimators:

* :func:`extract_mdct` splits a real bin (w, x, y, z) into one plane wave and
  an omnidirectional part, with the sign of ``w`` folded into the direction
  so the directional amplitude can be negative.
* :func:`extract_harpex` splits a complex bin into two plane waves with
  complex amplitudes (the FFT-domain baseline).

Both functions are vectorised: every field may be a scalar or an array of a
common shape. W carries pressure / sqrt(2) throughout this module.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

SQRT2 = np.sqrt(2.0)
INV_SQRT2 = 1.0 / SQRT2
DEGENERATE_ANGLE = 1e-6


@dataclass
class FoaRealBin:
    w: np.ndarray
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray

    @classmethod
    def from_array(cls, arr) -> "FoaRealBin":
        """``arr[..., 4]`` in (W, X, Y, Z) order."""
        arr = np.asarray(arr, dtype=np.float64)
        return cls(arr[..., 0], arr[..., 1], arr[..., 2], arr[..., 3])

    def as_array(self) -> np.ndarray:
        return np.stack(np.broadcast_arrays(*(np.asarray(v, float) for v in (self.w, self.x, self.y, self.z))),
                        axis=-1)


@dataclass
class FoaComplexBin:
    w: np.ndarray
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray

    @classmethod
    def from_array(cls, arr) -> "FoaComplexBin":
        arr = np.asarray(arr, dtype=np.complex128)
        return cls(arr[..., 0], arr[..., 1], arr[..., 2], arr[..., 3])

    def as_array(self) -> np.ndarray:
        return np.stack(np.broadcast_arrays(*(np.asarray(v, complex) for v in (self.w, self.x, self.y, self.z))),
                        axis=-1)


@dataclass
class PlaneWaveEstimate:
    """``direction[..., 3]`` is a unit vector, or all zeros (null) where
    ``amp_directional`` is zero."""

    direction: np.ndarray
    amp_directional: np.ndarray
    amp_omni: np.ndarray

    @property
    def has_direction(self) -> np.ndarray:
        return np.any(self.direction != 0, axis=-1)


def extract_mdct(bin_: FoaRealBin) -> PlaneWaveEstimate:
    b = bin_.as_array()
    if np.isnan(b).any():
        raise ValidationError("NaN in real FOA bin")
    w, xyz = b[..., 0], b[..., 1:]
    sign = np.where(w < 0, -1.0, 1.0)
    a1 = np.sqrt(np.sum(xyz * xyz, axis=-1))
    with np.errstate(divide="ignore", invalid="ignore"):
        direction = np.where((a1 > 0)[..., None], sign[..., None] * xyz / a1[..., None], 0.0)
    amp_dir = sign * a1
    amp_omni = SQRT2 * w - amp_dir
    return PlaneWaveEstimate(direction, amp_dir, amp_omni)


def encode_estimate_foa(est: PlaneWaveEstimate) -> FoaRealBin:
    """Forward model: ``a1 * [1/sqrt2; direction] + a2 * [1/sqrt2; 0, 0, 0]``."""
    a1 = np.asarray(est.amp_directional, float)
    a2 = np.asarray(est.amp_omni, float)
    d = np.asarray(est.direction, float)
    w = (a1 + a2) * INV_SQRT2
    xyz = a1[..., None] * d
    return FoaRealBin(w, xyz[..., 0], xyz[..., 1], xyz[..., 2])


@dataclass
class HarpexEstimate:
    """Two-wave decomposition of complex bins.

    Where ``uses_fallback`` is set (``r^2 - pq < 0`` or degenerate geometry)
    the two-wave fields are zero and the bin is described by ``fallback_real``
    and ``fallback_imag``, one-wave estimates of its real and imaginary parts.
    """

    direction_1: np.ndarray
    direction_2: np.ndarray
    amp_1: np.ndarray
    amp_2: np.ndarray
    r: np.ndarray
    p: np.ndarray
    q: np.ndarray
    c1: np.ndarray
    c2: np.ndarray
    s1: np.ndarray
    s2: np.ndarray
    valid: np.ndarray
    degenerate: np.ndarray
    fallback_real: PlaneWaveEstimate
    fallback_imag: PlaneWaveEstimate

    @property
    def uses_fallback(self) -> np.ndarray:
        return ~self.valid | self.degenerate

    def reconstruct(self) -> np.ndarray:
        """Complex (W, X, Y, Z) bins implied by the estimate, ``[..., 4]``."""
        two = (self.amp_1[..., None] * _wave_vector(self.direction_1)
               + self.amp_2[..., None] * _wave_vector(self.direction_2))
        fr = encode_estimate_foa(self.fallback_real).as_array()
        fi = encode_estimate_foa(self.fallback_imag).as_array()
        return np.where(self.uses_fallback[..., None], fr + 1j * fi, two)


def _wave_vector(direction) -> np.ndarray:
    d = np.asarray(direction, float)
    return np.concatenate([np.full(d.shape[:-1] + (1,), INV_SQRT2), d], axis=-1)


def harpex_rpq(v: np.ndarray):
    """Bilinear invariants of a complex bin ``v[..., 4]``: (r, p, q)."""
    vr, vi = v.real, v.imag
    r = -2 * vr[..., 0] * vi[..., 0] + np.sum(vr[..., 1:] * vi[..., 1:], axis=-1)
    p = -2 * vr[..., 0] ** 2 + np.sum(vr[..., 1:] ** 2, axis=-1)
    q = -2 * vi[..., 0] ** 2 + np.sum(vi[..., 1:] ** 2, axis=-1)
    return r, p, q


def harpex_discriminant(v: np.ndarray) -> np.ndarray:
    """``r^2 - pq`` via 2x2 minors of (Re v, Im v), which avoids cancellation
    when the two waves are nearly in phase."""
    vr, vi = v.real, v.imag
    m = vr[..., :, None] * vi[..., None, :] - vr[..., None, :] * vi[..., :, None]
    w_terms = m[..., 0, 1] ** 2 + m[..., 0, 2] ** 2 + m[..., 0, 3] ** 2
    xyz_terms = m[..., 1, 2] ** 2 + m[..., 1, 3] ** 2 + m[..., 2, 3] ** 2
    return 2.0 * w_terms - xyz_terms


def _unit_direction(u: np.ndarray):
    """Direction of a plane-wave vector ``u[..., 4]`` (sign fixed by W > 0)."""
    xyz = u[..., 1:]
    norm = np.sqrt(np.sum(xyz * xyz, axis=-1))
    sign = np.where(u[..., 0] < 0, -1.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        d = np.where((norm > 0)[..., None], sign[..., None] * xyz / norm[..., None], 0.0)
    return d, norm


def extract_harpex(bin_: FoaComplexBin) -> HarpexEstimate:
    v = bin_.as_array()
    if np.isnan(v.real).any() or np.isnan(v.imag).any():
        raise ValidationError("NaN in complex FOA bin")
    vr, vi = v.real, v.imag
    r, p, q = harpex_rpq(v)
    scale = np.sum(vr * vr + vi * vi, axis=-1)
    zero = scale == 0
    tiny = 1e-12 * scale * scale
    disc = harpex_discriminant(v)
    valid = (disc >= -tiny) | zero
    denom = (q - p) ** 2 + 4 * r * r
    degenerate = (denom <= tiny) & ~zero

    # The real combinations cos(phi) v_i - sin(phi) v_r that are plane-wave
    # vectors solve q cos^2 - 2 r cos sin + p sin^2 = 0, i.e.
    # A cos(2 phi + delta) = -(p + q) / 2 with A = sqrt(denom) / 2, so
    # 2 phi = -delta +- beta where tan(beta) = 2 sqrt(r^2 - pq) / -(p + q).
    delta = np.arctan2(r, 0.5 * (q - p))
    beta = np.arctan2(2.0 * np.sqrt(np.maximum(disc, 0.0)), -(p + q))
    roots = []
    for sgn in (1.0, -1.0):
        phi = 0.5 * (-delta + sgn * beta)
        c, s = np.cos(phi), np.sin(phi)
        flip = np.where(c < 0, -1.0, 1.0)
        roots.append((c * flip, s * flip))
    (ca, sa), (cb, sb) = roots
    # label branches like the +/- of the closed-form c^2 (the + branch has the larger c^2 when r >= 0)
    swap = np.where(r >= 0, ca * ca < cb * cb, ca * ca > cb * cb)
    c1, c2 = np.where(swap, cb, ca), np.where(swap, ca, cb)
    s1, s2 = np.where(swap, sb, sa), np.where(swap, sa, sb)

    u1 = c1[..., None] * vi - s1[..., None] * vr
    u2 = c2[..., None] * vi - s2[..., None] * vr
    d1, n1 = _unit_direction(u1)
    d2, n2 = _unit_direction(u2)
    cos12 = np.abs(np.sum(d1 * d2, axis=-1))
    geom_bad = (n1 <= 1e-12 * np.sqrt(scale)) | (n2 <= 1e-12 * np.sqrt(scale)) | \
        (cos12 >= np.cos(DEGENERATE_ANGLE))
    degenerate = degenerate | (geom_bad & valid & ~zero)

    # amplitudes from the W row and the spatial row with the largest |d1_j - d2_j|
    diff = d1 - d2
    j = np.argmax(np.abs(diff), axis=-1)[..., None]
    dj = np.take_along_axis(diff, j, axis=-1)[..., 0]
    d2j = np.take_along_axis(d2, j, axis=-1)[..., 0]
    vj = np.take_along_axis(v[..., 1:], j, axis=-1)[..., 0]
    w = v[..., 0]
    ok = valid & ~degenerate & ~zero
    with np.errstate(divide="ignore", invalid="ignore"):
        a1 = np.where(ok, (vj - SQRT2 * w * d2j) / np.where(ok, dj, 1.0), 0.0)
    a2 = np.where(ok, SQRT2 * w - a1, 0.0)
    d1 = np.where(ok[..., None], d1, 0.0)
    d2 = np.where(ok[..., None], d2, 0.0)

    return HarpexEstimate(
        direction_1=d1, direction_2=d2, amp_1=a1, amp_2=a2,
        r=r, p=p, q=q, c1=c1, c2=c2, s1=s1, s2=s2,
        valid=np.asarray(valid), degenerate=np.asarray(degenerate),
        fallback_real=extract_mdct(FoaRealBin.from_array(vr)),
        fallback_imag=extract_mdct(FoaRealBin.from_array(vi)),
    )


def azimuth_elevation(direction) -> tuple:
    """Degrees; NaN for null directions."""
    d = np.asarray(direction, float)
    null = ~np.any(d != 0, axis=-1)
    az = np.degrees(np.arctan2(d[..., 1], d[..., 0]))
    el = np.degrees(np.arctan2(d[..., 2], np.hypot(d[..., 0], d[..., 1])))
    return np.where(null, np.nan, az), np.where(null, np.nan, el)
