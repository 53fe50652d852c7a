import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from sparse_upmix import (FoaComplexBin, FoaRealBin, PlaneWaveEstimate, ValidationError, encode_estimate_foa,
                          extract_harpex, extract_mdct)
from sparse_upmix.planewave import azimuth_elevation, harpex_rpq

from conftest import SQRT2, angle_between, random_unit

S = 2 ** -0.5


def reconstruct(est):
    return encode_estimate_foa(est).as_array()


# -- real MDCT estimator ---------------------------------------------------------


def test_zero_bin():
    e = extract_mdct(FoaRealBin(0.0, 0.0, 0.0, 0.0))
    assert e.amp_directional == 0 and e.amp_omni == 0
    assert not e.has_direction


def test_positive_w_example():
    e = extract_mdct(FoaRealBin(SQRT2, 1.0, 0.0, 0.0))
    np.testing.assert_allclose(e.direction, [1, 0, 0], atol=1e-15)
    assert e.amp_directional == pytest.approx(1.0, abs=1e-15)
    assert e.amp_omni == pytest.approx(1.0, abs=1e-15)


def test_negative_w_keeps_direction():
    e = extract_mdct(FoaRealBin(-SQRT2, -1.0, 0.0, 0.0))
    np.testing.assert_allclose(e.direction, [1, 0, 0], atol=1e-15)
    assert e.amp_directional == pytest.approx(-1.0, abs=1e-15)
    assert e.amp_omni == pytest.approx(-1.0, abs=1e-15)
    np.testing.assert_allclose(reconstruct(e), [-SQRT2, -1, 0, 0], atol=1e-15)


def test_omni_only_routing():
    e = extract_mdct(FoaRealBin(0.3, 0.0, 0.0, 0.0))
    assert not e.has_direction
    assert e.amp_directional == 0
    assert e.amp_omni == pytest.approx(SQRT2 * 0.3)


def test_sign_of_zero_w_is_positive():
    e = extract_mdct(FoaRealBin(0.0, 0.0, -2.0, 0.0))
    np.testing.assert_allclose(e.direction, [0, -1, 0])
    assert e.amp_directional == 2.0


def test_nan_rejected():
    with pytest.raises(ValidationError):
        extract_mdct(FoaRealBin(np.nan, 0, 0, 0))


def test_encode_examples():
    np.testing.assert_allclose(
        reconstruct(PlaneWaveEstimate(np.zeros(3), np.float64(0.0), np.float64(SQRT2))), [1, 0, 0, 0], atol=1e-15)
    np.testing.assert_allclose(
        reconstruct(PlaneWaveEstimate(np.array([0, 0, 1.0]), np.float64(1.0), np.float64(0.0))),
        [S, 0, 0, 1], atol=1e-15)


def test_reconstruction_identity_bulk(rng):
    bins = rng.standard_normal((10000, 4)) * rng.lognormal(0, 2, (10000, 1))
    e = extract_mdct(FoaRealBin.from_array(bins))
    scale = np.abs(bins).max(axis=1, keepdims=True)
    assert np.max(np.abs(reconstruct(e) - bins) / scale) <= 1e-12
    norms = np.linalg.norm(e.direction, axis=1)
    assert np.max(np.abs(norms - 1)) <= 1e-12


def test_extract_encode_round_trip(rng):
    n = 1000
    d = random_unit(rng, n)
    a1 = rng.uniform(0.01, 3, n)  # non-negative a1: the canonical sign branch
    a2 = rng.standard_normal(n)
    est = PlaneWaveEstimate(d, a1, a2)
    back = extract_mdct(encode_estimate_foa(est))
    w = (a1 + a2) * S
    # where w < 0 the estimator folds the sign into the direction; compare the canonical form
    flip = np.where(w < 0, -1.0, 1.0)
    np.testing.assert_allclose(back.direction, flip[:, None] * d, atol=1e-12)
    np.testing.assert_allclose(back.amp_directional, flip * a1, atol=1e-12)
    np.testing.assert_allclose(back.amp_omni, SQRT2 * w - flip * a1, atol=1e-12)
    ok = w >= 0
    np.testing.assert_allclose(back.amp_omni[ok], a2[ok], atol=1e-12)


def test_rotation_equivariance(rng):
    R = Rotation.random(random_state=3).as_matrix()
    bins = rng.standard_normal((500, 4))
    rot = bins.copy()
    rot[:, 1:] = bins[:, 1:] @ R.T
    e0 = extract_mdct(FoaRealBin.from_array(bins))
    e1 = extract_mdct(FoaRealBin.from_array(rot))
    np.testing.assert_allclose(e1.direction, e0.direction @ R.T, atol=1e-12)
    np.testing.assert_allclose(e1.amp_directional, e0.amp_directional, atol=1e-12)
    np.testing.assert_allclose(e1.amp_omni, e0.amp_omni, atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=4, max_size=4), st.floats(1e-3, 1e3))
def test_scale_equivariance(vals, c):
    b = np.array(vals)
    e0 = extract_mdct(FoaRealBin.from_array(b))
    e1 = extract_mdct(FoaRealBin.from_array(c * b))
    tol = 1e-12 * max(1.0, c) * max(1.0, np.abs(b).max())
    assert abs(e1.amp_directional - c * e0.amp_directional) <= tol
    assert abs(e1.amp_omni - c * e0.amp_omni) <= tol
    np.testing.assert_allclose(e1.direction, e0.direction, atol=1e-12)


def test_azimuth_elevation():
    az, el = azimuth_elevation(np.array([[0, 1.0, 0], [0, 0, 1.0], [0, 0, 0]]))
    assert az[0] == pytest.approx(90) and el[1] == pytest.approx(90)
    assert np.isnan(az[2]) and np.isnan(el[2])


# -- HARPEX -----------------------------------------------------------------------


def two_wave_bins(rng, n, min_sep_deg=5.0):
    d1 = random_unit(rng, n)
    d2 = random_unit(rng, n)
    while True:
        bad = angle_between(d1, d2) <= np.radians(min_sep_deg)
        if not bad.any():
            break
        d2[bad] = random_unit(rng, int(bad.sum()))
    a1 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    a2 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    u = lambda d: np.concatenate([np.full((n, 1), S), d], axis=1)
    return a1[:, None] * u(d1) + a2[:, None] * u(d2), d1, d2, a1, a2


def test_harpex_invariants_example():
    v = np.array([S * (1 + 1j), 1, 1j, 0])
    r, p, q = harpex_rpq(v)
    assert (r, p, q) == pytest.approx((-1, 0, 0), abs=1e-15)


def test_harpex_worked_example():
    e = extract_harpex(FoaComplexBin(S * (1 + 1j), 1.0, 1j, 0.0))
    assert e.valid and not e.degenerate
    dirs = {tuple(np.round(e.direction_1, 12)), tuple(np.round(e.direction_2, 12))}
    assert dirs == {(1.0, 0.0, 0.0), (0.0, 1.0, 0.0)}
    amps = {tuple(np.round([e.amp_1.real, e.amp_1.imag], 12)), tuple(np.round([e.amp_2.real, e.amp_2.imag], 12))}
    assert amps == {(1.0, 0.0), (0.0, 1.0)}
    # the amplitude belongs to its own direction
    for d, a in ((e.direction_1, e.amp_1), (e.direction_2, e.amp_2)):
        assert (abs(a - 1) < 1e-12) == (abs(d[0] - 1) < 1e-12)


def test_harpex_negative_discriminant_falls_back():
    v = np.array([0, 1, 1j, 0])
    e = extract_harpex(FoaComplexBin.from_array(v))
    assert (e.p, e.q, e.r) == pytest.approx((1, 1, 0))
    assert e.r ** 2 - e.p * e.q < 0
    assert not e.valid and e.uses_fallback
    rec = e.reconstruct()
    assert abs(np.sum(np.abs(rec) ** 2) - np.sum(np.abs(v) ** 2)) <= 1e-9
    np.testing.assert_allclose(rec, v, atol=1e-12)


def test_harpex_zero_bin():
    e = extract_harpex(FoaComplexBin(0j, 0j, 0j, 0j))
    assert e.valid and not e.uses_fallback
    assert e.amp_1 == 0 and e.amp_2 == 0
    assert not e.direction_1.any() and not e.direction_2.any()


def test_harpex_single_wave_is_degenerate_but_recovered():
    d = np.array([0.0, 0.6, 0.8])
    a = 0.3 - 1.1j
    v = a * np.concatenate([[S], d])
    e = extract_harpex(FoaComplexBin.from_array(v))
    assert e.uses_fallback
    np.testing.assert_allclose(e.fallback_real.direction * np.sign(e.fallback_real.amp_directional), d, atol=1e-12)
    np.testing.assert_allclose(e.reconstruct(), v, atol=1e-12)


def test_harpex_closed_form_oracle(rng):
    # the textbook c_{1,2}, s_{1,2} expressions, evaluated literally
    v, *_ = two_wave_bins(rng, 500)
    e = extract_harpex(FoaComplexBin.from_array(v))
    r, p, q = e.r, e.p, e.q
    root = np.sqrt(r * r - p * q)
    den = (q - p) ** 2 + 4 * r * r
    c_plus = np.sqrt((2 * r * r - p * q + p * p + 2 * r * root) / den)
    c_minus = np.sqrt((2 * r * r - p * q + p * p - 2 * r * root) / den)
    s_plus = ((q - p) * c_plus + p / c_plus) / (2 * r)
    s_minus = ((q - p) * c_minus + p / c_minus) / (2 * r)
    well = (c_plus > 1e-3) & (c_minus > 1e-3) & (np.abs(r) > 1e-3)
    np.testing.assert_allclose(e.c1, c_plus, atol=1e-9)
    np.testing.assert_allclose(e.c2, c_minus, atol=1e-9)
    np.testing.assert_allclose(e.s1[well], s_plus[well], atol=1e-8)
    np.testing.assert_allclose(e.s2[well], s_minus[well], atol=1e-8)


def test_harpex_two_wave_oracle(rng):
    v, d1, d2, a1, a2 = two_wave_bins(rng, 1000)
    e = extract_harpex(FoaComplexBin.from_array(v))
    ok = e.valid & ~e.degenerate
    assert ok.mean() > 0.99
    err_same = np.maximum(angle_between(e.direction_1, d1), angle_between(e.direction_2, d2))
    err_swap = np.maximum(angle_between(e.direction_1, d2), angle_between(e.direction_2, d1))
    assert np.max(np.minimum(err_same, err_swap)[ok]) <= 1e-6
    res = np.linalg.norm(e.reconstruct() - v, axis=1) / np.linalg.norm(v, axis=1)
    assert res[ok].max() <= 1e-9


def test_harpex_nan_rejected():
    with pytest.raises(ValidationError):
        extract_harpex(FoaComplexBin(np.nan, 0, 0, 0))


def test_discriminant_minor_form_matches_invariants(rng):
    from sparse_upmix.planewave import harpex_discriminant
    v = rng.standard_normal((200, 4)) + 1j * rng.standard_normal((200, 4))
    r, p, q = harpex_rpq(v)
    np.testing.assert_allclose(harpex_discriminant(v), r * r - p * q, atol=1e-10)


def test_harpex_nearly_in_phase_waves(rng):
    # two waves whose amplitudes differ in phase by ~1e-5 rad: a near-double root
    n = 200
    v, d1, d2, a1, _ = two_wave_bins(rng, n, min_sep_deg=20)
    a2 = a1 * rng.uniform(0.5, 2, n) * np.exp(1j * rng.choice([-1, 1], n) * 1e-5)
    u = lambda d: np.concatenate([np.full((n, 1), S), d], axis=1)
    v = a1[:, None] * u(d1) + a2[:, None] * u(d2)
    e = extract_harpex(FoaComplexBin.from_array(v))
    ok = e.valid & ~e.degenerate
    res = np.linalg.norm(e.reconstruct() - v, axis=1) / np.linalg.norm(v, axis=1)
    assert res[ok].max() <= 1e-9
