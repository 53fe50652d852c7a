import numpy as np
import pytest
from scipy.special import lpmv

from sparse_upmix import ValidationError, sh_encode, sh_omni
from sparse_upmix.spherical import (acn, fejer_grid, n_channels, reduced_legendre, sh_matrix, sn3d_norm,
                                    sn3d_to_n3d)

from conftest import random_unit


def scipy_sh(order, v):
    """Independent oracle: scipy's associated Legendre (CS phase removed) and explicit angles."""
    theta = np.arccos(np.clip(v[:, 2], -1, 1))
    phi = np.arctan2(v[:, 1], v[:, 0])
    out = np.empty((len(v), n_channels(order)))
    for l in range(order + 1):
        for m in range(-l, l + 1):
            am = abs(m)
            trig = np.cos(am * phi) if m >= 0 else np.sin(am * phi)
            out[:, acn(l, m)] = sn3d_norm(l, m) * (-1) ** am * lpmv(am, l, np.cos(theta)) * trig
    return out


def test_plus_z_first_order():
    np.testing.assert_array_equal(sh_encode([0, 0, 1], 1), [1, 0, 1, 0])


def test_plus_x_order_seven():
    y = sh_encode([1, 0, 0], 7)
    assert y.shape == (64,)
    assert (y[0], y[1], y[2], y[3]) == (1, 0, 0, 1)


def test_first_order_block_exact(rng):
    v = random_unit(rng, 200)
    y = sh_matrix(v, 3)
    np.testing.assert_array_equal(y[:, 0], 1.0)
    np.testing.assert_array_equal(y[:, 1], v[:, 1])
    np.testing.assert_array_equal(y[:, 2], v[:, 2])
    np.testing.assert_array_equal(y[:, 3], v[:, 0])


def test_matches_scipy_oracle(rng):
    v = random_unit(rng, 300)
    np.testing.assert_allclose(sh_matrix(v, 7), scipy_sh(7, v), atol=1e-12)


def test_closed_forms_second_order(rng):
    v = random_unit(rng, 50)
    x, y, z = v.T
    s3 = np.sqrt(3.0)
    Y = sh_matrix(v, 2)
    np.testing.assert_allclose(Y[:, 4], s3 * x * y, atol=1e-14)
    np.testing.assert_allclose(Y[:, 5], s3 * y * z, atol=1e-14)
    np.testing.assert_allclose(Y[:, 6], 0.5 * (3 * z * z - 1), atol=1e-14)
    np.testing.assert_allclose(Y[:, 7], s3 * x * z, atol=1e-14)
    np.testing.assert_allclose(Y[:, 8], 0.5 * s3 * (x * x - y * y), atol=1e-14)


@pytest.mark.parametrize("z", [1.0, -1.0])
def test_poles_finite_and_closed_form(z):
    leg = reduced_legendre(7, np.array(z))
    for l in range(8):
        # P_l(+-1) = (+-1)^l; reduced values finite for every m
        assert leg[(l, 0)] == pytest.approx(z ** l, abs=1e-12)
        for m in range(l + 1):
            assert np.isfinite(leg[(l, m)])
    y = sh_encode([0, 0, z], 7)
    for l in range(8):
        for m in range(-l, l + 1):
            expect = z ** l if m == 0 else 0.0
            assert y[acn(l, m)] == pytest.approx(expect, abs=1e-12)


def test_n3d_gram_identity():
    dirs, w = fejer_grid(64, 32)
    assert w.sum() == pytest.approx(4 * np.pi, rel=1e-13)
    Y = sh_matrix(dirs, 7) * sn3d_to_n3d(7)
    gram = (Y * w[:, None]).T @ Y / (4 * np.pi)
    assert np.abs(gram - np.eye(64)).max() <= 1e-6


def test_rotation_consistency_first_order(rng):
    from scipy.spatial.transform import Rotation
    R = Rotation.random(random_state=7).as_matrix()
    v = random_unit(rng, 20)
    a = sh_matrix(v @ R.T, 1)[:, [3, 1, 2]]  # (x, y, z) components
    b = (sh_matrix(v, 1)[:, [3, 1, 2]]) @ R.T
    np.testing.assert_allclose(a, b, atol=1e-14)


def test_omni():
    np.testing.assert_array_equal(sh_omni(1), [1, 0, 0, 0])
    o = sh_omni(7)
    assert o.shape == (64,) and o[0] == 1 and not o[1:].any()


def test_omni_plus_directional_matches_converted_bin(rng):
    from sparse_upmix.planewave import FoaRealBin, encode_estimate_foa, extract_mdct
    b = FoaRealBin(*rng.standard_normal(4))
    est = extract_mdct(b)
    hoa = est.amp_omni * sh_omni(3) + est.amp_directional * sh_encode(est.direction, 3)
    w, x, y, z = encode_estimate_foa(est).as_array()
    # ACN/SN3D first-order block equals the bin with sqrt(2) W
    np.testing.assert_allclose(hoa[:4], [np.sqrt(2) * w, y, z, x], atol=1e-14)


def test_rejects_non_unit():
    with pytest.raises(ValidationError):
        sh_encode([1, 1, 0], 2)
    with pytest.raises(ValidationError):
        sh_encode([1, 0, 0], 8)
