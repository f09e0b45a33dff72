import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from nbmimo.errors import ConfigurationError
from nbmimo.galois import gf_build
from nbmimo.mimo import (SnrSpec, complexify_vector, demodulate, draw_channel, levels_to_symbols,
                         modulate, noise_variance, pam_alphabet, rail_bits, realify, realify_vector,
                         symbols_to_levels, transmit)


def test_pam_levels_and_energy():
    a16 = pam_alphabet(16)
    assert np.array_equal(a16.levels, [-3, -1, 1, 3])
    assert a16.energy == 5.0
    assert a16.symbol_energy == 10.0
    assert a16.bits == 2
    assert np.array_equal(pam_alphabet(4).levels, [-1, 1])
    assert np.array_equal(pam_alphabet(64).levels, [-7, -5, -3, -1, 1, 3, 5, 7])
    assert pam_alphabet(256).symbol_energy == 170.0


@pytest.mark.parametrize("m", [0, 2, 8, 32, 9, 36])
def test_pam_rejects_bad_orders(m):
    with pytest.raises(ConfigurationError):
        pam_alphabet(m)


@pytest.mark.parametrize("m", [4, 16, 64, 256])
def test_gray_labels_adjacent_levels_differ_in_one_bit(m):
    lab = pam_alphabet(m).gray_labels
    flips = [bin(int(a ^ b)).count("1") for a, b in zip(lab[:-1], lab[1:])]
    assert flips == [1] * (len(lab) - 1)
    assert sorted(lab) == list(range(len(lab)))


def test_slice_nearest_level():
    a = pam_alphabet(16)
    x = np.array([-10.0, -2.1, -1.9, 0.1, 1.9, 2.1, 99.0])
    assert np.array_equal(a.levels[a.slice(x)], [-3, -3, -1, 1, 1, 3, 3])


def test_realify_example():
    h = np.array([[1 + 2j]])
    assert np.array_equal(realify(h), [[1, -2], [2, 1]])
    hc = np.array([[1 + 1j, 2 - 1j], [0.5j, 3]])
    assert np.array_equal(realify(hc)[:2, 2:], -hc.imag)


complex_mats = arrays(np.complex128, (3, 2),
                      elements=st.complex_numbers(max_magnitude=10, allow_nan=False,
                                                  allow_infinity=False))


@settings(max_examples=50, deadline=None)
@given(complex_mats, arrays(np.complex128, (2,), elements=st.complex_numbers(
    max_magnitude=10, allow_nan=False, allow_infinity=False)))
def test_realify_is_a_homomorphism(a, x):
    np.testing.assert_allclose(realify(a) @ realify_vector(x), realify_vector(a @ x), atol=1e-9)
    b = a.conj().T
    np.testing.assert_allclose(realify(a @ b), realify(a) @ realify(b), atol=1e-8)
    np.testing.assert_array_equal(complexify_vector(realify_vector(x)), x)


def test_channel_entry_variance():
    ch = draw_channel(64, 64, rng_seed=3, size=25)  # 102400 entries
    assert ch.entries.shape == (25, 64, 64)
    assert abs(np.var(ch.entries) - 1.0) < 0.05
    assert abs(np.mean(ch.entries.real**2) - 0.5) < 0.025


def test_channel_user_variances_scale_columns():
    var = np.array([0.5, 1.5, 1.0, 1.0])
    ch = draw_channel(200, 4, user_variances=var, rng_seed=1, size=200)
    col = np.mean(np.abs(ch.entries) ** 2, axis=(0, 1))
    np.testing.assert_allclose(col, var, rtol=0.05)


@pytest.mark.parametrize("var", [[1.0, 1.0, 1.0], [2.0, -1.0, 1.0, 2.0], [1.0, 1.0, 1.0, 2.0]])
def test_channel_rejects_bad_user_variances(var):
    with pytest.raises(ConfigurationError):
        draw_channel(4, 4, user_variances=var)


def test_modulate_round_trip_and_energy():
    f = gf_build(4)
    sym = np.arange(16)
    pts = modulate(f, sym, 16)
    assert np.array_equal(demodulate(f, pts, 16), sym)
    assert np.mean(pts.real**2 + pts.imag**2) == 10.0
    assert len(set(pts.tolist())) == 16


def test_symbol_upper_bits_drive_in_phase_rail():
    f = gf_build(4)
    i_idx, q_idx = symbols_to_levels(f, np.array([0b1000, 0b0001]), 16)
    lab = pam_alphabet(16).gray_labels
    assert lab[i_idx[0]] == 0b10 and lab[q_idx[0]] == 0
    assert lab[i_idx[1]] == 0 and lab[q_idx[1]] == 0b01
    assert np.array_equal(levels_to_symbols(f, i_idx, q_idx, 16), [0b1000, 0b0001])


def test_constellation_is_gray():
    f = gf_build(4)
    pts = modulate(f, np.arange(16), 16)
    for a in range(16):
        for b in range(16):
            if abs(abs(pts[a] - pts[b]) - 2.0) < 1e-12:
                assert bin(a ^ b).count("1") == 1


def test_rail_bits_lsb_first():
    a = pam_alphabet(16)
    bits = rail_bits(a, np.arange(4))
    lab = a.gray_labels
    assert np.array_equal(bits[:, 0] + 2 * bits[:, 1], lab)


def test_modulate_requires_matching_field():
    with pytest.raises(ConfigurationError):
        modulate(gf_build(3), np.arange(4), 16)


def test_snr_spec_rejects_non_finite():
    with pytest.raises(ConfigurationError):
        SnrSpec(float("inf"), 10.0)
    with pytest.raises(ConfigurationError):
        SnrSpec(float("nan"), 10.0)


def test_realized_snr_matches_request():
    alpha = pam_alphabet(16)
    k, n = 8, 8
    rng = np.random.default_rng(0)
    h = realify(draw_channel(n, k, rng_seed=1, size=2000).entries)
    x = alpha.levels[rng.integers(0, 4, (2000, 2 * k))]
    sys = transmit(h, x, SnrSpec(12.0, alpha.symbol_energy), rng_seed=2)
    clean = np.einsum("bij,bj->bi", h, x)
    n0 = 2 * np.mean((sys.y - clean) ** 2)
    gamma = k * alpha.symbol_energy / n0
    assert abs(10 * np.log10(gamma) - 12.0) < 0.1
    assert sys.noise_var == pytest.approx(noise_variance(SnrSpec(12.0, 10.0), k))


def test_noiseless_transmit_and_determinism():
    h = realify(draw_channel(4, 2, rng_seed=5).entries)
    x = np.array([1.0, -3.0, 3.0, 1.0])
    clean = transmit(h, x, None)
    np.testing.assert_allclose(clean.y, h @ x)
    assert clean.noise_var == 0.0
    a = transmit(h, x, SnrSpec(5.0, 10.0), rng_seed=9)
    b = transmit(h, x, SnrSpec(5.0, 10.0), rng_seed=9)
    assert np.array_equal(a.y, b.y)
    assert not np.array_equal(a.y, transmit(h, x, SnrSpec(5.0, 10.0), rng_seed=10).y)
