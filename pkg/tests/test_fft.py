import numpy as np
import pytest

from lpfno import fft


def naive_dft(x, sign=-1):
    n = x.shape[-1]
    k = np.arange(n)
    return x @ np.exp(sign * 2j * np.pi * np.outer(k, k) / n).T


SIZES = [4, 8, 16, 32, 64, 128, 256]


@pytest.mark.parametrize("n", SIZES + [1, 2, 3, 5, 12, 17, 31, 1024])
def test_fft_matches_naive(n, rng):
    x = rng.standard_normal((3, n)) + 1j * rng.standard_normal((3, n))
    assert np.max(np.abs(fft.fft(x) - naive_dft(x))) <= 1e-10 * max(1, n / 256)
    assert np.max(np.abs(fft.ifft(fft.fft(x)) - x)) <= 1e-12


@pytest.mark.parametrize("n", SIZES + [5, 9, 30])
def test_rfft_is_half_spectrum(n, rng):
    x = rng.standard_normal((2, n))
    X = fft.rfft(x)
    assert X.shape == (2, n // 2 + 1)
    assert np.max(np.abs(X - naive_dft(x)[:, : n // 2 + 1])) <= 1e-10
    assert np.max(np.abs(fft.irfft(X, n) - x)) <= 1e-12


def test_known_values():
    # delta -> flat spectrum; constant -> DC only
    d = np.zeros(8)
    d[0] = 1.0
    assert np.allclose(fft.rfft(d), np.ones(5))
    c = fft.rfft(np.ones(8))
    assert c[0] == pytest.approx(8.0) and np.allclose(c[1:], 0.0)
    # a pure cosine lands in bin 1 with weight N/2
    x = np.cos(2 * np.pi * np.arange(16) / 16)
    X = fft.rfft(x)
    assert X[1].real == pytest.approx(8.0) and np.abs(np.delete(X, 1)).max() < 1e-12


def test_axis_argument(rng):
    x = rng.standard_normal((6, 8, 3))
    ref = np.fft.rfft(x, axis=1)
    assert np.allclose(fft.rfft(x, axis=1), ref)
    assert np.allclose(fft.irfft(ref, 8, axis=1), x)
    z = x + 1j * rng.standard_normal(x.shape)
    assert np.allclose(fft.fft(z, axis=0), np.fft.fft(z, axis=0))


@pytest.mark.parametrize("shape", [(4, 4), (8, 16), (32, 8), (6, 10), (64, 64)])
def test_2d_round_trip_and_oracle(shape, rng):
    x = rng.standard_normal((2,) + shape)
    X = fft.rfft2(x)
    H, W = shape
    ref = naive_dft(naive_dft(x).swapaxes(-1, -2)).swapaxes(-1, -2)[..., : W // 2 + 1]
    assert np.max(np.abs(X - ref)) <= 1e-10
    assert np.max(np.abs(fft.irfft2(X, shape) - x)) <= 1e-12


def test_parseval(rng):
    x = rng.standard_normal(64)
    X = fft.fft(x.astype(complex))
    assert np.sum(np.abs(X) ** 2) / 64 == pytest.approx(np.sum(x**2))


def test_irfft2_shape_mismatch():
    with pytest.raises(ValueError):
        fft.irfft2(np.zeros((4, 3), complex), (8, 4))


def test_single_precision_stays_single(rng):
    x = rng.standard_normal(32).astype(np.float32)
    assert fft.rfft(x).dtype == np.complex64
