"""Discrete Fourier transforms on numpy arrays.

Power-of-two lengths go through a vectorised radix-2 decimation-in-time
recursion whose leaves are small dense DFTs; every other length falls back
to a dense O(N^2) DFT.  Real transforms of even length pack the signal into
a half-length complex transform.

Convention: the forward transform is unnormalised and the inverse carries
the 1/N factor, matching ``numpy.fft``.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

_LEAF = 16


def _is_pow2(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


def _complex_dtype(x: np.ndarray):
    if x.dtype in (np.float32, np.complex64):
        return np.complex64
    return np.complex128


@lru_cache(maxsize=None)
def _dft_matrix(n: int, sign: int, dtype) -> np.ndarray:
    k = np.arange(n)
    # exact integer reduction of k*j mod n keeps the phase small
    phase = (np.outer(k, k) % n) * (sign * 2.0 * np.pi / n)
    return np.exp(1j * phase).astype(dtype)


@lru_cache(maxsize=None)
def _twiddles(n: int, sign: int, dtype) -> np.ndarray:
    return np.exp(sign * 2j * np.pi * np.arange(n // 2) / n).astype(dtype)


def _transform_last(x: np.ndarray, sign: int) -> np.ndarray:
    n = x.shape[-1]
    dtype = x.dtype
    if n <= _LEAF or not _is_pow2(n):
        return x @ _dft_matrix(n, sign, dtype)
    even = _transform_last(x[..., 0::2], sign)
    odd = _transform_last(x[..., 1::2], sign)
    odd *= _twiddles(n, sign, dtype)
    return np.concatenate([even + odd, even - odd], axis=-1)


def _check_len(n: int) -> None:
    if n < 1:
        raise ValueError(f"transform length must be positive, got {n}")


def fft(x, axis: int = -1) -> np.ndarray:
    """Unnormalised complex DFT along ``axis``."""
    x = np.asarray(x)
    _check_len(x.shape[axis])
    x = np.moveaxis(x, axis, -1).astype(_complex_dtype(x), copy=False)
    return np.moveaxis(_transform_last(x, -1), -1, axis)


def ifft(x, axis: int = -1) -> np.ndarray:
    """Inverse of :func:`fft` (includes the 1/N factor)."""
    x = np.asarray(x)
    n = x.shape[axis]
    _check_len(n)
    x = np.moveaxis(x, axis, -1).astype(_complex_dtype(x), copy=False)
    out = _transform_last(x, +1)
    out /= n
    return np.moveaxis(out, -1, axis)


@lru_cache(maxsize=None)
def _rfft_post(n: int, dtype) -> np.ndarray:
    return np.exp(-2j * np.pi * np.arange(n // 2 + 1) / n).astype(dtype)


def rfft(x, axis: int = -1) -> np.ndarray:
    """Non-negative frequency half of the DFT of a real signal.

    Output length along ``axis`` is ``N // 2 + 1``.
    """
    x = np.asarray(x)
    if np.iscomplexobj(x):
        raise TypeError("rfft expects a real input")
    n = x.shape[axis]
    _check_len(n)
    x = np.moveaxis(x, axis, -1)
    cdt = _complex_dtype(x)
    if n % 2:
        out = _transform_last(x.astype(cdt), -1)[..., : n // 2 + 1]
        return np.moveaxis(out, -1, axis)
    half = n // 2
    z = np.empty(x.shape[:-1] + (half,), dtype=cdt)
    z.real = x[..., 0::2]
    z.imag = x[..., 1::2]
    zf = _transform_last(z, -1)
    # Z[k] and conj(Z[half - k]) for k = 0..half (indices taken mod half)
    zk = np.concatenate([zf, zf[..., :1]], axis=-1)
    zr = np.conj(zk[..., ::-1])
    even = 0.5 * (zk + zr)
    odd = -0.5j * (zk - zr)
    out = even + _rfft_post(n, cdt) * odd
    return np.moveaxis(out, -1, axis)


def irfft(X, n: int | None = None, axis: int = -1) -> np.ndarray:
    """Inverse of :func:`rfft` returning ``n`` real samples.

    Imaginary parts of the DC (and, for even ``n``, Nyquist) bins are
    ignored.  Missing bins are treated as zero and surplus bins are dropped.
    """
    X = np.asarray(X)
    m = X.shape[axis]
    if n is None:
        n = 2 * (m - 1)
    _check_len(n)
    X = np.moveaxis(X, axis, -1).astype(_complex_dtype(X), copy=False)
    need = n // 2 + 1
    if m < need:
        pad = np.zeros(X.shape[:-1] + (need - m,), dtype=X.dtype)
        X = np.concatenate([X, pad], axis=-1)
    elif m > need:
        X = X[..., :need]
    X = X.copy()
    X[..., 0] = X[..., 0].real
    if n % 2 == 0:
        X[..., -1] = X[..., -1].real
    if n % 2:
        full = np.concatenate([X, np.conj(X[..., 1:][..., ::-1])], axis=-1)
        out = _transform_last(full, +1).real / n
        return np.moveaxis(out, -1, axis)
    half = n // 2
    # undo the even/odd packing used in rfft
    xk = X[..., :half]
    xr = np.conj(X[..., half:0:-1])
    even = 0.5 * (xk + xr)
    odd = 0.5 * (xk - xr) * np.conj(_rfft_post(n, X.dtype)[:half])
    z = _transform_last(even + 1j * odd, +1) / half
    out = np.empty(z.shape[:-1] + (n,), dtype=z.real.dtype)
    out[..., 0::2] = z.real
    out[..., 1::2] = z.imag
    return np.moveaxis(out, -1, axis)


def rfft2(x) -> np.ndarray:
    """Real 2D DFT over the last two axes (last axis halved)."""
    return fft(rfft(x, axis=-1), axis=-2)


def irfft2(X, shape: tuple[int, int]) -> np.ndarray:
    """Inverse of :func:`rfft2`; ``shape`` is the real output's last two dims."""
    X = np.asarray(X)
    if X.shape[-2] != shape[0]:
        raise ValueError(
            f"irfft2: spectrum has {X.shape[-2]} rows but target length is {shape[0]}"
        )
    return irfft(ifft(X, axis=-2), shape[1], axis=-1)
