"""Differentiable layer primitives built on :mod:`lpfno.tensor`.

Layouts: 1D features are channels-last ``[B, N, C]``; the 2D spectral layer
works channels-first ``[B, C, H, W]`` and :func:`pointwise_linear` accepts
either.

Spectral convolutions can evaluate their truncated transforms two ways:

* ``"dft"`` multiplies by the ``N x k`` slice of the DFT matrix that the
  retained modes need (the default; it is what keeps training on one CPU
  core affordable).
* ``"fft"`` runs the full radix-2 transforms from :mod:`lpfno.fft` and
  slices afterwards.

Both compute ``irfft(pad(R . truncate_k(rfft(h))))`` and agree to round-off.
"""
from __future__ import annotations

import logging
from functools import lru_cache

import numpy as np
from scipy.special import erf

from lpfno import fft as _fft
from lpfno.tensor import Tensor, make_op

log = logging.getLogger(__name__)

_SQRT2 = np.sqrt(2.0)
_INV_SQRT2PI = 1.0 / np.sqrt(2.0 * np.pi)


class ModeError(ValueError):
    """Requested more Fourier modes than the grid can carry."""


def _t(x):
    return x if isinstance(x, Tensor) else Tensor(x)


# ----------------------------------------------------------------------
# pointwise maps


def pointwise_linear(x, W, b=None, channel_axis=-1):
    """Apply the affine map ``W, b`` to the channel vector at every location.

    Channels are the last axis by default; ``channel_axis=1`` treats ``x``
    as channels-first ``[B, C, ...]``.
    """
    x, W = _t(x), _t(W)
    if channel_axis not in (-1, 1):
        raise ValueError("channel_axis must be -1 or 1")
    if x.shape[channel_axis] != W.shape[0]:
        raise ValueError(
            f"pointwise_linear: input has {x.shape[channel_axis]} channels, weight expects {W.shape[0]}"
        )
    if b is not None:
        b = _t(b)
        if b.shape != (W.shape[1],):
            raise ValueError(f"pointwise_linear: bias shape {b.shape} != ({W.shape[1]},)")
    parents = (x, W) if b is None else (x, W, b)

    if channel_axis == 1:
        bsz, c_in = x.shape[:2]
        spatial = x.shape[2:]
        x3 = x.data.reshape(bsz, c_in, -1)
        out = np.matmul(W.data.T, x3)
        if b is not None:
            out += b.data[:, None]

        def backward_cf(g):
            g3 = g.reshape(bsz, W.shape[1], -1)
            gx = np.matmul(W.data, g3).reshape(x.shape) if x.requires_grad else None
            gW = np.tensordot(x3, g3, axes=([0, 2], [0, 2])) if W.requires_grad else None
            gb = g3.sum(axis=(0, 2)) if b is not None and b.requires_grad else None
            return gx, gW, gb

        return make_op(out.reshape((bsz, W.shape[1]) + spatial), parents, backward_cf)

    out = x.data @ W.data
    if b is not None:
        out = out + b.data

    def backward(g):
        gx = g @ W.data.T if x.requires_grad else None
        gW = None
        if W.requires_grad:
            gW = x.data.reshape(-1, x.shape[-1]).T @ g.reshape(-1, g.shape[-1])
        gb = g.reshape(-1, g.shape[-1]).sum(axis=0) if b is not None and b.requires_grad else None
        return gx, gW, gb

    return make_op(out, parents, backward)


def gelu(x):
    x = _t(x)
    d = x.data
    cdf = 0.5 * (1.0 + erf(d / _SQRT2))
    out = d * cdf

    def backward(g):
        pdf = np.exp(-0.5 * d * d) * _INV_SQRT2PI
        return (g * (cdf + d * pdf),)

    return make_op(out.astype(d.dtype, copy=False), (x,), backward)


def relu(x):
    x = _t(x)
    mask = x.data > 0
    return make_op(x.data * mask, (x,), lambda g: (g * mask,))


def tanh(x):
    x = _t(x)
    out = np.tanh(x.data)
    return make_op(out, (x,), lambda g: (g * (1.0 - out * out),))


ACTIVATIONS = {"gelu": gelu, "relu": relu, "tanh": tanh}


def activation(x, kind="gelu"):
    try:
        fn = ACTIVATIONS[kind]
    except KeyError:
        raise ValueError(f"unknown activation {kind!r}; choose from {sorted(ACTIVATIONS)}")
    return fn(x)


def mse_loss(pred, target):
    """Mean of squared differences over every element."""
    pred = _t(pred)
    tdata = target.data if isinstance(target, Tensor) else np.asarray(target)
    if pred.shape != tdata.shape:
        raise ValueError(f"mse_loss: shape mismatch {pred.shape} vs {tdata.shape}")
    diff = pred.data - tdata
    out = np.mean(diff * diff)
    scale = 2.0 / diff.size
    parents = (pred, target) if isinstance(target, Tensor) else (pred,)
    return make_op(np.asarray(out), parents, lambda g: (g * scale * diff, -g * scale * diff))


def concat(tensors, axis=-1):
    tensors = [_t(t) for t in tensors]
    out = np.concatenate([t.data for t in tensors], axis=axis)
    splits = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(g):
        return tuple(np.split(g, splits, axis=axis))

    return make_op(out, tensors, backward)


# ----------------------------------------------------------------------
# differentiable real FFTs


def _hermitian_weights(nbins, n, dtype=np.float64):
    """1 for the DC (and Nyquist) bins, 2 for bins that stand in for a conjugate pair."""
    c = np.full(nbins, 2.0, dtype=dtype)
    c[0] = 1.0
    if n % 2 == 0 and nbins > n // 2:
        c[n // 2] = 1.0
    return c


def _along(c, axis, ndim):
    shape = [1] * ndim
    shape[axis] = c.shape[0]
    return c.reshape(shape)


def rfft_1d(x, axis=-1):
    """Differentiable :func:`lpfno.fft.rfft` along ``axis``."""
    x = _t(x)
    axis = axis % x.ndim
    n = x.shape[axis]
    out = _fft.rfft(x.data, axis=axis)

    def backward(g):
        c = _along(_hermitian_weights(n // 2 + 1, n), axis, g.ndim)
        return (n * _fft.irfft(g / c, n, axis=axis),)

    return make_op(out, (x,), backward)


def irfft_1d(X, n, axis=-1):
    """Differentiable :func:`lpfno.fft.irfft`; ``X`` must hold ``n // 2 + 1`` bins."""
    X = _t(X)
    axis = axis % X.ndim
    if X.shape[axis] != n // 2 + 1:
        raise ValueError(
            f"irfft_1d: {X.shape[axis]} bins is inconsistent with target length {n}"
        )
    out = _fft.irfft(X.data, n, axis=axis)

    def backward(g):
        c = _along(_hermitian_weights(n // 2 + 1, n), axis, g.ndim)
        return (_fft.rfft(g, axis=axis) * (c / n),)

    return make_op(out, (X,), backward)


def rfft_2d(x):
    """Differentiable real 2D DFT over the last two axes."""
    return fft_axis(rfft_1d(x, axis=-1), axis=-2, inverse=False)


def irfft_2d(X, shape):
    X = _t(X)
    if X.shape[-2] != shape[0]:
        raise ValueError(f"irfft_2d: {X.shape[-2]} rows inconsistent with target {shape[0]}")
    return irfft_1d(fft_axis(X, axis=-2, inverse=True), shape[1], axis=-1)


def fft_axis(X, axis=-1, inverse=False):
    """Differentiable complex (i)DFT along one axis."""
    X = _t(X)
    axis = axis % X.ndim
    n = X.shape[axis]
    if inverse:
        out = _fft.ifft(X.data, axis=axis)
        return make_op(out, (X,), lambda g: (_fft.fft(g, axis=axis) / n,))
    out = _fft.fft(X.data, axis=axis)
    return make_op(out, (X,), lambda g: (n * _fft.ifft(g, axis=axis),))


# ----------------------------------------------------------------------
# truncated real DFT matrices


@lru_cache(maxsize=64)
def _real_dft(n, k, dtype):
    """Forward (cos, sin) as ``N x k`` and inverse (A, B) as ``k x N``.

    rfft(h)[:k] = h @ cos - 1j * h @ sin, and the real signal carried by
    bins Z[:k] is Re(Z) @ A - Im(Z) @ B.
    """
    idx = (np.outer(np.arange(n), np.arange(k)) % n) * (2.0 * np.pi / n)
    cos, sin = np.cos(idx), np.sin(idx)
    c = _hermitian_weights(k, n)[:, None] / n
    return (cos.astype(dtype), sin.astype(dtype), (c * cos.T).astype(dtype), (c * sin.T).astype(dtype))


@lru_cache(maxsize=64)
def _real_dft_stacked(n, k, dtype):
    """``[cos | -sin]`` (N x 2k) and ``[A ; -B]`` (2k x N) for channels-first transforms."""
    cos, sin, A, Bm = _real_dft(n, k, dtype)
    return np.concatenate([cos, -sin], axis=1), np.concatenate([A, -Bm], axis=0)


def _row_modes(n, k):
    """Row frequencies kept by a 2D spectral layer: 0..k-1 then -k..-1."""
    return np.concatenate([np.arange(k), np.arange(n - k, n)])


@lru_cache(maxsize=64)
def _complex_rows(n, k, dtype):
    rows = _row_modes(n, k)
    phase = (np.outer(rows, np.arange(n)) % n) * (2.0 * np.pi / n)
    fwd = np.exp(-1j * phase).astype(dtype)  # 2k x N
    inv = (np.exp(1j * phase).T / n).astype(dtype)  # N x 2k
    return fwd, inv


def _cdtype(dtype):
    return np.complex64 if dtype == np.float32 else np.complex128


def usable_modes_1d(n):
    return n // 2 + 1


def clamp_modes_1d(k, n, clamp):
    limit = usable_modes_1d(n)
    if k > limit:
        if not clamp:
            raise ModeError(f"{k} modes requested but a length-{n} signal has only {limit}")
        log.debug("clamping 1D modes %d -> %d for N=%d", k, limit, n)
        return limit
    return k


def clamp_modes_2d(k, h, w, clamp):
    ky, kx = min(k, h // 2), min(k, w // 2 + 1)
    if (ky, kx) != (k, k):
        if not clamp:
            raise ModeError(f"{k}x{k} modes requested but a {h}x{w} grid allows {ky}x{kx}")
        log.debug("clamping 2D modes %d -> (%d, %d) for %dx%d", k, ky, kx, h, w)
    return ky, kx


# ----------------------------------------------------------------------
# spectral convolutions


def _mix(X, R):
    """Z[b, m, o] = sum_i X[b, m, i] R[m, i, o] with modes on axis 1."""
    return np.matmul(X.transpose(1, 0, 2), R).transpose(1, 0, 2)


def _mix_backward(X, R, gZ):
    gZt = gZ.transpose(1, 0, 2)
    gX = np.matmul(gZt, np.conj(R).transpose(0, 2, 1)).transpose(1, 0, 2)
    gR = np.matmul(np.conj(X).transpose(1, 2, 0), gZt)
    return gX, gR


def spectral_conv_1d(h, R, backend="dft", clamp=False):
    """Fourier-space channel mixing on ``h: [B, N, C_in]``.

    ``R`` is complex ``[k, C_in, C_out]``; mode ``m`` of the real DFT is
    multiplied by ``R[m]`` and modes ``>= k`` are dropped.  The same ``R``
    applies to any ``N``; with ``clamp=True`` only the first
    ``N // 2 + 1`` modes are used when ``k`` is larger.
    """
    h, R = _t(h), _t(R)
    B, N, C = h.shape
    k = R.shape[0]
    if R.shape[1] != C:
        raise ValueError(f"spectral_conv_1d: input has {C} channels, weights expect {R.shape[1]}")
    ke = clamp_modes_1d(k, N, clamp)
    Rk = R.data[:ke]
    rdt = h.data.dtype

    if backend == "dft":
        cos, sin, A, Bm = _real_dft(N, ke, rdt)
        X = np.matmul(cos.T, h.data) - 1j * np.matmul(sin.T, h.data)
        Z = _mix(X, Rk)
        y = np.matmul(A.T, Z.real) - np.matmul(Bm.T, Z.imag)
    elif backend == "fft":
        X = _fft.rfft(h.data, axis=1)[:, :ke]
        Z = _mix(X, Rk)
        y = _fft.irfft(Z, N, axis=1)
    else:
        raise ValueError(f"unknown spectral backend {backend!r}")
    y = y.astype(rdt, copy=False)

    def backward(g):
        if backend == "dft":
            gZ = np.matmul(A, g) - 1j * np.matmul(Bm, g)
        else:
            c = _hermitian_weights(ke, N)[None, :, None]
            gZ = _fft.rfft(g, axis=1)[:, :ke] * (c / N)
        gX, gRk = _mix_backward(X, Rk, gZ)
        gR = None
        if R.requires_grad:
            gR = np.zeros_like(R.data)
            gR[:ke] = gRk
        gh = None
        if h.requires_grad:
            if backend == "dft":
                gh = np.matmul(cos, gX.real) - np.matmul(sin, gX.imag)
            else:
                c = _hermitian_weights(ke, N)[None, :, None]
                gh = N * _fft.irfft(gX / c, N, axis=1)
        return gh, gR

    return make_op(y, (h, R), backward)


def _select_2d(R, ky, kx):
    """Pick the weight blocks for the clamped mode window; shape [2ky, kx, Ci, Co]."""
    k = R.shape[1]
    return np.concatenate([R[0, :ky, :kx], R[1, k - ky :, :kx]], axis=0)


def _scatter_2d(gsel, shape, ky, kx):
    k = shape[1]
    out = np.zeros(shape, dtype=gsel.dtype)
    out[0, :ky, :kx] = gsel[:ky]
    out[1, k - ky :, :kx] = gsel[ky:]
    return out


def spectral_conv_2d(h, R, backend="dft", clamp=False):
    """2D analogue of :func:`spectral_conv_1d` on channels-first ``h: [B, C_in, H, W]``.

    ``R`` is complex ``[2, k, k, C_in, C_out]``: block 0 holds row
    frequencies ``0..k-1`` and block 1 holds ``-k..-1``; columns are the
    first ``k`` bins of the real transform along ``W``.  Channels come
    first here so that both truncated transforms are single matrix
    products over contiguous memory.
    """
    h, R = _t(h), _t(R)
    B, C, H, W = h.shape
    k = R.shape[1]
    if R.shape[3] != C:
        raise ValueError(f"spectral_conv_2d: input has {C} channels, weights expect {R.shape[3]}")
    ky, kx = clamp_modes_2d(k, H, W, clamp)
    Rs = _select_2d(R.data, ky, kx)
    O = Rs.shape[-1]
    M = 2 * ky * kx
    Rm = Rs.reshape(M, C, O)
    rdt = h.data.dtype
    cdt = _cdtype(rdt)
    rows = _row_modes(H, ky)

    if backend == "dft":
        CS, AB = _real_dft_stacked(W, kx, rdt)
        fwd_rows, inv_rows = _complex_rows(H, ky, cdt)
        T2 = (h.data.reshape(-1, W) @ CS).reshape(B, C, H, 2 * kx)
        T = T2[..., :kx] + 1j * T2[..., kx:]
        X = np.tensordot(T, fwd_rows, axes=([2], [1]))  # B, C, kx, 2ky
        Xm = X.transpose(3, 2, 0, 1).reshape(M, B, C)
    elif backend == "fft":
        full = _fft.fft(_fft.rfft(h.data, axis=3)[..., :kx], axis=2)
        Xm = full[:, :, rows].transpose(2, 3, 0, 1).reshape(M, B, C)
    else:
        raise ValueError(f"unknown spectral backend {backend!r}")
    Z4 = np.matmul(Xm, Rm).reshape(2 * ky, kx, B, O)

    if backend == "dft":
        Tp = np.tensordot(Z4, inv_rows, axes=([0], [1])).transpose(1, 2, 3, 0)  # B, O, H, kx
        y = np.concatenate([Tp.real, Tp.imag], axis=-1).reshape(-1, 2 * kx) @ AB
        y = y.reshape(B, O, H, W)
    else:
        spec = np.zeros((B, O, H, kx), dtype=cdt)
        spec[:, :, rows] = Z4.transpose(2, 3, 0, 1)
        y = _fft.irfft(_fft.ifft(spec, axis=2), W, axis=3)
    y = y.astype(rdt, copy=False)

    def backward(g):
        if backend == "dft":
            gT2 = (g.reshape(-1, W) @ AB.T).reshape(B, O, H, 2 * kx)
            gTp = gT2[..., :kx] + 1j * gT2[..., kx:]
            gZ = np.tensordot(gTp, np.conj(inv_rows), axes=([2], [0]))  # B, O, kx, 2ky
            gZ = gZ.transpose(3, 2, 0, 1).reshape(M, B, O)
        else:
            c = _hermitian_weights(kx, W)[None, None, None, :]
            gTp = _fft.rfft(g, axis=3)[..., :kx] * (c / W)
            gZ = (_fft.fft(gTp, axis=2) / H)[:, :, rows].transpose(2, 3, 0, 1).reshape(M, B, O)
        gXm, gRm = np.matmul(gZ, np.conj(Rm).transpose(0, 2, 1)), np.matmul(
            np.conj(Xm).transpose(0, 2, 1), gZ)
        gR = None
        if R.requires_grad:
            gR = _scatter_2d(gRm.reshape(2 * ky, kx, C, O), R.shape, ky, kx)
        gh = None
        if h.requires_grad:
            gX4 = gXm.reshape(2 * ky, kx, B, C)
            if backend == "dft":
                gT = np.tensordot(gX4.transpose(2, 3, 1, 0), np.conj(fwd_rows), axes=([3], [0]))
                gT = gT.transpose(0, 1, 3, 2)  # B, C, H, kx
                gh = np.concatenate([gT.real, gT.imag], axis=-1).reshape(-1, 2 * kx) @ CS.T
                gh = gh.reshape(B, C, H, W)
            else:
                spec = np.zeros((B, C, H, kx), dtype=cdt)
                spec[:, :, rows] = gX4.transpose(2, 3, 0, 1)
                gT = H * _fft.ifft(spec, axis=2)
                c = _hermitian_weights(kx, W)[None, None, None, :]
                gh = W * _fft.irfft(gT / c, W, axis=3)
            gh = gh.astype(rdt, copy=False)
        return gh, gR

    return make_op(y, (h, R), backward)


# ----------------------------------------------------------------------
# initialisation


def init_pointwise(rng, c_in, c_out, dtype=np.float64):
    bound = 1.0 / np.sqrt(c_in)
    W = rng.uniform(-bound, bound, size=(c_in, c_out)).astype(dtype)
    b = rng.uniform(-bound, bound, size=(c_out,)).astype(dtype)
    return W, b


def init_spectral(rng, shape, dtype=np.float64):
    """Complex weights with real and imaginary parts ~ U[0, 1) / (C_in * C_out)."""
    c_in, c_out = shape[-2], shape[-1]
    scale = 1.0 / (c_in * c_out)
    re = rng.random(shape)
    im = rng.random(shape)
    return (scale * (re + 1j * im)).astype(_cdtype(dtype))
