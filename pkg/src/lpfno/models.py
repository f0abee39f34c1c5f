"""LP-FNO and the zero-padded FNO2d baseline.

Both models map a boundary function ``g: [B, N, m]`` sampled on the left
edge to a field ``[B, N, N, m]`` indexed ``[b, y, x, channel]`` (same
layout as :mod:`lpfno.poisson`).  Neither holds resolution-specific
parameters, so one set of weights serves every ``N``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from lpfno import functional as F
from lpfno.tensor import Tensor, as_dtype, make_op, parameter


# ----------------------------------------------------------------------
# lifting products


def lifting_product_1d2d(a, b):
    """Channel-wise outer product ``c[..., i, j, ch] = a[..., i, ch] * b[..., j, ch]``."""
    a = a if isinstance(a, Tensor) else Tensor(a)
    b = b if isinstance(b, Tensor) else Tensor(b)
    if a.shape != b.shape:
        raise ValueError(f"lifting_product_1d2d: shapes differ {a.shape} vs {b.shape}")
    A, Bd = a.data, b.data
    out = A[..., :, None, :] * Bd[..., None, :, :]

    def backward(g):
        return (g * Bd[..., None, :, :]).sum(axis=-2), (g * A[..., :, None, :]).sum(axis=-3)

    return make_op(out, (a, b), backward)


def lifting_product_2d3d(a, b):
    """``c[k, i, j, ch] = a[i, j, ch] * b[i, k, ch]`` for ``a: [N, M, C]``, ``b: [N, K, C]``."""
    a = a if isinstance(a, Tensor) else Tensor(a)
    b = b if isinstance(b, Tensor) else Tensor(b)
    if a.ndim != 3 or b.ndim != 3 or a.shape[0] != b.shape[0] or a.shape[2] != b.shape[2]:
        raise ValueError(
            f"lifting_product_2d3d: need a [N, M, C] and b [N, K, C], got {a.shape} and {b.shape}"
        )
    A, Bd = a.data, b.data
    out = np.einsum("ijc,ikc->kijc", A, Bd)

    def backward(g):
        return np.einsum("kijc,ikc->ijc", g, Bd), np.einsum("kijc,ijc->ikc", g, A)

    return make_op(out, (a, b), backward)


def lift_project(v1, v2, P, bias):
    """``u[b, y, x, o] = sum_c v1[b, y, c] v2[b, x, c] P[c, o] + bias[o]``.

    Equal to projecting ``lifting_product_1d2d(v1, v2)`` pointwise, without
    materialising the ``[B, N, N, C]`` lifted field.
    """
    A, Bv, Pd = v1.data, v2.data, P.data
    bsz, ny, _ = A.shape
    nx = Bv.shape[1]
    m = Pd.shape[1]
    Bt = Bv.transpose(0, 2, 1)
    out = np.empty((bsz, ny, nx, m), dtype=A.dtype)
    for o in range(m):
        out[..., o] = np.matmul(A * Pd[:, o], Bt)
    out += bias.data

    def backward(g):
        g1 = np.zeros_like(A)
        g2 = np.zeros_like(Bv)
        gP = np.zeros_like(Pd)
        for o in range(m):
            go = np.ascontiguousarray(g[..., o])
            gB = np.matmul(go, Bv)  # [b, y, c]
            g1 += gB * Pd[:, o]
            g2 += np.matmul(go.transpose(0, 2, 1), A) * Pd[:, o]
            gP[:, o] = (gB * A).sum(axis=(0, 1))
        gb = g.reshape(-1, m).sum(axis=0)
        return g1, g2, gP, gb

    return make_op(out, (v1, v2, P, bias), backward)


# ----------------------------------------------------------------------
# configs


@dataclass
class LPFNOConfig:
    n_e: int = 64
    modes: int = 16
    layers: int = 4
    activation: str = "gelu"
    m: int = 1
    coord_feature: bool = True
    projection: str = "linear"  # or "mlp"
    proj_hidden: int = 128
    backend: str = "dft"

    def validate(self):
        for name in ("n_e", "modes", "layers", "m"):
            if getattr(self, name) < 1:
                raise ValueError(f"LPFNOConfig.{name} must be >= 1")
        if self.projection not in ("linear", "mlp"):
            raise ValueError(f"unknown projection {self.projection!r}")
        if self.activation not in F.ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")


@dataclass
class FNO2dConfig:
    width: int = 16
    modes: int = 16
    layers: int = 4
    activation: str = "gelu"
    m: int = 1
    coord_channels: bool = True
    proj_hidden: int = 128
    backend: str = "dft"

    def validate(self):
        for name in ("width", "modes", "layers", "m"):
            if getattr(self, name) < 1:
                raise ValueError(f"FNO2dConfig.{name} must be >= 1")
        if self.activation not in F.ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")


# ----------------------------------------------------------------------
# parameters


def _add_linear(params, rng, name, c_in, c_out, dtype):
    W, b = F.init_pointwise(rng, c_in, c_out, dtype)
    params[f"{name}.weight"] = parameter(W, f"{name}.weight")
    params[f"{name}.bias"] = parameter(b, f"{name}.bias")


def init_lpfno(cfg: LPFNOConfig, seed=0, precision="f32"):
    """Fresh LP-FNO parameters, drawn in registry order from PCG64(seed)."""
    cfg.validate()
    dtype = as_dtype(precision)
    rng = np.random.Generator(np.random.PCG64(seed))
    c_in = cfg.m + (1 if cfg.coord_feature else 0)
    params = {}
    for br in (1, 2):
        _add_linear(params, rng, f"branch{br}.lift", c_in, cfg.n_e, dtype)
        for j in range(cfg.layers):
            pre = f"branch{br}.layer{j}"
            R = F.init_spectral(rng, (cfg.modes, cfg.n_e, cfg.n_e), dtype)
            params[f"{pre}.spectral"] = parameter(R, f"{pre}.spectral")
            _add_linear(params, rng, f"{pre}.pointwise", cfg.n_e, cfg.n_e, dtype)
    if cfg.projection == "linear":
        _add_linear(params, rng, "proj", cfg.n_e, cfg.m, dtype)
    else:
        _add_linear(params, rng, "proj.hidden", cfg.n_e, cfg.proj_hidden, dtype)
        _add_linear(params, rng, "proj.out", cfg.proj_hidden, cfg.m, dtype)
    return params


def init_fno2d(cfg: FNO2dConfig, seed=0, precision="f32"):
    cfg.validate()
    dtype = as_dtype(precision)
    rng = np.random.Generator(np.random.PCG64(seed))
    c_in = cfg.m + (2 if cfg.coord_channels else 0)
    params = {}
    _add_linear(params, rng, "lift", c_in, cfg.width, dtype)
    for j in range(cfg.layers):
        R = F.init_spectral(rng, (2, cfg.modes, cfg.modes, cfg.width, cfg.width), dtype)
        params[f"layer{j}.spectral"] = parameter(R, f"layer{j}.spectral")
        _add_linear(params, rng, f"layer{j}.pointwise", cfg.width, cfg.width, dtype)
    _add_linear(params, rng, "proj.hidden", cfg.width, cfg.proj_hidden, dtype)
    _add_linear(params, rng, "proj.out", cfg.proj_hidden, cfg.m, dtype)
    return params


def param_count(params, complex_weight=2) -> int:
    """Total scalar parameters; each complex entry counts ``complex_weight`` times."""
    total = 0
    for p in params.values():
        data = p.data if isinstance(p, Tensor) else np.asarray(p)
        total += data.size * (complex_weight if np.iscomplexobj(data) else 1)
    return int(total)


# ----------------------------------------------------------------------
# forward passes


def _as_input(g, params):
    dtype = next(iter(params.values())).data.real.dtype
    g = g.data if isinstance(g, Tensor) else np.asarray(g)
    if g.ndim == 2:
        g = g[..., None]
    return g.astype(dtype, copy=False)


def _linear(h, params, name, channel_axis=-1):
    return F.pointwise_linear(h, params[f"{name}.weight"], params[f"{name}.bias"], channel_axis)


def coordinate_channel(batch, n, dtype):
    return np.broadcast_to(np.linspace(0.0, 1.0, n, dtype=dtype)[None, :, None], (batch, n, 1))


def lpfno_branch(g, params, cfg: LPFNOConfig, branch: int):
    g = _as_input(g, params)
    x = g
    if cfg.coord_feature:
        x = np.concatenate([g, coordinate_channel(g.shape[0], g.shape[1], g.dtype)], axis=-1)
    h = _linear(Tensor(x), params, f"branch{branch}.lift")
    for j in range(cfg.layers):
        pre = f"branch{branch}.layer{j}"
        spec = F.spectral_conv_1d(h, params[f"{pre}.spectral"], backend=cfg.backend, clamp=True)
        h = F.activation(spec + _linear(h, params, f"{pre}.pointwise"), cfg.activation)
    return h


def lpfno_lifted(g, params, cfg: LPFNOConfig):
    """Pre-projection field ``w = v1 (x) v2`` as ``[B, N(y), N(x), n_e]``."""
    v1 = lpfno_branch(g, params, cfg, 1)
    v2 = lpfno_branch(g, params, cfg, 2)
    return lifting_product_1d2d(v1, v2)


def lpfno_forward(g, params, cfg: LPFNOConfig):
    """LP-FNO prediction ``[B, N, N, m]``.

    Branch 1 output spans ``y`` (along the boundary) and branch 2 spans
    ``x`` (into the domain); their channel-wise outer product is projected
    pointwise to the ``m`` physical channels.
    """
    v1 = lpfno_branch(g, params, cfg, 1)
    v2 = lpfno_branch(g, params, cfg, 2)
    if cfg.projection == "linear":
        return lift_project(v1, v2, params["proj.weight"], params["proj.bias"])
    w = lifting_product_1d2d(v1, v2)
    h = F.activation(_linear(w, params, "proj.hidden"), cfg.activation)
    return _linear(h, params, "proj.out")


def embed_boundary(g, coord_channels=False):
    """Zero field ``[B, m, N(y), N(x)]`` with ``g`` on column ``x = 0``.

    With ``coord_channels`` two more channels carry the x and y node
    coordinates.  Channels-first, as consumed by the 2D spectral layers.
    """
    g = np.asarray(g)
    if g.ndim == 2:
        g = g[..., None]
    bsz, n, m = g.shape
    field = np.zeros((bsz, m, n, n), dtype=g.dtype)
    field[:, :, :, 0] = g.transpose(0, 2, 1)
    if coord_channels:
        s = np.linspace(0.0, 1.0, n, dtype=g.dtype)
        xs = np.broadcast_to(s[None, None, None, :], (bsz, 1, n, n))
        ys = np.broadcast_to(s[None, None, :, None], (bsz, 1, n, n))
        field = np.concatenate([field, xs, ys], axis=1)
    return field


def fno2d_padded_forward(g, params, cfg: FNO2dConfig):
    """FNO2d on the zero-padded boundary field; prediction ``[B, N, N, m]``."""
    g = _as_input(g, params)
    h = _linear(Tensor(embed_boundary(g, cfg.coord_channels)), params, "lift", 1)
    for j in range(cfg.layers):
        spec = F.spectral_conv_2d(h, params[f"layer{j}.spectral"], backend=cfg.backend, clamp=True)
        h = spec + _linear(h, params, f"layer{j}.pointwise", 1)
        if j < cfg.layers - 1:
            h = F.activation(h, cfg.activation)
    h = F.activation(_linear(h, params, "proj.hidden", 1), cfg.activation)
    return _linear(h, params, "proj.out", 1).transpose(0, 2, 3, 1)


# ----------------------------------------------------------------------
# model handles used by the harness


MODEL_KINDS = {"lpfno": (LPFNOConfig, init_lpfno, lpfno_forward),
               "fno2d": (FNO2dConfig, init_fno2d, fno2d_padded_forward)}


def build_config(kind, values: dict):
    """Model config from a plain mapping; unknown keys are rejected by name."""
    cfg_cls = MODEL_KINDS[kind][0]
    known = set(cfg_cls.__dataclass_fields__)
    for key in values:
        if key not in known:
            raise KeyError(f"unknown {kind} model key {key!r}; known keys: {sorted(known)}")
    cfg = cfg_cls(**values)
    cfg.validate()
    return cfg


class Model:
    def __init__(self, kind, config, params, precision="f32"):
        if kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {kind!r}; expected one of {sorted(MODEL_KINDS)}")
        self.kind = kind
        self.config = config
        self.params = params
        self.precision = precision

    @classmethod
    def create(cls, kind, config=None, seed=0, precision="f32"):
        if kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {kind!r}; expected one of {sorted(MODEL_KINDS)}")
        cfg_cls, init, _ = MODEL_KINDS[kind]
        if config is None:
            config = cfg_cls()
        elif isinstance(config, dict):
            config = build_config(kind, config)
        return cls(kind, config, init(config, seed, precision), precision)

    def __call__(self, g):
        return MODEL_KINDS[self.kind][2](g, self.params, self.config)

    def predict(self, g, batch_size=64):
        out = []
        for s in range(0, len(g), batch_size):
            out.append(self(g[s : s + batch_size]).data)
        return np.concatenate(out, axis=0) if out else np.zeros((0,))

    def count(self, complex_weight=2):
        return param_count(self.params, complex_weight)

    def config_dict(self):
        return asdict(self.config)

    def effective_modes(self, n):
        if self.kind == "lpfno":
            return {"modes": F.clamp_modes_1d(self.config.modes, n, clamp=True)}
        ky, kx = F.clamp_modes_2d(self.config.modes, n, n, clamp=True)
        return {"modes_y": ky, "modes_x": kx}
