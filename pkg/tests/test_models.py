import numpy as np
import pytest

from lpfno import functional as F
from lpfno.models import (
    FNO2dConfig, LPFNOConfig, Model, build_config, embed_boundary, init_fno2d, init_lpfno,
    lifting_product_1d2d, lifting_product_2d3d, lift_project, lpfno_forward, lpfno_lifted,
    param_count,
)
from lpfno.optim import Adam
from lpfno.tensor import Tensor, parameter


def test_lifting_product_examples():
    a = np.array([[1.0], [2.0]])
    b = np.array([[3.0], [4.0]])
    c = lifting_product_1d2d(a, b).data
    assert np.array_equal(c[..., 0], [[3, 4], [6, 8]])
    assert np.array_equal(lifting_product_1d2d(np.ones((4, 2)), np.ones((4, 2))).data, np.ones((4, 4, 2)))
    with pytest.raises(ValueError):
        lifting_product_1d2d(np.ones((3, 2)), np.ones((4, 2)))


def test_lifting_2d3d_broadcast_cases(rng):
    a = rng.standard_normal((3, 4, 2))
    c = lifting_product_2d3d(a, np.ones((3, 5, 2))).data
    assert c.shape == (5, 3, 4, 2)
    assert all(np.array_equal(c[k], a) for k in range(5))
    b = rng.standard_normal((3, 5, 2))
    c = lifting_product_2d3d(np.ones((3, 4, 2)), b).data
    for j in range(4):
        assert np.array_equal(c[:, :, j, :], b.transpose(1, 0, 2))
    with pytest.raises(ValueError):
        lifting_product_2d3d(np.ones((3, 4, 2)), np.ones((2, 5, 2)))


def test_lift_project_matches_unfused(rng):
    v1, v2 = rng.standard_normal((2, 6, 5)), rng.standard_normal((2, 7, 5))
    P, b = rng.standard_normal((5, 3)), rng.standard_normal(3)
    fused = lift_project(Tensor(v1), Tensor(v2), Tensor(P), Tensor(b)).data
    w = np.einsum("byc,bxc->byxc", v1, v2)
    assert np.allclose(fused, w @ P + b, atol=1e-13)


def test_output_shapes():
    m = Model.create("lpfno", {"n_e": 8, "modes": 4, "layers": 2}, precision="f64")
    assert m(np.zeros((2, 32))).shape == (2, 32, 32, 1)
    f = Model.create("fno2d", {"width": 4, "modes": 4, "layers": 2, "proj_hidden": 8}, precision="f64")
    assert f(np.zeros((2, 16, 1))).shape == (2, 16, 16, 1)


@pytest.mark.parametrize("kind", ["lpfno", "fno2d"])
def test_zero_parameters_give_zero_output(kind):
    m = Model.create(kind, {"modes": 4}, precision="f64")
    for p in m.params.values():
        p.data[...] = 0
    g = np.random.default_rng(0).standard_normal((2, 16))
    assert not m(g).data.any()


def test_embedding():
    g = np.arange(5.0)[None, :]
    field = embed_boundary(g)
    assert field.shape == (1, 1, 5, 5)
    assert np.array_equal(field[0, 0, :, 0], g[0])
    assert not field[0, 0, :, 1:].any()
    with_xy = embed_boundary(g, coord_channels=True)
    assert with_xy.shape == (1, 3, 5, 5)
    assert with_xy[0, 1, 2, 4] == 1.0 and with_xy[0, 2, 4, 1] == 1.0


def test_param_count_conventions():
    W, b = F.init_pointwise(np.random.default_rng(0), 3, 5)
    assert param_count({"w": Tensor(W), "b": Tensor(b)}) == 20
    assert param_count({"r": Tensor(np.ones(4, complex))}) == 8
    assert param_count({"r": Tensor(np.ones(4, complex))}, complex_weight=1) == 4


def test_default_counts():
    lp = Model.create("lpfno")
    fn = Model.create("fno2d")
    # LP-FNO: 2 x (lift 2->64, 4 x (16 complex 64x64 + 64x64 + 64)) + 64->1 projection
    assert lp.count() == 2 * (3 * 64 + 4 * (16 * 64 * 64 * 2 + 64 * 64 + 64)) + 65
    # without coordinate channels and each complex weight counted once,
    # FNO2d reproduces the reference figure; the two coordinate channels add 2 x 16 lift weights
    bare = Model.create("fno2d", {"coord_channels": False})
    assert bare.count(complex_weight=1) == 527_713
    assert fn.count(complex_weight=1) == 527_713 + 2 * 16
    assert fn.count() == 527_713 + 2 * 16 + 4 * 2 * 16 * 16 * 16 * 16


def test_rank_one_channels(rng):
    a, b = rng.standard_normal((9, 4)), rng.standard_normal((9, 4))
    c = lifting_product_1d2d(a, b).data
    for ch in range(4):
        s = np.linalg.svd(c[:, :, ch], compute_uv=False)
        assert s[1] <= 1e-10 * s[0]


def test_branch_swap_transposes_lifted_field():
    cfg = LPFNOConfig(n_e=6, modes=4, layers=2)
    params = init_lpfno(cfg, seed=3, precision="f64")
    swapped = {}
    for name, p in params.items():
        if name.startswith("branch1"):
            swapped["branch2" + name[7:]] = p
        elif name.startswith("branch2"):
            swapped["branch1" + name[7:]] = p
        else:
            swapped[name] = p
    g = np.random.default_rng(0).standard_normal((2, 16))
    w = lpfno_lifted(g, params, cfg).data
    ws = lpfno_lifted(g, swapped, cfg).data
    assert np.allclose(ws, w.transpose(0, 2, 1, 3))


def test_resolution_transfer_of_untrained_model():
    cfg = LPFNOConfig(n_e=16, modes=8, layers=2)
    params = init_lpfno(cfg, seed=0, precision="f64")

    def g(n):
        y = np.arange(n) / n  # periodic grid so both samplings share nodes
        return (np.sin(2 * np.pi * y) + 0.5 * np.cos(4 * np.pi * y))[None]

    coarse = lpfno_forward(g(32), params, cfg).data[0, :, :, 0]
    fine = lpfno_forward(g(64), params, cfg).data[0, ::2, ::2, 0]
    # coordinate channel differs slightly between the two grids; allow the stated 5%
    assert np.linalg.norm(coarse - fine) / np.linalg.norm(coarse) < 0.05


def test_accepts_other_resolutions_without_new_parameters():
    m = Model.create("lpfno", {"n_e": 4, "modes": 16, "layers": 1})
    before = {k: p.data.copy() for k, p in m.params.items()}
    for n in (8, 32, 33, 64):
        assert m(np.ones((1, n))).shape == (1, n, n, 1)
    assert all(np.array_equal(before[k], m.params[k].data) for k in before)
    assert m.effective_modes(8) == {"modes": 5}


@pytest.mark.parametrize("kind,cfg", [("lpfno", {"n_e": 8, "modes": 4, "layers": 2}),
                                      ("fno2d", {"width": 4, "modes": 4, "layers": 2, "proj_hidden": 8})])
def test_every_parameter_gets_gradient(kind, cfg):
    m = Model.create(kind, cfg, seed=1, precision="f64")
    rng = np.random.default_rng(2)
    g, u = rng.standard_normal((4, 16)), rng.standard_normal((4, 16, 16, 1))
    opt = Adam(m.params)
    loss = F.mse_loss(m(g), Tensor(u))
    loss.backward()
    dead = [n for n, p in m.params.items() if p.grad is None or not np.linalg.norm(p.grad) > 0]
    assert not dead
    opt.step()


def test_registry_order_and_determinism():
    a = init_fno2d(FNO2dConfig(width=4, modes=3, layers=2), seed=5, precision="f64")
    b = init_fno2d(FNO2dConfig(width=4, modes=3, layers=2), seed=5, precision="f64")
    assert list(a) == ["lift.weight", "lift.bias", "layer0.spectral", "layer0.pointwise.weight",
                       "layer0.pointwise.bias", "layer1.spectral", "layer1.pointwise.weight",
                       "layer1.pointwise.bias", "proj.hidden.weight", "proj.hidden.bias",
                       "proj.out.weight", "proj.out.bias"]
    assert all(np.array_equal(a[k].data, b[k].data) for k in a)


def test_config_validation():
    with pytest.raises(KeyError, match="depth"):
        build_config("lpfno", {"depth": 3})
    with pytest.raises(ValueError):
        build_config("lpfno", {"n_e": 0})
    with pytest.raises(ValueError):
        build_config("fno2d", {"activation": "swish"})
    with pytest.raises(ValueError):
        Model.create("tencoder")


def test_mlp_projection_variant():
    m = Model.create("lpfno", {"n_e": 4, "modes": 4, "layers": 1, "projection": "mlp", "proj_hidden": 8})
    assert "proj.hidden.weight" in m.params
    assert m(np.ones((1, 8))).shape == (1, 8, 8, 1)


def test_precision_tags():
    m32 = Model.create("lpfno", {"n_e": 4, "modes": 4, "layers": 1})
    m64 = Model.create("lpfno", {"n_e": 4, "modes": 4, "layers": 1}, precision="f64")
    assert m32(np.ones((1, 8))).dtype == np.float32
    assert m64(np.ones((1, 8))).dtype == np.float64
    # same seed, same draws: f32 weights are the rounded f64 weights
    assert np.allclose(m32.params["proj.weight"].data, m64.params["proj.weight"].data, atol=1e-7)
