"""Central finite-difference verification of reverse-mode gradients."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from lpfno.tensor import Tensor


@dataclass
class GradReport:
    name: str
    max_rel_err: float
    worst_input: int
    worst_index: tuple
    analytic: float
    numeric: float
    tolerance: float
    n_checked: int

    @property
    def passed(self) -> bool:
        return bool(self.max_rel_err <= self.tolerance)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{status} {self.name}: max rel err {self.max_rel_err:.3e} "
                f"(tol {self.tolerance:.0e}, {self.n_checked} coords)")


def gradcheck(fn, inputs, step=1e-5, tolerance=1e-4, atol=1e-8, name="op"):
    """Compare ``backward()`` of the scalar ``fn(*inputs)`` with central differences.

    Every real coordinate of every input that requires grad is perturbed by
    ``+-step``; complex inputs are perturbed along the real and imaginary
    parts separately.  The relative error of a coordinate is
    ``|a - n| / max(|a|, |n|, atol)``.
    """
    for t in inputs:
        t.grad = None
    out = fn(*inputs)
    if out.data.size != 1:
        raise ValueError("gradcheck needs a scalar-valued function")
    out.backward()
    analytic = [None if t.grad is None else np.array(t.grad) for t in inputs]

    worst = (0.0, -1, (), 0.0, 0.0)
    count = 0
    for i, t in enumerate(inputs):
        if not t.requires_grad:
            continue
        cplx = np.iscomplexobj(t.data)
        ga = analytic[i] if analytic[i] is not None else np.zeros_like(t.data)
        parts = (1.0, 1j) if cplx else (1.0,)
        for idx in np.ndindex(t.shape):
            orig = t.data[idx]
            for unit in parts:
                t.data[idx] = orig + step * unit
                fp = float(np.real(fn(*inputs).data))
                t.data[idx] = orig - step * unit
                fm = float(np.real(fn(*inputs).data))
                t.data[idx] = orig
                num = (fp - fm) / (2.0 * step)
                ana = float(ga[idx].real if unit == 1.0 else np.imag(ga[idx]))
                err = abs(ana - num) / max(abs(ana), abs(num), atol)
                count += 1
                if err > worst[0] or worst[1] < 0:
                    worst = (err, i, idx + (("re",) if cplx and unit == 1.0 else ("im",) if cplx else ()), ana, num)
    for t in inputs:
        t.grad = None
    return GradReport(name, worst[0], worst[1], worst[2], worst[3], worst[4], tolerance, count)


def weighted_sum(out: Tensor, weights: np.ndarray) -> Tensor:
    """Reduce a tensor to a scalar with fixed weights (avoids symmetric cancellation)."""
    return (out * weights).sum()


# ----------------------------------------------------------------------
# the standard suite: every differentiable primitive plus both tiny models

TINY_LPFNO = {"n_e": 4, "modes": 4, "layers": 1}
TINY_FNO2D = {"width": 4, "modes": 3, "layers": 2, "proj_hidden": 8}
MODEL_STEP = 1e-4


def _cases(rng):
    # imported here so the checker itself stays independent of the layers
    from lpfno import functional as F
    from lpfno import models as M
    from lpfno.tensor import parameter

    def P(*shape, cplx=False):
        a = rng.standard_normal(shape)
        if cplx:
            a = a + 1j * rng.standard_normal(shape)
        return parameter(a)

    def away_from_zero(*shape):
        return parameter(np.sign(rng.standard_normal(shape)) * rng.uniform(0.1, 1.0, shape))

    def W(shape):
        return rng.standard_normal(shape)

    def reduce(f, shape):
        w = W(shape)
        return lambda *a: weighted_sum(f(*a), w)

    cases = []

    def add(name, f, inputs, out_shape, step=1e-5):
        cases.append((name, reduce(f, out_shape), inputs, step))

    add("tensor.add", lambda a, b: a + b, [P(3, 4), P(4)], (3, 4))
    add("tensor.sub", lambda a, b: a - b, [P(3, 4), P(3, 1)], (3, 4))
    add("tensor.mul", lambda a, b: a * b, [P(3, 4), P(3, 4)], (3, 4))
    add("tensor.mul.complex", lambda a, b: a * b, [P(3, 4, cplx=True), P(3, 4, cplx=True)], (3, 4))
    add("tensor.div", lambda a: a / 3.0, [P(5)], (5,))
    add("tensor.pow", lambda a: a**3, [P(5)], (5,))
    add("tensor.sum", lambda a: a.sum(axis=1), [P(3, 4)], (3,))
    add("tensor.reshape", lambda a: a.reshape(6, 2), [P(3, 4)], (6, 2))
    add("tensor.transpose", lambda a: a.transpose(2, 0, 1), [P(2, 3, 4)], (4, 2, 3))
    add("tensor.getitem", lambda a: a[1:, ::2], [P(3, 4)], (2, 2))
    add("pointwise_linear", F.pointwise_linear, [P(2, 5, 3), P(3, 4), P(4)], (2, 5, 4))
    add("pointwise_linear.channels_first", lambda x, w, b: F.pointwise_linear(x, w, b, 1),
        [P(2, 3, 4, 5), P(3, 2), P(2)], (2, 2, 4, 5))
    add("gelu", F.gelu, [P(4, 5)], (4, 5))
    add("relu", F.relu, [away_from_zero(4, 5)], (4, 5))
    add("tanh", F.tanh, [P(4, 5)], (4, 5))
    cases.append(("mse_loss", lambda a, b: F.mse_loss(a, b), [P(3, 4), P(3, 4)], 1e-5))
    add("concat", lambda a, b: F.concat([a, b], axis=-1), [P(2, 3), P(2, 2)], (2, 5))
    for n in (8, 7):
        add(f"rfft_1d.n{n}", F.rfft_1d, [P(2, n)], (2, n // 2 + 1))
        add(f"irfft_1d.n{n}", lambda X, n=n: F.irfft_1d(X, n), [P(2, n // 2 + 1, cplx=True)], (2, n))
    add("rfft_2d", F.rfft_2d, [P(2, 6, 8)], (2, 6, 5))
    add("irfft_2d", lambda X: F.irfft_2d(X, (6, 8)), [P(2, 6, 5, cplx=True)], (2, 6, 8))
    add("fft_axis", lambda X: F.fft_axis(X, axis=1), [P(2, 8, 3, cplx=True)], (2, 8, 3))
    add("ifft_axis", lambda X: F.fft_axis(X, axis=1, inverse=True), [P(2, 8, 3, cplx=True)], (2, 8, 3))
    for be in ("dft", "fft"):
        add(f"spectral_conv_1d.{be}", lambda h, R, be=be: F.spectral_conv_1d(h, R, backend=be),
            [P(2, 8, 3), P(4, 3, 2, cplx=True)], (2, 8, 2))
        add(f"spectral_conv_2d.{be}", lambda h, R, be=be: F.spectral_conv_2d(h, R, backend=be),
            [P(2, 3, 8, 6), P(2, 3, 3, 3, 2, cplx=True)], (2, 2, 8, 6))
    add("lifting_product_1d2d", M.lifting_product_1d2d, [P(2, 5, 3), P(2, 5, 3)], (2, 5, 5, 3))
    add("lifting_product_2d3d", M.lifting_product_2d3d, [P(3, 4, 2), P(3, 5, 2)], (5, 3, 4, 2))
    add("lift_project", M.lift_project, [P(2, 5, 3), P(2, 6, 3), P(3, 2), P(2)], (2, 5, 6, 2))

    g = rng.standard_normal((2, 8, 1))
    for kind, cfg in (("lpfno", TINY_LPFNO), ("fno2d", TINY_FNO2D)):
        model = M.Model.create(kind, dict(cfg), seed=int(rng.integers(2**31)), precision="f64")
        names = list(model.params)
        w = W((2, 8, 8, 1))

        def f(*ps, model=model, names=names, w=w):
            model.params = dict(zip(names, ps))
            return weighted_sum(model(g), w)

        cases.append((f"model.{kind}", f, [model.params[k] for k in names], MODEL_STEP))
    return cases


def run_suite(seed=0, tolerance=1e-4, only=None):
    """Gradcheck every primitive and both tiny models in f64; one report per case."""
    rng = np.random.Generator(np.random.PCG64(seed))
    reports = []
    for name, fn, inputs, step in _cases(rng):
        if only and not any(name.startswith(o) for o in only):
            continue
        reports.append(gradcheck(fn, inputs, step=step, tolerance=tolerance, name=name))
    return reports
