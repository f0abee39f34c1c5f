"""Supervised data for the Dirichlet problem on the unit square.

Each sample pairs a boundary function ``g`` prescribed on the left edge
``x = 0`` with the five-point finite-difference solution of
``-lap(u) = f`` that takes ``g`` there and vanishes on the other three
edges.

Grid arrays are indexed ``u[j, i] = u(x_i, y_j)``: rows run along ``y`` and
columns along ``x``, so the left edge is column 0 and ``u[:, 0] == g``.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.fft import dst, idst

from lpfno.container import ContainerError, read_container, write_container

MANIFEST = "manifest.json"
SOLVER_TOL = 1e-10
CG_TOL = 1e-12
WORKERS_ENV = "LPFNO_WORKERS"


class ParameterDomainError(ValueError):
    pass


class SolverError(RuntimeError):
    def __init__(self, message, residual):
        super().__init__(f"{message} (relative residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class GridSpec:
    n: int
    includes_boundary: bool = True

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 4:
            raise ParameterDomainError(f"grid needs n >= 4 points per axis, got {self.n}")

    @property
    def h(self) -> float:
        return 1.0 / (self.n - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n) * self.h


# ----------------------------------------------------------------------
# boundary families


@dataclass(frozen=True)
class Gaussian:
    a: float
    mu: float
    s: float
    kind = "gaussian"

    def validate(self):
        if not self.s > 0:
            raise ParameterDomainError(f"Gaussian width must be positive, got {self.s}")

    def __call__(self, y):
        return self.a * np.exp(-((y - self.mu) ** 2) / (2.0 * self.s**2))


@dataclass(frozen=True)
class Sinusoidal:
    a: float
    k: int
    phi: float
    kind = "sinusoidal"

    def validate(self):
        if int(self.k) != self.k or self.k < 1:
            raise ParameterDomainError(f"wavenumber must be a positive integer, got {self.k}")

    def __call__(self, y):
        # k counts half periods on [0, 1]
        return self.a * np.sin(np.pi * self.k * y + self.phi)


@dataclass(frozen=True)
class Polynomial:
    coeffs: tuple
    kind = "polynomial"

    def validate(self):
        if len(self.coeffs) > 5:
            raise ParameterDomainError(f"polynomial degree must be <= 4, got {len(self.coeffs) - 1}")

    def __call__(self, y):
        # coeffs are c0..c4 in increasing degree
        return np.polynomial.polynomial.polyval(y, np.asarray(self.coeffs, dtype=float))


FAMILIES = {"gaussian": Gaussian, "sinusoidal": Sinusoidal, "polynomial": Polynomial}


def family_to_dict(fam) -> dict:
    d = asdict(fam)
    if "coeffs" in d:
        d["coeffs"] = list(d["coeffs"])
    return {"family": fam.kind, **d}


def family_from_dict(d: dict):
    d = dict(d)
    kind = d.pop("family")
    if kind == "polynomial":
        d["coeffs"] = tuple(d["coeffs"])
    return FAMILIES[kind](**d)


@dataclass
class BoundarySample:
    family: object
    values: np.ndarray
    split: str = "ID"

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise ParameterDomainError("boundary values must be finite")


def sample_boundary(family, grid: GridSpec, split="ID") -> BoundarySample:
    """Evaluate ``family`` at the left-edge nodes ``y_j = j * h``."""
    family.validate()
    return BoundarySample(family, np.asarray(family(grid.nodes), dtype=np.float64), split)


# ----------------------------------------------------------------------
# solver


@dataclass
class FieldSample:
    boundary: BoundarySample
    u: np.ndarray
    source: float
    residual_norm: float


def _rhs(g, f, n):
    """Right-hand side of the h^2-scaled interior system."""
    h = 1.0 / (n - 1)
    b = np.full((n - 2, n - 2), h * h * f)
    b[:, 0] += g[1:-1]
    return b


def _apply_stencil(U):
    """4U - (sum of neighbours) on the interior, zero-padded."""
    P = np.pad(U, 1)
    return 4.0 * U - P[:-2, 1:-1] - P[2:, 1:-1] - P[1:-1, :-2] - P[1:-1, 2:]


def residual_norm(u, f=0.0) -> float:
    """Relative five-point residual of a full grid ``u`` (boundaries included).

    ``||r||_2 / ||b||_2`` where ``b`` is the interior right-hand side
    carrying ``h^2 f`` and the boundary couplings; the absolute norm when
    ``b`` vanishes.
    """
    u = np.asarray(u, dtype=np.float64)
    n = u.shape[0]
    h = 1.0 / (n - 1)
    c = u[1:-1, 1:-1]
    r = 4.0 * c - u[:-2, 1:-1] - u[2:, 1:-1] - u[1:-1, :-2] - u[1:-1, 2:] - h * h * f
    b = np.full(c.shape, h * h * f)
    b[0, :] += u[0, 1:-1]
    b[-1, :] += u[-1, 1:-1]
    b[:, 0] += u[1:-1, 0]
    b[:, -1] += u[1:-1, -1]
    bn = np.linalg.norm(b)
    rn = np.linalg.norm(r)
    return float(rn / bn) if bn > 0 else float(rn)


def _solve_dst(b):
    """Exact solve of the interior system: sine transform in y, tridiagonal in x."""
    m = b.shape[0]
    lam = 2.0 - 2.0 * np.cos(np.pi * np.arange(1, m + 1) / (m + 1))
    bh = dst(b, type=1, axis=0)
    diag = 2.0 + lam  # per y-mode, constant along x
    # Thomas algorithm over x, vectorised across modes
    cp = np.empty_like(bh)
    dp = np.empty_like(bh)
    cp[:, 0] = -1.0 / diag
    dp[:, 0] = bh[:, 0] / diag
    for i in range(1, m):
        denom = diag + cp[:, i - 1]
        cp[:, i] = -1.0 / denom
        dp[:, i] = (bh[:, i] + dp[:, i - 1]) / denom
    x = np.empty_like(bh)
    x[:, -1] = dp[:, -1]
    for i in range(m - 2, -1, -1):
        x[:, i] = dp[:, i] - cp[:, i] * x[:, i + 1]
    return idst(x, type=1, axis=0)


def _solve_cg(b, x0, tol, maxiter):
    x = x0.copy()
    r = b - _apply_stencil(x)
    p = r.copy()
    rs = np.vdot(r, r)
    bn = np.linalg.norm(b) or 1.0
    for it in range(maxiter):
        if math.sqrt(rs) <= tol * bn:
            return x, it
        Ap = _apply_stencil(p)
        alpha = rs / np.vdot(p, Ap)
        x += alpha * p
        r -= alpha * Ap
        rs_new = np.vdot(r, r)
        p = r + (rs_new / rs) * p
        rs = rs_new
    return x, maxiter


def solve_dirichlet(g, f=0.0, grid: GridSpec | None = None, method="dst", split="ID") -> FieldSample:
    """Five-point solution of ``-lap(u) = f`` with ``u = g`` at ``x = 0``, else 0.

    ``method="dst"`` solves directly and falls back to conjugate gradients
    if the residual certificate fails; ``method="cg"`` uses CG alone.
    """
    if not isinstance(g, BoundarySample):
        g = BoundarySample(None, np.asarray(g, dtype=np.float64), split)
    gv = g.values
    n = gv.shape[0]
    if grid is None:
        grid = GridSpec(n)
    if grid.n != n:
        raise ParameterDomainError(f"boundary has {n} values but the grid has {grid.n}")
    b = _rhs(gv, f, n)
    if method == "dst":
        U = _solve_dst(b)
    elif method == "cg":
        U = np.zeros_like(b)
    else:
        raise ValueError(f"unknown solver method {method!r}")

    u = np.zeros((n, n))
    u[:, 0] = gv
    u[1:-1, 1:-1] = U
    res = residual_norm(u, f)
    if res > SOLVER_TOL:
        cap = 10 * n * n
        U, _ = _solve_cg(b, U, CG_TOL, cap)
        u[1:-1, 1:-1] = U
        res = residual_norm(u, f)
        if res > SOLVER_TOL:
            raise SolverError(f"conjugate gradients did not converge in {cap} iterations", res)
    return FieldSample(g, u, float(f), res)


# ----------------------------------------------------------------------
# parameter ranges and dataset generation

ID_RANGES = {
    "gaussian": {"a": [0.5, 1.5], "mu": [0.3, 0.7], "s": [0.05, 0.15]},
    "sinusoidal": {"a": [0.5, 1.5], "k": [1, 2, 3], "phi": [0.0, math.pi]},
}
# Out-of-distribution draws come from bands just outside the ID interval,
# each band half the ID width.  For strictly positive parameters (a, s) the
# lower band is [lo/2, lo) instead, which keeps them positive.
OOD_RANGES = {
    "gaussian": {"a": [[0.25, 0.5], [1.5, 2.0]], "mu": [[0.1, 0.3], [0.7, 0.9]],
                 "s": [[0.025, 0.05], [0.15, 0.2]]},
    "sinusoidal": {"a": [[0.25, 0.5], [1.5, 2.0]], "k": [4, 5],
                   "phi": [[-math.pi / 2, 0.0], [math.pi, 1.5 * math.pi]]},
    "polynomial": {"coeffs": [-1.0, 1.0]},
}
RNG_ALGORITHM = "numpy PCG64"


def default_ranges(split):
    if split == "ID":
        return ID_RANGES
    if split == "OOD":
        return OOD_RANGES
    raise ParameterDomainError(f"split must be 'ID' or 'OOD', got {split!r}")


def _draw_interval(rng, spec):
    """Uniform on one interval [lo, hi] or on a union of intervals (band picked uniformly)."""
    if isinstance(spec[0], (list, tuple)):
        band = spec[int(rng.integers(len(spec)))]
        return float(rng.uniform(band[0], band[1]))
    return float(rng.uniform(spec[0], spec[1]))


def _check_interval(name, spec):
    bands = spec if isinstance(spec[0], (list, tuple)) else [spec]
    for lo, hi in bands:
        if not lo <= hi:
            raise ParameterDomainError(f"range for {name} is empty: [{lo}, {hi}]")


def draw_family(rng, kind, ranges):
    r = ranges[kind]
    if kind == "gaussian":
        fam = Gaussian(_draw_interval(rng, r["a"]), _draw_interval(rng, r["mu"]),
                       _draw_interval(rng, r["s"]))
    elif kind == "sinusoidal":
        a = _draw_interval(rng, r["a"])
        k = int(r["k"][int(rng.integers(len(r["k"])))])
        fam = Sinusoidal(a, k, _draw_interval(rng, r["phi"]))
    elif kind == "polynomial":
        lo, hi = r["coeffs"]
        fam = Polynomial(tuple(float(c) for c in rng.uniform(lo, hi, size=5)))
    else:
        raise ParameterDomainError(f"unknown boundary family {kind!r}")
    fam.validate()
    return fam


@dataclass
class GenConfig:
    n: int = 32
    count: int = 2048
    families: list = field(default_factory=lambda: ["gaussian", "sinusoidal"])
    split: str = "ID"
    seed: int = 0
    source: float = 0.0
    ranges: dict | None = None

    def resolved_ranges(self):
        return self.ranges if self.ranges is not None else default_ranges(self.split)

    def validate(self):
        GridSpec(self.n)
        if self.count < 0:
            raise ParameterDomainError(f"count must be non-negative, got {self.count}")
        if not self.families:
            raise ParameterDomainError("at least one boundary family is required")
        ranges = self.resolved_ranges()
        for kind in self.families:
            if kind not in ranges:
                raise ParameterDomainError(f"no parameter ranges for family {kind!r} in split {self.split}")
            for name, spec in ranges[kind].items():
                if name != "k":
                    _check_interval(f"{kind}.{name}", spec)


def family_counts(count, families):
    base, extra = divmod(count, len(families))
    return [base + (1 if i < extra else 0) for i in range(len(families))]


def draw_parameters(cfg: GenConfig):
    """All boundary families for a dataset, in storage order.

    One PCG64 stream seeded with ``cfg.seed``; families fill consecutive
    blocks in declared order (counts split evenly, remainder to the first
    families) and each sample draws its parameters in field order.
    """
    cfg.validate()
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    ranges = cfg.resolved_ranges()
    out = []
    for kind, cnt in zip(cfg.families, family_counts(cfg.count, cfg.families)):
        out.extend(draw_family(rng, kind, ranges) for _ in range(cnt))
    return out


def _solve_one(args):
    fam, n, f, split = args
    return solve_dirichlet(sample_boundary(fam, GridSpec(n), split), f, GridSpec(n))


def _workers():
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


@dataclass
class Dataset:
    manifest: dict
    g: np.ndarray  # [count, n]
    u: np.ndarray  # [count, n, n]
    source: np.ndarray  # [count]
    residual: np.ndarray  # [count]

    def __len__(self):
        return self.g.shape[0]

    @property
    def n(self):
        return self.manifest["grid"]["n"]

    def families(self):
        return [family_from_dict(d) for d in self.manifest["samples"]]

    def __getitem__(self, i) -> FieldSample:
        fam = family_from_dict(self.manifest["samples"][i])
        b = BoundarySample(fam, self.g[i], self.manifest["split"])
        return FieldSample(b, self.u[i], float(self.source[i]), float(self.residual[i]))

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (self.manifest == other.manifest
                and all(np.array_equal(getattr(self, k), getattr(other, k))
                        for k in ("g", "u", "source", "residual")))


def generate_dataset(cfg: GenConfig, workers: int | None = None) -> Dataset:
    fams = draw_parameters(cfg)
    n = cfg.n
    workers = _workers() if workers is None else workers
    jobs = [(fam, n, cfg.source, cfg.split) for fam in fams]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_solve_one, jobs, chunksize=32))
    else:
        results = [_solve_one(j) for j in jobs]
    count = len(results)
    g = np.zeros((count, n))
    u = np.zeros((count, n, n))
    for i, s in enumerate(results):
        g[i] = s.boundary.values
        u[i] = s.u
    manifest = {
        "kind": "dataset",
        "grid": {"n": n, "includes_boundary": True, "h": 1.0 / (n - 1)},
        "layout": "u[j, i] = u(x_i, y_j); left edge x=0 is column 0",
        "split": cfg.split,
        "families": list(cfg.families),
        "family_counts": dict(zip(cfg.families, family_counts(cfg.count, cfg.families))),
        "ranges": cfg.resolved_ranges(),
        "seed": cfg.seed,
        "rng": RNG_ALGORITHM,
        "count": count,
        "source": cfg.source,
        "count_interpretation": "total over all families",
        "samples": [family_to_dict(f) for f in fams],
    }
    return Dataset(manifest, g, u,
                   np.full(count, float(cfg.source)),
                   np.array([s.residual_norm for s in results], dtype=np.float64))


def save_dataset(d: Dataset, path):
    arrays = {"g": d.g, "u": d.u, "source": d.source, "residual": d.residual}
    write_container(path, d.manifest, arrays, MANIFEST)


def load_dataset(path) -> Dataset:
    doc, arrays = read_container(path, MANIFEST)
    if doc.get("kind") != "dataset":
        raise ContainerError(f"{path} is not a dataset container")
    doc.pop("arrays")
    doc.pop("format_version")
    missing = {"g", "u", "source", "residual"} - set(arrays)
    if missing:
        raise ContainerError(f"dataset {path} lacks arrays {sorted(missing)}")
    count = doc["count"]
    for name, arr in arrays.items():
        if arr.shape[0] != count:
            raise ContainerError(
                f"manifest declares {count} samples but blob {name} holds {arr.shape[0]}"
            )
    if len(doc["samples"]) != count:
        raise ContainerError(f"manifest declares {count} samples but lists {len(doc['samples'])}")
    return Dataset(doc, arrays["g"], arrays["u"], arrays["source"], arrays["residual"])
