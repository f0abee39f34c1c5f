"""Training, evaluation and the resolution-independence experiments.

Relative errors are per sample over all grid nodes (boundary included);
a test-set metric is the plain mean over its samples.
"""
from __future__ import annotations

import csv
import json
import platform
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

import lpfno
from lpfno import functional as F
from lpfno.container import ContainerError, read_container, write_container
from lpfno.models import MODEL_KINDS, Model, build_config
from lpfno.optim import Adam, step_lr
from lpfno.poisson import GenConfig, generate_dataset, load_dataset, save_dataset
from lpfno.tensor import Tensor, as_dtype

CHECKPOINT = "checkpoint.json"
REFERENCE_COUNTS = {"lpfno": 568_241, "fno2d": 527_713}
MODEL_ALIASES = {"lpfno": "lpfno", "LPFNO": "lpfno", "fno2d": "fno2d", "FNO2D_PADDED": "fno2d"}
TABLE_NAMES = {"lpfno": "TP-FNO", "fno2d": "FNO2d", "tencoder": "Tencoder"}
OOD_FAMILIES = ("gaussian", "sinusoidal", "polynomial")
OOD_RESOLUTION = 64


class DegenerateSampleError(ValueError):
    """Target with zero norm; its relative error is undefined."""


class ResolutionError(ValueError):
    pass


class NumericalFailure(RuntimeError):
    def __init__(self, message, epoch=None, batch=None):
        super().__init__(message)
        self.epoch = epoch
        self.batch = batch


# ----------------------------------------------------------------------
# metrics


def rel_norm(pred, target, p=2) -> float:
    """``||pred - target||_p / ||target||_p`` over every node of one sample."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"rel_norm: shapes differ {pred.shape} vs {target.shape}")
    if p not in (1, 2):
        raise ValueError(f"rel_norm: p must be 1 or 2, got {p}")
    den = np.linalg.norm(target.ravel(), ord=p)
    if den == 0.0:
        raise DegenerateSampleError("target has zero norm")
    return float(np.linalg.norm((pred - target).ravel(), ord=p) / den)


def per_sample_errors(pred, target, p=2):
    """Relative errors along axis 0; zero-norm targets come back as NaN."""
    pred = np.asarray(pred, dtype=np.float64).reshape(len(pred), -1)
    target = np.asarray(target, dtype=np.float64).reshape(len(target), -1)
    if pred.shape != target.shape:
        raise ValueError(f"per_sample_errors: shapes differ {pred.shape} vs {target.shape}")
    if p == 1:
        num, den = np.abs(pred - target).sum(axis=1), np.abs(target).sum(axis=1)
    elif p == 2:
        num = np.sqrt(((pred - target) ** 2).sum(axis=1))
        den = np.sqrt((target**2).sum(axis=1))
    else:
        raise ValueError(f"p must be 1 or 2, got {p}")
    out = np.full(len(den), np.nan)
    ok = den > 0
    out[ok] = num[ok] / den[ok]
    return out


@dataclass
class SetMetrics:
    name: str
    family: str
    split: str
    n: int
    rel_l1: float
    rel_l2: float
    count: int
    degenerate: int = 0
    mse: float = 0.0


@dataclass
class MetricsReport:
    model: str
    train_n: int
    seed: int
    sets: list = field(default_factory=list)  # SetMetrics
    curve: list = field(default_factory=list)  # (epoch, train_mse, test_mse)
    meta: dict = field(default_factory=dict)

    def to_dict(self):
        d = asdict(self)
        d["curve"] = [list(r) for r in self.curve]
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["sets"] = [SetMetrics(**s) for s in d.get("sets", [])]
        d["curve"] = [tuple(r) for r in d.get("curve", [])]
        return cls(**d)

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def lookup(self, split, n, family=None):
        return [s for s in self.sets if s.split == split and s.n == n
                and (family is None or s.family == family)]


def pooled(sets, attr="rel_l2"):
    """Sample-weighted mean of ``attr`` over several sets (None if empty)."""
    total = sum(s.count for s in sets)
    if total == 0:
        return None
    return sum(getattr(s, attr) * s.count for s in sets) / total


def write_curve_csv(curve, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "train_mse", "test_mse"])
        for row in curve:
            w.writerow([row[0], repr(float(row[1])), repr(float(row[2]))])


# ----------------------------------------------------------------------
# experiment config


@dataclass
class ExperimentConfig:
    model: str = "lpfno"
    model_config: dict = field(default_factory=dict)
    train_set: str = ""
    test_sets: list = field(default_factory=list)
    curve_sets: list = field(default_factory=list)  # empty: ID test sets at the training resolution
    epochs: int = 200
    batch_size: int = 128
    base_lr: float = 1e-3
    step_size: int = 100
    gamma: float = 0.1
    seed: int = 0
    precision: str = "f32"
    eval_batch: int = 64

    @classmethod
    def from_dict(cls, d: dict):
        known = set(cls.__dataclass_fields__)
        for key in d:
            if key not in known:
                raise KeyError(f"unknown experiment key {key!r}; known keys: {sorted(known)}")
        return cls(**d)

    def kind(self):
        try:
            return MODEL_ALIASES[self.model]
        except KeyError:
            raise ValueError(f"unknown model kind {self.model!r}; expected one of {sorted(MODEL_ALIASES)}")

    def validate(self):
        kind = self.kind()
        build_config(kind, self.model_config)
        as_dtype(self.precision)
        for name in ("epochs", "batch_size", "step_size", "eval_batch"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not self.base_lr > 0:
            raise ValueError(f"base_lr must be positive, got {self.base_lr}")
        for p in [self.train_set, *self.test_sets, *self.curve_sets]:
            if not p or not Path(p).exists():
                raise FileNotFoundError(f"dataset not found: {p!r}")


def _channels(ds):
    return 1 if ds.u.ndim == 3 else ds.u.shape[-1]


def _targets(ds):
    return ds.u[..., None] if ds.u.ndim == 3 else ds.u


def _set_label(ds):
    fams = ds.manifest.get("families", [])
    return fams[0] if len(fams) == 1 else "+".join(fams)


# ----------------------------------------------------------------------
# checkpoints


def save_checkpoint(model: Model, path, extra=None):
    header = {
        "kind": "checkpoint",
        "model": model.kind,
        "model_config": model.config_dict(),
        "registry": list(model.params),
        "precision": model.precision,
    }
    header.update(extra or {})
    arrays = {name: p.data for name, p in model.params.items()}
    return write_container(path, header, arrays, CHECKPOINT)


def load_checkpoint(path):
    path = Path(path)
    if not (path / CHECKPOINT).exists():
        raise FileNotFoundError(f"no checkpoint at {path}")
    doc, arrays = read_container(path, CHECKPOINT)
    if doc.get("kind") != "checkpoint":
        raise ContainerError(f"{path} is not a checkpoint container")
    missing = [n for n in doc["registry"] if n not in arrays]
    if missing:
        raise ContainerError(f"checkpoint {path} lacks parameters {missing}")
    model = Model.create(doc["model"], dict(doc["model_config"]), seed=doc.get("seed", 0),
                         precision=doc.get("precision", "f32"))
    for name in doc["registry"]:
        if model.params[name].shape != arrays[name].shape:
            raise ContainerError(
                f"parameter {name}: checkpoint shape {arrays[name].shape} "
                f"!= model shape {model.params[name].shape}"
            )
        model.params[name].data = np.array(arrays[name], dtype=model.params[name].data.dtype)
    return model, doc


# ----------------------------------------------------------------------
# evaluation


def check_resolution(model: Model, n, m=1):
    if n < 2:
        raise ResolutionError(f"resolution {n} leaves no usable Fourier mode")
    if m != model.config.m:
        raise ResolutionError(f"data has {m} channels, model expects {model.config.m}")


def predict(model: Model, g, batch_size=64):
    check_resolution(model, g.shape[1], 1 if g.ndim == 2 else g.shape[-1])
    return model.predict(g, batch_size)


def evaluate_dataset(model: Model, ds, name="", batch_size=64, return_predictions=False):
    check_resolution(model, ds.n, _channels(ds))
    pred = predict(model, ds.g, batch_size).astype(np.float64)
    target = _targets(ds)
    l1 = per_sample_errors(pred, target, 1)
    l2 = per_sample_errors(pred, target, 2)
    ok = np.isfinite(l2)
    sm = SetMetrics(
        name=name,
        family=_set_label(ds),
        split=ds.manifest["split"],
        n=int(ds.n),
        rel_l1=float(l1[ok].mean()) if ok.any() else float("nan"),
        rel_l2=float(l2[ok].mean()) if ok.any() else float("nan"),
        count=int(ok.sum()),
        degenerate=int((~ok).sum()),
        mse=float(((pred - target) ** 2).mean()),
    )
    return (sm, pred) if return_predictions else sm


def evaluate(model: Model, test_sets: dict, batch_size=64, train_n=0, seed=0) -> MetricsReport:
    """Mean relative L1/L2 of ``model`` on each named dataset (path or Dataset)."""
    sets = []
    for name, ds in test_sets.items():
        if not hasattr(ds, "g"):
            ds = load_dataset(ds)
        sets.append(evaluate_dataset(model, ds, str(name), batch_size))
    return MetricsReport(model=model.kind, train_n=int(train_n), seed=int(seed), sets=sets)


def _dataset_mse(model, datasets, batch_size):
    sq, cnt = 0.0, 0
    for ds in datasets:
        pred = model.predict(ds.g, batch_size).astype(np.float64)
        sq += float(((pred - _targets(ds)) ** 2).sum())
        cnt += _targets(ds).size
    return sq / cnt if cnt else float("nan")


# ----------------------------------------------------------------------
# training


@dataclass
class TrainResult:
    model: Model
    report: MetricsReport
    steps: int
    wall_time: float
    checkpoint: str | None = None


def _versions():
    import scipy

    return {"lpfno": lpfno.__version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__, "platform": platform.platform()}


def param_diagnostic(model: Model):
    ref = REFERENCE_COUNTS[model.kind]
    c2, c1 = model.count(2), model.count(1)
    return {"count": c2, "count_complex_as_one": c1, "reference": ref,
            "deviation": c2 - ref, "deviation_complex_as_one": c1 - ref}


def write_run_log(path, **fields):
    doc = {"versions": _versions(), "argv": list(sys.argv)}
    doc.update(fields)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, default=str)
        fh.write("\n")


def train(cfg: ExperimentConfig, out=None, progress=None, datasets=None) -> TrainResult:
    """Mini-batch MSE training with Adam and a step learning-rate schedule.

    ``datasets`` optionally maps paths to already loaded datasets.  With
    ``out`` set, the checkpoint, metrics, loss curve and run-log are
    written there.  ``progress`` receives one line per epoch.
    """
    cfg.validate()
    t0 = time.perf_counter()
    cache = dict(datasets or {})

    def load(p):
        if p not in cache:
            cache[p] = load_dataset(p)
        return cache[p]

    train_ds = load(cfg.train_set)
    tests = {p: load(p) for p in cfg.test_sets}
    if cfg.curve_sets:
        curve = [load(p) for p in cfg.curve_sets]
    else:
        curve = [d for d in tests.values() if d.manifest["split"] == "ID" and d.n == train_ds.n]
    m = _channels(train_ds)
    for p, ds in [*tests.items(), *zip(cfg.curve_sets, curve)]:
        if _channels(ds) != m:
            raise ValueError(f"dataset {p} has {_channels(ds)} channels, training set has {m}")
    if cfg.batch_size > len(train_ds):
        raise ValueError(f"batch_size {cfg.batch_size} exceeds training set size {len(train_ds)}")

    kind = cfg.kind()
    model = Model.create(kind, dict(cfg.model_config), seed=cfg.seed, precision=cfg.precision)
    check_resolution(model, train_ds.n, m)
    dtype = as_dtype(cfg.precision)
    g_all = train_ds.g.astype(dtype)
    u_all = _targets(train_ds).astype(dtype)
    opt = Adam(model.params, lr=cfg.base_lr)
    # parameter init uses the seed directly; shuffling draws from its own stream
    shuffle_rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([cfg.seed, 1])))

    history, steps = [], 0
    count = len(train_ds)
    for epoch in range(cfg.epochs):
        lr = step_lr(epoch, cfg.base_lr, cfg.step_size, cfg.gamma)
        order = shuffle_rng.permutation(count)
        sq = 0.0
        for b, start in enumerate(range(0, count, cfg.batch_size)):
            idx = order[start : start + cfg.batch_size]
            opt.zero_grad()
            loss = F.mse_loss(model(g_all[idx]), Tensor(u_all[idx]))
            value = float(loss.data)
            if not np.isfinite(value):
                raise NumericalFailure(f"non-finite loss at epoch {epoch}, batch {b}", epoch, b)
            loss.backward()
            try:
                opt.step(lr)
            except FloatingPointError as exc:
                raise NumericalFailure(f"{exc} at epoch {epoch}, batch {b}", epoch, b) from exc
            steps += 1
            sq += value * len(idx)
        train_mse = sq / count
        test_mse = _dataset_mse(model, curve, cfg.eval_batch) if curve else float("nan")
        history.append((epoch + 1, train_mse, test_mse))
        if progress is not None:
            progress(f"epoch {epoch + 1}/{cfg.epochs} lr {lr:.3e} "
                     f"train_mse {train_mse:.6e} test_mse {test_mse:.6e}")

    report = evaluate(model, tests, cfg.eval_batch, train_n=train_ds.n, seed=cfg.seed)
    report.curve = history
    wall = time.perf_counter() - t0
    report.meta = {"steps": steps, "wall_time_s": wall, "precision": cfg.precision,
                   "param_count": param_diagnostic(model)}
    result = TrainResult(model, report, steps, wall)

    if out is not None:
        out = Path(out)
        if not out.exists():
            raise FileNotFoundError(f"output directory does not exist: {out}")
        ck = out / "checkpoint"
        save_checkpoint(model, ck, {"seed": cfg.seed, "epoch": cfg.epochs, "train_n": int(train_ds.n),
                                     "experiment": asdict(cfg)})
        result.checkpoint = str(ck)
        report.save(out / "metrics.json")
        write_curve_csv(history, out / "curve.csv")
        resolutions = sorted({train_ds.n, *(d.n for d in tests.values())})
        write_run_log(out / "run.json", command="train", config=asdict(cfg), seed=cfg.seed,
                      param_count=param_diagnostic(model), wall_time_s=wall, steps=steps,
                      mode_clamp={str(n): model.effective_modes(n) for n in resolutions},
                      final_test_mse=history[-1][2] if history else None)
    return result


# ----------------------------------------------------------------------
# resolution matrix and reports


@dataclass
class ResolutionMatrix:
    model: str
    train_res: list
    test_res: list
    cells: dict  # (train_n, test_n) -> mean relative L2

    def get(self, train_n, test_n):
        return self.cells.get((train_n, test_n))

    def to_rows(self):
        return [{"model": self.model, "train_res": a, "test_res": b, "rel_l2": self.cells.get((a, b))}
                for a in self.train_res for b in self.test_res]

    def to_dict(self):
        return {"model": self.model, "train_res": self.train_res, "test_res": self.test_res,
                "rel_l2": {str(a): {str(b): self.cells.get((a, b)) for b in self.test_res}
                           for a in self.train_res}}

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["train_res \\ test_res", *self.test_res])
            for a in self.train_res:
                w.writerow([a, *[self.cells.get((a, b), "") for b in self.test_res]])

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)
            fh.write("\n")


def resolution_matrix(kind, checkpoints: dict, test_sets: dict, batch_size=64, split="ID"):
    """Cross-evaluate checkpoints (train_n -> path) on test sets (test_n -> list of paths).

    Each cell is the sample-weighted mean relative L2 over the test sets
    of that resolution and split.
    """
    kind = MODEL_ALIASES.get(kind, kind)
    cells, reports = {}, []
    loaded = {}
    for test_n, paths in test_sets.items():
        loaded[test_n] = [(str(p), load_dataset(p)) for p in paths]
    for train_n, ck in checkpoints.items():
        if not Path(ck, CHECKPOINT).exists():
            raise FileNotFoundError(f"missing checkpoint for train resolution {train_n}: {ck}")
        model, doc = load_checkpoint(ck)
        if model.kind != kind:
            raise ValueError(f"checkpoint {ck} holds a {model.kind} model, expected {kind}")
        sets = []
        for test_n, items in loaded.items():
            for name, ds in items:
                sets.append(evaluate_dataset(model, ds, name, batch_size))
            cells[(int(train_n), int(test_n))] = pooled(
                [s for s in sets if s.n == int(test_n) and s.split == split])
        reports.append(MetricsReport(kind, int(train_n), int(doc.get("seed", 0)), sets))
    mat = ResolutionMatrix(kind, sorted(int(a) for a in checkpoints),
                           sorted(int(b) for b in test_sets), cells)
    return mat, reports


REPORT_FIELDS = ["model", "train_res", "test_res", "family", "split", "rel_l1", "rel_l2",
                 "count", "degenerate", "seed"]


def report_rows(reports):
    rows = []
    for r in reports:
        for s in r.sets:
            rows.append({"model": r.model, "train_res": r.train_n, "test_res": s.n, "family": s.family,
                         "split": s.split, "rel_l1": s.rel_l1, "rel_l2": s.rel_l2,
                         "count": s.count, "degenerate": s.degenerate, "seed": r.seed})
    rows.sort(key=lambda d: (d["model"], d["train_res"], d["test_res"], d["split"], d["family"]))
    return rows


def write_report_csv(reports, path):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=REPORT_FIELDS)
        w.writeheader()
        for row in report_rows(reports):
            w.writerow(row)


def tables(reports):
    """Accuracy table (native ID, OOD at 64) and train x test resolution matrices (ID L2).

    Later reports override earlier ones for the same cell.  The Tencoder
    rows are kept as empty slots.
    """
    by_model = {}
    for r in reports:
        by_model.setdefault(r.model, {}).setdefault(r.train_n, []).extend(r.sets)

    def metric_pair(sets):
        if not sets:
            return None
        return {"rel_l1": pooled(sets, "rel_l1"), "rel_l2": pooled(sets, "rel_l2")}

    t1, t2 = [], {}
    for model in ("lpfno", "fno2d", "tencoder"):
        runs = by_model.get(model, {})
        for train_n in sorted(runs) or [None]:
            sets = runs.get(train_n, [])
            row = {"model": TABLE_NAMES[model], "resolution": train_n,
                   "ID": metric_pair([s for s in sets if s.split == "ID" and s.n == train_n])}
            for fam in OOD_FAMILIES:
                row[f"OOD/{fam}"] = metric_pair(
                    [s for s in sets if s.split == "OOD" and s.n == OOD_RESOLUTION and s.family == fam])
            t1.append(row)
        test_res = sorted({s.n for sets in runs.values() for s in sets if s.split == "ID"})
        t2[TABLE_NAMES[model]] = {
            str(a): {str(b): pooled([s for s in runs[a] if s.split == "ID" and s.n == b])
                     for b in test_res}
            for a in sorted(runs)
        }
    return {"accuracy": {"columns": ["ID", *[f"OOD/{f}" for f in OOD_FAMILIES]],
                         "ood_resolution": OOD_RESOLUTION, "rows": t1},
            "resolution": {"metric": "mean relative L2, ID", "rows": "train_res", "columns": "test_res",
                           "models": t2}}


def write_tables_json(reports, path):
    with open(path, "w") as fh:
        json.dump(tables(reports), fh, indent=1)
        fh.write("\n")


# ----------------------------------------------------------------------
# benchmark data


def suite_seed(seed, n, split, family, role):
    """Distinct, reproducible seed for one dataset of the benchmark suite."""
    tags = {"ID": 0, "OOD": 1, "train": 0, "test": 1}
    fam = {"all": 0, "gaussian": 1, "sinusoidal": 2, "polynomial": 3}[family]
    ss = np.random.SeedSequence([seed, n, tags[split], fam, tags[role]])
    return int(ss.generate_state(1)[0])


def generate_suite(root, train_res=(32,), test_res=(32, 64), ood_res=(OOD_RESOLUTION,),
                   train_count=2048, test_count=256, seed=0, workers=None):
    """Write train and per-family test sets under ``root``; returns name -> path.

    Names are ``train_<n>_<count>``, ``test_ID_<family>_<n>`` and
    ``test_OOD_<family>_<n>``.
    """
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    out = {}

    def make(name, cfg):
        path = root / name
        if not (path / "manifest.json").exists():
            save_dataset(generate_dataset(cfg, workers), path)
        out[name] = str(path)

    for n in train_res:
        make(f"train_{n}_{train_count}", GenConfig(n=n, count=train_count, split="ID",
                                     seed=suite_seed(seed, n, "ID", "all", "train")))
    for n in test_res:
        for fam in ("gaussian", "sinusoidal"):
            make(f"test_ID_{fam}_{n}", GenConfig(n=n, count=test_count, families=[fam], split="ID",
                                                 seed=suite_seed(seed, n, "ID", fam, "test")))
    for n in ood_res:
        for fam in OOD_FAMILIES:
            make(f"test_OOD_{fam}_{n}", GenConfig(n=n, count=test_count, families=[fam], split="OOD",
                                                  seed=suite_seed(seed, n, "OOD", fam, "test")))
    return out


# ----------------------------------------------------------------------
# the reference runs behind the acceptance criteria

BENCH_RUNS = {
    "lpfno_smoke": dict(model="lpfno", train_n=32, train_count=512, epochs=50,
                        test_res=(32, 64), ood=False),
    "lpfno_32": dict(model="lpfno", train_n=32, train_count=2048, epochs=200, test_res=(32, 64)),
    "fno2d_32": dict(model="fno2d", train_n=32, train_count=2048, epochs=200, test_res=(32, 64)),
    "fno2d_64": dict(model="fno2d", train_n=64, train_count=2048, epochs=200, test_res=(64,)),
    "lpfno_64": dict(model="lpfno", train_n=64, train_count=2048, epochs=200, test_res=(32, 64)),
}


def bench_config(name, data_root, seed=0, **overrides) -> ExperimentConfig:
    """Experiment config for one reference run; data is generated on demand."""
    spec = dict(BENCH_RUNS[name])
    spec.update(overrides)
    ood = spec.get("ood", True)
    paths = generate_suite(data_root, train_res=(spec["train_n"],), test_res=spec["test_res"],
                           ood_res=(OOD_RESOLUTION,) if ood else (), train_count=spec["train_count"],
                           seed=seed)
    tests = [paths[k] for k in sorted(paths) if k.startswith("test_ID_")
             and int(k.rsplit("_", 1)[1]) in spec["test_res"]]
    if ood:
        tests += [paths[k] for k in sorted(paths) if k.startswith("test_OOD_")]
    return ExperimentConfig(model=spec["model"], model_config=spec.get("model_config", {}),
                            train_set=paths[f"train_{spec['train_n']}_{spec['train_count']}"],
                            test_sets=tests, epochs=spec["epochs"], seed=seed,
                            batch_size=spec.get("batch_size", 128))


def run_bench(name, root, seed=0, progress=None, reuse=True, **overrides):
    """Train one reference run under ``root/<name>`` and return its MetricsReport.

    With ``reuse`` a finished run whose recorded config matches is loaded
    from disk instead of retrained.
    """
    root = Path(root).resolve()
    cfg = bench_config(name, root / "data", seed, **overrides)
    out = root / name
    done = out / "metrics.json"
    if reuse and done.exists() and (out / "run.json").exists():
        with open(out / "run.json") as fh:
            logged = json.load(fh).get("config")
        if logged == asdict(cfg):
            return MetricsReport.load(done)
    out.mkdir(parents=True, exist_ok=True)
    return train(cfg, out=out, progress=progress).report


__all__ = [
    "DegenerateSampleError", "ResolutionError", "NumericalFailure", "rel_norm", "per_sample_errors",
    "SetMetrics", "MetricsReport", "ExperimentConfig", "save_checkpoint", "load_checkpoint",
    "evaluate", "evaluate_dataset", "train", "TrainResult", "ResolutionMatrix", "resolution_matrix",
    "report_rows", "write_report_csv", "tables", "write_tables_json", "generate_suite",
    "MODEL_KINDS", "BENCH_RUNS", "bench_config", "run_bench",
]
