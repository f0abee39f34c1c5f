"""``lpfno`` command line.

Exit codes: 0 success, 1 user or config error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict
from pathlib import Path

from lpfno import harness as H
from lpfno.config import ConfigError, apply_overrides, check_keys, dump, load_config
from lpfno.container import ContainerError
from lpfno.gradcheck import run_suite
from lpfno.poisson import WORKERS_ENV, GenConfig, ParameterDomainError, SolverError, generate_dataset, save_dataset

EXIT_OK, EXIT_USER, EXIT_NUMERIC = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _err(msg):
    print(msg, file=sys.stderr, flush=True)


def _out_dir(path, create=True):
    if path is None:
        raise ConfigError("--out is required for this command")
    path = Path(path)
    if not path.parent.exists():
        raise FileNotFoundError(f"output directory does not exist: {path.parent}")
    if create:
        path.mkdir(exist_ok=True)
    return path


def _write_json(doc, path):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, default=str)
        fh.write("\n")


# ----------------------------------------------------------------------
# commands

EVAL_DEFAULTS = {"checkpoint": None, "test_sets": [], "eval_batch": 64}
MATRIX_DEFAULTS = {"model": "lpfno", "checkpoints": {}, "test_sets": {}, "eval_batch": 64, "split": "ID"}
GRAD_DEFAULTS = {"seed": 0, "tolerance": 1e-4, "only": []}
REPORT_DEFAULTS = {"metrics": []}


def _defaults(command):
    if command == "gen-data":
        return asdict(GenConfig())
    if command == "train":
        return asdict(H.ExperimentConfig())
    return dict({"eval": EVAL_DEFAULTS, "res-matrix": MATRIX_DEFAULTS,
                 "gradcheck": GRAD_DEFAULTS, "report": REPORT_DEFAULTS}[command])


def cmd_gen_data(cfg: dict, args):
    gc = GenConfig(**cfg)
    gc.validate()
    out = Path(args.out) if args.out else None
    if out is None:
        raise ConfigError("--out is required for gen-data")
    if not out.parent.exists():
        raise FileNotFoundError(f"output directory does not exist: {out.parent}")
    t0 = time.perf_counter()
    ds = generate_dataset(gc)
    save_dataset(ds, out)
    wall = time.perf_counter() - t0
    H.write_run_log(out / "run.json", command="gen-data", config=cfg, seed=gc.seed,
                    param_count=None, wall_time_s=wall,
                    max_residual=float(ds.residual.max()) if len(ds) else 0.0)
    print(f"generated {len(ds)} samples n={gc.n} split={gc.split} seed={gc.seed} "
          f"families={','.join(gc.families)} max_residual={ds.residual.max() if len(ds) else 0:.2e} -> {out}")
    return EXIT_OK


def cmd_train(cfg: dict, args):
    ec = H.ExperimentConfig.from_dict(cfg)
    out = _out_dir(args.out)
    res = H.train(ec, out=out, progress=_err)
    for s in res.report.sets:
        print(f"{s.split:3s} {s.family:10s} n={s.n:<4d} rel_l1={s.rel_l1:.5f} rel_l2={s.rel_l2:.5f} "
              f"count={s.count}")
    pc = res.report.meta["param_count"]
    print(f"params {pc['count']} (reference {pc['reference']}, deviation {pc['deviation']:+d}); "
          f"steps {res.steps}; wall {res.wall_time:.1f}s; checkpoint {res.checkpoint}")
    return EXIT_OK


def cmd_eval(cfg: dict, args):
    out = _out_dir(args.out)
    if not cfg.get("checkpoint"):
        raise ConfigError("eval needs a 'checkpoint' entry")
    t0 = time.perf_counter()
    model, doc = H.load_checkpoint(cfg["checkpoint"])
    sets = {p: p for p in cfg["test_sets"]}
    for p in sets:
        if not Path(p).exists():
            raise FileNotFoundError(f"dataset not found: {p}")
    report = H.evaluate(model, sets, cfg["eval_batch"], train_n=doc.get("train_n", 0),
                        seed=doc.get("seed", 0))
    wall = time.perf_counter() - t0
    report.meta = {"checkpoint": str(cfg["checkpoint"]), "wall_time_s": wall}
    report.save(out / "metrics.json")
    H.write_run_log(out / "run.json", command="eval", config=cfg, seed=doc.get("seed"),
                    param_count=H.param_diagnostic(model), wall_time_s=wall,
                    mode_clamp={str(s.n): model.effective_modes(s.n) for s in report.sets})
    for s in report.sets:
        print(f"{s.split:3s} {s.family:10s} n={s.n:<4d} rel_l1={s.rel_l1:.5f} rel_l2={s.rel_l2:.5f} "
              f"count={s.count} degenerate={s.degenerate}")
    return EXIT_OK


def _int_keys(mapping, what):
    try:
        return {int(k): v for k, v in mapping.items()}
    except (TypeError, ValueError, AttributeError):
        raise ConfigError(f"{what} must map integer resolutions to paths")


def cmd_res_matrix(cfg: dict, args):
    out = _out_dir(args.out)
    t0 = time.perf_counter()
    tests = {n: (v if isinstance(v, list) else [v]) for n, v in _int_keys(cfg["test_sets"], "test_sets").items()}
    mat, reports = H.resolution_matrix(cfg["model"], _int_keys(cfg["checkpoints"], "checkpoints"),
                                       tests, cfg["eval_batch"], cfg["split"])
    mat.write_csv(out / "res_matrix.csv")
    mat.write_json(out / "res_matrix.json")
    for r in reports:
        r.save(out / f"metrics_{r.model}_{r.train_n}.json")
    H.write_run_log(out / "run.json", command="res-matrix", config=cfg, seed=None,
                    param_count=None, wall_time_s=time.perf_counter() - t0)
    print("train\\test " + " ".join(f"{b:>9d}" for b in mat.test_res))
    for a in mat.train_res:
        cells = [mat.get(a, b) for b in mat.test_res]
        print(f"{a:>10d} " + " ".join("      n/a" if c is None else f"{c:9.5f}" for c in cells))
    return EXIT_OK


def cmd_gradcheck(cfg: dict, args):
    t0 = time.perf_counter()
    reports = run_suite(seed=int(cfg["seed"]), tolerance=float(cfg["tolerance"]), only=cfg["only"] or None)
    if not reports:
        raise ConfigError(f"no gradcheck case matches {cfg['only']}")
    for r in reports:
        print(r.line())
    worst = max(reports, key=lambda r: r.max_rel_err)
    failed = [r.name for r in reports if not r.passed]
    print(f"worst rel err {worst.max_rel_err:.3e} ({worst.name}); {len(reports) - len(failed)}/{len(reports)} passed")
    if args.out:
        out = _out_dir(args.out)
        _write_json({"cases": [asdict(r) | {"passed": r.passed} for r in reports]}, out / "gradcheck.json")
        H.write_run_log(out / "run.json", command="gradcheck", config=cfg, seed=cfg["seed"],
                        param_count=None, wall_time_s=time.perf_counter() - t0)
    return EXIT_NUMERIC if failed else EXIT_OK


def cmd_report(cfg: dict, args):
    out = _out_dir(args.out)
    if not cfg["metrics"]:
        raise ConfigError("report needs a non-empty 'metrics' list")
    reports = []
    for p in cfg["metrics"]:
        if not Path(p).exists():
            raise FileNotFoundError(f"metrics file not found: {p}")
        reports.append(H.MetricsReport.load(p))
    H.write_report_csv(reports, out / "report.csv")
    doc = H.tables(reports)
    _write_json(doc, out / "tables.json")
    for name, rows in doc["resolution"]["models"].items():
        if not rows:
            continue
        cols = sorted({int(b) for r in rows.values() for b in r})
        mat = H.ResolutionMatrix(name, sorted(int(a) for a in rows), cols,
                                 {(int(a), int(b)): v for a, r in rows.items() for b, v in r.items()})
        mat.write_csv(out / f"res_matrix_{name}.csv")
        print(f"{name}: {len(mat.train_res)}x{len(cols)} resolution matrix -> res_matrix_{name}.csv")
    H.write_run_log(out / "run.json", command="report", config=cfg, seed=None, param_count=None,
                    wall_time_s=0.0)
    print(f"{len(H.report_rows(reports))} rows -> {out / 'report.csv'}")
    return EXIT_OK


COMMANDS = {"gen-data": cmd_gen_data, "train": cmd_train, "eval": cmd_eval,
            "res-matrix": cmd_res_matrix, "gradcheck": cmd_gradcheck, "report": cmd_report}
SEEDED = {"gen-data", "train", "gradcheck"}


def build_parser():
    p = _Parser(prog="lpfno", description="LP-FNO / FNO2d boundary-to-domain Poisson benchmark",
                epilog=f"{WORKERS_ENV}=<k> runs data generation on k worker processes.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="YAML config file")
        sp.add_argument("--seed", type=int, help="override the config seed")
        sp.add_argument("--out", help="output path")
        sp.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                        help="set a config value; dotted keys reach nested mappings")
        sp.add_argument("--show-config", action="store_true",
                        help="print the effective config (defaults included) and exit")
    return p


def effective_config(command, args) -> dict:
    defaults = _defaults(command)
    doc = load_config(args.config)
    check_keys(doc, defaults, command)
    doc = apply_overrides(doc, args.override)
    check_keys(doc, defaults, command)
    if args.seed is not None:
        if command not in SEEDED:
            raise ConfigError(f"--seed does not apply to {command}")
        doc["seed"] = args.seed
    merged = dict(defaults)
    merged.update(doc)
    return merged


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = effective_config(args.command, args)
        if args.show_config:
            print(dump(cfg), end="")
            return EXIT_OK
        return COMMANDS[args.command](cfg, args)
    except UsageError as exc:
        _err(f"lpfno: error: {exc}")
        return EXIT_USER
    except (H.NumericalFailure, SolverError, FloatingPointError) as exc:
        _err(f"lpfno: numerical failure: {exc}")
        return EXIT_NUMERIC
    except (ConfigError, ParameterDomainError, ContainerError, H.ResolutionError, FileNotFoundError,
            KeyError, ValueError, TypeError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        _err(f"lpfno: error: {msg}")
        return EXIT_USER


if __name__ == "__main__":
    sys.exit(main())
