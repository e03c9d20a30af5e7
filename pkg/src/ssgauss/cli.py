"""Command line front end: reproducible experiments as files.

Subcommands
-----------
models       print the model catalog (table or JSON)
variance     limit variance of a (model, f) pair -> variance.json
simulate     exact increment batch -> batch.bin (+ batch.json echo)
clt          replicated experiment -> experiment.json, summary.csv
check        covariance-structure audits -> reports/<model>_checks.json
contraction  contraction norms over an n ladder -> contraction.json
report       re-derive verdicts from a saved experiment.json

Exit codes: 0 all verdicts pass; 2 usage or domain error; 3 applicability
gate violated (alpha >= 2 - 1/d); 4 numerical failure or failing verdicts.

Configuration may come from a JSON file (--config); explicit flags win
over file values.  The seed falls back to the SSGAUSS_SEED environment
variable, then 0.  Every output file embeds the effective config and the
package version.  --threads bounds worker parallelism and never changes
any numerical result.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from ._version import __version__
from . import analysis, hermite, limitvar, montecarlo, sampler
from .errors import DomainError, GateError, NumericalError
from .models import Model, list_models, make_model

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_GATE = 3
EXIT_NUMERICAL = 4

_MODEL_PARAM_FLAGS = ("H", "K", "alpha")


def _build_model(cfg: dict) -> Model:
    name = cfg.get("model")
    if not name:
        raise DomainError("a --model id is required")
    params = {k: cfg[k] for k in _MODEL_PARAM_FLAGS if cfg.get(k) is not None}
    return make_model(name, **params)


def _build_f(cfg: dict) -> hermite.HermiteFunction:
    fdesc = cfg.get("f")
    if not fdesc:
        raise DomainError("an --f value is required (e.g. hermite:2, even_power:2)")
    if isinstance(fdesc, dict):
        kind = fdesc.get("f")
        value = fdesc.get("q", fdesc.get("p"))
    else:
        kind, _, value = str(fdesc).partition(":")
        if not value:
            raise DomainError(f"malformed --f value {fdesc!r}; expected kind:integer")
    kind = {"hermite": "single_hermite"}.get(kind, kind)
    return hermite.builtin_family(kind, int(value))


def _seed_from(cfg: dict) -> int:
    if cfg.get("seed") is not None:
        return int(cfg["seed"])
    env = os.environ.get("SSGAUSS_SEED")
    return int(env) if env else 0


def _out_dir(cfg: dict) -> Path:
    out = Path(cfg.get("out") or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _echo(cfg: dict, extra: dict | None = None) -> dict:
    keep = {k: v for k, v in cfg.items() if v is not None and k not in ("func",)}
    return {"config": keep | (extra or {}), "version": __version__}


# ---------------------------------------------------------------------------
# Subcommand handlers.  Each returns a process exit code.

def cmd_models(cfg: dict) -> int:
    catalog = list_models()
    if cfg.get("json"):
        print(json.dumps(catalog, indent=2))
        return EXIT_OK
    head = f"{'model':<9} {'params':<22} {'alpha':<10} {'beta':<10} {'lam':<14} nu"
    print(head)
    print("-" * len(head))
    for row in catalog:
        params = ",".join(f"{k} in {v}" for k, v in row["params"].items()) or "-"
        print(f"{row['model']:<9} {params:<22} {str(row['alpha']):<10} "
              f"{str(row['beta']):<10} {str(row['lam']):<14} {row['nu']}")
    return EXIT_OK


def cmd_variance(cfg: dict) -> int:
    model = _build_model(cfg)
    f = _build_f(cfg)
    lv = limitvar.sigma_sq(f, model.alpha, rel_tol=cfg.get("rel_tol") or 1e-10)
    payload = _echo(cfg, {"model_resolved": model.describe(), "f_resolved": f.describe()})
    payload |= lv.describe()
    path = _out_dir(cfg) / "variance.json"
    _write_json(path, payload)
    print(f"sigma_sq = {lv.sigma_sq:.12g}  (alpha={model.alpha}, "
          f"chaoses {sorted(lv.per_chaos)}) -> {path}")
    return EXIT_OK


def cmd_simulate(cfg: dict) -> int:
    model = _build_model(cfg)
    n = int(cfg["n"])
    N = int(cfg["N"]) if cfg.get("N") else int(np.floor(n * float(cfg.get("t_max") or 1.0)))
    batch = sampler.sample_batch(model, n, N, int(cfg["M"]), _seed_from(cfg),
                                 threads=int(cfg.get("threads") or 1))
    out = _out_dir(cfg)
    sampler.write_batch(batch, out / "batch.bin")
    meta = _echo(cfg, {"model_resolved": model.describe(),
                       "n": n, "N": N, "M": batch.M, "seed": batch.seed})
    _write_json(out / "batch.json", meta)
    print(f"wrote {batch.M} x {N} increments -> {out / 'batch.bin'}")
    return EXIT_OK


def cmd_clt(cfg: dict) -> int:
    model = _build_model(cfg)
    f = _build_f(cfg)
    t_grid = [float(v) for v in str(cfg.get("t_grid") or "1.0").split(",")]
    result = montecarlo.run_experiment(
        model, f, int(cfg["n"]), t_grid, M=int(cfg.get("M") or montecarlo.DEFAULT_M),
        seed=_seed_from(cfg), threads=int(cfg.get("threads") or 1),
        all_pairs=bool(cfg.get("all_pairs")),
    )
    out = _out_dir(cfg)
    payload = _echo(cfg) | result.to_dict()
    _write_json(out / "experiment.json", payload)
    with open(out / "summary.csv", "w", newline="", encoding="utf-8") as fh:
        rows = result.summary_rows()
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
    for ts in result.times:
        print(f"t={ts.t:g}: sample_var={ts.sample_var:.6g} exact={ts.exact_var:.6g} "
              f"kurt_ratio={ts.kurtosis_ratio:.4f} ks_p={ts.ks_p:.4g} "
              f"{'ok' if ts.var_ok and ts.kurt_ok and ts.ks_ok else 'FAIL'}")
    print(f"{'all verdicts pass' if result.passed else 'verdict failure'} "
          f"-> {out / 'experiment.json'}")
    return EXIT_OK if result.passed else EXIT_NUMERICAL


def cmd_check(cfg: dict) -> int:
    model = _build_model(cfg)
    if cfg.get("f"):
        f = _build_f(cfg)
        gate = 2.0 - 1.0 / f.rank
        if model.alpha >= gate:
            print(f"warning: alpha={model.alpha} >= 2 - 1/d = {gate:g}; "
              f"the normal limit is not guaranteed for this f (checks still run)")
    reports = analysis.run_all_checks(model, x_max=float(cfg.get("x_max") or 1e4))
    out = _out_dir(cfg) / "reports"
    out.mkdir(parents=True, exist_ok=True)
    tag = model.name.replace("-", "")
    payload = _echo(cfg, {"model_resolved": model.describe()})
    payload["reports"] = {k: rep.to_dict() for k, rep in reports.items()}
    path = out / f"{tag}_checks.json"
    _write_json(path, payload)
    ok = True
    for name, rep in reports.items():
        flag = "pass" if rep.verdict else "FAIL"
        print(f"{name:<32} sup={rep.ratio_sup:<12.4g} slope={rep.trend_slope:+.4f} {flag}")
        ok &= rep.verdict
    print(f"-> {path}")
    return EXIT_OK if ok else EXIT_NUMERICAL


def cmd_contraction(cfg: dict) -> int:
    model = _build_model(cfg)
    q = int(cfg.get("q") or 2)
    rs = [int(v) for v in str(cfg.get("r") or "1").split(",")]
    ns = [int(v) for v in str(cfg.get("n") or "64,128,256").split(",")]
    t = float(cfg.get("t") or 1.0)
    report = analysis.contraction_report(model, q, ns, r_values=rs, t=t)
    payload = _echo(cfg, {"model_resolved": model.describe()})
    payload |= report.to_dict()
    path = _out_dir(cfg) / "contraction.json"
    _write_json(path, payload)
    for n in ns:
        for r in rs:
            tv = f"  tv<={report.tv[n]:.6g}" if n in report.tv else ""
            print(f"n={n:<6} q={q} r={r}: {report.norms[(n, r)]:.8g}{tv}")
    ok = report.non_increasing()
    print(f"{'non-increasing over the n ladder' if ok else 'NOT decreasing'} -> {path}")
    return EXIT_OK if ok else EXIT_NUMERICAL


def cmd_report(cfg: dict) -> int:
    path = Path(cfg.get("input") or "experiment.json")
    with open(path, encoding="utf-8") as fh:
        saved = json.load(fh)
    tol = saved["config"]["tolerances"]
    ok = montecarlo.derive_verdicts(saved["times"], saved["cross"], tol)
    stored = saved.get("passed")
    print(f"{path}: rederived verdict = {'pass' if ok else 'fail'} "
          f"(stored: {'pass' if stored else 'fail'})")
    for ts in saved["times"]:
        print(f"  t={ts['t']:g}: sample_var={ts['sample_var']:.6g} "
              f"exact={ts['exact_var']:.6g} ks_p={ts['ks_p']:.4g}")
    if ok != bool(stored):
        print("warning: stored verdict disagrees with rederivation")
    return EXIT_OK if ok else EXIT_NUMERICAL


# ---------------------------------------------------------------------------
# Parser and dispatch.

def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="ssgauss", description=__doc__.split("\n\n")[0])
    top.add_argument("--version", action="version", version=f"ssgauss {__version__}")
    sub = top.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, model: bool = True) -> None:
        p.add_argument("--config", help="JSON config file; flags override it")
        p.add_argument("--print-config", action="store_true",
                       help="print the effective config and exit")
        p.add_argument("--out", help="output directory (default .)")
        p.add_argument("--seed", type=int, help="RNG seed (fallback: SSGAUSS_SEED, then 0)")
        p.add_argument("--threads", type=int, help="worker threads (results unaffected)")
        if model:
            p.add_argument("--model", help="model id (see `ssgauss models`)")
            p.add_argument("--H", type=float, help="Hurst-type parameter")
            p.add_argument("--K", type=float, help="bifractional K parameter")
            p.add_argument("--alpha", type=float, help="dw-z1/dw-z2 exponent")

    p = sub.add_parser("models", help="list the model catalog")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_models)

    p = sub.add_parser("variance", help="limit variance sigma^2 for (model, f)")
    common(p)
    p.add_argument("--f", help="test function, e.g. hermite:2 | even_power:2 | odd_abs_power:1")
    p.add_argument("--rel-tol", dest="rel_tol", type=float)
    p.set_defaults(func=cmd_variance)

    p = sub.add_parser("simulate", help="sample an exact increment batch")
    common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--N", type=int, help="increments per row (default floor(n*t_max))")
    p.add_argument("--t-max", dest="t_max", type=float)
    p.add_argument("--M", type=int, required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("clt", help="replicated normal-limit experiment")
    common(p)
    p.add_argument("--f")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--t-grid", dest="t_grid", help="comma list, default 1.0")
    p.add_argument("--M", type=int)
    p.add_argument("--all-pairs", dest="all_pairs", action="store_true",
                   help="cross-covariances for every pair, not only consecutive")
    p.set_defaults(func=cmd_clt)

    p = sub.add_parser("check", help="covariance-structure audits")
    common(p)
    p.add_argument("--f", help="optional; prints an applicability warning")
    p.add_argument("--x-max", dest="x_max", type=float)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("contraction", help="contraction norms over an n ladder")
    common(p)
    p.add_argument("--q", type=int)
    p.add_argument("--r", help="comma list of contraction orders (default 1)")
    p.add_argument("--n", help="comma list of grid resolutions")
    p.add_argument("--t", type=float)
    p.set_defaults(func=cmd_contraction)

    p = sub.add_parser("report", help="re-derive verdicts from experiment.json")
    p.add_argument("--input", help="path to experiment.json")
    p.set_defaults(func=cmd_report)

    return top


def _merge_config(args: argparse.Namespace) -> dict:
    cfg: dict = {}
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            cfg.update(json.load(fh))
    for key, value in vars(args).items():
        if key in ("config", "print_config"):
            continue
        if value is not None:
            cfg[key] = value
    cfg.pop("command", None)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = _merge_config(args)
    if getattr(args, "print_config", False):
        shown = {k: v for k, v in cfg.items() if k != "func"}
        print(json.dumps(shown, indent=2, default=str))
        return EXIT_OK
    try:
        return args.func(cfg)
    except GateError as exc:
        print(f"gate violation: {exc}", file=sys.stderr)
        return EXIT_GATE
    except (DomainError, FileNotFoundError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
