"""Command-line driver.

Subcommands: run, diagnose, sweep, validate-model, export-heff.
Exit codes: 0 success, 1 validation failure, 2 numerical failure.
"""

import argparse
import json
import os
import sys
from dataclasses import replace

from . import embedding, model, pipeline
from .errors import NumericalError, ValidationError


def _add_common(p):
    p.add_argument("--config", required=True, help="TOML configuration file")
    p.add_argument(
        "--scheme", choices=["edc", "hfdc", "both"], help="double-counting scheme"
    )
    p.add_argument("--threshold", type=float, help="localization threshold")
    p.add_argument("--rank", type=int, help="screening rank (0 = full)")
    p.add_argument("--out", help="output directory")


def build_parser():
    ap = argparse.ArgumentParser(
        prog="qembed",
        description="Quantum defect embedding on finite model Hamiltonians",
    )
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("run", "diagnose", "sweep", "validate-model", "export-heff"):
        _add_common(sub.add_parser(name))
    return ap


def _load(args):
    cfg = pipeline.load_config(args.config)
    overrides = {}
    if args.scheme is not None:
        overrides["scheme"] = args.scheme
    if args.threshold is not None:
        overrides["threshold"] = args.threshold
    if args.rank is not None:
        overrides["rank"] = args.rank
    if args.out is not None:
        overrides["out_dir"] = args.out
    if overrides:
        cfg = replace(cfg, **overrides)
        pipeline.validate_config(cfg)
    return cfg


def _cmd_run(cfg):
    report = pipeline.run(cfg)
    tag = " [oracle-exact candidate]" if report.oracle_exact else ""
    print(f"run complete in {report.timing_s:.2f} s{tag}")
    print(f"active orbitals: {list(report.active_orbitals)}")
    for scheme, rows in report.spectra.items():
        print(f"-- {scheme} excitations (eV) --")
        for row in rows[1:]:
            ghost = " GHOST" if row[6] else ""
            print(f"  state {row[0]}: {row[2]:.3f}  {row[4]}  {row[5]}{ghost}")
        resid = report.chain_rule[scheme]
        print(
            f"  chain rule: polarizability {resid['polarizability']:.3e}, "
            f"self-energy {resid['self_energy']:.3e}"
        )
    if report.sensitivity:
        print("-- reference sensitivity (|HF - Hartree|, eV) --")
        for state, scheme, e_hf, e_ha, spread in report.sensitivity:
            print(f"  state {state} {scheme}: {e_hf:.3f} vs {e_ha:.3f} -> {spread:.3f}")
    if cfg.out_dir:
        print(f"artifacts written to {cfg.out_dir}")
    return 0


def _cmd_diagnose(cfg):
    out = pipeline.diagnose(cfg, classify_ghosts=True)
    print(f"active orbitals: {list(out['active_orbitals'])}")
    for scheme, resid in out["chain_rule"].items():
        print(
            f"{scheme}: polarizability residual {resid['polarizability']:.3e}, "
            f"self-energy residual {resid['self_energy']:.3e}"
        )
    print(f"active-environment coupling: {out['offdiag_coupling']:.3e}")
    if out.get("ghosts"):
        print(f"ghost states: {out['ghosts']}")
    return 0


def _cmd_sweep(cfg):
    rows = pipeline.run_sweep(cfg)
    path = pipeline.write_sweep_csv(cfg, rows)
    print(f"{len(rows)} rows -> {path}")
    return 0


def _cmd_validate(cfg):
    sys_ = model.build_model(cfg.model)
    result = model.validate_model(sys_)
    print(json.dumps(result, indent=1))
    return 0 if result["passed"] else 1


def _cmd_export(cfg):
    from .meanfield import solve_scf

    sys_ = model.build_model(cfg.model)
    sol = solve_scf(sys_, mode=cfg.mode)
    active, _ = pipeline.select_orbitals(cfg, sol)
    solver = embedding.EmbeddingSolver(
        sol, eta=cfg.eta, quad=cfg.quad(), rank=cfg.rank if cfg.rank > 0 else None
    )
    out = cfg.out_dir or "."
    os.makedirs(out, exist_ok=True)
    for scheme in cfg.schemes():
        heff = solver.build_heff(active, scheme)
        path = os.path.join(out, f"heff_{scheme.lower()}.json")
        pipeline.atomic_write(path, heff.to_json())
        print(f"wrote {path}")
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = _load(args)
        handler = {
            "run": _cmd_run,
            "diagnose": _cmd_diagnose,
            "sweep": _cmd_sweep,
            "validate-model": _cmd_validate,
            "export-heff": _cmd_export,
        }[args.command]
        return handler(cfg)
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
