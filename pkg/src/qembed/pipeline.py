"""End-to-end orchestration: model -> SCF -> screening -> self-energy ->
double counting -> effective Hamiltonian -> exact diagonalization.

Configuration is one TOML file with sections named after the stages.  All
data files are deterministic for a fixed config (no wall-clock content);
writes go through a temp-file-then-rename step.
"""

import csv
import io
import json
import os
import time
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field, replace

import numpy as np

from . import activespace, embedding, fci, model
from .errors import ValidationError
from .greens import OrbitalSet
from .meanfield import ScfOptions, solve_scf
from .selfenergy import QuadSpec
from .units import HARTREE_TO_EV

SCHEMES = ("EDC", "HFDC")


@dataclass(frozen=True)
class PipelineConfig:
    model: model.ModelSpec
    mode: str = "hartree-fock"  # mean-field reference
    eta: float = 1e-4
    quad_nodes: int = 64
    quad_check: bool = False
    scheme: str = "edc"  # edc | hfdc | both
    threshold: float = activespace.DEFAULT_THRESHOLD
    active_orbitals: tuple = None  # explicit MO list overrides the threshold
    rank: int = 0  # screening modes kept; 0 = full
    n_states: int = 6
    out_dir: str = None
    seed: int = 0
    sensitivity: bool = False  # HF-vs-Hartree reference spread table
    sweep_axis: str = None  # threshold | rank | n_sites
    sweep_values: tuple = ()

    def schemes(self):
        return SCHEMES if self.scheme == "both" else (self.scheme.upper(),)

    def quad(self):
        return QuadSpec(nodes=self.quad_nodes, check=self.quad_check)


def load_config(path):
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    return config_from_dict(doc)


def config_from_dict(doc):
    spec = model.ModelSpec.from_dict(doc.get("model", doc))
    mf = doc.get("meanfield", {})
    emb = doc.get("embedding", {})
    out = doc.get("output", {})
    sweep = doc.get("sweep", {})
    cfg = PipelineConfig(
        model=spec,
        mode=mf.get("mode", "hartree-fock"),
        eta=float(emb.get("eta", 1e-4)),
        quad_nodes=int(emb.get("quad_nodes", 64)),
        quad_check=bool(emb.get("quad_check", False)),
        scheme=str(emb.get("scheme", "edc")).lower(),
        threshold=float(emb.get("threshold", activespace.DEFAULT_THRESHOLD)),
        active_orbitals=tuple(emb["active_orbitals"])
        if "active_orbitals" in emb
        else None,
        rank=int(emb.get("rank", 0)),
        n_states=int(out.get("n_states", 6)),
        out_dir=out.get("dir"),
        seed=int(out.get("seed", 0)),
        sensitivity=bool(out.get("sensitivity", False)),
        sweep_axis=sweep.get("axis"),
        sweep_values=tuple(sweep.get("values", ())),
    )
    validate_config(cfg)
    return cfg


def validate_config(cfg):
    if cfg.mode not in ("hartree", "hartree-fock"):
        raise ValidationError(f"unknown mean-field mode '{cfg.mode}'")
    if cfg.scheme not in ("edc", "hfdc", "both"):
        raise ValidationError(f"unknown scheme '{cfg.scheme}'")
    if not 0.0 < cfg.threshold <= 1.0:
        raise ValidationError(f"threshold must be in (0, 1], got {cfg.threshold}")
    if cfg.eta <= 0:
        raise ValidationError(f"eta must be positive, got {cfg.eta}")
    if cfg.rank < 0:
        raise ValidationError(f"rank must be >= 0, got {cfg.rank}")
    if cfg.n_states < 1:
        raise ValidationError("n_states must be >= 1")
    if cfg.quad_nodes < 2:
        raise ValidationError("quad_nodes must be >= 2")
    if cfg.sweep_axis is not None and cfg.sweep_axis not in (
        "threshold",
        "rank",
        "n_sites",
    ):
        raise ValidationError(f"unknown sweep axis '{cfg.sweep_axis}'")


@dataclass(frozen=True)
class RunReport:
    config: dict  # full echo, defaults included
    model_validation: dict
    scf: dict
    qp_table: tuple  # rows (orbital, e_ks, e_qp, iterations)
    localization: tuple  # rows (orbital, L_V, e_rel_homo, selected, character)
    active_orbitals: tuple
    chain_rule: dict  # per scheme: {"polarizability": .., "self_energy": ..}
    offdiag_coupling: float
    spectra: dict  # per scheme: tuple of state rows
    sensitivity: tuple = ()  # rows (state, scheme, E_hf, E_hartree, spread)
    oracle_exact: bool = False
    timing_s: float = 0.0  # excluded from serialized data files

    def to_json(self):
        doc = {k: v for k, v in self.__dict__.items() if k != "timing_s"}
        return json.dumps(doc, indent=1, default=_jsonable)


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not serializable: {type(x)}")


def atomic_write(path, text):
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _config_echo(cfg):
    doc = dict(cfg.__dict__)
    doc["model"] = dict(cfg.model.__dict__)
    doc.pop("out_dir", None)  # path-independent data files
    return doc


def select_orbitals(cfg, sol):
    """Active orbitals plus per-orbital character tags."""
    region = tuple(cfg.model.defect_sites) or tuple(range(sol.n_orb))
    report = activespace.localization_report(sol, region, cfg.threshold)
    if cfg.active_orbitals is not None:
        active = OrbitalSet(cfg.active_orbitals, sol.n_orb)
    else:
        active = activespace.select_active(report)
    return active, report


def spectrum_rows(spectrum, labels):
    rows = []
    for st in labels:
        rows.append(
            (
                st.index,
                float(spectrum.eigenvalues[st.index]),
                round(st.energy_ev, 9),
                round(float(spectrum.s_squared[st.index]), 9),
                st.multiplicity,
                st.promotion,
                st.ghost,
            )
        )
    return tuple(rows)


def run(cfg, write=True):
    t0 = time.perf_counter()
    sys = model.build_model(cfg.model)
    validation = model.validate_model(sys)
    if not validation["passed"]:
        raise ValidationError(f"model failed validation: {validation}")
    sol = solve_scf(sys, mode=cfg.mode)
    active, loc_report = select_orbitals(cfg, sol)

    solver = embedding.EmbeddingSolver(
        sol,
        eta=cfg.eta,
        quad=cfg.quad(),
        rank=cfg.rank if cfg.rank > 0 else None,
    )
    qp = solver.qp
    qp_rows = tuple(
        (i, float(sol.energies[i]), float(qp.energies[i]), int(qp.iterations[i]))
        for i in range(sol.n_orb)
    )

    chain = {}
    spectra = {}
    heffs = {}
    characters = loc_report.characters(active.indices)
    for scheme in cfg.schemes():
        chain[scheme] = solver.chain_rule_residual(active, scheme)
        heff = solver.build_heff(active, scheme)
        heffs[scheme] = heff
        spec = fci.solve_heff(heff, n_states=min(cfg.n_states, _dim(heff)))
        labels = fci.classify_excitations(spec, characters)
        spectra[scheme] = spectrum_rows(spec, labels)

    oracle = len(active) == sol.n_orb and "EDC" in spectra

    sens = ()
    if cfg.sensitivity:
        sens = sensitivity_table(cfg)

    report = RunReport(
        config=_config_echo(cfg),
        model_validation=validation,
        scf={
            "mode": sol.mode,
            "total_energy": sol.total_energy,
            "homo": float(sol.energies[sol.homo]),
            "lumo": float(sol.energies[sol.lumo])
            if sol.n_occ < sol.n_orb
            else None,
            "fermi_level": sol.fermi_level,
        },
        qp_table=qp_rows,
        localization=tuple(
            (e.index, e.l_value, e.energy_rel_homo, e.selected, e.character)
            for e in loc_report.entries
        ),
        active_orbitals=active.indices,
        chain_rule=chain,
        offdiag_coupling=solver.offdiag_coupling(active),
        spectra=spectra,
        sensitivity=sens,
        oracle_exact=bool(oracle),
        timing_s=time.perf_counter() - t0,
    )
    if write and cfg.out_dir:
        write_artifacts(cfg, sys, sol, heffs, report)
    return report


def _dim(heff):
    n_up = heff.n_active_elec // 2
    from math import comb

    return comb(heff.n_orb, n_up) * comb(heff.n_orb, heff.n_active_elec - n_up)


def diagnose(cfg, classify_ghosts=False):
    """Chain-rule and coupling diagnostics without the FCI stage."""
    sub = replace(cfg, sensitivity=False)
    sys = model.build_model(sub.model)
    sol = solve_scf(sys, mode=sub.mode)
    active, loc_report = select_orbitals(sub, sol)
    solver = embedding.EmbeddingSolver(
        sol, eta=sub.eta, quad=sub.quad(), rank=sub.rank if sub.rank > 0 else None
    )
    chain = {s: solver.chain_rule_residual(active, s) for s in sub.schemes()}
    out = {
        "active_orbitals": active.indices,
        "chain_rule": chain,
        "offdiag_coupling": solver.offdiag_coupling(active),
    }
    if classify_ghosts:
        heff = solver.build_heff(active, sub.schemes()[0])
        spec = fci.solve_heff(heff, n_states=min(sub.n_states, _dim(heff)))
        labels = fci.classify_excitations(
            spec, loc_report.characters(active.indices)
        )
        out["ghosts"] = [st.index for st in labels if st.ghost]
    return out


def sensitivity_table(cfg):
    """Excitation-energy spread between HF and Hartree references.

    Rows: (state index, scheme, E_hf_eV, E_hartree_eV, |difference|).
    """
    rows = []
    spectra = {}
    for mode in ("hartree-fock", "hartree"):
        sub = replace(
            cfg, mode=mode, scheme="both", sensitivity=False, out_dir=None
        )
        spectra[mode] = run(sub, write=False).spectra
    for scheme in SCHEMES:
        hf = spectra["hartree-fock"][scheme]
        ha = spectra["hartree"][scheme]
        for i in range(1, min(len(hf), len(ha))):
            e_hf, e_ha = hf[i][2], ha[i][2]
            rows.append((i, scheme, e_hf, e_ha, round(abs(e_hf - e_ha), 9)))
    return tuple(rows)


def write_artifacts(cfg, sys, sol, heffs, report):
    out = cfg.out_dir
    os.makedirs(out, exist_ok=True)
    atomic_write(os.path.join(out, "model.json"), sys.to_json())
    atomic_write(os.path.join(out, "meanfield.json"), sol.to_json())
    for scheme, heff in heffs.items():
        atomic_write(
            os.path.join(out, f"heff_{scheme.lower()}.json"), heff.to_json()
        )
        atomic_write(
            os.path.join(out, f"spectrum_{scheme.lower()}.csv"),
            _csv_text(
                (
                    "state",
                    "energy_hartree",
                    "excitation_ev",
                    "s_squared",
                    "multiplicity",
                    "promotion",
                    "ghost",
                ),
                report.spectra[scheme],
            ),
        )
    atomic_write(
        os.path.join(out, "qp_table.csv"),
        _csv_text(("orbital", "e_ks_hartree", "e_qp_hartree", "iterations"), report.qp_table),
    )
    if report.sensitivity:
        atomic_write(
            os.path.join(out, "sensitivity.csv"),
            _csv_text(
                ("state", "scheme", "e_hf_ev", "e_hartree_ev", "spread_ev"),
                report.sensitivity,
            ),
        )
    atomic_write(os.path.join(out, "report.json"), report.to_json())


# -- sweeps --------------------------------------------------------------


def run_sweep(cfg):
    """One row per (sweep value, excited state): value, label, energy (eV).

    Threshold sweeps carry a monotone-nesting audit column.
    """
    if cfg.sweep_axis is None or not cfg.sweep_values:
        raise ValidationError("sweep requires an axis and a non-empty value list")
    rows = []
    prev_active = None
    for value in cfg.sweep_values:
        if cfg.sweep_axis == "threshold":
            sub = replace(cfg, threshold=float(value), active_orbitals=None)
        elif cfg.sweep_axis == "rank":
            sub = replace(cfg, rank=int(value))
        else:  # n_sites
            sub = replace(cfg, model=replace(cfg.model, n_sites=int(value)))
        rep = run(replace(sub, out_dir=None, sensitivity=False), write=False)
        nested = True
        if cfg.sweep_axis == "threshold" and prev_active is not None:
            nested = set(prev_active) <= set(rep.active_orbitals)
        prev_active = rep.active_orbitals
        scheme = cfg.schemes()[0]
        for row in rep.spectra[scheme][1:]:
            rows.append(
                {
                    "axis": cfg.sweep_axis,
                    "value": value,
                    "state": row[0],
                    "label": f"{row[4]}:{row[5]}",
                    "excitation_ev": row[2],
                    "nesting_ok": nested,
                }
            )
    return rows


def write_sweep_csv(cfg, rows):
    out = cfg.out_dir or "."
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, f"sweep_{cfg.sweep_axis}.csv")
    atomic_write(
        path,
        _csv_text(
            ("axis", "value", "state", "label", "excitation_ev", "nesting_ok"),
            [
                (
                    r["axis"],
                    r["value"],
                    r["state"],
                    r["label"],
                    r["excitation_ev"],
                    r["nesting_ok"],
                )
                for r in rows
            ],
        ),
    )
    return path
