"""Finite defect-in-lattice model systems.

A ModelSystem is a small, fully specified electronic-structure problem: a
one-body hopping/onsite matrix, a positive-semidefinite two-body interaction
tensor, an even electron count and per-orbital region tags separating the
defect sites from the host lattice.
"""

from dataclasses import dataclass, field
import json

import numpy as np

from . import tensors
from .errors import ModelError

PSD_TOL = 1e-12


@dataclass(frozen=True)
class ModelSpec:
    """Declarative description of a lattice-plus-defect model."""

    family: str = "chain"  # chain | ring | grid
    n_sites: int = 4
    shape: tuple = ()  # (nx, ny) for grid
    t: float = 1.0
    onsite: float = 0.0
    u: float = 0.0
    v_offsite: float = 0.0  # offsite density-density strength, decays as 1/d
    defect_sites: tuple = ()
    defect_onsite: float = 0.0
    defect_u: float = 0.0
    n_elec: int = 2

    @staticmethod
    def from_dict(d):
        lattice = d.get("lattice", {})
        inter = d.get("interaction", {})
        defect = d.get("defect", {})
        elec = d.get("electrons", {})
        return ModelSpec(
            family=lattice.get("family", "chain"),
            n_sites=int(lattice.get("n_sites", 4)),
            shape=tuple(lattice.get("shape", ())),
            t=float(lattice.get("t", 1.0)),
            onsite=float(lattice.get("onsite", 0.0)),
            u=float(inter.get("u", 0.0)),
            v_offsite=float(inter.get("v_offsite", 0.0)),
            defect_sites=tuple(defect.get("sites", ())),
            defect_onsite=float(defect.get("onsite", 0.0)),
            defect_u=float(defect.get("u", 0.0)),
            n_elec=int(elec.get("n_elec", 2)),
        )


@dataclass(frozen=True)
class ModelSystem:
    n_orb: int
    h_core: np.ndarray  # (n, n) real symmetric, Hartree
    v_tensor: np.ndarray  # (n, n, n, n), pairing (i,k),(j,l)
    n_elec: int
    region_tags: tuple  # per-site "defect" | "host"
    site_geometry: np.ndarray = None  # (n, dim) coordinates, reporting only

    @property
    def defect_sites(self):
        return tuple(i for i, tag in enumerate(self.region_tags) if tag == "defect")

    def to_json(self):
        doc = {
            "_layout": "tensors row-major; v_tensor element [i,j,k,l] couples "
            "densities (i,k) and (j,l); energies in Hartree",
            "n_orb": self.n_orb,
            "n_elec": self.n_elec,
            "h_core": self.h_core.tolist(),
            "v_tensor": self.v_tensor.ravel().tolist(),
            "region_tags": list(self.region_tags),
            "site_geometry": None
            if self.site_geometry is None
            else self.site_geometry.tolist(),
        }
        return json.dumps(doc, indent=1)

    @staticmethod
    def from_json(text):
        doc = json.loads(text)
        n = doc["n_orb"]
        geom = doc.get("site_geometry")
        return ModelSystem(
            n_orb=n,
            h_core=np.asarray(doc["h_core"], dtype=float),
            v_tensor=np.asarray(doc["v_tensor"], dtype=float).reshape(n, n, n, n),
            n_elec=doc["n_elec"],
            region_tags=tuple(doc["region_tags"]),
            site_geometry=None if geom is None else np.asarray(geom, dtype=float),
        )


def _geometry(spec):
    if spec.family == "chain":
        return np.array([[float(i), 0.0] for i in range(spec.n_sites)])
    if spec.family == "ring":
        n = spec.n_sites
        r = n / (2.0 * np.pi)
        ang = 2.0 * np.pi * np.arange(n) / n
        return np.column_stack([r * np.cos(ang), r * np.sin(ang)])
    if spec.family == "grid":
        nx, ny = spec.shape if spec.shape else (spec.n_sites, 1)
        return np.array([[float(ix), float(iy)] for iy in range(ny) for ix in range(nx)])
    raise ModelError(f"unknown lattice family '{spec.family}'")


def _bonds(spec, geom):
    n = len(geom)
    bonds = []
    if spec.family in ("chain", "ring"):
        bonds = [(i, i + 1) for i in range(n - 1)]
        if spec.family == "ring" and n > 2:
            bonds.append((n - 1, 0))
    elif spec.family == "grid":
        nx, ny = spec.shape if spec.shape else (spec.n_sites, 1)
        for iy in range(ny):
            for ix in range(nx):
                i = iy * nx + ix
                if ix + 1 < nx:
                    bonds.append((i, i + 1))
                if iy + 1 < ny:
                    bonds.append((i, i + nx))
    return bonds


def build_model(spec):
    """Construct a ModelSystem from a ModelSpec.

    Rejects odd electron counts (a closed-shell reference is required) and
    interactions whose pair-basis matrix is not positive semidefinite.
    """
    geom = _geometry(spec)
    n = len(geom)
    if spec.family == "grid" and spec.shape:
        n = spec.shape[0] * spec.shape[1]
    if spec.n_elec % 2 != 0:
        raise ModelError(f"n_elec = {spec.n_elec} is odd; closed shell required")
    if not 0 < spec.n_elec <= 2 * n:
        raise ModelError(f"n_elec = {spec.n_elec} out of range for {n} orbitals")
    for s in spec.defect_sites:
        if not 0 <= s < n:
            raise ModelError(f"defect site {s} out of range")

    onsite = np.full(n, spec.onsite, dtype=float)
    u_site = np.full(n, spec.u, dtype=float)
    for s in spec.defect_sites:
        onsite[s] = spec.defect_onsite
        u_site[s] = spec.defect_u

    h = np.zeros((n, n))
    np.fill_diagonal(h, onsite)
    for i, j in _bonds(spec, geom):
        h[i, j] = h[j, i] = -spec.t

    v = np.zeros((n, n, n, n))
    for i in range(n):
        v[i, i, i, i] = u_site[i]
    if spec.v_offsite != 0.0:
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                d = np.linalg.norm(geom[i] - geom[j])
                # (ii|jj) = V/d in the stored pairing
                v[i, j, i, j] = spec.v_offsite / d

    margin = tensors.psd_margin(v)
    if margin < -PSD_TOL:
        raise ModelError(
            f"interaction is not positive semidefinite (eigenvalue {margin:.3e})"
        )

    tags = tuple(
        "defect" if i in set(spec.defect_sites) else "host" for i in range(n)
    )
    return ModelSystem(
        n_orb=n,
        h_core=h,
        v_tensor=v,
        n_elec=spec.n_elec,
        region_tags=tags,
        site_geometry=geom,
    )


def canonical_element(i, j, k, l, v_tensor):
    """Return v_ijkl in the stored pairing (i,k),(j,l)."""
    n = v_tensor.shape[0]
    for idx in (i, j, k, l):
        if not 0 <= idx < n:
            raise ModelError(f"index {idx} out of range for n_orb = {n}")
    return float(v_tensor[i, j, k, l])


def validate_model(m):
    """Diagnostic report: symmetry residuals, PSD margin, parity."""
    sym = tensors.symmetry_residual(m.v_tensor)
    margin = tensors.psd_margin(m.v_tensor)
    h_sym = float(np.abs(m.h_core - m.h_core.T).max())
    parity_ok = m.n_elec % 2 == 0 and 0 < m.n_elec <= 2 * m.n_orb
    return {
        "symmetry_residual": float(sym),
        "psd_margin": margin,
        "h_core_symmetry_residual": h_sym,
        "parity_ok": parity_ok,
        "passed": bool(
            sym <= 1e-12 and margin >= -PSD_TOL and h_sym <= 1e-12 and parity_ok
        ),
    }
