"""Restricted closed-shell mean-field reference (Hartree or Hartree-Fock).

The converged solution plays the role of the Kohn-Sham starting point for all
downstream Green's-function machinery.  Spin handling: the spatial density
matrix is an idempotent projector onto the occupied orbitals; the Hartree
potential carries the spin factor 2, the exchange potential the factor 1.
"""

from dataclasses import dataclass, field
import json

import numpy as np

from . import tensors
from .errors import ScfError

DEGENERACY_TOL = 1e-8


@dataclass(frozen=True)
class ScfOptions:
    max_iter: int = 500
    tol: float = 1e-10
    mixing: float = 0.5


@dataclass(frozen=True)
class MeanFieldSolution:
    mode: str  # "hartree" | "hartree-fock"
    n_orb: int
    n_elec: int
    coeffs: np.ndarray  # site -> MO, columns are MOs
    energies: np.ndarray  # ascending
    occupations: np.ndarray  # per MO, in {0, 2}
    fermi_level: float
    v_hartree: np.ndarray  # MO basis
    v_xc: np.ndarray  # MO basis (exchange for HF mode, zero for Hartree mode)
    h_core_mo: np.ndarray
    v_mo: np.ndarray  # MO-basis interaction tensor, same pairing as site basis
    density: np.ndarray  # MO-basis spatial density matrix (diagonal projector)
    total_energy: float

    @property
    def n_occ(self):
        return self.n_elec // 2

    @property
    def h_ks(self):
        return np.diag(self.energies)

    @property
    def homo(self):
        return self.n_occ - 1

    @property
    def lumo(self):
        return self.n_occ

    def to_json(self):
        doc = {
            "mode": self.mode,
            "n_orb": self.n_orb,
            "n_elec": self.n_elec,
            "coeffs": self.coeffs.tolist(),
            "energies": self.energies.tolist(),
            "occupations": self.occupations.tolist(),
            "fermi_level": self.fermi_level,
            "total_energy": self.total_energy,
        }
        return json.dumps(doc, indent=1)


def _potentials(v, rho, mode):
    j = tensors.hartree_potential(v, rho)
    if mode == "hartree-fock":
        k = tensors.exchange_potential(v, rho)
    else:
        k = np.zeros_like(j)
    return j, k


def _total_energy(h, v, rho, mode):
    j = tensors.hartree_potential(v, rho)  # spin-summed
    e = 2.0 * np.einsum("ij,ij->", rho, h) + np.einsum("ij,ij->", rho, j)
    if mode == "hartree-fock":
        k = tensors.exchange_potential(v, rho)
        e -= np.einsum("ij,ij->", rho, k)
    return float(e)


def solve_scf(m, mode="hartree-fock", opts=ScfOptions()):
    """Fixed-point SCF with linear density mixing.

    Raises ScfError on non-convergence or on HOMO/LUMO degeneracy (fractional
    occupation is unsupported).
    """
    if mode not in ("hartree", "hartree-fock"):
        raise ValueError(f"unknown mean-field mode '{mode}'")
    n = m.n_orb
    n_occ = m.n_elec // 2
    h = m.h_core
    v = m.v_tensor

    def density_from(c):
        occ = c[:, :n_occ]
        return occ @ occ.T

    eps, c = np.linalg.eigh(h)
    rho = density_from(c)
    residual = np.inf
    for _ in range(opts.max_iter):
        j, k = _potentials(v, rho, mode)
        f = h + j - k
        eps, c = np.linalg.eigh(f)
        rho_new = density_from(c)
        residual = np.abs(rho_new - rho).max()
        if residual <= opts.tol:
            rho = rho_new
            break
        rho = (1.0 - opts.mixing) * rho + opts.mixing * rho_new
    else:
        raise ScfError(
            f"SCF did not converge in {opts.max_iter} iterations "
            f"(residual {residual:.3e})",
            residual=residual,
        )

    if n_occ < n and abs(eps[n_occ] - eps[n_occ - 1]) < DEGENERACY_TOL:
        raise ScfError(
            f"HOMO/LUMO degenerate within {DEGENERACY_TOL:g} "
            f"(gap {eps[n_occ] - eps[n_occ - 1]:.3e}); fractional occupation unsupported"
        )

    # final build from the converged density, for exact self-consistency
    j, k = _potentials(v, rho, mode)
    f = h + j - k
    eps, c = np.linalg.eigh(f)

    occupations = np.zeros(n)
    occupations[:n_occ] = 2.0
    fermi = 0.5 * (eps[n_occ - 1] + eps[n_occ]) if n_occ < n else eps[-1]

    v_mo = tensors.transform_tensor(v, c)
    rho_mo = np.diag((occupations / 2.0).astype(float))
    return MeanFieldSolution(
        mode=mode,
        n_orb=n,
        n_elec=m.n_elec,
        coeffs=c,
        energies=eps,
        occupations=occupations,
        fermi_level=float(fermi),
        v_hartree=c.T @ j @ c,
        v_xc=-(c.T @ k @ c),
        h_core_mo=c.T @ h @ c,
        v_mo=v_mo,
        density=rho_mo,
        total_energy=_total_energy(h, v, rho, mode),
    )


def density_matrix(sol, subset):
    """MO-basis density matrix restricted to the given orbital subset."""
    idx = np.asarray(sorted(subset), dtype=int)
    return sol.density[np.ix_(idx, idx)]


def mf_operators(sol, m=None):
    """Recompute (V_H, V_xc) in the MO basis from the MO density and tensor.

    Independent of the matrices stored during SCF; used as a fixed-point
    cross-check.
    """
    rho = sol.density
    v_h = tensors.hartree_potential(sol.v_mo, rho)
    if sol.mode == "hartree-fock":
        v_xc = -tensors.exchange_potential(sol.v_mo, rho)
    else:
        v_xc = np.zeros_like(v_h)
    return v_h, v_xc
