"""Bare, active-space and reduced one-body Green's functions.

Everything is diagonal in the MO basis, so evaluators work with diagonal
vectors and expose dense views for contraction code.  On the real axis the
broadening eta enters with the sign of (eps_i - eps_F); off the real axis the
plain resolvent is used.
"""

from dataclasses import dataclass

import numpy as np

DEFAULT_ETA = 1e-4


@dataclass(frozen=True)
class OrbitalSet:
    """Sorted, duplicate-free set of MO indices."""

    indices: tuple
    n_orb: int

    def __post_init__(self):
        idx = tuple(sorted(set(int(i) for i in self.indices)))
        if idx and (idx[0] < 0 or idx[-1] >= self.n_orb):
            raise ValueError(f"orbital index out of range for n_orb={self.n_orb}")
        object.__setattr__(self, "indices", idx)

    def __len__(self):
        return len(self.indices)

    def __contains__(self, i):
        return i in set(self.indices)

    def complement(self):
        rest = tuple(i for i in range(self.n_orb) if i not in set(self.indices))
        return OrbitalSet(rest, self.n_orb)

    def mask(self):
        m = np.zeros(self.n_orb, dtype=bool)
        m[list(self.indices)] = True
        return m


def projector(active, n_orb=None):
    """Diagonal 0/1 projector matrix onto the active orbitals."""
    if n_orb is None:
        n_orb = active.n_orb
    p = np.zeros((n_orb, n_orb))
    for i in active.indices:
        p[i, i] = 1.0
    return p


@dataclass(frozen=True)
class GreensEvaluator:
    sol: object  # MeanFieldSolution
    eta: float = DEFAULT_ETA

    def __post_init__(self):
        if self.eta <= 0:
            raise ValueError("eta must be positive")

    def g0_diag(self, omega, variant="full", active=None):
        """Diagonal of G0(omega) for the requested variant.

        variant: "full", "active" (support on A only) or "reduced"
        (support on the complement of A).
        """
        eps = self.sol.energies
        omega = complex(omega)
        if omega.imag == 0.0:
            sgn = np.sign(eps - self.sol.fermi_level)
            denom = omega - eps + 1j * self.eta * sgn
        else:
            denom = omega - eps
        if np.any(denom == 0):
            raise ZeroDivisionError("omega hits a pole with zero broadening")
        g = 1.0 / denom
        if variant == "full":
            return g
        if active is None:
            raise ValueError("active set required for projected variants")
        mask = active.mask()
        if variant == "active":
            return np.where(mask, g, 0.0)
        if variant == "reduced":
            return np.where(mask, 0.0, g)
        raise ValueError(f"unknown variant '{variant}'")

    def g0(self, omega, variant="full", active=None):
        """Dense (diagonal) matrix view of G0(omega)."""
        return np.diag(self.g0_diag(omega, variant, active))
