"""Helpers for the 4-index interaction tensor and the orbital-product (pair) basis.

Storage convention for any two-body tensor ``w``: the element ``w[i, j, k, l]``
couples the densities (i, k) and (j, l), i.e. ``w[i, j, k, l] = (ik|jl)`` in
chemists' notation for real orbitals.  The pair-basis matrix view indexes rows
by the ordered pair ``p = (i, k)`` and columns by ``q = (j, l)``:

    M[i*n + k, j*n + l] = w[i, j, k, l]

All screening equations (Dyson, cRPA, pole decompositions) are matrix algebra
in this n^2-dimensional pair space.
"""

import numpy as np


def pair_index(i, k, n):
    return i * n + k


def tensor_to_pair(w):
    """4-index tensor -> (n^2, n^2) pair-basis matrix."""
    n = w.shape[0]
    return np.ascontiguousarray(w.transpose(0, 2, 1, 3).reshape(n * n, n * n))


def pair_to_tensor(m, n):
    """(n^2, n^2) pair-basis matrix -> 4-index tensor."""
    return np.ascontiguousarray(m.reshape(n, n, n, n).transpose(0, 2, 1, 3))


def transform_tensor(w, c):
    """Rotate a two-body tensor into the basis given by columns of ``c``.

    Each index transforms independently, so the pairing convention is
    preserved.
    """
    return np.einsum("ijkl,ip,jq,kr,ls->pqrs", w, c, c, c, c, optimize=True)


def symmetry_residual(w):
    """Max deviation from the 8-fold real-orbital symmetry.

    Generators: swap within pair (i, k), swap within pair (j, l), and the
    pair <-> pair swap.
    """
    r1 = np.abs(w - w.transpose(2, 1, 0, 3)).max()  # v_ijkl = v_kjil
    r2 = np.abs(w - w.transpose(0, 3, 2, 1)).max()  # v_ijkl = v_ilkj
    r3 = np.abs(w - w.transpose(1, 0, 3, 2)).max()  # v_ijkl = v_jilk
    return max(r1, r2, r3)


def psd_margin(w):
    """Smallest eigenvalue of the pair-basis matrix (>= 0 for a valid kernel)."""
    m = tensor_to_pair(w)
    return float(np.linalg.eigvalsh(0.5 * (m + m.T)).min())


def hartree_potential(w, rho):
    """Hartree matrix [w rho]_ij = 2 sum_kl (ij|kl) rho_kl, spin-summed.

    ``rho`` is the spatial density matrix (eigenvalues in {0, 1}); the factor
    2 accounts for the two spin channels.
    """
    return 2.0 * np.einsum("ikjl,kl->ij", w, rho, optimize=True)


def exchange_potential(w, rho):
    """Same-spin exchange matrix K_ij = sum_kl (ik|jl) rho_kl."""
    return np.einsum("ijkl,kl->ij", w, rho, optimize=True)
