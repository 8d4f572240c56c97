"""RPA screening in the MO product basis.

Provides the irreducible polarizability (full / active / reduced variants,
each by two independent code paths), the reducible response, the dynamically
screened interaction W0 in pole form, and the static partially screened
interaction that defines the effective two-body terms.

All Dyson inversions are phrased as linear solves in (1 - P v); the bare
interaction is never inverted.
"""

from dataclasses import dataclass

import numpy as np

from . import tensors
from .errors import RpaInstabilityError, NumericalError

OMEGA_SQ_TOL = 1e-10


@dataclass(frozen=True)
class PairOperator:
    """Frequency-tagged matrix over the orbital-product basis."""

    matrix: np.ndarray  # (n^2, n^2)
    omega: object  # complex or "static"
    n_orb: int


@dataclass(frozen=True)
class PoleRep:
    """Pole representation of the dynamic screening Wp(w) = W0(w) - v.

    Wp(w) = sum_s R_s * (1/(w - Om_s + i eta) - 1/(w + Om_s - i eta)) with
    residue matrices R_s = outer(b_s, b_s) / (2 Om_s), b_s = amps[:, s].
    """

    omegas: np.ndarray  # (S,) positive excitation energies
    amps: np.ndarray  # (n^2, S)
    n_orb: int

    @property
    def n_modes(self):
        return len(self.omegas)

    def residue_norms(self):
        """Frobenius norm of each residue matrix."""
        if self.n_modes == 0:
            return np.zeros(0)
        return np.einsum("ps,ps->s", self.amps, self.amps) / (2.0 * self.omegas)

    def channel_amps(self):
        """amps reshaped to (n, n, S) for (m k) channel lookups."""
        n = self.n_orb
        return self.amps.reshape(n, n, -1)


@dataclass(frozen=True)
class ScreenedInteraction:
    static_tensor: np.ndarray  # (n, n, n, n), same pairing as v
    pole_rep: object  # PoleRep or None
    rank: int


def transitions(sol, variant="full", active=None):
    """Ordered (occ, virt) transition list for the requested variant."""
    n_occ = sol.n_occ
    all_t = [(o, v) for o in range(n_occ) for v in range(n_occ, sol.n_orb)]
    if variant == "full":
        return all_t
    if active is None:
        raise ValueError("active set required")
    a = set(active.indices)
    if variant == "active":
        return [(o, v) for o, v in all_t if o in a and v in a]
    if variant == "reduced":
        return [(o, v) for o, v in all_t if not (o in a and v in a)]
    raise ValueError(f"unknown variant '{variant}'")


def _denominator(omega, delta, eta):
    if omega == "static":
        return -2.0 / delta
    omega = complex(omega)
    d1 = omega - delta + 1j * eta
    d2 = omega + delta - 1j * eta
    if d1 == 0 or d2 == 0:
        raise NumericalError(
            f"omega = {omega} coincides with a bare transition energy and eta = 0"
        )
    return 1.0 / d1 - 1.0 / d2


def polarizability(sol, omega, variant="full", active=None, eta=0.0):
    """Irreducible RPA polarizability as a pair-basis matrix.

    Each occupied->virtual transition (o, v) contributes its two-pole energy
    denominator at the four pair positions {(o,v),(v,o)} x {(o,v),(v,o)}.
    """
    n = sol.n_orb
    dtype = float if omega == "static" else complex
    p = np.zeros((n * n, n * n), dtype=dtype)
    eps = sol.energies
    for o, v in transitions(sol, variant, active):
        d = _denominator(omega, eps[v] - eps[o], eta)
        ids = (o * n + v, v * n + o)
        for r in ids:
            for c in ids:
                p[r, c] += d
    return PairOperator(matrix=p, omega=omega, n_orb=n)


def polarizability_from_g(sol, omega, variant="full", active=None, eta=0.0):
    """Same object via the frequency convolution of two Green's functions.

    Evaluated analytically from the pole structure: an ordered orbital pair
    (a, b) contributes n_a(1-n_b)/(w - (e_b - e_a) + i eta)
    - (1-n_a) n_b/(w - (e_b - e_a) - i eta).
    """
    n = sol.n_orb
    occ = sol.occupations / 2.0  # same-spin occupation, in {0, 1}
    eps = sol.energies
    if active is not None:
        in_a = active.mask()
    w = 0.0 if omega == "static" else complex(omega)
    p = np.zeros((n * n, n * n), dtype=complex)
    for a in range(n):
        for b in range(n):
            na, nb = occ[a], occ[b]
            weight = na * (1.0 - nb) - (1.0 - na) * nb
            if weight == 0.0:
                continue
            if variant == "active" and not (in_a[a] and in_a[b]):
                continue
            if variant == "reduced" and (in_a[a] and in_a[b]):
                continue
            gap = eps[b] - eps[a]
            if na > nb:
                amp = na * (1.0 - nb) / (w - gap + 1j * eta)
            else:
                amp = -(1.0 - na) * nb / (w - gap - 1j * eta)
            if amp == 0.0:
                continue
            ids = (a * n + b, b * n + a)
            for r in ids:
                for c in ids:
                    p[r, c] += amp
    if omega == "static":
        p = p.real
    return PairOperator(matrix=p, omega=omega, n_orb=n)


def reducible_chi(p, vpair):
    """Solve chi = P + P v chi as a linear system in the pair basis."""
    mat = p.matrix if isinstance(p, PairOperator) else p
    dim = mat.shape[0]
    lhs = np.eye(dim) - mat @ vpair
    sv = np.linalg.svd(lhs, compute_uv=False)
    if sv.min() < 1e-12 * max(1.0, sv.max()):
        raise RpaInstabilityError(
            f"(1 - P v) is singular (smallest singular value {sv.min():.3e})",
            value=float(sv.min()),
        )
    chi = np.linalg.solve(lhs, mat)
    if isinstance(p, PairOperator):
        return PairOperator(matrix=chi, omega=p.omega, n_orb=p.n_orb)
    return chi


def apply_screening(chi, vpair):
    """W = v + v chi v in the pair basis."""
    mat = chi.matrix if isinstance(chi, PairOperator) else chi
    return vpair + vpair @ mat @ vpair


def rpa_modes(sol, variant="full", active=None):
    """Eigenmode (pole) decomposition of the dynamic screening.

    Folds the full two-denominator RPA response into the symmetric
    Omega^2 eigenproblem over the transition space and returns positive
    excitation energies with residue amplitude vectors.
    """
    n = sol.n_orb
    vpair = tensors.tensor_to_pair(sol.v_mo)
    trans = transitions(sol, variant, active)
    nt = len(trans)
    if nt == 0:
        return PoleRep(omegas=np.zeros(0), amps=np.zeros((n * n, 0)), n_orb=n)
    deltas = np.array([sol.energies[v] - sol.energies[o] for o, v in trans])
    # columns of U are the (unnormalized) pair-space transition vectors
    u = np.zeros((n * n, nt))
    for t, (o, v) in enumerate(trans):
        u[o * n + v, t] = 1.0
        u[v * n + o, t] = 1.0
    k = u.T @ vpair @ u
    sq = np.sqrt(2.0 * deltas)
    m = np.diag(deltas**2) + (sq[:, None] * k) * sq[None, :]
    w2, z = np.linalg.eigh(0.5 * (m + m.T))
    if w2.min() < -OMEGA_SQ_TOL:
        raise RpaInstabilityError(
            f"negative RPA eigenvalue Omega^2 = {w2.min():.3e}", value=float(w2.min())
        )
    w2 = np.clip(w2, 0.0, None)
    omegas = np.sqrt(w2)
    amps = vpair @ (u * sq[None, :]) @ z
    return PoleRep(omegas=omegas, amps=amps, n_orb=n)


def wp_eval(modes, omega, eta=0.0):
    """Dense Wp(omega) reconstructed from the pole representation."""
    if modes.n_modes == 0:
        n = modes.n_orb
        return np.zeros((n * n, n * n), dtype=complex)
    w = complex(omega)
    d1 = w - modes.omegas + 1j * eta
    d2 = w + modes.omegas - 1j * eta
    if np.any(d1 == 0) or np.any(d2 == 0):
        raise NumericalError(f"omega = {omega} hits a screening pole and eta = 0")
    coeff = (1.0 / d1 - 1.0 / d2) / (2.0 * modes.omegas)
    return (modes.amps * coeff[None, :]) @ modes.amps.T


def truncate_rank(modes, rank):
    """Keep the `rank` modes with the largest residue Frobenius norm."""
    total = modes.n_modes
    if not 1 <= rank <= total:
        raise ValueError(f"rank must be in [1, {total}], got {rank}")
    order = np.argsort(-modes.residue_norms(), kind="stable")[:rank]
    order = np.sort(order)
    return PoleRep(
        omegas=modes.omegas[order], amps=modes.amps[:, order], n_orb=modes.n_orb
    )


def reconstruction_error(modes_trunc, modes_full, grid=None):
    """Max Frobenius error of Wp over an imaginary-axis frequency grid."""
    if grid is None:
        grid = [0.3j, 1.0j, 2.5j]
    err = 0.0
    for w in grid:
        diff = wp_eval(modes_trunc, w) - wp_eval(modes_full, w)
        err = max(err, float(np.linalg.norm(diff)))
    return err


def screened_w(sol, eta=0.0):
    """Full dynamically screened interaction W0 = v + v chi v.

    Static tensor from the dense Dyson solve, dynamic part as a pole
    representation from rpa_modes.
    """
    vpair = tensors.tensor_to_pair(sol.v_mo)
    p0 = polarizability(sol, "static")
    chi = reducible_chi(p0, vpair)
    w_static = apply_screening(chi, vpair)
    modes = rpa_modes(sol)
    return ScreenedInteraction(
        static_tensor=tensors.pair_to_tensor(w_static, sol.n_orb),
        pole_rep=modes,
        rank=modes.n_modes,
    )


def partially_screened_wr(sol, active, method="direct"):
    """Static partially screened interaction from the reduced polarizability.

    method "direct": W = v + v chiR v with chiR = (1 - P0R v)^-1 P0R.
    method "dyson":  solve (1 - v P0R) W = v.
    Both agree to linear-solver precision.
    """
    n = sol.n_orb
    vpair = tensors.tensor_to_pair(sol.v_mo)
    p0r = polarizability(sol, "static", "reduced", active).matrix
    if method == "direct":
        chi_r = reducible_chi(p0r, vpair)
        w = apply_screening(chi_r, vpair)
    elif method == "dyson":
        dim = n * n
        lhs = np.eye(dim) - vpair @ p0r
        sv = np.linalg.svd(lhs, compute_uv=False)
        if sv.min() < 1e-12 * max(1.0, sv.max()):
            raise RpaInstabilityError(
                f"(1 - v P0R) is singular (smallest singular value {sv.min():.3e})",
                value=float(sv.min()),
            )
        w = np.linalg.solve(lhs, vpair)
    else:
        raise ValueError(f"unknown method '{method}'")
    w = 0.5 * (w + w.T)
    return ScreenedInteraction(
        static_tensor=tensors.pair_to_tensor(w, n), pole_rep=None, rank=0
    )


def wr_dynamic(sol, active, omega, eta=0.0):
    """Dense dynamic partially screened interaction W0R(omega) in pair form."""
    vpair = tensors.tensor_to_pair(sol.v_mo)
    p0r = polarizability(sol, omega, "reduced", active, eta=eta).matrix
    chi_r = reducible_chi(p0r, vpair)
    return apply_screening(chi_r, vpair)
