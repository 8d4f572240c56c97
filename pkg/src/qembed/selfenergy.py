"""G0W0 self-energy: exchange, correlation (two independent frequency paths),
quasiparticle iteration and static symmetrization.

The analytic pole-sum path is exact in a finite basis and serves as the
primary route; the contour-deformation quadrature path reproduces it within
quadrature tolerance and acts as an independent cross-check.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from . import screening
from .errors import QpConvergenceError, QuadratureError


class PoleProximityWarning(UserWarning):
    pass


@dataclass(frozen=True)
class QuadSpec:
    """Imaginary-axis quadrature: Gauss-Legendre on t in (0,1), nu = t/(1-t)."""

    nodes: int = 64
    check: bool = False
    tol: float = 1e-8


@dataclass(frozen=True)
class QpResult:
    energies: np.ndarray
    iterations: np.ndarray
    residuals: np.ndarray


def _kmask(sol, kset):
    if kset is None:
        return np.ones(sol.n_orb, dtype=bool)
    return kset.mask()


def sigma_x(sol, kset=None):
    """Static exchange self-energy with the occupied sum restricted to kset.

    Sigma_x[m, n] = - sum_{k occ in kset} (mk|nk), same-spin occupations.
    """
    occ = (sol.occupations / 2.0) * _kmask(sol, kset)
    # (mk|nk) = v_mo[m, n, k, k] in the stored pairing
    return -np.einsum("mnkk,k->mn", sol.v_mo, occ, optimize=True)


def pole_distance(sol, modes, omega, kset=None):
    """Distance from omega to the nearest pole of the G0 Wp convolution."""
    if modes.n_modes == 0:
        return np.inf
    occ = sol.occupations / 2.0
    mask = _kmask(sol, kset)
    dist = np.inf
    for k in range(sol.n_orb):
        if not mask[k]:
            continue
        sign = -1.0 if occ[k] > 0.5 else 1.0
        poles = sol.energies[k] + sign * modes.omegas
        dist = min(dist, float(np.abs(np.real(omega) - poles).min()))
    return dist


def sigma_c_analytic(sol, modes, omega, kset=None, eta=0.0):
    """Correlation self-energy from the closed-form pole convolution.

    Each (orbital pole k) x (screening mode s) term contributes
    amps[(m,k),s] amps[(n,k),s] / (2 Om_s) times
    1/(w - e_k + Om_s - i eta) for occupied k and
    1/(w - e_k - Om_s + i eta) for virtual k.
    """
    n = sol.n_orb
    if modes.n_modes == 0:
        return np.zeros((n, n), dtype=complex)
    if eta > 0 and pole_distance(sol, modes, omega, kset) < 10.0 * eta:
        warnings.warn(
            f"omega = {omega} is within 10*eta of a convolution pole",
            PoleProximityWarning,
            stacklevel=2,
        )
    ch = modes.channel_amps()  # (n, n, S)
    occ = sol.occupations / 2.0
    mask = _kmask(sol, kset)
    w = complex(omega)
    sigma = np.zeros((n, n), dtype=complex)
    for k in range(n):
        if not mask[k]:
            continue
        if occ[k] > 0.5:
            denom = w - sol.energies[k] + modes.omegas - 1j * eta
        else:
            denom = w - sol.energies[k] - modes.omegas + 1j * eta
        coeff = 1.0 / (2.0 * modes.omegas * denom)
        sigma += np.einsum("ms,ns,s->mn", ch[:, k, :], ch[:, k, :], coeff)
    return sigma


def _gl_nodes(n):
    t, w = np.polynomial.legendre.leggauss(n)
    t = 0.5 * (t + 1.0)
    w = 0.5 * w
    nu = t / (1.0 - t)
    wt = w / (1.0 - t) ** 2
    return nu, wt


def _channel(wp_dense, n):
    """Extract C[m, n, k] = Wp[(m,k), (n,k)] from a dense pair matrix."""
    w4 = wp_dense.reshape(n, n, n, n)  # w4[i, k, j, l] = Wp[(i,k),(j,l)]
    return np.einsum("mknk->mnk", w4)


def _sigma_c_contour_once(sol, wp_fn, omega, kset, n_nodes, eta):
    n = sol.n_orb
    occ = sol.occupations / 2.0
    mask = _kmask(sol, kset)
    eps = sol.energies
    w = float(np.real(omega))
    if np.iscomplexobj(omega) and complex(omega).imag != 0.0:
        raise ValueError("contour path expects a real frequency")

    nu, wt = _gl_nodes(n_nodes)
    sigma = np.zeros((n, n), dtype=complex)
    gaps = eps - w
    for q in range(len(nu)):
        ch = _channel(wp_fn(1j * nu[q]), n)  # (n, n, k)
        lor = gaps / (gaps**2 + nu[q] ** 2) * mask
        sigma += (wt[q] / np.pi) * np.einsum("mnk,k->mn", ch, lor)

    # residue part: occupation window between omega and the Fermi level.
    # At omega exactly on a level the Lorentzian term integrates to zero
    # instead of +-1/2, so the shared half-residue of the two side limits
    # is restored explicitly.
    for k in range(n):
        if not mask[k]:
            continue
        if occ[k] > 0.5:
            fk = -1.0 if w < eps[k] < sol.fermi_level else 0.0
            if eps[k] == w:
                fk = -0.5
        else:
            fk = 1.0 if sol.fermi_level < eps[k] < w else 0.0
            if eps[k] == w:
                fk = 0.5
        if fk == 0.0:
            continue
        ch = _channel(wp_fn(eps[k] - w + 1j * eta if eta > 0 else eps[k] - w), n)
        sigma += fk * ch[:, :, k]
    return sigma


def sigma_c_contour(sol, wp_fn, omega, kset=None, quad=QuadSpec(), eta=0.0):
    """Correlation self-energy via contour deformation.

    wp_fn(omega) must return the dense pair-basis matrix of the dynamic
    screening Wp at that (complex) frequency.  The frequency integral runs
    along the imaginary axis; poles crossed between omega and the Fermi level
    enter through the residue sum.
    """
    sigma = _sigma_c_contour_once(sol, wp_fn, omega, kset, quad.nodes, eta)
    if quad.check:
        refined = _sigma_c_contour_once(sol, wp_fn, omega, kset, 2 * quad.nodes, eta)
        resid = float(np.abs(refined - sigma).max())
        if resid > quad.tol:
            raise QuadratureError(
                f"quadrature not converged: doubling nodes changes the result "
                f"by {resid:.3e} (> {quad.tol:g})",
                residual=resid,
            )
        sigma = refined
    return sigma


def wp_from_modes(modes, eta=0.0):
    """Dense-evaluation callable for a pole representation."""
    return lambda w: screening.wp_eval(modes, w, eta=eta)


def make_sigma_xc_diag(sol, modes, kset=None, eta=0.0):
    """Diagonal Sigma_xc(omega) evaluator used by the QP iteration."""
    sx = np.diag(sigma_x(sol, kset)).copy()

    def evaluate(i, omega):
        sc = sigma_c_analytic(sol, modes, omega, kset, eta=eta)
        return sx[i] + sc[i, i]

    return evaluate


def qp_iterate(sol, sigma_xc_diag, damping=0.5, tol=1e-8, max_iter=200):
    """Per-orbital fixed point e = e_ks + Re<Sigma_xc(e) - V_xc>.

    Linear damping; raises QpConvergenceError with the last two iterates on
    non-convergence (typically a pole near the QP solution).
    """
    n = sol.n_orb
    vxc = np.diag(sol.v_xc)
    energies = np.zeros(n)
    iters = np.zeros(n, dtype=int)
    resid = np.zeros(n)
    for i in range(n):
        e = sol.energies[i]
        prev = e
        for it in range(1, max_iter + 1):
            target = sol.energies[i] + np.real(sigma_xc_diag(i, e)) - vxc[i]
            new = (1.0 - damping) * e + damping * target
            resid[i] = abs(new - e)
            prev, e = e, new
            if resid[i] <= tol:
                iters[i] = it
                break
        else:
            raise QpConvergenceError(
                f"QP iteration for orbital {i} did not converge "
                f"(last iterates {prev:.10f}, {e:.10f})",
                orbital=i,
                last_iterates=(prev, e),
            )
        energies[i] = e
    return QpResult(energies=energies, iterations=iters, residuals=resid)


def static_symmetrize(sigma_fn, qp_energies, indices=None):
    """Static real symmetric matrix from a dynamic self-energy.

    M_ij = 1/2 Re[ S_ij(e_i^QP) + S_ij(e_j^QP) ], evaluated over the given
    orbital indices (all orbitals when None).
    """
    qp = np.asarray(qp_energies, dtype=float)
    if indices is None:
        indices = list(range(len(qp)))
    idx = list(indices)
    evals = {a: sigma_fn(qp[a]) for a in set(idx)}
    na = len(idx)
    m = np.zeros((na, na))
    for p, a in enumerate(idx):
        for q, b in enumerate(idx):
            m[p, q] = 0.5 * np.real(evals[a][a, b] + evals[b][a, b])
    return 0.5 * (m + m.T)
