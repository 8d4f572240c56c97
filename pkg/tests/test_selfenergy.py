import numpy as np
import pytest
import scipy.integrate
import scipy.optimize

from qembed import screening, selfenergy
from qembed.errors import QuadratureError
from qembed.greens import OrbitalSet
from qembed.selfenergy import QuadSpec


def test_sigma_x_zero_interaction(sol_dimer_free):
    assert np.all(selfenergy.sigma_x(sol_dimer_free) == 0.0)


def test_sigma_x_hand_value(sol_dimer_u2):
    sx = selfenergy.sigma_x(sol_dimer_u2)
    assert sx[0, 0] == pytest.approx(-sol_dimer_u2.v_mo[0, 0, 0, 0], abs=1e-12)
    assert np.abs(sx - sx.T).max() < 1e-10


def test_sigma_x_additivity(sol_defect6, rng):
    n = sol_defect6.n_orb
    for _ in range(5):
        size = rng.integers(1, n)
        a = OrbitalSet(tuple(rng.choice(n, size=size, replace=False)), n)
        total = selfenergy.sigma_x(sol_defect6)
        split = selfenergy.sigma_x(sol_defect6, a) + selfenergy.sigma_x(
            sol_defect6, a.complement()
        )
        assert np.abs(total - split).max() < 1e-12


def test_sigma_c_no_modes(sol_dimer_free):
    modes = screening.rpa_modes(sol_dimer_free)
    sc = selfenergy.sigma_c_analytic(sol_dimer_free, modes, 0.3)
    assert np.abs(sc).max() < 1e-13


def test_sigma_c_single_mode_hand_assembly(sol_dimer_u2):
    sol = sol_dimer_u2
    modes = screening.rpa_modes(sol)
    assert modes.n_modes == 1
    om = modes.omegas[0]
    b = modes.channel_amps()[:, :, 0]  # b[m, k]
    w = 0.21
    # two-term pole expression: occupied k=0 and virtual k=1
    expect = np.zeros((2, 2), dtype=complex)
    for k, occupied in ((0, True), (1, False)):
        denom = w - sol.energies[k] + om if occupied else w - sol.energies[k] - om
        expect += np.outer(b[:, k], b[:, k]) / (2.0 * om * denom)
    got = selfenergy.sigma_c_analytic(sol, modes, w)
    assert np.abs(got - expect).max() < 1e-12


def test_sigma_c_variant_additivity(sol_defect6):
    sol = sol_defect6
    modes = screening.rpa_modes(sol)
    a = OrbitalSet((1, 2, 4), sol.n_orb)
    for w in (0.0, 0.3, -0.8):
        full = selfenergy.sigma_c_analytic(sol, modes, w)
        split = selfenergy.sigma_c_analytic(
            sol, modes, w, a
        ) + selfenergy.sigma_c_analytic(sol, modes, w, a.complement())
        assert np.abs(full - split).max() < 1e-10


def test_contour_matches_analytic(sol_defect4):
    sol = sol_defect4
    modes = screening.rpa_modes(sol)
    wp_fn = selfenergy.wp_from_modes(modes)
    a = OrbitalSet((1, 2), sol.n_orb)
    gap = sol.energies[sol.lumo] - sol.energies[sol.homo]
    freqs = [sol.energies[sol.homo], sol.fermi_level, sol.fermi_level + 0.4 * gap]
    for kset in (None, a, a.complement()):
        for w in freqs:
            ana = selfenergy.sigma_c_analytic(sol, modes, w, kset)
            con = selfenergy.sigma_c_contour(sol, wp_fn, w, kset)
            assert np.abs(ana - con).max() < 1e-6


def test_residue_window_weight(sol_dimer_u2):
    """For ω above a virtual level, the residue term enters with weight 1-n_k."""
    sol = sol_dimer_u2
    modes = screening.rpa_modes(sol)
    wp_fn = selfenergy.wp_from_modes(modes)
    k = sol.lumo
    w = sol.energies[k] + 0.15  # window (eps_F, w) contains the virtual level
    n = sol.n_orb

    def integrand(nu, m, nn):
        ch = selfenergy._channel(wp_fn(1j * nu), n)
        val = np.zeros((n, n), dtype=complex)
        for kk in range(n):
            g = sol.energies[kk] - w
            val += ch[:, :, kk] * g / (g * g + nu * nu)
        return val[m, nn].real / np.pi

    i_term = np.zeros((n, n))
    for m in range(n):
        for nn in range(n):
            i_term[m, nn], _ = scipy.integrate.quad(
                integrand, 0.0, np.inf, args=(m, nn), limit=200
            )
    residue = selfenergy._channel(wp_fn(sol.energies[k] - w), n)[:, :, k]
    sigma = selfenergy.sigma_c_contour(sol, wp_fn, w)
    assert np.abs(sigma - (i_term + residue)).max() < 1e-6


def test_quadrature_check_raises(sol_defect4):
    modes = screening.rpa_modes(sol_defect4)
    wp_fn = selfenergy.wp_from_modes(modes)
    with pytest.raises(QuadratureError):
        selfenergy.sigma_c_contour(
            sol_defect4, wp_fn, 0.0, quad=QuadSpec(nodes=2, check=True, tol=1e-12)
        )


def test_qp_noninteracting(sol_dimer_free):
    modes = screening.rpa_modes(sol_dimer_free)
    ev = selfenergy.make_sigma_xc_diag(sol_dimer_free, modes)
    qp = selfenergy.qp_iterate(sol_dimer_free, ev)
    assert np.abs(qp.energies - sol_dimer_free.energies).max() < 1e-12
    assert np.all(qp.iterations == 1)


def test_qp_root_oracle(sol_defect4):
    sol = sol_defect4
    modes = screening.rpa_modes(sol)
    ev = selfenergy.make_sigma_xc_diag(sol, modes)
    qp = selfenergy.qp_iterate(sol, ev)
    vxc = np.diag(sol.v_xc)
    for i in range(sol.n_orb):
        # plug the converged energy back into the QP equation
        resid = qp.energies[i] - (
            sol.energies[i] + np.real(ev(i, qp.energies[i])) - vxc[i]
        )
        assert abs(resid) < 1e-7
        # independent root bracketing around the fixed point
        f = lambda w: w - sol.energies[i] - np.real(ev(i, w)) + vxc[i]
        root = scipy.optimize.brentq(
            f, qp.energies[i] - 0.05, qp.energies[i] + 0.05
        )
        assert abs(root - qp.energies[i]) < 1e-6


def test_static_symmetrize(sol_defect4):
    sol = sol_defect4
    modes = screening.rpa_modes(sol)
    sx = selfenergy.sigma_x(sol)

    def sigma_fn(w):
        return sx + selfenergy.sigma_c_analytic(sol, modes, w)

    qp = np.linspace(-1.0, 1.0, sol.n_orb)
    m = selfenergy.static_symmetrize(sigma_fn, qp)
    assert np.abs(m - m.T).max() == 0.0
    for i in range(sol.n_orb):
        assert m[i, i] == pytest.approx(
            np.real(sigma_fn(qp[i])[i, i]), abs=1e-12
        )
    # equal-argument collapse for a degenerate pair
    qp_deg = qp.copy()
    qp_deg[1] = qp_deg[0]
    m2 = selfenergy.static_symmetrize(sigma_fn, qp_deg)
    assert m2[0, 1] == pytest.approx(np.real(sigma_fn(qp_deg[0])[0, 1]), abs=1e-12)


def test_pole_proximity_warning(sol_dimer_u2):
    sol = sol_dimer_u2
    modes = screening.rpa_modes(sol)
    pole = sol.energies[0] - modes.omegas[0]
    with pytest.warns(selfenergy.PoleProximityWarning):
        selfenergy.sigma_c_analytic(sol, modes, pole + 1e-6, eta=1e-4)
