import numpy as np
import pytest

from qembed import screening, tensors
from qembed.greens import OrbitalSet


def test_pinned_two_level_element(sol_dimer_free):
    # single occ->virt transition with gap 2: at omega = 0 the pair element
    # ((0,1),(0,1)) is 1/(0-2) - 1/(0+2) = -1
    p = screening.polarizability(sol_dimer_free, 0.0).matrix
    n = 2
    assert p[0 * n + 1, 0 * n + 1] == pytest.approx(-1.0)
    assert p[1 * n + 0, 0 * n + 1] == pytest.approx(-1.0)
    assert p[0 * n + 0, 0 * n + 0] == 0.0


def test_static_polarizability_real_nsd(sol_defect6):
    p = screening.polarizability(sol_defect6, "static").matrix
    assert p.dtype == float
    assert np.abs(p - p.T).max() < 1e-14
    assert np.linalg.eigvalsh(p).max() <= 1e-12


def test_variant_limits(sol_defect6):
    n = sol_defect6.n_orb
    empty = OrbitalSet((), n)
    full_set = OrbitalSet(tuple(range(n)), n)
    w = 0.5j
    p_full = screening.polarizability(sol_defect6, w).matrix
    assert np.all(screening.polarizability(sol_defect6, w, "active", empty).matrix == 0)
    assert np.abs(
        screening.polarizability(sol_defect6, w, "reduced", empty).matrix - p_full
    ).max() < 1e-14
    assert np.all(
        screening.polarizability(sol_defect6, w, "reduced", full_set).matrix == 0
    )


def test_two_path_polarizability(sol_defect6):
    a = OrbitalSet((sol_defect6.homo, sol_defect6.lumo), sol_defect6.n_orb)
    for w in (0.0, 0.5j, 1.0 + 0.1j):
        for variant in ("full", "active", "reduced"):
            p1 = screening.polarizability(sol_defect6, w, variant, a).matrix
            p2 = screening.polarizability_from_g(sol_defect6, w, variant, a).matrix
            assert np.abs(p1 - p2).max() < 1e-8


def test_reduced_decomposition_identity(sol_defect6):
    # P0R = P0 - P0A at sampled frequencies, by the independent G-product path
    a = OrbitalSet((0, 2, 3), sol_defect6.n_orb)
    for w in (0.0, 0.9j, 1.5 + 0.3j):
        pr = screening.polarizability_from_g(sol_defect6, w, "reduced", a).matrix
        p0 = screening.polarizability(sol_defect6, w).matrix
        pa = screening.polarizability(sol_defect6, w, "active", a).matrix
        assert np.abs(pr - (p0 - pa)).max() < 1e-8


def test_reducible_chi_scalar_oracle():
    p = np.array([[-1.0]])
    v = np.array([[0.5]])
    chi = screening.reducible_chi(p, v)
    assert chi[0, 0] == pytest.approx(-2.0 / 3.0)
    w = screening.apply_screening(chi, v)
    assert w[0, 0] == pytest.approx(1.0 / 3.0)


def test_reducible_chi_limits(sol_defect6):
    vpair = tensors.tensor_to_pair(sol_defect6.v_mo)
    zero = np.zeros_like(vpair)
    assert np.all(screening.reducible_chi(zero, vpair) == 0)
    p = screening.polarizability(sol_defect6, "static").matrix
    assert np.abs(screening.reducible_chi(p, zero) - p).max() < 1e-14
    chi = screening.reducible_chi(p, vpair)
    dyson_resid = chi - p - p @ vpair @ chi
    assert np.abs(dyson_resid).max() < 1e-10


def test_rpa_modes_two_level_closed_form(sol_dimer_u2):
    sol = sol_dimer_u2
    modes = screening.rpa_modes(sol)
    delta = sol.energies[1] - sol.energies[0]
    vpair = tensors.tensor_to_pair(sol.v_mo)
    n = sol.n_orb
    u = np.zeros(n * n)
    u[0 * n + 1] = 1.0
    u[1 * n + 0] = 1.0
    kappa = u @ vpair @ u
    expect = np.sqrt(delta**2 + 2.0 * delta * kappa)
    assert modes.n_modes == 1
    assert modes.omegas[0] == pytest.approx(expect, abs=1e-10)


def test_rpa_modes_noninteracting(sol_dimer_free):
    modes = screening.rpa_modes(sol_dimer_free)
    assert np.abs(modes.amps).max() < 1e-14


def test_pole_reconstruction_vs_chi_path(sol_defect6):
    sol = sol_defect6
    modes = screening.rpa_modes(sol)
    vpair = tensors.tensor_to_pair(sol.v_mo)
    for w in (0.3j, 1.7j, 2.5 + 1e-3j):
        chi = screening.reducible_chi(
            screening.polarizability(sol, w).matrix, vpair
        )
        wp_ref = screening.apply_screening(chi, vpair) - vpair
        wp = screening.wp_eval(modes, w)
        assert np.abs(wp - wp_ref).max() < 1e-8


def test_partially_screened_limits(sol_defect6):
    sol = sol_defect6
    n = sol.n_orb
    w_all = screening.partially_screened_wr(sol, OrbitalSet(tuple(range(n)), n))
    assert np.abs(w_all.static_tensor - sol.v_mo).max() < 1e-12
    w_empty = screening.partially_screened_wr(sol, OrbitalSet((), n))
    w0 = screening.screened_w(sol)
    assert np.abs(w_empty.static_tensor - w0.static_tensor).max() < 1e-10


def test_dyson_vs_direct(sol_defect4):
    a = OrbitalSet((sol_defect4.homo, sol_defect4.lumo), sol_defect4.n_orb)
    wa = screening.partially_screened_wr(sol_defect4, a, "direct").static_tensor
    wb = screening.partially_screened_wr(sol_defect4, a, "dyson").static_tensor
    assert np.abs(wa - wb).max() < 1e-10


def test_static_tensors_symmetric(sol_defect6):
    a = OrbitalSet((1, 2, 3), sol_defect6.n_orb)
    wr = screening.partially_screened_wr(sol_defect6, a).static_tensor
    w0 = screening.screened_w(sol_defect6).static_tensor
    assert tensors.symmetry_residual(wr) < 1e-10
    assert tensors.symmetry_residual(w0) < 1e-10


def test_screening_weakens_diagonal(sol_defect6):
    vpair = tensors.tensor_to_pair(sol_defect6.v_mo)
    w0 = tensors.tensor_to_pair(screening.screened_w(sol_defect6).static_tensor)
    assert np.all(np.diag(w0) <= np.diag(vpair) + 1e-12)


def test_truncate_rank(sol_defect6):
    modes = screening.rpa_modes(sol_defect6)
    full = screening.truncate_rank(modes, modes.n_modes)
    assert np.abs(
        screening.wp_eval(full, 0.7j) - screening.wp_eval(modes, 0.7j)
    ).max() < 1e-12
    with pytest.raises(ValueError):
        screening.truncate_rank(modes, 0)
    errs = [
        screening.reconstruction_error(screening.truncate_rank(modes, r), modes)
        for r in range(1, modes.n_modes + 1)
    ]
    assert all(errs[i + 1] <= errs[i] + 1e-12 for i in range(len(errs) - 1))
    assert errs[-1] < 1e-12
