import numpy as np
import pytest

from qembed.greens import GreensEvaluator, OrbitalSet, projector


def test_resolvent_off_axis(sol_dimer_free):
    ev = GreensEvaluator(sol_dimer_free)
    g = ev.g0_diag(1j)
    assert abs(g[0] - 1.0 / (1j + 1.0)) < 1e-12
    assert abs(g[1] - 1.0 / (1j - 1.0)) < 1e-12


def test_projected_variants(sol_dimer_free):
    ev = GreensEvaluator(sol_dimer_free)
    a = OrbitalSet((0,), 2)
    ga = ev.g0_diag(1j, "active", a)
    gr = ev.g0_diag(1j, "reduced", a)
    assert ga[1] == 0.0 and gr[0] == 0.0
    assert abs(ga[0] - 1.0 / (1j + 1.0)) < 1e-12
    assert abs(gr[1] - 1.0 / (1j - 1.0)) < 1e-12


def test_real_axis_sign_rule(sol_dimer_free):
    eta = 1e-3
    ev = GreensEvaluator(sol_dimer_free, eta=eta)
    g = ev.g0_diag(0.0)
    # occupied level at -1, Fermi level 0: denominator 1 - i eta
    assert abs(g[0] - 1.0 / (1.0 - 1j * eta)) < 1e-15
    # virtual level at +1: denominator -1 + i eta
    assert abs(g[1] - 1.0 / (-1.0 + 1j * eta)) < 1e-15
    # causality: Im G_ii has the sign of -sgn(eps_i - eps_F)
    assert g[0].imag > 0 and g[1].imag < 0


def test_additivity_exact(sol_defect6, rng):
    ev = GreensEvaluator(sol_defect6)
    a = OrbitalSet((1, 3, 4), sol_defect6.n_orb)
    for w in (0.0, 0.37, 1j, 0.8 + 0.2j, -2.0):
        full = ev.g0_diag(w)
        split = ev.g0_diag(w, "active", a) + ev.g0_diag(w, "reduced", a)
        assert np.array_equal(full, split)


def test_conjugate_reflection(sol_defect6):
    ev = GreensEvaluator(sol_defect6)
    w = 0.4 + 0.7j
    assert np.abs(ev.g0_diag(np.conj(w)) - np.conj(ev.g0_diag(w))).max() < 1e-14


def test_projector_properties(sol_defect6):
    n = sol_defect6.n_orb
    assert np.array_equal(projector(OrbitalSet(tuple(range(n)), n)), np.eye(n))
    assert np.array_equal(projector(OrbitalSet((), n)), np.zeros((n, n)))
    p = projector(OrbitalSet((0, 2, 5), n))
    assert np.array_equal(p @ p, p)


def test_orbital_set_hygiene():
    s = OrbitalSet((3, 1, 1, 2), 5)
    assert s.indices == (1, 2, 3)
    assert s.complement().indices == (0, 4)
    with pytest.raises(ValueError):
        OrbitalSet((5,), 5)


def test_eta_validation(sol_dimer_free):
    with pytest.raises(ValueError):
        GreensEvaluator(sol_dimer_free, eta=0.0)
