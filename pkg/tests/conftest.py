import numpy as np
import pytest

from qembed import meanfield, model


@pytest.fixture(scope="session")
def chain4_free():
    """4-site chain, t=1, no interaction."""
    return model.build_model(model.ModelSpec(n_sites=4, t=1.0, u=0.0, n_elec=4))


@pytest.fixture(scope="session")
def chain4_u2():
    """4-site chain with onsite U = 2."""
    return model.build_model(model.ModelSpec(n_sites=4, t=1.0, u=2.0, n_elec=4))


@pytest.fixture(scope="session")
def dimer_u2():
    """2-site, 2-electron model with U on both sites."""
    return model.build_model(model.ModelSpec(n_sites=2, t=1.0, u=2.0, n_elec=2))


@pytest.fixture(scope="session")
def dimer_free():
    """2-site non-interacting model; MO energies are exactly (-1, +1)."""
    return model.build_model(model.ModelSpec(n_sites=2, t=1.0, u=0.0, n_elec=2))


@pytest.fixture(scope="session")
def defect6_spec():
    return model.ModelSpec(
        n_sites=6,
        t=1.0,
        u=1.0,
        defect_sites=(2,),
        defect_onsite=-1.5,
        defect_u=3.0,
        n_elec=6,
    )


@pytest.fixture(scope="session")
def defect6(defect6_spec):
    """The shipped demo model: 6-site chain with one deep defect site."""
    return model.build_model(defect6_spec)


@pytest.fixture(scope="session")
def defect4():
    return model.build_model(
        model.ModelSpec(
            n_sites=4,
            t=1.0,
            u=1.2,
            defect_sites=(1,),
            defect_onsite=-0.6,
            defect_u=2.0,
            n_elec=4,
        )
    )


@pytest.fixture(scope="session")
def sol_dimer_free(dimer_free):
    return meanfield.solve_scf(dimer_free, mode="hartree-fock")


@pytest.fixture(scope="session")
def sol_dimer_u2(dimer_u2):
    return meanfield.solve_scf(dimer_u2, mode="hartree-fock")


@pytest.fixture(scope="session")
def sol_defect4(defect4):
    return meanfield.solve_scf(defect4, mode="hartree-fock")


@pytest.fixture(scope="session")
def sol_defect6(defect6):
    return meanfield.solve_scf(defect6, mode="hartree-fock")


def interacting_model_zoo():
    """Distinct interacting models with n_orb <= 8 for oracle sweeps."""
    return [
        model.ModelSpec(n_sites=2, t=1.0, u=2.0, n_elec=2),
        model.ModelSpec(n_sites=4, t=1.0, u=1.5, n_elec=4),
        model.ModelSpec(
            n_sites=4, t=1.0, u=1.2, defect_sites=(1,), defect_onsite=-0.6,
            defect_u=2.0, n_elec=4,
        ),
        model.ModelSpec(
            n_sites=6, t=1.0, u=1.0, defect_sites=(2,), defect_onsite=-1.5,
            defect_u=3.0, n_elec=6,
        ),
        model.ModelSpec(family="ring", n_sites=6, t=0.8, u=1.0, v_offsite=0.3,
                        defect_sites=(0,), defect_onsite=-1.0, defect_u=2.0,
                        n_elec=6),
        model.ModelSpec(family="grid", n_sites=6, shape=(3, 2), t=1.0, u=0.9,
                        defect_sites=(4,), defect_onsite=-1.2, defect_u=2.2,
                        n_elec=6),
    ]


@pytest.fixture(scope="session")
def model_zoo():
    return [model.build_model(s) for s in interacting_model_zoo()]


@pytest.fixture(scope="session")
def sol_zoo(model_zoo):
    return [meanfield.solve_scf(m, mode="hartree-fock") for m in model_zoo]


@pytest.fixture
def rng():
    return np.random.default_rng(20260824)
