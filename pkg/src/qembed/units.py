"""Unit conversions. All internal quantities are in Hartree atomic units."""

HARTREE_TO_EV = 27.211386245988


def hartree_to_ev(x):
    return x * HARTREE_TO_EV
