"""Unit conversions. Everything inside the package is in atomic units."""

HARTREE_EV = 27.211386
AMU_ME = 1822.888486

# default reduced mass of H2, 0.5 amu
MU_H2 = 0.5 * AMU_ME


def ev_to_hartree(e_ev: float) -> float:
    return e_ev / HARTREE_EV


def hartree_to_ev(e_h: float) -> float:
    return e_h * HARTREE_EV
