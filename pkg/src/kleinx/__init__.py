"""Numerical toolkit for the extremal metric on the Klein bottle.

Submodules: ``specfun`` (elliptic functions), ``odeint`` (Runge-Kutta with
dense output and events), ``systems`` (vector fields and first integrals),
``extremal`` (the closed-form solution and embedding), ``sturm`` (periodic
spectra), ``sweep`` (shooting evidence), ``geometry`` (bipolar metrics) and
``cli``.
"""
from ._accel import USE_NUMBA
from .errors import KleinxError
from .extremal import PERIOD, lambda_area, phi_closed_form
from .specfun import complete_E, complete_K, jacobi_cn_sn_dn, weierstrass_p
from .systems import P_EXTREMAL, P_SEPARATRIX, initial_state

__version__ = "0.1.0"

__all__ = [
    "USE_NUMBA", "KleinxError", "PERIOD", "lambda_area", "phi_closed_form", "complete_E", "complete_K",
    "jacobi_cn_sn_dn", "weierstrass_p", "P_EXTREMAL", "P_SEPARATRIX", "initial_state",
]
