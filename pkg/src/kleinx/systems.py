"""Vector fields, initial data, first integrals and coordinate charts.

State layouts used by the integrators:

* full   ``(phi0, phi1, phi2, phi0', phi1', phi2')``
* syst12 ``(phi1, phi2, phi1', phi2')``
* syst01 ``(phi0, phi1, phi0', phi1')``
* chart B in the angle ``theta``: ``(psi, dpsi/dy, dtheta/dy, y)``

Chart A is ``phi0 = cos psi, phi1 = sin psi sin theta, phi2 = sin psi cos theta``;
chart B is ``phi2 = cos psi, phi1 = sin psi sin theta, phi0 = sin psi cos theta``.
The two are never mixed.
"""
from __future__ import annotations

import math
from dataclasses import astuple, dataclass

import numpy as np

from ._accel import kernel
from .errors import (CoordinateSingularityError, DegenerateZeroError, DomainError,
                     RotationFailureError)
from .odeint import (DEFAULT_ABS_TOL, DEFAULT_REL_TOL, EventSpec, Trajectory, find_events,
                     integrate)

P_EXTREMAL = math.sqrt(3.0 / 8.0)
P_SEPARATRIX = math.sqrt(3.0) / 2.0
MANIFOLD_TOL = 1e-9
ZERO_TOL = 1e-10


@dataclass(frozen=True)
class ShootingParameter:
    p: float

    def __post_init__(self):
        if not (0.0 < self.p < 1.0):
            raise DomainError(f"shooting parameter must lie in (0, 1), got {self.p!r}")


def _p(p) -> float:
    return ShootingParameter(float(getattr(p, "p", p))).p


@dataclass(frozen=True)
class PhiState:
    """Cauchy datum of the three eigenfunction profiles at ordinate ``y``."""

    y: float
    phi0: float
    phi1: float
    phi2: float
    dphi0: float
    dphi1: float
    dphi2: float

    @classmethod
    def from_vector(cls, y, v) -> "PhiState":
        return cls(float(y), *map(float, v[:6]))

    @property
    def vector(self) -> np.ndarray:
        return np.array(astuple(self)[1:])

    @property
    def lambda_f(self) -> float:
        return 2.0 * (self.phi1 ** 2 + 4.0 * self.phi2 ** 2)

    def constraint_residuals(self) -> tuple[float, float, float]:
        """Sphere, tangency and conformality defects."""
        v = self.vector
        phi, dphi = v[:3], v[3:]
        return (float(phi @ phi - 1.0), float(phi @ dphi),
                float(dphi @ dphi - (self.phi1 ** 2 + 4.0 * self.phi2 ** 2)))

    def on_manifold(self, tol: float = MANIFOLD_TOL) -> bool:
        return all(abs(r) < tol for r in self.constraint_residuals()[:2])


@dataclass(frozen=True)
class FirstIntegrals:
    e0: float
    e1: float
    e2: float
    kappa0: float
    kappa1: float
    kappa2: float

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self))

    def relation_residuals(self) -> dict[str, float]:
        return {
            "E0+E1+E2-1": self.e0 + self.e1 + self.e2 - 1.0,
            "E0+3E1/4-1": self.e0 + 0.75 * self.e1 - 1.0,
            "E2+E1/4": self.e2 + 0.25 * self.e1,
            "k2-3k0-4k1-12": self.kappa2 - 3.0 * self.kappa0 - 4.0 * self.kappa1 - 12.0,
            "k0+k1-1": self.kappa0 + self.kappa1 - 1.0,
            "k0+k2-16": self.kappa0 + self.kappa2 - 16.0,
            "E1-k0/3": self.e1 - self.kappa0 / 3.0,
        }


def integrals_closed_form(p) -> tuple[float, float, float]:
    """``(E0, E1, E2)`` on the orbit starting from ``initial_state(p)``."""
    q = p * p * (4.0 * p * p - 3.0)
    return 1.0 - q, 4.0 * q / 3.0, -q / 3.0


def initial_state(p) -> PhiState:
    p = _p(p)
    return PhiState(0.0, math.sqrt((1.0 - p) * (1.0 + p)), 0.0, p, 0.0, 2.0 * p, 0.0)


# --- vector fields -----------------------------------------------------------

@kernel
def full_rhs(y, s, out):
    lf = 2.0 * (s[1] * s[1] + 4.0 * s[2] * s[2])
    out[0] = s[3]
    out[1] = s[4]
    out[2] = s[5]
    out[3] = -lf * s[0]
    out[4] = (1.0 - lf) * s[1]
    out[5] = (4.0 - lf) * s[2]


@kernel
def syst12_rhs(y, s, out):
    q = 2.0 * s[0] * s[0] + 8.0 * s[1] * s[1]
    out[0] = s[2]
    out[1] = s[3]
    out[2] = (1.0 - q) * s[0]
    out[3] = (4.0 - q) * s[1]


@kernel
def syst01_rhs(y, s, out):
    q = 8.0 * s[0] * s[0] + 6.0 * s[1] * s[1]
    out[0] = s[2]
    out[1] = s[3]
    out[2] = (q - 8.0) * s[0]
    out[3] = (q - 7.0) * s[1]


@kernel
def chart_b_rhs(y, s, out):
    # s = (psi, theta, psi', theta'), derivatives in y
    sp, cp = math.sin(s[0]), math.cos(s[0])
    st, ct = math.sin(s[1]), math.cos(s[1])
    out[0] = s[2]
    out[1] = s[3]
    out[2] = sp * cp * (s[3] * s[3] + st * st - 4.0)
    out[3] = -2.0 * cp / sp * s[2] * s[3] + st * ct


@kernel
def chart_b_theta_rhs(theta, s, out):
    # s = (psi, psi', theta', y) as functions of theta
    sp, cp = math.sin(s[0]), math.cos(s[0])
    st, ct = math.sin(theta), math.cos(theta)
    w = s[2]
    psi_yy = sp * cp * (w * w + st * st - 4.0)
    theta_yy = -2.0 * cp / sp * s[1] * w + st * ct
    out[0] = s[1] / w
    out[1] = psi_yy / w
    out[2] = theta_yy / w
    out[3] = 1.0 / w


def _eval(fn, s, y=0.0):
    s = np.asarray(s, dtype=float)
    out = np.empty_like(s)
    fn(y, s, out)
    return out


def rhs_full(state: PhiState, metric_value: float | None = None) -> np.ndarray:
    """Derivative of the full state; ``metric_value`` overrides lambda*f."""
    if metric_value is None:
        return _eval(full_rhs, state.vector, state.y)
    v = state.vector
    lf = metric_value
    return np.array([v[3], v[4], v[5], -lf * v[0], (1.0 - lf) * v[1], (4.0 - lf) * v[2]])


def rhs_syst12(phi1, phi2, dphi1, dphi2) -> np.ndarray:
    return _eval(syst12_rhs, [phi1, phi2, dphi1, dphi2])


def rhs_syst01(phi0, phi1, dphi0, dphi1) -> np.ndarray:
    return _eval(syst01_rhs, [phi0, phi1, dphi0, dphi1])


def rhs_sweep_param(theta, psi, dpsi, dtheta) -> np.ndarray:
    """Chart-B system with the polar angle as independent variable.

    Returns d/dtheta of ``(psi, dpsi/dy, dtheta/dy, y)``.
    """
    if not dtheta > 0.0:
        raise RotationFailureError(f"dtheta/dy = {dtheta!r} is not positive")
    return _eval(chart_b_theta_rhs, [psi, dpsi, dtheta, 0.0], theta)


# --- first integrals ---------------------------------------------------------

def integrals_of_states(states) -> np.ndarray:
    """Columns ``E0, E1, E2, kappa0, kappa1, kappa2`` for rows of full states."""
    s = np.atleast_2d(np.asarray(states, dtype=float))
    p0, p1, p2, d0, d1, d2 = s.T
    w01 = p0 * d1 - p1 * d0
    w02 = p0 * d2 - p2 * d0
    w12 = p1 * d2 - p2 * d1
    e0 = p0 ** 2 + w01 ** 2 + w02 ** 2 / 4.0
    e1 = p1 ** 2 + w12 ** 2 / 3.0 - w01 ** 2
    e2 = p2 ** 2 - w02 ** 2 / 4.0 - w12 ** 2 / 3.0
    k0 = kappa0(p1, p2, d1, d2)
    k1 = kappa1(p0, p2, d0, d2)
    k2 = kappa2(p0, p1, d0, d1)
    return np.column_stack([e0, e1, e2, k0, k1, k2])


def kappa0(p1, p2, d1, d2):
    return d1 ** 2 + 4 * d2 ** 2 + (p1 ** 2 + 4 * p2 ** 2) ** 2 - p1 ** 2 - 16 * p2 ** 2


def kappa1(p0, p2, d0, d2):
    return d0 ** 2 - 3 * d2 ** 2 + 2 * p0 ** 2 + 6 * p2 ** 2 - (p0 ** 2 - 3 * p2 ** 2) ** 2


def kappa2(p0, p1, d0, d1):
    return 4 * d0 ** 2 + 3 * d1 ** 2 + 32 * p0 ** 2 + 21 * p1 ** 2 - (4 * p0 ** 2 + 3 * p1 ** 2) ** 2


def first_integrals(state: PhiState) -> FirstIntegrals:
    return FirstIntegrals(*map(float, integrals_of_states(state.vector)[0]))


def lift_syst01(y, s) -> PhiState:
    """Full state from a (phi0, phi1) state, taking the phi2 > 0 branch."""
    p0, p1, d0, d1 = (float(v) for v in s)
    p2 = math.sqrt(max(0.0, 1.0 - p0 * p0 - p1 * p1))
    d2 = -(p0 * d0 + p1 * d1) / p2
    return PhiState(float(y), p0, p1, p2, d0, d1, d2)


def lift_syst12(y, s, phi0_sign: float = 1.0) -> PhiState:
    p1, p2, d1, d2 = (float(v) for v in s)
    p0 = math.copysign(math.sqrt(max(0.0, 1.0 - p1 * p1 - p2 * p2)), phi0_sign)
    d0 = -(p1 * d1 + p2 * d2) / p0
    return PhiState(float(y), p0, p1, p2, d0, d1, d2)


# --- spherical charts --------------------------------------------------------

def to_spherical_A(state: PhiState) -> tuple[float, float, float, float]:
    """``(psi, theta, psi', theta')`` in chart A."""
    r2 = state.phi1 ** 2 + state.phi2 ** 2
    if r2 < 1e-24:
        raise CoordinateSingularityError("chart A is singular where phi1 = phi2 = 0")
    r = math.sqrt(r2)
    psi = math.atan2(r, state.phi0)
    theta = math.atan2(state.phi1, state.phi2)
    dpsi = -state.dphi0 / r
    dtheta = (state.phi2 * state.dphi1 - state.phi1 * state.dphi2) / r2
    return psi, theta, dpsi, dtheta


def from_spherical_A(psi, theta, dpsi, dtheta, y: float = 0.0) -> PhiState:
    sp, cp = math.sin(psi), math.cos(psi)
    st, ct = math.sin(theta), math.cos(theta)
    return PhiState(
        y, cp, sp * st, sp * ct,
        -sp * dpsi,
        cp * dpsi * st + sp * ct * dtheta,
        cp * dpsi * ct - sp * st * dtheta,
    )


def spherical_integrals_A(psi, theta, dpsi, dtheta) -> tuple[float, float]:
    """E1 and E2 written in chart A."""
    s2p = math.sin(2 * psi)
    s2t = math.sin(2 * theta)
    sp2 = math.sin(psi) ** 2
    e1 = (math.sin(theta) ** 2 * (sp2 - dpsi ** 2) - dpsi * dtheta * s2p * s2t / 2
          + dtheta ** 2 * sp2 ** 2 / 3 - (dtheta * math.cos(theta) * s2p / 2) ** 2)
    e2 = (math.cos(theta) ** 2 * (sp2 - dpsi ** 2 / 4) + dpsi * dtheta * s2p * s2t / 8
          - dtheta ** 2 * sp2 ** 2 / 3 - (dtheta * math.sin(theta) * s2p / 4) ** 2)
    return e1, e2


def to_chart_B(state: PhiState) -> tuple[float, float, float, float]:
    """``(psi, theta, psi', theta')`` in chart B (phi2 = cos psi)."""
    r2 = state.phi0 ** 2 + state.phi1 ** 2
    if r2 < 1e-24:
        raise CoordinateSingularityError("chart B is singular where phi0 = phi1 = 0")
    r = math.sqrt(r2)
    psi = math.atan2(r, state.phi2)
    theta = math.atan2(state.phi1, state.phi0)
    dpsi = -state.dphi2 / r
    dtheta = (state.phi0 * state.dphi1 - state.phi1 * state.dphi0) / r2
    return psi, theta, dpsi, dtheta


def from_chart_B(psi, theta, dpsi, dtheta, y: float = 0.0) -> PhiState:
    sp, cp = math.sin(psi), math.cos(psi)
    st, ct = math.sin(theta), math.cos(theta)
    return PhiState(
        y, sp * ct, sp * st, cp,
        cp * dpsi * ct - sp * st * dtheta,
        cp * dpsi * st + sp * ct * dtheta,
        -sp * dpsi,
    )


# --- integration drivers -----------------------------------------------------

def _start(p_or_state) -> PhiState:
    if isinstance(p_or_state, PhiState):
        return p_or_state
    return initial_state(p_or_state)


def integrate_full(p_or_state, y_end, rel_tol=DEFAULT_REL_TOL, abs_tol=DEFAULT_ABS_TOL, **kw) -> Trajectory:
    st = _start(p_or_state)
    return integrate(full_rhs, st.y, st.vector, y_end, rel_tol, abs_tol, **kw)


def integrate_syst12(p_or_state, y_end, rel_tol=DEFAULT_REL_TOL, abs_tol=DEFAULT_ABS_TOL, **kw) -> Trajectory:
    st = _start(p_or_state)
    return integrate(syst12_rhs, st.y, [st.phi1, st.phi2, st.dphi1, st.dphi2], y_end,
                     rel_tol, abs_tol, **kw)


def integrate_syst01(p_or_state, y_end, rel_tol=DEFAULT_REL_TOL, abs_tol=DEFAULT_ABS_TOL, **kw) -> Trajectory:
    st = _start(p_or_state)
    return integrate(syst01_rhs, st.y, [st.phi0, st.phi1, st.dphi0, st.dphi1], y_end,
                     rel_tol, abs_tol, **kw)


def chart_b_initial(p) -> np.ndarray:
    """Chart-B data ``(psi, psi', theta', y)`` at theta = 0 for ``initial_state(p)``."""
    psi, _, dpsi, dtheta = to_chart_B(initial_state(p))
    return np.array([psi, dpsi, dtheta, 0.0])


def integrate_chart_b(p, theta_end=math.pi, rel_tol=DEFAULT_REL_TOL, abs_tol=DEFAULT_ABS_TOL) -> Trajectory:
    """Integrate chart B in the angle from 0 to ``theta_end``.

    Valid only while theta increases along the orbit.
    """
    s0 = chart_b_initial(p)
    if not s0[2] > 0:
        raise RotationFailureError("initial angular velocity is not positive")
    try:
        traj = integrate(chart_b_theta_rhs, 0.0, s0, theta_end, rel_tol, abs_tol, max_steps=200_000)
    except Exception as exc:
        raise RotationFailureError(f"angle parametrisation broke down: {exc}") from exc
    if traj.y_stop < theta_end or not np.all(traj.states[:, 2] > 0) or not np.all(np.isfinite(traj.states)):
        raise RotationFailureError("dtheta/dy changed sign; angle cannot be used as time")
    return traj


def chart_b_to_state(theta, s) -> PhiState:
    psi, dpsi, dtheta, y = (float(v) for v in s)
    return from_chart_B(psi, float(theta), dpsi, dtheta, y)


# --- zero counting -----------------------------------------------------------

def count_zeros(traj: Trajectory, component: int, window=None, period: float | None = None,
                deriv_component: int | None = None) -> int:
    """Zeros of one state component over the half-open window ``[y0, y0 + T)``."""
    if window is None:
        if period is None:
            raise DomainError("give either window or period")
        window = (traj.y_start, traj.y_start + period)
    y_lo, y_hi = map(float, window)
    if traj.y_start > y_lo + 1e-12 or traj.y_stop < y_hi - 1e-12:
        raise DomainError("trajectory does not span the window")
    if deriv_component is None:
        deriv_component = component + traj.dim // 2

    def check(y, s):
        if abs(s[component]) < ZERO_TOL and abs(s[deriv_component]) < ZERO_TOL:
            raise DegenerateZeroError(f"component {component} and its derivative vanish at y={y:.12g}")

    s_lo = traj(y_lo)
    count = 0
    start_is_zero = abs(s_lo[component]) < ZERO_TOL
    if start_is_zero:
        check(y_lo, s_lo)
        count += 1
    ev = EventSpec(lambda y, s: s[component])
    edge = 1e-8 if start_is_zero else 0.0
    for y_star, s_star in find_events(traj, ev):
        if y_star <= y_lo + (1e-8 if start_is_zero else 0.0):
            continue
        if y_star >= y_hi - edge:
            continue
        check(y_star, s_star)
        count += 1
    return count


# --- separatrix --------------------------------------------------------------

def _separatrix_angle(y):
    y = np.asarray(y, dtype=float)
    theta = math.pi - 4.0 * np.arctan(np.exp(-y))
    sech = 1.0 / np.cosh(y)
    return theta, 2.0 * sech, -2.0 * sech * np.tanh(y)


def separatrix_solution(y):
    """``(phi0, phi1)`` on the p = sqrt(3)/2 orbit."""
    theta, _, _ = _separatrix_angle(y)
    phi0 = (3.0 * np.cos(theta) - 1.0) / 4.0
    phi1 = math.sqrt(3.0) * np.sin(theta) / 2.0
    if np.ndim(y) == 0:
        return float(phi0), float(phi1)
    return phi0, phi1


def separatrix_residual(y):
    """Residual of the (phi0, phi1) system on the closed form, by analytic differentiation."""
    th, dth, ddth = _separatrix_angle(y)
    c, s = np.cos(th), np.sin(th)
    phi0 = (3 * c - 1) / 4
    phi1 = math.sqrt(3) * s / 2
    dd0 = -0.75 * (c * dth ** 2 + s * ddth)
    dd1 = math.sqrt(3) / 2 * (-s * dth ** 2 + c * ddth)
    q = 8 * phi0 ** 2 + 6 * phi1 ** 2
    return np.maximum(np.abs(dd0 - (q - 8) * phi0), np.abs(dd1 - (q - 7) * phi1))
