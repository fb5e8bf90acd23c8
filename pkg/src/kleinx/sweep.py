"""Half-period shooting and the intersection-angle sweep.

For ``0 < p < sqrt(3)/2`` the ``(phi0, phi1)`` trajectory rotates about the origin.
``y_half`` is where it first returns to the ``phi0`` axis and
``cot_alpha = phi0' / phi1'`` there.  Everything produced here is numerical
evidence, not proof.
"""
from __future__ import annotations

import csv
import io
import math
import multiprocessing as mp
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, KleinxError, NoCrossingError
from .odeint import (DEFAULT_ABS_TOL, DEFAULT_EVENT_TOL, DEFAULT_REL_TOL, EventSpec, component_event,
                     find_events)
from .systems import (P_SEPARATRIX, PhiState, chart_b_to_state, first_integrals, integrals_closed_form,
                      integrate_chart_b, integrate_full, integrate_syst01, lift_syst01)

Y_MAX = 50.0
METHODS = ("syst01", "full", "angle")
LABEL = "numerical evidence"


def default_grid() -> np.ndarray:
    return math.sqrt(3.0) * np.arange(1, 1000) / 2000.0


def _check_rotation_regime(p):
    if not (0.0 < p < P_SEPARATRIX):
        raise DomainError(f"p must lie in (0, sqrt(3)/2), got {p!r}")


def _crossing_traj(p, method, rel_tol, abs_tol, y_max):
    if method == "syst01":
        traj = integrate_syst01(p, y_max, rel_tol, abs_tol, stop_component=1, stop_direction=-1)
        lift = lift_syst01
    elif method == "full":
        traj = integrate_full(p, y_max, rel_tol, abs_tol, stop_component=1, stop_direction=-1)
        lift = PhiState.from_vector
    else:
        raise DomainError(f"unknown method {method!r}")
    return traj, lift


def half_period_crossing(p, method: str = "syst01", rel_tol=DEFAULT_REL_TOL, abs_tol=DEFAULT_ABS_TOL,
                         y_max: float = Y_MAX, event_tol=DEFAULT_EVENT_TOL) -> tuple[float, PhiState]:
    """First positive zero of phi1 (falling through zero) and the full state there."""
    p = float(p)
    _check_rotation_regime(p)
    if method == "angle":
        traj = integrate_chart_b(p, math.pi, rel_tol, abs_tol)
        st = chart_b_to_state(math.pi, traj.final_state)
        if st.y > y_max:
            raise NoCrossingError(f"no crossing before y={y_max}")
        return st.y, st
    traj, lift = _crossing_traj(p, method, rel_tol, abs_tol, y_max)
    events = find_events(traj, component_event(1, -1, event_tol))
    if not events:
        raise NoCrossingError(f"phi1 has no falling zero before y={y_max} for p={p}")
    y_star, s_star = events[0]
    return y_star, lift(y_star, s_star)


def cot_alpha(p, method: str = "syst01", rel_tol=DEFAULT_REL_TOL, abs_tol=DEFAULT_ABS_TOL,
              y_max: float = Y_MAX, event_tol=DEFAULT_EVENT_TOL) -> float:
    _, st = half_period_crossing(p, method, rel_tol, abs_tol, y_max, event_tol)
    return st.dphi0 / st.dphi1


@dataclass(frozen=True)
class SweepRecord:
    p: float
    y_half: float
    cot_alpha: float
    e0: float
    e1: float
    e2: float
    rotation_ok: bool
    phi2_positive: bool
    wronskian_nonzero: bool
    error: str | None = None

    def csv_row(self) -> list[str]:
        vals = [self.p, self.y_half, self.cot_alpha, self.e0, self.e1, self.e2]
        return [f"{v:.17g}" for v in vals] + ["true" if self.rotation_ok else "false"]


def sweep_point(p, rel_tol=DEFAULT_REL_TOL, abs_tol=DEFAULT_ABS_TOL, y_max=Y_MAX,
                event_tol=DEFAULT_EVENT_TOL) -> SweepRecord:
    p = float(p)
    try:
        _check_rotation_regime(p)
        traj, lift = _crossing_traj(p, "syst01", rel_tol, abs_tol, y_max)
        events = find_events(traj, component_event(1, -1, event_tol))
        if not events:
            raise NoCrossingError(f"no crossing before y={y_max}")
        y_half, s_half = events[0]
        st = lift(y_half, s_half)
        s = traj.states[traj.y <= y_half]
        wr = s[:, 1] * s[:, 2] - s[:, 0] * s[:, 3]
        fi = first_integrals(st)
        return SweepRecord(
            p, y_half, st.dphi0 / st.dphi1, fi.e0, fi.e1, fi.e2,
            rotation_ok=bool(np.all(wr < 0)),
            phi2_positive=bool(np.all(s[:, 0] ** 2 + s[:, 1] ** 2 < 1.0)),
            wronskian_nonzero=bool(np.abs(wr).min() > 1e-12),
        )
    except KleinxError as exc:
        nan = math.nan
        return SweepRecord(p, nan, nan, nan, nan, nan, False, False, False, f"{type(exc).__name__}: {exc}")


def _sweep_chunk(args):
    ps, rel_tol, abs_tol, y_max, event_tol = args
    return [sweep_point(p, rel_tol, abs_tol, y_max, event_tol) for p in ps]


@dataclass(frozen=True)
class SweepReport:
    records: tuple
    sign_changes: tuple
    root_interpolated: float | None
    root_bisected: float | None
    monotonicity_violations: int
    failures: int
    log_fit: dict = field(default_factory=dict)
    label: str = LABEL

    def summary(self) -> dict:
        d = asdict(self)
        d.pop("records")
        d["points"] = len(self.records)
        return d


def _monotonicity_violations(values) -> int:
    d = np.diff(values)
    sd = np.sign(d[d != 0])
    return int(np.count_nonzero(sd[1:] != sd[:-1]))


def _log_fit(ps, ys, edge):
    # y_half ~ c |ln(distance to edge)| + d, reported only
    dist = np.abs(ps - edge)
    good = np.isfinite(ys) & (dist > 0)
    if good.sum() < 3:
        return None
    c, d = np.polyfit(np.abs(np.log(dist[good])), ys[good], 1)
    return {"c": float(c), "d": float(d)}


def run_sweep(p_min: float | None = None, p_max: float | None = None, steps: int = 999, workers: int = 1,
              rel_tol=DEFAULT_REL_TOL, abs_tol=DEFAULT_ABS_TOL, y_max=Y_MAX, refine: bool = True,
              event_tol=DEFAULT_EVENT_TOL) -> SweepReport:
    if p_min is None and p_max is None and steps == 999:
        grid = default_grid()
    else:
        p_min = default_grid()[0] if p_min is None else p_min
        p_max = default_grid()[-1] if p_max is None else p_max
        if not (0.0 < p_min < p_max < P_SEPARATRIX):
            raise DomainError("need 0 < p_min < p_max < sqrt(3)/2")
        grid = np.linspace(p_min, p_max, steps)
    if workers <= 1:
        records = _sweep_chunk((grid, rel_tol, abs_tol, y_max, event_tol))
    else:
        sweep_point(grid[0], rel_tol, abs_tol, y_max, event_tol)  # compile before forking
        chunks = [(c, rel_tol, abs_tol, y_max, event_tol) for c in np.array_split(grid, workers * 4) if len(c)]
        with ProcessPoolExecutor(workers, mp_context=mp.get_context("fork")) as pool:
            records = [r for part in pool.map(_sweep_chunk, chunks) for r in part]
    records = sorted(records, key=lambda r: r.p)
    ok = [r for r in records if r.error is None]
    ps = np.array([r.p for r in ok])
    cots = np.array([r.cot_alpha for r in ok])
    sc = [(float(ps[i]), float(ps[i + 1])) for i in range(len(ok) - 1)
          if np.sign(cots[i]) != np.sign(cots[i + 1])]
    root_i = root_b = None
    if len(sc) == 1:
        i = int(np.searchsorted(ps, sc[0][0]))
        c0, c1 = cots[i], cots[i + 1]
        root_i = float(ps[i] - c0 * (ps[i + 1] - ps[i]) / (c1 - c0))
        if refine:
            root_b = float(brentq(lambda q: cot_alpha(q, "syst01", rel_tol, abs_tol, y_max, event_tol),
                                  ps[i], ps[i + 1], xtol=1e-13, rtol=4 * np.finfo(float).eps))
    ys = np.array([r.y_half for r in ok])
    fit = {}
    if len(ok) >= 20:
        fit = {"low": _log_fit(ps[:10], ys[:10], 0.0), "high": _log_fit(ps[-10:], ys[-10:], P_SEPARATRIX)}
    return SweepReport(tuple(records), tuple(sc), root_i, root_b, _monotonicity_violations(cots),
                       len(records) - len(ok), fit)


def sweep_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["p", "y_half", "cot_alpha", "E0", "E1", "E2", "rotation_ok"])
    for r in records:
        w.writerow(r.csv_row())
    return buf.getvalue()


# --- interval evidence -------------------------------------------------------

@dataclass(frozen=True)
class UpperEvidence:
    p: float
    e1: float
    e2: float
    signs_ok: bool
    phi2_zero_y: float | None
    theta_stationary: tuple
    orbit_closes: bool
    falsified: bool
    label: str = LABEL


def rule_out_upper(p, y_max: float = Y_MAX, rel_tol=DEFAULT_REL_TOL, abs_tol=DEFAULT_ABS_TOL) -> UpperEvidence:
    """Evidence that no Condition-A orbit exists for ``sqrt(3)/2 < p < 1``."""
    p = float(p)
    if not (P_SEPARATRIX < p < 1.0):
        raise DomainError(f"p must lie in (sqrt(3)/2, 1), got {p!r}")
    _, e1, e2 = integrals_closed_form(p)
    traj = integrate_full(p, y_max, rel_tol, abs_tol, stop_component=2)
    zeros = find_events(traj, component_event(2))
    y_zero = zeros[0][0] if zeros else None
    # chart-A angular velocity numerator phi2 phi1' - phi1 phi2'
    stationary = []
    for y, s in find_events(traj, EventSpec(lambda y, s: s[2] * s[4] - s[1] * s[5])):
        st = PhiState.from_vector(y, s)
        r = math.hypot(st.phi1, st.phi2)
        dpsi = -st.dphi0 / r
        a_val = r * r - dpsi * dpsi
        b_val = r * r - dpsi * dpsi / 4.0
        stationary.append({"y": y, "sin2psi_minus_dpsi2": a_val, "sin2psi_minus_dpsi2_over_4": b_val,
                           "both_signs": bool(a_val > 0 and b_val < 0)})
    closes = False
    if y_zero is None:
        s0 = traj.states[0]
        for y, s in find_events(traj, component_event(1, 1)):
            if np.abs(s - s0).max() < 1e-6:
                closes = True
                break
    return UpperEvidence(p, e1, e2, bool(e1 > 0 and e2 < 0), y_zero, tuple(stationary), closes,
                         falsified=bool(y_zero is None and closes))


@dataclass(frozen=True)
class IntervalEvidence:
    p: float
    window: tuple
    min_abs_phi2: float
    max_abs_phi2: float
    min_abs_wronskian: float
    rotation_sign: int
    passed: bool
    label: str = LABEL


def interval_checks(p, samples: int = 4001, rel_tol=DEFAULT_REL_TOL, abs_tol=DEFAULT_ABS_TOL,
                    y_max: float = Y_MAX) -> IntervalEvidence:
    """Bounds on ``[0, 2 y_half]`` expected in the rotation regime."""
    p = float(p)
    _check_rotation_regime(p)
    y_half, _ = half_period_crossing(p, "syst01", rel_tol, abs_tol, y_max)
    traj = integrate_full(p, 2.0 * y_half, rel_tol, abs_tol)
    ys = np.union1d(np.linspace(0.0, 2.0 * y_half, samples), traj.y)
    s = traj(ys)
    phi2 = np.abs(s[:, 2])
    wr = s[:, 1] * s[:, 3] - s[:, 0] * s[:, 4]
    rot = s[:, 0] * s[:, 4] - s[:, 1] * s[:, 3]
    signs = np.unique(np.sign(rot))
    rotation_sign = int(signs[0]) if len(signs) == 1 else 0
    passed = bool(phi2.min() > 0 and np.abs(wr).min() > 0 and phi2.max() < 1 and rotation_sign != 0)
    return IntervalEvidence(p, (0.0, 2.0 * y_half), float(phi2.min()), float(phi2.max()),
                            float(np.abs(wr).min()), rotation_sign, passed)
