"""Adaptive Dormand-Prince 5(4) integration with dense output and events.

Right-hand sides use the in-place convention ``rhs(y, s, out)``. When numba
acceleration is on and ``rhs`` is itself a compiled kernel, the whole stepping
loop runs compiled; otherwise the identical source runs as plain Python.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from ._accel import is_compiled, kernel, python_version
from .errors import DimensionMismatchError, DomainError, StepUnderflowError

DEFAULT_REL_TOL = 1e-11
DEFAULT_ABS_TOL = 1e-13
DEFAULT_EVENT_TOL = 1e-12
REL_TOL_FLOOR = 1e-15  # a few ulps; tighter requests cannot be met in double precision

STATUS_END = 0
STATUS_STOPPED = 1
STATUS_UNDERFLOW = 2
STATUS_MAX_STEPS = 3

# Dormand-Prince tableau
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
A71, A73, A74, A75, A76 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = (71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200,
                          22 / 525, -1 / 40)
D1, D3, D4, D5, D6, D7 = (-12715105075 / 11282082432, 87487479700 / 32700410799,
                          -10690763975 / 1880347072, 701980252875 / 199316789632,
                          -1453857185 / 822651844, 69997945 / 29380423)


@kernel
def _err_norm(v, s_a, s_b, rtol, atol):
    acc = 0.0
    n = v.shape[0]
    for i in range(n):
        sc = atol + rtol * max(abs(s_a[i]), abs(s_b[i]))
        acc += (v[i] / sc) ** 2
    return np.sqrt(acc / n)


@kernel
def _stage(out, s, h, c, ks, m):
    """out = s + h * sum_j c[j] * ks[j] over the first m stages."""
    dim = s.shape[0]
    for i in range(dim):
        acc = 0.0
        for j in range(m):
            acc += c[j] * ks[j, i]
        out[i] = s[i] + h * acc


# Controller state carried between chunks of the compiled stepping loop.
CTL_Y, CTL_H, CTL_FACOLD, CTL_LAST_REJ, CTL_NFEV, CTL_NREJ, CTL_STEPS = range(7)
CTL_SIZE = 7


@kernel
def _dopri5_chunk(rhs, ctl, s, ks, y_end, rtol, atol, max_steps, stop_idx, stop_dir,
                  ys, states, dense, n):
    """Advance until the buffers fill, ``y_end`` is reached, or a stop fires.

    ``s`` and ``ks[0]`` hold the current state and its derivative (FSAL) and
    are updated in place. Returns ``(n, status)``; status -1 means the
    buffers are full and the caller should grow them and call again.
    """
    dim = s.shape[0]
    cap = ys.shape[0]
    a_rows = np.zeros((7, 7))
    a_rows[1, 0] = A21
    a_rows[2, 0] = A31
    a_rows[2, 1] = A32
    a_rows[3, 0] = A41
    a_rows[3, 1] = A42
    a_rows[3, 2] = A43
    a_rows[4, 0] = A51
    a_rows[4, 1] = A52
    a_rows[4, 2] = A53
    a_rows[4, 3] = A54
    a_rows[5, 0] = A61
    a_rows[5, 1] = A62
    a_rows[5, 2] = A63
    a_rows[5, 3] = A64
    a_rows[5, 4] = A65
    a_rows[6, 0] = A71
    a_rows[6, 2] = A73
    a_rows[6, 3] = A74
    a_rows[6, 4] = A75
    a_rows[6, 5] = A76
    c_nodes = np.array([0.0, C2, C3, C4, C5, 1.0, 1.0])
    e_row = np.array([E1, 0.0, E3, E4, E5, E6, E7])
    d_row = np.array([D1, 0.0, D3, D4, D5, D6, D7])
    zero = np.zeros(dim)
    tmp = np.empty(dim)
    s_new = np.empty(dim)
    err_vec = np.empty(dim)

    y = ctl[CTL_Y]
    h = ctl[CTL_H]
    facold = ctl[CTL_FACOLD]
    last_rejected = ctl[CTL_LAST_REJ] != 0.0
    nfev = ctl[CTL_NFEV]
    n_rejected = ctl[CTL_NREJ]
    steps = ctl[CTL_STEPS]

    beta = 0.04
    expo1 = 0.2 - beta * 0.75
    facc1 = 1.0 / 0.2
    facc2 = 1.0 / 10.0
    safe = 0.9
    status = STATUS_END

    while y < y_end:
        if n == cap:
            status = -1
            break
        if steps >= max_steps:
            status = STATUS_MAX_STEPS
            break
        if not h >= 1e-14 * max(abs(y), 1.0):  # also catches a NaN step
            status = STATUS_UNDERFLOW
            break
        last = False
        if y + 1.01 * h >= y_end:
            h = y_end - y
            last = True
        for st in range(1, 6):
            _stage(tmp, s, h, a_rows[st], ks, st)
            rhs(y + c_nodes[st] * h, tmp, ks[st])
        _stage(s_new, s, h, a_rows[6], ks, 6)
        y_new = y_end if last else y + h
        rhs(y_new, s_new, ks[6])
        nfev += 6
        steps += 1
        _stage(err_vec, zero, h, e_row, ks, 7)
        err = _err_norm(err_vec, s, s_new, rtol, atol)
        if err != err or err == np.inf:
            h = h * 0.1
            last_rejected = True
            n_rejected += 1
            continue
        fac11 = err ** expo1
        if err <= 1.0:
            fac = max(facc2, min(facc1, fac11 / facold ** beta / safe))
            h_new = h / fac
            facold = max(err, 1e-4)
            row = dense[n - 1]
            for i in range(dim):
                r2 = s_new[i] - s[i]
                r3 = h * ks[0, i] - r2
                row[0, i] = s[i]
                row[1, i] = r2
                row[2, i] = r3
                row[3, i] = r2 - h * ks[6, i] - r3
                acc = 0.0
                for j in range(7):
                    acc += d_row[j] * ks[j, i]
                row[4, i] = h * acc
            ys[n] = y_new
            crossed = False
            if stop_idx >= 0:
                fa = s[stop_idx]
                fb = s_new[stop_idx]
                if fa != 0.0 and fa * fb <= 0.0:
                    if stop_dir == 0 or (stop_dir > 0 and fa < 0.0) or (stop_dir < 0 and fa > 0.0):
                        crossed = True
            for i in range(dim):
                states[n, i] = s_new[i]
                s[i] = s_new[i]
                ks[0, i] = ks[6, i]
            n += 1
            y = y_new
            if last_rejected:
                h_new = min(h_new, h)
            last_rejected = False
            h = h_new
            if crossed:
                status = STATUS_STOPPED
                break
        else:
            h = h / min(facc1, fac11 / safe)
            last_rejected = True
            n_rejected += 1

    ctl[CTL_Y] = y
    ctl[CTL_H] = h
    ctl[CTL_FACOLD] = facold
    ctl[CTL_LAST_REJ] = 1.0 if last_rejected else 0.0
    ctl[CTL_NFEV] = nfev
    ctl[CTL_NREJ] = n_rejected
    ctl[CTL_STEPS] = steps
    return n, status


def _initial_step(rhs, y0, s0, f0, span, rtol, atol):
    """Hairer's starting-step heuristic."""
    sk = atol + rtol * np.abs(s0)
    with np.errstate(over="ignore", invalid="ignore"):
        return _initial_step_scaled(rhs, y0, s0, f0, span, sk)


def _initial_step_scaled(rhs, y0, s0, f0, span, sk):
    d0 = np.sqrt(np.mean((s0 / sk) ** 2))
    d1 = np.sqrt(np.mean((f0 / sk) ** 2))
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    if not (np.isfinite(h0) and h0 > 0):  # scales overflowed with a tiny abs_tol
        h0 = 1e-6
    h0 = min(h0, span)
    f1 = np.empty_like(s0)
    rhs(y0 + h0, s0 + h0 * f0, f1)
    d2 = np.sqrt(np.mean(((f1 - f0) / sk) ** 2)) / h0
    dmax = max(d1, d2)
    h1 = max(1e-6, h0 * 1e-3) if dmax <= 1e-15 else (0.01 / dmax) ** 0.2
    if not (np.isfinite(h1) and h1 > 0):
        h1 = h0
    return min(100.0 * h0, h1, span)


def _run(rhs, chunk, y0, s0, y_end, rtol, atol, h_first, max_steps, stop_idx, stop_dir):
    dim = s0.size
    cap = 512
    ys = np.empty(cap)
    states = np.empty((cap, dim))
    dense = np.empty((cap, 5, dim))
    ys[0] = y0
    states[0] = s0
    s = s0.copy()
    ks = np.empty((7, dim))
    rhs(y0, s, ks[0])
    h = h_first if h_first > 0 else _initial_step(rhs, y0, s0, ks[0].copy(), y_end - y0, rtol, atol)
    ctl = np.zeros(CTL_SIZE)
    ctl[CTL_Y] = y0
    ctl[CTL_H] = h
    ctl[CTL_FACOLD] = 1e-4
    ctl[CTL_NFEV] = 2
    n = 1
    while True:
        n, status = chunk(rhs, ctl, s, ks, y_end, rtol, atol, max_steps, stop_idx, stop_dir,
                          ys, states, dense, n)
        if status != -1:
            break
        cap *= 2
        ys = np.concatenate([ys, np.empty(cap - ys.size)])
        states = np.concatenate([states, np.empty((cap - states.shape[0], dim))])
        dense = np.concatenate([dense, np.empty((cap - dense.shape[0], 5, dim))])
    return ys[:n], states[:n], dense[:n - 1], int(ctl[CTL_NFEV]), int(ctl[CTL_NREJ]), status


def _freeze(a):
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Trajectory:
    """Accepted integration nodes plus per-step dense-output coefficients."""

    y: np.ndarray
    states: np.ndarray
    dense: np.ndarray = field(repr=False)
    rel_tol: float
    abs_tol: float
    nfev: int = 0
    n_rejected: int = 0
    status: int = STATUS_END

    def __post_init__(self):
        object.__setattr__(self, "y", _freeze(self.y))
        object.__setattr__(self, "states", _freeze(self.states))
        object.__setattr__(self, "dense", _freeze(self.dense))

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @property
    def n_steps(self) -> int:
        return len(self.y) - 1

    @property
    def y_start(self) -> float:
        return float(self.y[0])

    @property
    def y_stop(self) -> float:
        return float(self.y[-1])

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def __call__(self, yq):
        """Evaluate the dense-output interpolant at ``yq`` (scalar or array)."""
        yq_arr = np.atleast_1d(np.asarray(yq, dtype=float))
        if self.n_steps == 0:
            out = np.repeat(self.states[:1], len(yq_arr), axis=0)
        else:
            idx = np.clip(np.searchsorted(self.y, yq_arr, side="right") - 1, 0, self.n_steps - 1)
            y_a = self.y[idx]
            h = self.y[idx + 1] - y_a
            t = ((yq_arr - y_a) / h)[:, None]
            t1 = 1.0 - t
            r = self.dense[idx]
            out = r[:, 0] + t * (r[:, 1] + t1 * (r[:, 2] + t * (r[:, 3] + t1 * r[:, 4])))
            # nodes reproduce stored states exactly
            hit = np.searchsorted(self.y, yq_arr)
            hit = np.clip(hit, 0, len(self.y) - 1)
            exact = self.y[hit] == yq_arr
            out[exact] = self.states[hit[exact]]
        if np.ndim(yq) == 0:
            return out[0]
        return out

    def sample(self, per_step: int = 4):
        """Nodes plus ``per_step - 1`` interior dense-output points per step."""
        if self.n_steps == 0:
            return self.y.copy(), self.states.copy()
        t = np.arange(per_step) / per_step
        h = np.diff(self.y)
        yy = (self.y[:-1, None] + h[:, None] * t[None, :]).ravel()
        yy = np.append(yy, self.y[-1])
        return yy, self(yy)

    def to_dict(self, labels=None) -> dict:
        d = {
            "rel_tol": self.rel_tol,
            "abs_tol": self.abs_tol,
            "n_steps": self.n_steps,
            "nfev": self.nfev,
            "n_rejected": self.n_rejected,
            "y": self.y.tolist(),
            "states": self.states.tolist(),
        }
        if labels is not None:
            d["labels"] = list(labels)
        return d

    def to_json(self, labels=None) -> str:
        return json.dumps(self.to_dict(labels))


def integrate(rhs: Callable, y0: float, state0, y_end: float,
              rel_tol: float = DEFAULT_REL_TOL, abs_tol: float = DEFAULT_ABS_TOL, *,
              stop_component: int | None = None, stop_direction: int = 0,
              max_steps: int = 2_000_000, first_step: float = 0.0) -> Trajectory:
    """Integrate ``state' = rhs(y, state)`` from ``y0`` to ``y_end``.

    ``stop_component`` ends the run after the first accepted step across which
    that component changes sign (filtered by ``stop_direction``: +1 rising,
    -1 falling, 0 any); refine the crossing with :func:`find_events`.
    """
    if not (rel_tol > 0 and abs_tol > 0):
        raise DomainError("tolerances must be positive")
    if rel_tol < REL_TOL_FLOOR:
        raise DomainError(f"rel_tol {rel_tol:g} is below the double-precision floor {REL_TOL_FLOOR:g}")
    if not y_end > y0:
        raise DomainError("y_end must exceed y0")
    s0 = np.asarray(state0, dtype=float)
    if s0.ndim != 1:
        raise DimensionMismatchError("state must be a 1-D vector")
    probe = np.full_like(s0, np.nan)
    try:
        rhs(float(y0), s0.copy(), probe)
    except (IndexError, ValueError) as exc:
        raise DimensionMismatchError(f"rhs incompatible with state of size {s0.size}: {exc}") from exc
    if np.isnan(probe).any():
        raise DimensionMismatchError(f"rhs did not fill a derivative vector of size {s0.size}")
    idx = -1 if stop_component is None else int(stop_component)
    if idx >= s0.size:
        raise DimensionMismatchError("stop_component out of range")

    if is_compiled(_dopri5_chunk) and is_compiled(rhs):
        chunk = _dopri5_chunk
    else:
        chunk = python_version(_dopri5_chunk)
    ys, states, dense, nfev, n_rej, status = _run(
        rhs, chunk, float(y0), s0.copy(), float(y_end), float(rel_tol), float(abs_tol),
        float(first_step), int(max_steps), idx, int(np.sign(stop_direction)))
    if status == STATUS_UNDERFLOW:
        raise StepUnderflowError(f"step size underflow at y={ys[-1]:.17g}")
    if status == STATUS_MAX_STEPS:
        raise StepUnderflowError(f"step budget of {max_steps} exhausted at y={ys[-1]:.17g}")
    return Trajectory(ys, states, dense, rel_tol, abs_tol, int(nfev), int(n_rej), int(status))


@dataclass(frozen=True)
class EventSpec:
    """Scalar event ``func(y, state)``; direction +1 rising, -1 falling, 0 any.

    ``substeps`` interior samples per step guard against a pair of roots hiding
    inside one long step of a slowly varying solution.
    """

    func: Callable
    direction: int = 0
    tol: float = DEFAULT_EVENT_TOL
    substeps: int = 4

    def __post_init__(self):
        if not self.tol > 0:
            raise DomainError("event tolerance must be positive")
        if self.substeps < 1:
            raise DomainError("substeps must be at least 1")


def component_event(index: int, direction: int = 0, tol: float = DEFAULT_EVENT_TOL) -> EventSpec:
    return EventSpec(lambda y, s, _i=index: s[_i], direction, tol)


def find_events(traj: Trajectory, ev: EventSpec):
    """All crossings of ``ev`` along ``traj`` as ``(y*, state*)`` in increasing y.

    A zero sitting exactly on the first node is not reported.
    """
    if len(traj.y) == 0:
        raise DomainError("empty trajectory")
    m = ev.substeps
    ys = traj.y
    if m > 1 and traj.n_steps > 0:
        frac = np.arange(m) / m
        grid = (ys[:-1, None] + (ys[1:] - ys[:-1])[:, None] * frac[None, :]).ravel()
        grid = np.append(grid, ys[-1])
        states = traj(grid)
        states[::m] = traj.states  # nodes are exact
    else:
        grid, states = ys, traj.states
    g = np.array([ev.func(y, s) for y, s in zip(grid, states)])
    found = []
    for i in range(len(grid) - 1):
        ga, gb = g[i], g[i + 1]
        if ga == 0.0 or ga * gb > 0.0:
            continue
        rising = ga < 0.0
        if ev.direction > 0 and not rising:
            continue
        if ev.direction < 0 and rising:
            continue
        ya, yb = grid[i], grid[i + 1]
        if gb == 0.0:
            found.append((float(yb), np.array(states[i + 1])))
            continue
        ystar = brentq(lambda t: ev.func(t, traj(t)), ya, yb, xtol=ev.tol, rtol=4 * np.finfo(float).eps)
        found.append((float(ystar), traj(ystar)))
    return found
