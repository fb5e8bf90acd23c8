import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kleinx._accel import kernel
from kleinx.errors import DimensionMismatchError, DomainError, StepUnderflowError
from kleinx.odeint import EventSpec, Trajectory, component_event, find_events, integrate
from kleinx.specfun import complete_K
from kleinx.systems import P_EXTREMAL, integrate_syst01, integrate_syst12, kappa0, syst12_rhs


@kernel
def oscillator(y, s, out):
    out[0] = s[1]
    out[1] = -s[0]


@kernel
def still(y, s, out):
    out[0] = 0.0


@kernel
def blowup(y, s, out):
    out[0] = s[0] * s[0]


def test_oscillator_returns_to_start():
    tr = integrate(oscillator, 0.0, [1.0, 0.0], 2 * math.pi, 1e-11, 1e-13)
    assert abs(tr.final_state[0] - 1.0) < 1e-9
    assert abs(tr.final_state[1]) < 1e-9
    assert tr.y_stop == 2 * math.pi


def test_observed_order():
    errs, steps = [], []
    for tol in (1e-6, 1e-8, 1e-10):
        tr = integrate(oscillator, 0.0, [1.0, 0.0], 2 * math.pi, tol, tol)
        errs.append(abs(tr.final_state[0] - 1.0))
        steps.append(tr.n_steps)
    slope = -np.polyfit(np.log(steps), np.log(errs), 1)[0]
    assert slope >= 4.0


def test_dense_output_exact_at_nodes():
    tr = integrate(oscillator, 0.0, [1.0, 0.0], 10.0, 1e-9, 1e-12)
    assert np.array_equal(tr(tr.y), tr.states)
    mid = 0.5 * (tr.y[:-1] + tr.y[1:])
    assert np.abs(tr(mid)[:, 0] - np.cos(mid)).max() < 1e-8


def test_trajectory_invariants_and_immutability():
    tr = integrate(oscillator, 0.0, [1.0, 0.0], 3.0, 1e-10, 1e-12)
    assert np.all(np.diff(tr.y) > 0)
    assert tr.states.shape == (tr.n_steps + 1, 2)
    with pytest.raises(ValueError):
        tr.states[0, 0] = 3.0
    assert tr.nfev > 0 and tr.rel_tol == 1e-10


def test_json_has_nodes_not_coefficients():
    tr = integrate(oscillator, 0.0, [1.0, 0.0], 1.0, 1e-8, 1e-10)
    d = json.loads(tr.to_json(["u", "du"]))
    assert "dense" not in json.dumps(d)
    assert len(d["y"]) == tr.n_steps + 1


def test_syst12_closed_orbit():
    a = 2 * complete_K(0.5)
    tr = integrate_syst12(P_EXTREMAL, a)
    assert np.abs(tr.final_state - tr.states[0]).max() < 1e-8


def test_syst12_e1_conservation_p_half():
    a = 2 * complete_K(0.5)
    tr = integrate_syst12(0.5, 10 * a)
    k0 = kappa0(*tr.states.T)
    # E1 = kappa0 / 3 on the constraint manifold
    assert np.abs(k0 - k0[0]).max() / 3 < 1e-9


def test_events_of_sine():
    tr = integrate(still, 0.1, [0.0], 7.0, 1e-10, 1e-12)
    ev = EventSpec(lambda y, s: math.sin(y))
    roots = [y for y, _ in find_events(tr, ev)]
    assert len(roots) == 2
    assert abs(roots[0] - math.pi) < 1e-10 and abs(roots[1] - 2 * math.pi) < 1e-10


def test_event_direction_filter():
    tr = integrate(oscillator, 0.0, [1.0, 0.0], 10.0, 1e-11, 1e-13)
    up = [y for y, _ in find_events(tr, component_event(0, +1))]
    down = [y for y, _ in find_events(tr, component_event(0, -1))]
    assert down[0] == pytest.approx(math.pi / 2, abs=1e-9)
    assert up[0] == pytest.approx(3 * math.pi / 2, abs=1e-9)
    assert len(find_events(tr, component_event(0))) == len(up) + len(down)


def test_phi1_event_at_half_period():
    tr = integrate_syst01(P_EXTREMAL, 5.0)
    y0 = find_events(tr, component_event(1))[0][0]
    assert abs(y0 - complete_K(0.5)) < 1e-8


def test_phi2_event_above_separatrix():
    tr = integrate_syst12(0.95, 20.0)
    assert len(find_events(tr, component_event(1))) >= 1


def test_event_independent_of_step_sequence():
    a = integrate_syst01(0.3, 5.0, 1e-10, 1e-12)
    b = integrate_syst01(0.3, 5.0, 1e-12, 1e-14)
    ya = find_events(a, component_event(1, -1))[0][0]
    yb = find_events(b, component_event(1, -1))[0][0]
    assert abs(ya - yb) < 1e-8


def test_no_events_gives_empty_list():
    tr = integrate(still, 0.0, [1.0], 1.0, 1e-8, 1e-10)
    assert find_events(tr, component_event(0)) == []


def test_terminal_stop():
    tr = integrate(oscillator, 0.0, [1.0, 0.0], 100.0, 1e-10, 1e-12, stop_component=0, stop_direction=-1)
    assert tr.y_stop < 2.0


def test_errors():
    with pytest.raises(DomainError):
        integrate(oscillator, 0.0, [1.0, 0.0], -1.0, 1e-8, 1e-8)
    with pytest.raises(DomainError):
        integrate(oscillator, 0.0, [1.0, 0.0], 1.0, 0.0, 1e-8)
    with pytest.raises(DimensionMismatchError):
        integrate(oscillator, 0.0, [1.0, 0.0, 0.0], 1.0, 1e-8, 1e-8)
    with pytest.raises(StepUnderflowError):
        integrate(blowup, 0.0, [1.0], 2.0, 1e-10, 1e-12)
    with pytest.raises(DomainError):
        EventSpec(lambda y, s: s[0], tol=0.0)
    with pytest.raises(DomainError):
        integrate(oscillator, 0.0, [1.0, 0.0], 1.0, 1e-300, 1e-300)
    with pytest.raises(StepUnderflowError):
        integrate(oscillator, 0.0, [1.0, 0.0], 100.0, 1e-10, 1e-12, max_steps=5)


def test_pure_relative_control():
    tr = integrate(oscillator, 0.0, [1.0, 0.0], 2 * math.pi, 1e-12, 1e-300)
    assert abs(tr.final_state[0] - 1.0) < 1e-9


def test_events_between_nodes_of_a_long_step():
    tr = integrate(still, 0.1, [0.0], 7.0, 1e-10, 1e-12)
    assert tr.n_steps < 10  # the trivial rhs takes very long steps
    assert len(find_events(tr, EventSpec(lambda y, s: math.sin(y), substeps=8))) == 2


@given(st.floats(0.5, 20.0), st.floats(-1.0, 1.0), st.floats(-1.0, 1.0))
def test_oscillator_energy(y_end, u0, v0):
    tr = integrate(oscillator, 0.0, [u0, v0], y_end, 1e-11, 1e-13)
    e = (tr.states ** 2).sum(1)
    assert np.abs(e - e[0]).max() < 1e-8


@given(st.floats(0.0, 10.0))
def test_interpolant_within_span(yq):
    tr = integrate(oscillator, 0.0, [1.0, 0.0], 10.0, 1e-11, 1e-13)
    assert abs(tr(yq)[0] - math.cos(yq)) < 1e-8
