"""The pure-Python fallback reproduces the compiled path."""
import json
import os
import subprocess
import sys

import pytest

import kleinx

SCRIPT = r"""
import json, math
import kleinx
from kleinx import sweep, systems, extremal
from kleinx.odeint import integrate
traj = systems.integrate_full(0.4, 5.0)
out = {
    "numba": kleinx.USE_NUMBA,
    "cot": [sweep.cot_alpha(p) for p in (0.2, 0.5, 0.8)],
    "y_half": sweep.half_period_crossing(math.sqrt(3 / 8))[0],
    "final": traj.final_state.tolist(),
    "steps": traj.n_steps,
    "lambda_area": extremal.lambda_area(),
}
print(json.dumps(out))
"""


def _run(flag):
    env = dict(os.environ, KLEINX_NUMBA=flag)
    res = subprocess.run([sys.executable, "-c", SCRIPT], env=env, capture_output=True, text=True, timeout=300)
    assert res.returncode == 0, res.stderr
    return json.loads(res.stdout.strip().splitlines()[-1])


@pytest.fixture(scope="module")
def both():
    return _run("1"), _run("0")


def test_flag_selects_backend(both):
    fast, slow = both
    assert fast["numba"] is True and slow["numba"] is False


def test_backends_agree(both):
    fast, slow = both
    # identical algorithm; compiled and interpreted float code may differ in the last bits
    assert max(abs(a - b) for a, b in zip(fast["cot"], slow["cot"])) < 1e-12
    assert abs(fast["y_half"] - slow["y_half"]) < 1e-12
    assert max(abs(a - b) for a, b in zip(fast["final"], slow["final"])) < 1e-12
    assert abs(fast["steps"] - slow["steps"]) <= 1
    assert fast["lambda_area"] == slow["lambda_area"]


def test_in_process_flag_is_a_bool():
    assert isinstance(kleinx.USE_NUMBA, bool)
