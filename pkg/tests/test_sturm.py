import math

import numpy as np
import pytest

from kleinx.errors import ConvergenceError, DomainError, UnresolvedZeroError
from kleinx.extremal import PERIOD, metric_profile
from kleinx.sturm import (admissible, convergence_shifts, count_eigenfunction_zeros,
                          count_zeros_periodic, fourier_d2, haupt_pattern, periodic_spectrum,
                          rayleigh_defect, verify_multiplicity)

# independent shooting oracle (mpmath odefun on the monodromy problem, 20 digits)
K0_ODD = 0.77680192
K1_EVEN_LOW = 0.25169101
K1_EVEN_HIGH = 1.28700401


@pytest.fixture(scope="module")
def spectra():
    return {k: periodic_spectrum(k) for k in (0, 1, 2)}


def _near(lines, value, tol):
    return [ln for ln in lines if abs(ln.eigenvalue - value) < tol]


def test_d2_on_trig():
    n, T = 64, 3.0
    y = T * np.arange(n) / n
    w = 2 * math.pi * 3 / T
    f = np.sin(w * y)
    assert np.abs(fourier_d2(n, T) @ f + w * w * f).max() < 1e-9
    with pytest.raises(DomainError):
        fourier_d2(63, T)


def test_k2_ground_state(spectra):
    ln = spectra[2][0]
    assert abs(ln.eigenvalue - 1) < 1e-8
    assert ln.zero_count == 0 and ln.parity == "even"


def test_k1_lines(spectra):
    lines = spectra[1]
    low = _near(lines, 0.2517, 2e-2)
    one = _near(lines, 1.0, 1e-8)
    assert len(low) == 1 and low[0].parity == "even" and low[0].zero_count == 0
    assert len(one) == 1 and one[0].parity == "odd" and one[0].zero_count == 2
    assert abs(low[0].eigenvalue - K1_EVEN_LOW) < 1e-7
    high = [ln for ln in lines if ln.eigenvalue > 1.1][0]
    assert high.parity == "even" and high.zero_count == 2
    assert abs(high.eigenvalue - K1_EVEN_HIGH) < 1e-7


def test_k0_lines(spectra):
    lines = spectra[0]
    assert abs(lines[0].eigenvalue) < 1e-10 and lines[0].zero_count == 0
    odd = _near(lines, 0.7768, 2e-2)
    assert len(odd) == 1 and odd[0].parity == "odd" and odd[0].zero_count == 2
    assert abs(odd[0].eigenvalue - K0_ODD) < 1e-7
    one = _near(lines, 1.0, 1e-8)
    assert len(one) == 1 and one[0].parity == "even" and one[0].zero_count == 2


@pytest.mark.parametrize("k", [0, 1, 2])
def test_haupt_ordering_and_rayleigh(spectra, k):
    for i, ln in enumerate(spectra[k]):
        assert ln.zero_count == haupt_pattern(i)
        assert count_eigenfunction_zeros(ln) == ln.zero_count
        assert rayleigh_defect(ln) < 1e-8
    vals = [ln.eigenvalue for ln in spectra[k]]
    assert vals == sorted(vals)


@pytest.mark.parametrize("k", [0, 1, 2])
def test_spectral_convergence(k):
    shifts = convergence_shifts(k, sizes=(16, 32, 64, 128, 256), count=4)
    floor = 1e-9
    for a, b in zip(shifts, shifts[1:]):
        assert b <= a / 10 or b < floor
    assert shifts[-1] < 1e-8


@pytest.mark.parametrize("k", [0, 1, 2])
def test_parity_stable_under_refinement(k):
    a = periodic_spectrum(k, n=128, count=5)
    b = periodic_spectrum(k, n=256, count=5)
    assert [ln.parity for ln in a] == [ln.parity for ln in b]


def test_multiplicity():
    rep = verify_multiplicity()
    assert rep.passed and rep.multiplicity == 5
    assert abs(rep.smallest_positive - 1) < 1e-8
    assert rep.below_one == ()
    ex = sorted(round(ln.eigenvalue, 4) for ln in rep.excluded)
    assert ex == [0.2517, 0.7768]
    assert rep.higher_mode_bound > 1
    assert rep.as_dict()["multiplicity"] == 5


def test_admissibility_rule(spectra):
    assert admissible(spectra[2][0])
    assert not admissible(_near(spectra[1], 0.2517, 1e-2)[0])
    assert not admissible(_near(spectra[0], 0.7768, 1e-2)[0])


def test_errors():
    with pytest.raises(DomainError):
        periodic_spectrum(4)
    with pytest.raises(DomainError):
        periodic_spectrum(0, n=32)
    with pytest.raises(UnresolvedZeroError):
        count_zeros_periodic(np.zeros(64))
    with pytest.raises(DomainError):
        count_zeros_periodic(np.ones(10))


def test_convergence_error_for_rough_weight():
    class Rough:
        period = PERIOD

        def __call__(self, y):
            return 3.0 + (np.mod(y, PERIOD) < 1.0)

    with pytest.raises(ConvergenceError):
        periodic_spectrum(0, Rough(), n=64)


def test_zero_counter_on_cosines():
    t = 2 * math.pi * np.arange(256) / 256
    for m in range(5):
        assert count_zeros_periodic(np.cos(m * t + 0.1)) == 2 * m


def test_explicit_weight_profile_matches_default():
    prof = metric_profile(256)
    a = [ln.eigenvalue for ln in periodic_spectrum(1, prof)]
    b = [ln.eigenvalue for ln in periodic_spectrum(1)]
    assert np.allclose(a, b, atol=1e-13)
