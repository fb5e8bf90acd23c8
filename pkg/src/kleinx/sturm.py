"""Periodic Sturm-Liouville spectra of the Fourier-mode equations.

For each mode ``k`` we solve ``-phi'' + k^2 phi = lam F phi`` on one period,
where ``F = lambda*f`` is the normalized metric factor, by Fourier collocation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh

from .errors import ConvergenceError, DomainError, UnresolvedZeroError
from .extremal import MetricProfile, metric_profile

CONVERGENCE_TOL = 1e-6
CLUSTER_TOL = 1e-8
ZERO_FLOOR = 1e-9
REFINE = 8


@dataclass(frozen=True)
class SpectralLine:
    k_index: int
    eigenvalue: float
    eigenfunction: np.ndarray = field(repr=False)
    parity: str
    zero_count: int
    position: int = 0

    def as_dict(self) -> dict:
        return {"k": self.k_index, "eigenvalue": self.eigenvalue, "parity": self.parity,
                "zeros": self.zero_count, "position": self.position}


def fourier_d2(n: int, period: float) -> np.ndarray:
    """Second-derivative collocation matrix on ``n`` equispaced points (n even)."""
    if n % 2:
        raise DomainError("Fourier collocation needs an even number of points")
    h = 2.0 * math.pi / n
    j = np.arange(n)
    col = np.empty(n)
    col[0] = -math.pi ** 2 / (3.0 * h * h) - 1.0 / 6.0
    col[1:] = -0.5 * (-1.0) ** j[1:] / np.sin(0.5 * h * j[1:]) ** 2
    idx = (j[:, None] - j[None, :]) % n
    return col[idx] * (2.0 * math.pi / period) ** 2


def _reflect(v: np.ndarray) -> np.ndarray:
    # y_j -> -y_j on the periodic grid is index j -> (n - j) mod n
    return np.roll(v[::-1], 1, axis=0)


def _weight_samples(weight, n: int):
    if weight is None:
        prof = metric_profile(n)
        return prof.values, prof.period
    if isinstance(weight, MetricProfile) and weight.n == n:
        return weight.values, weight.period
    period = weight.period
    return np.asarray(weight(period * np.arange(n) / n), dtype=float), period


def _parity_basis(vals, vecs):
    """Rotate near-degenerate clusters so every vector is even or odd."""
    vecs = vecs.copy()
    i = 0
    m = len(vals)
    while i < m:
        j = i + 1
        while j < m and abs(vals[j] - vals[i]) <= CLUSTER_TOL * max(1.0, abs(vals[i])):
            j += 1
        if j - i > 1:
            Q = vecs[:, i:j]
            M = Q.T @ _reflect(Q)
            _, rot = np.linalg.eigh(0.5 * (M + M.T))
            vecs[:, i:j] = Q @ rot
        i = j
    return vecs


def count_zeros_periodic(samples) -> int:
    """Zeros over one period of a smooth periodic function given by equispaced samples.

    The trigonometric interpolant is evaluated on a finer grid and sign changes are
    counted cyclically; samples below ``1e-9 * max|phi|`` are treated as candidates.
    """
    v = np.asarray(samples, dtype=float)
    n = len(v)
    if n < 64:
        raise DomainError("need at least 64 samples to count zeros")
    spec = np.fft.rfft(v)
    fine = np.fft.irfft(spec, n * REFINE) * REFINE
    peak = np.abs(fine).max()
    if not peak > 0:
        raise UnresolvedZeroError("function vanishes identically at grid resolution")
    fine = fine / peak
    sign = np.where(np.abs(fine) < ZERO_FLOOR, 0, np.sign(fine)).astype(int)
    if not np.any(sign):
        raise UnresolvedZeroError("function vanishes identically at grid resolution")
    # runs of candidates must be isolated points of a transversal crossing
    zero_idx = np.nonzero(sign == 0)[0]
    for z in zero_idx:
        if sign[(z - 1) % len(sign)] == 0 and sign[(z + 1) % len(sign)] == 0:
            raise UnresolvedZeroError(f"flat zero near sample {z // REFINE}")
    nz = sign[sign != 0]
    return int(np.count_nonzero(nz != np.roll(nz, -1)))


def _solve(k, F, period, n):
    D2 = fourier_d2(n, period)
    A = -D2 + k * k * np.eye(n)
    g = 1.0 / np.sqrt(F)
    S = g[:, None] * A * g[None, :]
    vals, vecs = eigh(0.5 * (S + S.T))
    return vals, vecs, g, A


def periodic_spectrum(k: int, weight: MetricProfile | None = None, n: int = 256, count: int = 6,
                      check_convergence: bool = True) -> list[SpectralLine]:
    """Lowest ``count`` eigenpairs for mode ``k`` with parity and zero counts."""
    if k not in (0, 1, 2, 3):
        raise DomainError(f"mode index must be 0, 1 or 2 (3 is allowed as a bound check), got {k}")
    if n < 64 or n % 2:
        raise DomainError(f"grid must be even and at least 64, got {n}")
    F, period = _weight_samples(weight, n)
    if not np.all(F > 0):
        raise DomainError("weight must be positive on the grid")
    vals, vecs, g, _ = _solve(k, F, period, n)
    vals, vecs = vals[:count + 2], vecs[:, :count + 2]
    vecs = _parity_basis(vals, vecs)
    if check_convergence:
        F2, _ = _weight_samples(weight, 2 * n)
        vals2 = _solve(k, F2, period, 2 * n)[0][:count]
        shift = np.abs(vals2 - vals[:count]).max()
        if shift > CONVERGENCE_TOL:
            raise ConvergenceError(f"eigenvalues moved by {shift:.3e} when doubling n={n}")
    lines = []
    for i in range(count):
        phi = g * vecs[:, i]
        phi = phi / np.abs(phi).max()
        if phi[np.argmax(np.abs(phi))] < 0:
            phi = -phi
        r = float(phi @ _reflect(phi) / (phi @ phi))
        parity = "even" if r > 0 else "odd"
        phi.flags.writeable = False
        lines.append(SpectralLine(k, float(vals[i]), phi, parity, count_zeros_periodic(phi), i))
    return lines


def count_eigenfunction_zeros(line: SpectralLine) -> int:
    return count_zeros_periodic(line.eigenfunction)


def haupt_pattern(i: int) -> int:
    """Zero count expected at position ``i`` of a periodic spectrum."""
    return 2 * ((i + 1) // 2)


def rayleigh_defect(line: SpectralLine, weight: MetricProfile | None = None) -> float:
    n = len(line.eigenfunction)
    F, period = _weight_samples(weight, n)
    phi = line.eigenfunction
    A = -fourier_d2(n, period) + line.k_index ** 2 * np.eye(n)
    return abs(float(phi @ A @ phi / (phi @ (F * phi))) - line.eigenvalue)


def convergence_shifts(k: int, sizes=(64, 128, 256), count: int = 4) -> list[float]:
    """Max eigenvalue change between successive grid sizes."""
    prev = None
    out = []
    for n in sizes:
        F, period = _weight_samples(None, n)
        vals = _solve(k, F, period, n)[0][:count]
        if prev is not None:
            out.append(float(np.abs(vals - prev).max()))
        prev = vals
    return out


@dataclass(frozen=True)
class MultiplicityReport:
    multiplicity: int
    smallest_positive: float
    below_one: tuple = ()
    excluded: tuple = ()
    higher_mode_bound: float = math.inf
    lines: tuple = field(default=(), repr=False)

    @property
    def passed(self) -> bool:
        return self.multiplicity == 5 and not self.below_one and abs(self.smallest_positive - 1.0) < 1e-6

    def as_dict(self) -> dict:
        return {
            "multiplicity": self.multiplicity,
            "smallest_positive": self.smallest_positive,
            "below_one": [ln.as_dict() for ln in self.below_one],
            "excluded": [ln.as_dict() for ln in self.excluded],
            "higher_mode_bound": self.higher_mode_bound,
            "passed": self.passed,
            "lines": [ln.as_dict() for ln in self.lines],
        }


def admissible(line: SpectralLine) -> bool:
    """Klein-bottle symmetry: even modes need even profiles, odd modes odd profiles."""
    return line.parity == ("even" if line.k_index % 2 == 0 else "odd")


def verify_multiplicity(n: int = 256, count: int = 6) -> MultiplicityReport:
    lines = [ln for k in (0, 1, 2) for ln in periodic_spectrum(k, None, n, count)]
    eps = 1e-6
    mult = 0
    below, excluded = [], []
    positive = []
    for ln in lines:
        if ln.eigenvalue < 1.0 - eps and not admissible(ln):
            if ln.eigenvalue > eps:
                excluded.append(ln)
            continue
        if not admissible(ln):
            continue
        if ln.eigenvalue > eps:
            positive.append(ln.eigenvalue)
        if eps < ln.eigenvalue < 1.0 - eps:
            below.append(ln)
        if abs(ln.eigenvalue - 1.0) <= eps:
            mult += 1 if ln.k_index == 0 else 2
    F = metric_profile(n).values
    # for k >= 3 the Rayleigh quotient is at least k^2 / max F
    bound = 9.0 / float(F.max())
    return MultiplicityReport(mult, min(positive), tuple(below), tuple(excluded), bound, tuple(lines))
