"""Elliptic special functions with real arguments.

Complete integrals use the arithmetic-geometric mean, Jacobi functions use the
descending Landen transformation, and the Weierstrass function is evaluated
from its Laurent series near the origin followed by repeated duplication.
All integrals take the *modulus* k, never the parameter m = k**2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DomainError, PoleError

AGM_MAX_ITER = 40
POLE_GUARD = 1e-6


@dataclass(frozen=True)
class EllipticModulus:
    k: float

    def __post_init__(self):
        if not (0.0 <= self.k < 1.0) or math.isnan(self.k):
            raise DomainError(f"elliptic modulus must lie in [0, 1), got {self.k!r}")

    @property
    def complementary(self) -> float:
        return math.sqrt((1.0 - self.k) * (1.0 + self.k))


def _modulus(k) -> float:
    return float(k.k) if isinstance(k, EllipticModulus) else float(k)


def agm_integrals(k) -> tuple[float, float, int]:
    """Return ``(K(k), E(k), iterations)`` from a single AGM run.

    Requires 0 <= k < 1.
    """
    k = _modulus(k)
    if not (0.0 <= k < 1.0):
        raise DomainError(f"complete integrals need 0 <= k < 1, got {k!r}")
    a = 1.0
    g = math.sqrt((1.0 - k) * (1.0 + k))
    c = k
    power = 0.5
    tail = power * c * c
    it = 0
    while abs(c) > 1e-17 * a and it < AGM_MAX_ITER:
        a_next = 0.5 * (a + g)
        c = c * c / (4.0 * a_next)
        g = math.sqrt(a * g)
        a = a_next
        power *= 2.0
        tail += power * c * c
        it += 1
    K = math.pi / (2.0 * a)
    return K, K * (1.0 - tail), it


def complete_K(k) -> float:
    """Complete elliptic integral of the first kind, modulus convention."""
    return agm_integrals(k)[0]


def complete_E(k) -> float:
    """Complete elliptic integral of the second kind, modulus convention.

    Defined on the closed interval [0, 1]; E(1) = 1.
    """
    k = _modulus(k)
    if k == 1.0:
        return 1.0
    if not (0.0 <= k <= 1.0):
        raise DomainError(f"E(k) needs 0 <= k <= 1, got {k!r}")
    return agm_integrals(k)[1]


def jacobi_cn_sn_dn(u, k):
    """Jacobi elliptic functions ``(cn, sn, dn)`` by descending Landen.

    ``u`` may be a scalar or an array; ``k`` is the modulus in [0, 1).
    """
    k = _modulus(k)
    if not (0.0 <= k < 1.0):
        raise DomainError(f"Jacobi functions need 0 <= k < 1, got {k!r}")
    u_arr = np.asarray(u, dtype=float)
    a = [1.0]
    c = [k]
    g = math.sqrt((1.0 - k) * (1.0 + k))
    while abs(c[-1]) > 1e-16 and len(a) < AGM_MAX_ITER:
        a_prev = a[-1]
        a.append(0.5 * (a_prev + g))
        c.append(0.5 * (a_prev - g))
        g = math.sqrt(a_prev * g)
    n = len(a) - 1
    phi = (2.0 ** n) * a[n] * u_arr
    for j in range(n, 0, -1):
        phi = 0.5 * (phi + np.arcsin(c[j] * np.sin(phi) / a[j]))
    sn = np.sin(phi)
    cn = np.cos(phi)
    dn = np.sqrt(1.0 - (k * sn) ** 2)
    if np.ndim(u) == 0:
        return float(cn), float(sn), float(dn)
    return cn, sn, dn


@dataclass(frozen=True)
class WeierstrassInvariants:
    """Real invariants ``(g2, g3)`` of a nondegenerate lattice."""

    g2: float
    g3: float

    def __post_init__(self):
        if self.discriminant == 0.0:
            raise DomainError("degenerate lattice: g2**3 - 27*g3**2 == 0")

    @property
    def discriminant(self) -> float:
        return self.g2 ** 3 - 27.0 * self.g3 ** 2

    @cached_property
    def real_roots(self) -> tuple[float, ...]:
        """Real roots of 4x^3 - g2 x - g3, descending, Newton-polished."""
        roots = np.roots([4.0, 0.0, -self.g2, -self.g3])
        scale = 1.0 + max(abs(r) for r in roots)
        real = []
        for r in roots:
            if abs(r.imag) <= 1e-9 * scale:
                x = r.real
                for _ in range(3):
                    f = 4 * x ** 3 - self.g2 * x - self.g3
                    df = 12 * x ** 2 - self.g2
                    if df == 0.0:
                        break
                    x -= f / df
                real.append(x)
        return tuple(sorted(real, reverse=True))

    @cached_property
    def real_half_period(self) -> float:
        roots = self.real_roots
        if self.discriminant > 0:
            e1, e2, e3 = roots
            k = math.sqrt((e2 - e3) / (e1 - e3))
            return complete_K(k) / math.sqrt(e1 - e3)
        e = roots[0]
        h = math.sqrt(3.0 * e * e - 0.25 * self.g2)
        k = math.sqrt(0.5 - 0.75 * e / h)
        return complete_K(k) / math.sqrt(h)

    @property
    def real_period(self) -> float:
        return 2.0 * self.real_half_period

    @cached_property
    def laurent_coefficients(self) -> np.ndarray:
        """c_k for k >= 2, the coefficient of w**(2k-2), truncated at 1e-16."""
        radius = 0.25 * self.real_half_period
        c = {2: self.g2 / 20.0, 3: self.g3 / 28.0}
        k = 3
        while True:
            k += 1
            c[k] = 3.0 / ((2 * k + 1) * (k - 3)) * sum(
                c[m] * c[k - m] for m in range(2, k - 1))
            # relative to the leading 1/w**2 term at the threshold radius
            if abs(c[k]) * radius ** (2 * k) < 1e-17 and abs(c[k - 1]) * radius ** (2 * k - 2) < 1e-17:
                break
            if k > 200:  # pragma: no cover
                break
        return np.array([c[j] for j in range(2, k + 1)])


def _laurent(w, inv: WeierstrassInvariants):
    coeffs = inv.laurent_coefficients
    w2 = w * w
    # Horner in w**2 for sum_k c_k w^(2k-2) and its derivative sum (2k-2) c_k w^(2k-3)
    s = np.zeros_like(w)
    ds = np.zeros_like(w)
    for j in range(len(coeffs) - 1, -1, -1):
        kk = j + 2
        s = s * w2 + coeffs[j]
        ds = ds * w2 + (2 * kk - 2) * coeffs[j]
    p = 1.0 / w2 + s * w2
    dp = -2.0 / (w2 * w) + ds * w
    return p, dp


def _duplicate(p, dp, inv: WeierstrassInvariants):
    g2, g3 = inv.g2, inv.g3
    t = p * p + 0.25 * g2
    num = t * t + 2.0 * g3 * p
    den = 4.0 * p ** 3 - g2 * p - g3
    dnum = 4.0 * p * t + 2.0 * g3
    dden = 12.0 * p * p - g2
    p2 = num / den
    dr = (dnum * den - num * dden) / (den * den)
    return p2, 0.5 * dr * dp


def weierstrass_p_and_derivative(y, inv: WeierstrassInvariants, pole_guard: float = POLE_GUARD):
    """Evaluate ``(P(y), P'(y))`` for real ``y`` (scalar or array)."""
    y_arr = np.atleast_1d(np.asarray(y, dtype=float))
    period = inv.real_period
    half = 0.5 * period
    red = np.mod(y_arr + half, period) - half
    if np.any(np.abs(red) < pole_guard):
        raise PoleError(f"argument within {pole_guard:g} of a lattice point")
    sign = np.where(red < 0, -1.0, 1.0)
    red = np.abs(red)
    radius = 0.25 * inv.real_half_period
    n = max(0, int(math.ceil(math.log2(red.max() / radius)))) if red.max() > radius else 0
    w = red / 2.0 ** n
    p, dp = _laurent(w, inv)
    for _ in range(n):
        p, dp = _duplicate(p, dp, inv)
    dp = sign * dp
    if np.ndim(y) == 0:
        return float(p[0]), float(dp[0])
    return p, dp


def weierstrass_p(y, inv: WeierstrassInvariants, pole_guard: float = POLE_GUARD):
    """Weierstrass elliptic function on the real line."""
    return weierstrass_p_and_derivative(y, inv, pole_guard)[0]


def legendre_relation_defect(k: float) -> float:
    """E K' + E' K - K K' - pi/2, which should vanish."""
    kc = math.sqrt((1.0 - k) * (1.0 + k))
    K, E, _ = agm_integrals(k)
    Kc, Ec, _ = agm_integrals(kc)
    return E * Kc + Ec * K - K * Kc - 0.5 * math.pi
