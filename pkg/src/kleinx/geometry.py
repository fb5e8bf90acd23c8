"""Lawson tori, bipolar metrics and the explicit metric ``g0``.

The main check is that the normalized extremal metric ``lf(y) (dx^2 + dy^2)``
pulled back through ``x = 2u``, ``y = 2 z(v) + K(1/2)/2`` equals ``2 g0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .errors import DomainError, PoleError
from .extremal import INV_PHI0, K_HALF, PERIOD, lambda_f
from .specfun import complete_K, jacobi_cn_sn_dn, weierstrass_p

K_CN = 2.0 * math.sqrt(2.0) / 3.0
Z_HALF_TURN = 2.0 * complete_K(K_CN) / 3.0   # z(pi)


@dataclass(frozen=True)
class SurfaceChart:
    name: str
    u_range: tuple
    v_range: tuple
    factor: Callable
    identification: str


def _c(m, k, v):
    return k * k + (m * m - k * k) * np.cos(v) ** 2


def bipolar_metric(m: int, k: int, u, v):
    """Diagonal coefficients ``(E, G)`` of the bipolar metric for ``tau_{m,k}``."""
    if not (m >= k >= 1):
        raise DomainError(f"need m >= k >= 1, got m={m}, k={k}")
    v = np.asarray(v, dtype=float) + 0.0 * np.asarray(u, dtype=float)
    c = _c(m, k, v)
    fac = (c * c + (m * k) ** 2) / c
    return fac, fac / c


def metric_g0(u, v):
    v = np.asarray(v, dtype=float) + 0.0 * np.asarray(u, dtype=float)
    c = 1.0 + 8.0 * np.cos(v) ** 2
    fac = (9.0 + c * c) / c
    return fac, fac / c


G0_CHART = SurfaceChart("g0", (0.0, math.pi / 2), (0.0, math.pi),
                        lambda u, v: metric_g0(u, v)[0], "(u, v) ~ (u + pi/2, -v)")
GHAT0_CHART = SurfaceChart("ghat0", (0.0, math.pi), (-PERIOD / 2, PERIOD / 2),
                           lambda x, y: lambda_f(y) + 0.0 * np.asarray(x), "(x, y) ~ (x + pi, -y)")


def lawson_immersion(m: int, k: int, u, v) -> np.ndarray:
    if not (m >= k >= 1):
        raise DomainError(f"need m >= k >= 1, got m={m}, k={k}")
    u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
    cv, sv = np.cos(v), np.sin(v)
    return np.stack([np.cos(m * u) * cv, np.sin(m * u) * cv, np.cos(k * u) * sv, np.sin(k * u) * sv], axis=-1)


def harmonicity_defect(m: int, k: int, u, v, h: float = 1e-4):
    """``|mu_uu + mu_vv + |grad mu|^2 mu|`` by central differences; reported, not asserted."""
    f = lambda a, b: lawson_immersion(m, k, a, b)
    c = f(u, v)
    fu = (f(u + h, v) - f(u - h, v)) / (2 * h)
    fv = (f(u, v + h) - f(u, v - h)) / (2 * h)
    lap = (f(u + h, v) + f(u - h, v) + f(u, v + h) + f(u, v - h) - 4 * c) / (h * h)
    grad2 = (fu * fu).sum(-1) + (fv * fv).sum(-1)
    return np.abs(lap + grad2[..., None] * c).max(axis=-1)


def _z_base(r: float) -> float:
    val, _ = quad(lambda t: 1.0 / math.sqrt(1.0 + 8.0 * math.cos(t) ** 2), 0.0, r,
                  epsabs=1e-13, epsrel=1e-13, limit=200)
    return val


def z_of_v(v):
    """``int_0^v dt / sqrt(1 + 8 cos^2 t)``, extended using ``z(v + pi) = z(v) + z(pi)``."""
    va = np.atleast_1d(np.asarray(v, dtype=float))
    q = np.floor(va / math.pi)
    r = va - q * math.pi
    out = q * Z_HALF_TURN + np.array([_z_base(x) for x in r])
    return float(out[0]) if np.ndim(v) == 0 else out


def y_of_v(v):
    """Ordinate of the extremal chart, reduced to ``[0, a)``."""
    return np.mod(2.0 * np.asarray(z_of_v(v)) + 0.5 * K_HALF, PERIOD)


@dataclass(frozen=True)
class ScalingReport:
    n: int
    max_rel_error: float
    max_rel_error_x_equals_u: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error < 1e-8


def pullback_ghat0(u, v, x_scale: float = 2.0):
    """``(E, G)`` of ``lf(y)(dx^2 + dy^2)`` under ``x = x_scale u`` and ``y = 2 z(v) + K/2``."""
    u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
    y = y_of_v(v.ravel()).reshape(v.shape)
    lf = lambda_f(y)
    dydv = 2.0 / np.sqrt(1.0 + 8.0 * np.cos(v) ** 2)
    return lf * x_scale ** 2, lf * dydv ** 2


def verify_g0_scaling(n: int = 64) -> ScalingReport:
    if n < 32:
        raise DomainError("grid must be at least 32 x 32")
    u = 0.5 * math.pi * np.arange(n) / n
    v = math.pi * np.arange(n) / n
    U, V = np.meshgrid(u, v, indexing="ij")
    E0, G0 = metric_g0(U, V)
    errs = []
    for scale in (2.0, 1.0):
        Eh, Gh = pullback_ghat0(U, V, scale)
        errs.append(float(max(np.abs(Eh / (2 * E0) - 1).max(), np.abs(Gh / (2 * G0) - 1).max())))
    return ScalingReport(n, errs[0], errs[1])


def _wp_safe(y, limit_fn):
    try:
        return limit_fn(weierstrass_p(y, INV_PHI0))
    except PoleError:
        return None


def wp_cn_identities(z) -> tuple[np.ndarray, np.ndarray]:
    """Residuals of the cn-squared and metric-factor identities at the given ``z``."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    cn = jacobi_cn_sn_dn(3.0 * z, K_CN)[0]
    cn2 = cn * cn
    r1 = np.empty_like(z)
    r2 = np.empty_like(z)
    for i, zi in enumerate(z):
        val = _wp_safe(2.0 * zi, lambda P: (12 * P - 10) / (12 * P + 17))
        r1[i] = (1.0 if val is None else val) - cn2[i]
        c = 1.0 + 8.0 * cn2[i]
        lhs = (c * c + 9.0) / c
        rhs = _wp_safe(2.0 * zi + 0.5 * K_HALF, lambda P: 10.0 - ((24 * P - 38) / (12 * P - 1)) ** 2)
        r2[i] = lhs - (6.0 if rhs is None else rhs)
    return r1, r2


def area_g0(nodes: int = 96) -> float:
    """Area of ``g0`` over ``[0, pi/2) x [0, pi)`` by tensor Gauss-Legendre."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    u = 0.25 * math.pi * (x + 1.0)
    v = 0.5 * math.pi * (x + 1.0)
    U, V = np.meshgrid(u, v, indexing="ij")
    E, G = metric_g0(U, V)
    dens = np.sqrt(E * G)
    return float(0.25 * math.pi * 0.5 * math.pi * (w[:, None] * w[None, :] * dens).sum())


def bipolar_table(m: int, k: int, n: int = 32) -> list[tuple[float, float, float, float]]:
    u = 0.5 * math.pi * np.arange(n) / n
    v = math.pi * np.arange(n) / n
    rows = []
    for ui in u:
        E, G = bipolar_metric(m, k, ui, v)
        rows.extend(zip([float(ui)] * n, map(float, v), map(float, E), map(float, G)))
    return rows


def lawson_mesh(m: int, k: int, nu: int = 64, nv: int = 32):
    """Vertices (in R^4) and quad faces of ``tau_{m,k}`` over ``[0, 2pi) x [0, 2pi)``."""
    u = 2.0 * math.pi * np.arange(nu) / nu
    v = 2.0 * math.pi * np.arange(nv) / nv
    U, V = np.meshgrid(u, v, indexing="ij")
    verts = lawson_immersion(m, k, U, V).reshape(-1, 4)
    faces = [(i * nv + j, ((i + 1) % nu) * nv + j, ((i + 1) % nu) * nv + (j + 1) % nv, i * nv + (j + 1) % nv)
             for i in range(nu) for j in range(nv)]
    return verts, np.array(faces, dtype=np.int64)


def write_lawson_obj(path, m: int, k: int, nu: int = 64, nv: int = 32, axes=(1, 2, 3)) -> None:
    if len(axes) != 3 or not all(1 <= a <= 4 for a in axes):
        raise DomainError(f"projection axes must be three indices in 1..4, got {axes!r}")
    verts, faces = lawson_mesh(m, k, nu, nv)
    cols = [a - 1 for a in axes]
    with open(path, "w") as fh:
        fh.write(f"# tau_{m},{k} projected onto x{axes[0]}, x{axes[1]}, x{axes[2]}\n")
        for p in verts[:, cols]:
            fh.write("v {:.17g} {:.17g} {:.17g}\n".format(*p))
        for f in faces + 1:
            fh.write("f {} {} {} {}\n".format(*f))
