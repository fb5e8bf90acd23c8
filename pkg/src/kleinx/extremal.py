"""The explicit extremal solution at p = sqrt(3/8).

Along this orbit the angle theta with ``phi0 = sqrt(5/8) cos theta`` and
``phi1 = sin theta / sqrt 2`` solves the pendulum ``theta'' = sin theta cos theta``
with ``theta(0) = 0``, ``theta'(0) = sqrt 3``.  Everything here is expressed
through theta(y), which is obtained by inverting ``y_of_theta``.

The eigenvalue is normalized to 1, so the metric factor is ``lambda*f``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from .errors import ConvergenceError, DomainError, PoleError
from .specfun import WeierstrassInvariants, complete_E, complete_K, weierstrass_p

K_HALF = complete_K(0.5)
PERIOD = 2.0 * K_HALF
SQ58 = math.sqrt(5.0 / 8.0)
SQ38 = math.sqrt(3.0 / 8.0)
R2 = 1.0 / math.sqrt(2.0)

INV_PHI0 = WeierstrassInvariants(73.0 / 12.0, -595.0 / 216.0)
INV_PHI1 = WeierstrassInvariants(-8.0 / 3.0, 28.0 / 27.0)
INV_PHI2 = WeierstrassInvariants(193.0 / 12.0, 2681.0 / 216.0)

_FOURIER_N = 128


@lru_cache(maxsize=None)
def _y_series() -> tuple[float, np.ndarray]:
    # integrand is even and pi-periodic in theta; expand in cos(2 n theta)
    t = 2.0 * math.pi * np.arange(_FOURIER_N) / _FOURIER_N
    g = 0.5 / np.sqrt(1.0 - (1.0 + np.cos(t)) / 8.0)
    c = np.fft.rfft(g).real / _FOURIER_N
    c[1:] *= 2.0
    keep = np.nonzero(np.abs(c) > 1e-17)[0].max() + 1
    return float(c[0]), c[1:keep].copy()


def y_of_theta(theta):
    """Ordinate reached when the pendulum angle equals ``theta``.

    Strictly increasing, with ``y(theta + 2 pi) = y(theta) + PERIOD``.
    """
    th = np.asarray(theta, dtype=float)
    c0, c = _y_series()
    n = np.arange(1, len(c) + 1)
    ang = 2.0 * np.multiply.outer(th, n)
    y = c0 * th + (np.sin(ang) * (c / (2.0 * n))).sum(axis=-1)
    return float(y) if np.ndim(theta) == 0 else y


def y_of_theta_quad(theta: float) -> float:
    """Adaptive-quadrature version of :func:`y_of_theta`, used as a cross-check."""
    val, _ = quad(lambda t: 0.5 / math.sqrt(1.0 - 0.25 * math.cos(t) ** 2), 0.0, float(theta),
                  epsabs=1e-13, epsrel=1e-13, limit=200)
    return val


def theta_of_y(y, tol: float = 1e-13):
    """Invert :func:`y_of_theta` by Newton's method (the slope lies in [1/2, 1/sqrt3])."""
    yy = np.asarray(y, dtype=float)
    th = yy * (math.pi / K_HALF)
    for _ in range(30):
        step = (yy - y_of_theta(th)) * np.sqrt(3.0 + np.sin(th) ** 2)
        th = th + step
        if np.all(np.abs(step) < tol):
            break
    else:  # pragma: no cover
        raise ConvergenceError("theta inversion did not converge")
    return float(th) if np.ndim(y) == 0 else th


def _phi_from_theta(th):
    s, c = np.sin(th), np.cos(th)
    phi0 = SQ58 * c
    phi1 = R2 * s
    phi2 = 0.5 * np.sqrt(1.5 + 0.5 * s * s)
    return phi0, phi1, phi2


def phi_closed_form(y):
    """``(phi0, phi1, phi2)`` on the extremal orbit."""
    return _phi_from_theta(theta_of_y(y))


def phi_derivatives(y):
    """Values, first and second derivatives, each an array of shape (3, ...)."""
    th = theta_of_y(y)
    s, c = np.sin(th), np.cos(th)
    w2 = 3.0 + s * s
    w = np.sqrt(w2)
    acc = s * c
    phi = np.array(_phi_from_theta(th))
    # u = phi1**2 = sin^2/2 drives phi2 = sqrt(3/2 + u)/2
    u = 0.5 * s * s
    du = s * c * w
    ddu = (c * c - s * s) * w2 + s * c * acc
    r = np.sqrt(1.5 + u)
    d1 = np.array([-SQ58 * s * w, R2 * c * w, du / (4.0 * r)])
    d2 = np.array([
        -SQ58 * (c * w2 + s * acc),
        R2 * (-s * w2 + c * acc),
        ddu / (4.0 * r) - du * du / (8.0 * r ** 3),
    ])
    return phi, d1, d2


def _wp_or_limit(y, inv, f, limit):
    y = np.atleast_1d(np.asarray(y, dtype=float))
    out = np.empty_like(y)
    for i, yi in enumerate(y):
        try:
            out[i] = f(weierstrass_p(yi, inv))
        except PoleError:
            out[i] = limit
    return out


def phi_weierstrass(y):
    """Same profiles evaluated from Weierstrass-function expressions.

    At a lattice point the removable singularity is replaced by its limit.
    """
    phi0 = _wp_or_limit(y, INV_PHI0, lambda P: SQ58 * (1.0 - 3.0 / (2.0 * P - 1.0 / 6.0)), SQ58)
    phi1 = _wp_or_limit(np.asarray(y, dtype=float) + 0.5 * K_HALF, INV_PHI1,
                        lambda P: R2 * (-1.0 + 2.0 / (P + 2.0 / 3.0)), -R2)
    phi2 = _wp_or_limit(y, INV_PHI2, lambda P: SQ38 + 0.25 * math.sqrt(1.5) / (P + 11.0 / 12.0), SQ38)
    if np.ndim(y) == 0:
        return float(phi0[0]), float(phi1[0]), float(phi2[0])
    return phi0, phi1, phi2


def lambda_f(y):
    """Normalized metric factor ``5 - (16/5) phi0**2``."""
    phi0 = phi_closed_form(y)[0]
    return 5.0 - 3.2 * phi0 * phi0


@dataclass(frozen=True)
class MetricProfile:
    n: int
    period: float
    y: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    def __call__(self, y):
        return lambda_f(y)

    @property
    def spacing(self) -> float:
        return self.period / self.n


def metric_profile(n: int = 256) -> MetricProfile:
    if n < 16 or n % 2:
        raise DomainError(f"grid size must be even and at least 16, got {n}")
    y = PERIOD * np.arange(n) / n
    vals = lambda_f(y)
    y.flags.writeable = False
    vals.flags.writeable = False
    return MetricProfile(n, PERIOD, y, vals)


def lambda_area_pipelines() -> dict[str, float]:
    """Three independent evaluations of lambda_1 * Area."""
    integral, _ = quad(lambda t: (2.5 - math.cos(t) ** 2) / math.sqrt(4.0 - math.cos(t) ** 2),
                       0.0, 2.0 * math.pi, epsabs=1e-13, epsrel=1e-13, limit=200)
    return {
        "quadrature": 2.0 * math.pi * integral,
        "elliptic_half": 2.0 * math.pi * (8.0 * complete_E(0.5) - 3.0 * K_HALF),
        "elliptic_2sqrt2_3": 12.0 * math.pi * complete_E(2.0 * math.sqrt(2.0) / 3.0),
    }


def lambda_area() -> float:
    return lambda_area_pipelines()["quadrature"]


@dataclass(frozen=True)
class EmbeddingPoint:
    x: float
    y: float
    coords: tuple[float, float, float, float, float]


def embed_array(x, y) -> np.ndarray:
    """Embedding coordinates, shape ``broadcast(x, y).shape + (5,)``."""
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    p0, p1, p2 = phi_closed_form(y)
    return np.stack([p0, p1 * np.cos(x), p1 * np.sin(x), p2 * np.cos(2 * x), p2 * np.sin(2 * x)], axis=-1)


def embed(x: float, y: float) -> EmbeddingPoint:
    return EmbeddingPoint(float(x), float(y), tuple(float(v) for v in embed_array(x, y)))


def embedding_jacobian(x, y):
    """Analytic ``(d/dx, d/dy)`` of the embedding, each of shape ``(..., 5)``."""
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    (p0, p1, p2), (d0, d1, d2), _ = phi_derivatives(y)
    cx, sx, c2, s2 = np.cos(x), np.sin(x), np.cos(2 * x), np.sin(2 * x)
    zero = np.zeros_like(x)
    dx = np.stack([zero, -p1 * sx, p1 * cx, -2 * p2 * s2, 2 * p2 * c2], axis=-1)
    dy = np.stack([d0, d1 * cx, d1 * sx, d2 * c2, d2 * s2], axis=-1)
    return dx, dy


def conformality_defect(x, y, h: float | None = None):
    """Max of ``| |Phi_x|^2 - lf/2 |``, ``| |Phi_y|^2 - lf/2 |`` and ``|Phi_x . Phi_y|``.

    With ``h`` given, derivatives are central differences instead of analytic.
    """
    if h is None:
        dx, dy = embedding_jacobian(x, y)
    else:
        dx = (embed_array(np.asarray(x) + h, y) - embed_array(np.asarray(x) - h, y)) / (2 * h)
        dy = (embed_array(x, np.asarray(y) + h) - embed_array(x, np.asarray(y) - h)) / (2 * h)
    half = 0.5 * lambda_f(np.broadcast_to(y, np.broadcast(x, y).shape))
    return np.maximum.reduce([
        np.abs((dx * dx).sum(-1) - half),
        np.abs((dy * dy).sum(-1) - half),
        np.abs((dx * dy).sum(-1)),
    ])


def eigen_residual(x, y):
    """Max over the five coordinates of ``|Delta Phi_i - Phi_i|`` in the metric ``lf (dx^2+dy^2)``."""
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    (p0, p1, p2), _, (a0, a1, a2) = phi_derivatives(y)
    lf = 5.0 - 3.2 * p0 * p0
    cx, sx, c2, s2 = np.cos(x), np.sin(x), np.cos(2 * x), np.sin(2 * x)
    lap = np.stack([a0, (a1 - p1) * cx, (a1 - p1) * sx, (a2 - 4 * p2) * c2, (a2 - 4 * p2) * s2], axis=-1)
    phi = np.stack([p0, p1 * cx, p1 * sx, p2 * c2, p2 * s2], axis=-1)
    res = np.abs(-lap / lf[..., None] - phi).max(axis=-1)
    return float(res) if res.ndim == 0 else res


# --- mesh export -------------------------------------------------------------

def mesh(nx: int, ny: int):
    """Vertices on ``[0, pi) x [0, a)`` and quad faces respecting the Klein gluing.

    Crossing x = pi lands on vertex ``(0, -j mod ny)``.
    """
    if nx < 2 or ny < 2:
        raise DomainError("mesh needs at least 2 x 2 vertices")
    xs = math.pi * np.arange(nx) / nx
    ys = PERIOD * np.arange(ny) / ny
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    verts = embed_array(X, Y).reshape(-1, 5)

    def vid(i, j):
        if i == nx:
            i, j = 0, (-j) % ny
        return i * ny + (j % ny)

    faces = []
    for i in range(nx):
        for j in range(ny):
            faces.append((vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)))
    return X.ravel(), Y.ravel(), verts, np.array(faces, dtype=np.int64)


def write_mesh_csv(path, nx: int, ny: int) -> None:
    X, Y, V, _ = mesh(nx, ny)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y", "c1", "c2", "c3", "c4", "c5"])
        for row in zip(X, Y, *V.T):
            w.writerow([f"{v:.17g}" for v in row])


def write_mesh_obj(path, nx: int, ny: int, axes=(1, 2, 4)) -> None:
    """Orthogonal projection onto three coordinates (1-based) as Wavefront OBJ."""
    if len(axes) != 3 or not all(1 <= a <= 5 for a in axes):
        raise DomainError(f"projection axes must be three indices in 1..5, got {axes!r}")
    _, _, V, F = mesh(nx, ny)
    cols = [a - 1 for a in axes]
    with open(path, "w") as fh:
        fh.write(f"# projection onto c{axes[0]}, c{axes[1]}, c{axes[2]}\n")
        for v in V[:, cols]:
            fh.write("v {:.17g} {:.17g} {:.17g}\n".format(*v))
        for f in F + 1:
            fh.write("f {} {} {} {}\n".format(*f))
