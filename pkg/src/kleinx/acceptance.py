"""The twelve acceptance checks, shared by the test suite and ``kleinx verify``.

Runtimes are measured after :func:`warmup`, so one-off JIT compilation is not
charged to whichever check happens to run first.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from . import extremal, geometry, specfun, sturm, sweep, systems
from .odeint import DEFAULT_ABS_TOL, DEFAULT_REL_TOL

CONSERVATION_TOL = 1e-14
LAMBDA_AREA_QUOTED = 13.365 * math.pi


@dataclass
class Check:
    number: int
    name: str
    limit: float
    subchecks: list = field(default_factory=list)
    elapsed: float = 0.0

    def add(self, label: str, value, bound, ok: bool | None = None):
        if ok is None:
            ok = bool(value < bound)
        self.subchecks.append({"label": label, "value": _plain(value), "bound": _plain(bound), "ok": bool(ok)})

    @property
    def passed(self) -> bool:
        return all(s["ok"] for s in self.subchecks)

    @property
    def first_failure(self) -> str | None:
        for s in self.subchecks:
            if not s["ok"]:
                return s["label"]
        return None

    def as_dict(self) -> dict:
        return {"number": self.number, "name": self.name, "passed": self.passed,
                "elapsed": self.elapsed, "limit": self.limit, "subchecks": self.subchecks}

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = "" if self.passed else f"  [first failure: {self.first_failure}]"
        return f"{status}  {self.number:2d}  {self.name:<34s} {self.elapsed:7.3f}s / {self.limit:g}s{extra}"


def _plain(v):
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    if isinstance(v, tuple):
        return list(v)
    return v


_WARM = False


def warmup() -> None:
    """Compile every integration kernel once."""
    global _WARM
    if _WARM:
        return
    p = 0.5
    systems.integrate_full(p, 0.1)
    systems.integrate_full(p, 0.1, stop_component=1, stop_direction=-1)
    systems.integrate_syst12(p, 0.1)
    systems.integrate_syst01(p, 0.1, stop_component=1, stop_direction=-1)
    systems.integrate_chart_b(p, 0.1)
    _WARM = True


def _timed(number, name, limit):
    def deco(fn):
        def run(**kw) -> Check:
            warmup()
            chk = Check(number, name, limit)
            t0 = time.perf_counter()
            fn(chk, **kw)
            chk.elapsed = time.perf_counter() - t0
            chk.add("runtime", chk.elapsed, limit)
            return chk
        run.__name__ = fn.__name__
        run.number = number
        return run
    return deco


@_timed(1, "lambda*Area pipelines", 1.0)
def check_lambda_area(chk):
    vals = extremal.lambda_area_pipelines()
    keys = list(vals)
    for i in range(3):
        for j in range(i + 1, 3):
            chk.add(f"|{keys[i]} - {keys[j]}|", abs(vals[keys[i]] - vals[keys[j]]), 1e-10)
    chk.add("|lambda*Area - 13.365 pi|", abs(vals["quadrature"] - LAMBDA_AREA_QUOTED), 5e-4 * math.pi)


@_timed(2, "period a = 2K(1/2)", 1.0)
def check_period(chk):
    k_agm = specfun.complete_K(0.5)
    k_quad, _ = quad(lambda t: 1.0 / math.sqrt(1.0 - 0.25 * math.sin(t) ** 2), 0.0, 0.5 * math.pi,
                     epsabs=1e-15, epsrel=1e-13)
    chk.add("|K_agm - K_quad|", abs(k_agm - k_quad), 1e-12)
    chk.add("|y(2 pi) - 2K(1/2)|", abs(extremal.y_of_theta(2 * math.pi) - 2 * k_agm), 1e-12)
    chk.add("|PERIOD - 2K(1/2)|", abs(extremal.PERIOD - 2 * k_agm), 1e-15, ok=extremal.PERIOD == 2 * k_agm)


@_timed(3, "closed form vs ODE", 1.0)
def check_closed_form(chk):
    a = extremal.PERIOD
    traj = systems.integrate_syst12(systems.P_EXTREMAL, a)
    chk.add("return to initial state", float(np.abs(traj.final_state - traj.states[0]).max()), 1e-8)
    ys = np.linspace(0.0, a, 100)
    s = traj(ys)
    _, phi1, phi2 = extremal.phi_closed_form(ys)
    chk.add("pointwise vs closed form", float(max(np.abs(s[:, 0] - phi1).max(), np.abs(s[:, 1] - phi2).max())), 1e-8)


def random_manifold_states(n: int, rng) -> np.ndarray:
    """States with |phi| = 1, phi . phi' = 0 and |phi'|^2 = phi1^2 + 4 phi2^2."""
    phi = rng.normal(size=(n, 3))
    phi /= np.linalg.norm(phi, axis=1, keepdims=True)
    d = rng.normal(size=(n, 3))
    d -= (d * phi).sum(1, keepdims=True) * phi
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    d *= np.sqrt(phi[:, 1] ** 2 + 4 * phi[:, 2] ** 2)[:, None]
    return np.hstack([phi, d])


@_timed(4, "first-integral conservation", 10.0)
def check_conservation(chk, tol: float = CONSERVATION_TOL):
    a = extremal.PERIOD
    for p in (0.1, 0.3, systems.P_EXTREMAL, 0.7, 0.95):
        y_end = 10 * a if p == systems.P_EXTREMAL else 30.0
        traj = systems.integrate_full(p, y_end, tol, tol)
        I = systems.integrals_of_states(traj.states)
        chk.add(f"drift p={p:.6g}", float(np.abs(I - I[0]).max()), 1e-9)
    states = random_manifold_states(1000, np.random.default_rng(20240601))
    worst = 0.0
    for s in states:
        fi = systems.first_integrals(systems.PhiState.from_vector(0.0, s))
        worst = max(worst, max(abs(v) for v in fi.relation_residuals().values()))
    chk.add("linear relations on random states", worst, 1e-10)


@_timed(5, "Sturm spectrum", 30.0)
def check_sturm(chk):
    spectra = {k: sturm.periodic_spectrum(k, None, 256, 6) for k in (0, 1, 2)}
    want_zeros = {0: 2, 1: 2, 2: 0}
    for k, lines in spectra.items():
        near = [ln for ln in lines if abs(ln.eigenvalue - 1.0) < 1e-3]
        err = min(abs(ln.eigenvalue - 1.0) for ln in near) if near else math.inf
        chk.add(f"k={k}: |lambda - 1|", err, 1e-8)
        zeros = near[0].zero_count if near else -1
        chk.add(f"k={k}: zeros at lambda=1", zeros, want_zeros[k], ok=zeros == want_zeros[k])
    rep = sturm.verify_multiplicity(256, 6)
    chk.add("Klein-bottle multiplicity", rep.multiplicity, 5, ok=rep.multiplicity == 5)
    chk.add("no admissible eigenvalue in (0, 1)", len(rep.below_one), 0, ok=not rep.below_one)

    def closest(k, target):
        return min((abs(ln.eigenvalue - target) for ln in spectra[k]))

    chk.add("|k=1 ground - 0.2517|", closest(1, 0.2517), 2e-2)
    chk.add("|k=0 odd - 0.7768|", closest(0, 0.7768), 2e-2)
    chk.add("|k=1 third - 1.31|", closest(1, 1.31), 2e-2)
    for k in (0, 1, 2):
        shift = sturm.convergence_shifts(k, (128, 256), 6)[0]
        chk.add(f"k={k}: shift n=128 -> 256", shift, 1e-8)


@_timed(6, "cot(alpha) sweep", 300.0)
def check_sweep(chk, workers: int = 4):
    rep = sweep.run_sweep(workers=workers)
    chk.add("failed grid points", rep.failures, 0, ok=rep.failures == 0)
    chk.add("sign changes of cot(alpha)", len(rep.sign_changes), 1, ok=len(rep.sign_changes) == 1)
    lo, hi = 0.6120, 0.6127
    ri, rb = rep.root_interpolated, rep.root_bisected
    chk.add("interpolated root in (0.6120, 0.6127)", ri, (lo, hi), ok=ri is not None and lo < ri < hi)
    chk.add("bisected root in (0.6120, 0.6127)", rb, (lo, hi), ok=rb is not None and lo < rb < hi)
    chk.add("monotonicity violations", rep.monotonicity_violations, 0, ok=rep.monotonicity_violations == 0)


@_timed(7, "upper interval rule-out", 10.0)
def check_upper(chk):
    for p in (0.87, 0.90, 0.95, 0.99):
        ev = sweep.rule_out_upper(p)
        chk.add(f"p={p}: E1 > 0 and E2 < 0", (ev.e1, ev.e2), "signs", ok=ev.signs_ok)
        chk.add(f"p={p}: phi2 zero before y=50", ev.phi2_zero_y, 50.0,
                ok=ev.phi2_zero_y is not None and ev.phi2_zero_y < 50.0)


@_timed(8, "lower interval structure", 10.0)
def check_lower(chk):
    for p in (0.1, 0.3, 0.5, 0.7, 0.8):
        ev = sweep.interval_checks(p)
        chk.add(f"p={p}: min|phi2| > 0", ev.min_abs_phi2, 0.0, ok=ev.min_abs_phi2 > 0)
        chk.add(f"p={p}: min|W| > 0", ev.min_abs_wronskian, 0.0, ok=ev.min_abs_wronskian > 0)
        chk.add(f"p={p}: rotation monotone", ev.rotation_sign, "+-1", ok=ev.rotation_sign != 0)


@_timed(9, "separatrix", 1.0)
def check_separatrix(chk):
    y = np.linspace(-5.0, 5.0, 2001)
    chk.add("ODE residual on [-5, 5]", float(systems.separatrix_residual(y).max()), 1e-8)
    phi0, phi1 = systems.separatrix_solution(10.0)
    chk.add("|phi0(10) + 1|", abs(phi0 + 1.0), 1e-4)
    chk.add("|phi1(10)|", abs(phi1), 1e-4)
    # theta(y) increases monotonically towards pi, so phi0 never comes back
    yy = np.linspace(0.0, 10.0, 4001)
    p0, _ = systems.separatrix_solution(yy)
    steps = np.diff(p0)
    chk.add("phi0 strictly decreasing on [0, 10]", float(steps.max()), 0.0)
    chk.add("no return to phi0(0)", float(p0[1:].max() - p0[0]), 0.0)


@_timed(10, "g0 identity", 10.0)
def check_geometry(chk):
    rep = geometry.verify_g0_scaling(64)
    chk.add("ghat0 = 2 g0 (64x64)", rep.max_rel_error, 1e-8)
    z = np.linspace(0.005, 0.5, 100)
    r1, r2 = geometry.wp_cn_identities(z)
    chk.add("cn^2 vs P(2z)", float(np.abs(r1).max()), 1e-9)
    chk.add("metric factor vs P(2z + K/2)", float(np.abs(r2).max()), 1e-9)


@_timed(11, "embedding", 5.0)
def check_embedding(chk):
    rng = np.random.default_rng(7)
    x = rng.uniform(0.0, math.pi, 1000)
    y = rng.uniform(-extremal.PERIOD, extremal.PERIOD, 1000)
    pts = extremal.embed_array(x, y)
    chk.add("unit norm", float(np.abs((pts ** 2).sum(-1) - 1.0).max()), 1e-10)
    chk.add("conformality (analytic)", float(extremal.conformality_defect(x, y).max()), 1e-8)
    chk.add("conformality (differences)", float(extremal.conformality_defect(x, y, h=1e-5).max()), 1e-8)
    chk.add("eigen-residual", float(extremal.eigen_residual(x, y).max()), 1e-8)


@_timed(12, "special functions", 1.0)
def check_specfun(chk):
    for label, value, bound in specfun_selftest():
        chk.add(label, value, bound)


def specfun_selftest():
    rng = np.random.default_rng(12)
    out = []
    ks = np.linspace(0.02, 0.98, 25)
    out.append(("Legendre relation", max(abs(specfun.legendre_relation_defect(k)) for k in ks), 1e-12))
    u = rng.uniform(-20, 20, 1000)
    worst = 0.0
    for k in rng.uniform(0, 0.999, 20):
        cn, sn, dn = specfun.jacobi_cn_sn_dn(u, k)
        worst = max(worst, np.abs(cn ** 2 + sn ** 2 - 1).max(), np.abs(dn ** 2 + k * k * sn ** 2 - 1).max(),
                    np.abs(dn ** 2 - k * k * cn ** 2 - (1 - k * k)).max())
    out.append(("Jacobi identities", float(worst), 1e-12))
    worst = 0.0
    for inv in (extremal.INV_PHI0, extremal.INV_PHI1, extremal.INV_PHI2):
        ys = np.linspace(0.05, inv.real_period - 0.05, 97)
        P, dP = specfun.weierstrass_p_and_derivative(ys, inv)
        res = np.abs(dP ** 2 - 4 * P ** 3 + inv.g2 * P + inv.g3) / (1 + np.abs(P) ** 3)
        worst = max(worst, res.max())
    out.append(("Weierstrass ODE residual", float(worst), 1e-9))
    kh, kc = specfun.complete_K(0.5), specfun.complete_K(2 * math.sqrt(2) / 3)
    out.append(("2K(1/2) = (4/3)K(2sqrt2/3)", abs(2 * kh - 4 * kc / 3), 1e-12))
    eh, ec = specfun.complete_E(0.5), specfun.complete_E(2 * math.sqrt(2) / 3)
    out.append(("6E(2sqrt2/3) = 8E(1/2) - 3K(1/2)", abs(6 * ec - (8 * eh - 3 * kh)), 1e-12))
    return out


CRITERIA = [check_lambda_area, check_period, check_closed_form, check_conservation, check_sturm,
            check_sweep, check_upper, check_lower, check_separatrix, check_geometry, check_embedding,
            check_specfun]


def run_all(only=None, workers: int = 4) -> list[Check]:
    out = []
    for fn in CRITERIA:
        if only and fn.number not in only:
            continue
        out.append(fn(workers=workers) if fn is check_sweep else fn())
    return out
