"""Steady-state order parameter from the self-consistency conditions.

With w = -Delta + i r the two conditions read G(w) = e^{i theta0} / r0 where
G(w) = int p(Omega) / (Omega - w) dOmega.  Explicitly

    r   int p / ((Omega + Delta)^2 + r^2)               = sin(theta0) / r0
        int p (Omega + Delta) / ((Omega + Delta)^2 + r^2) = cos(theta0) / r0

and r^2 is the time-averaged coherence.  Uniform and Gaussian integrals use
adaptive quadrature; the Lorentzian ones are evaluated in closed form.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import integrate, optimize, special

from .disorder import SQRT3, Family, FrequencyDistribution
from .errors import ConvergenceFailure, InsufficientData, NoTransition, ValidationError

R_TOL = 1e-6
RESIDUAL_TOL = 1e-8
QUAD_EPSREL = 1e-10
GAUSS_CUTOFF = 12.0


class Phase(str, Enum):
    SUPERCOHERENT = "supercoherent"
    DECOHERENT = "decoherent"


@dataclass(frozen=True)
class SelfConsistentSolution:
    r: float
    delta: float
    phase: Phase
    residual: tuple
    sigma: float = float("nan")
    iterations: int = 0

    @property
    def eta_bar(self):
        return self.r * self.r

    def as_dict(self):
        return {"r": self.r, "delta": self.delta, "phase": self.phase.value, "eta_bar": self.eta_bar,
                "residual": list(self.residual), "sigma": self.sigma, "iterations": self.iterations}


def _check_state(theta0, r0):
    if not 0.0 < r0 <= 1.0:
        raise ValidationError(f"r0 must lie in (0, 1], got {r0}")
    if not 0.0 < theta0 < np.pi:
        raise ValidationError(f"theta0 must lie in (0, pi), got {theta0}")


def _quad(f, lo, hi, points):
    cuts = [lo] + sorted(p for p in set(points) if lo < p < hi) + [hi]
    total = 0.0
    with warnings.catch_warnings():
        # tiny r makes the integrand a narrow spike; accuracy is judged by the residual
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for a, b in zip(cuts[:-1], cuts[1:]):
            val, _ = integrate.quad(f, a, b, epsabs=1e-14, epsrel=QUAD_EPSREL, limit=400)
            total += val
    return total


def integrals(dist, delta, r):
    """(first, second): the two left-hand sides, i.e. (Im G, Re G)."""
    s = dist.sigma
    if s == 0:
        d2 = delta * delta + r * r
        return r / d2, delta / d2
    if dist.family is Family.LORENTZIAN:
        width = s + r
        d2 = delta * delta + width * width
        return width / d2, delta / d2
    if dist.family is Family.UNIFORM:
        a = dist.half_width
        lo, hi = -a, a
        dens = 1.0 / (2.0 * a)
        p = lambda x: dens
    else:
        lo, hi = -GAUSS_CUTOFF * s, GAUSS_CUTOFF * s
        norm = 1.0 / (s * np.sqrt(2.0 * np.pi))
        p = lambda x: norm * np.exp(-0.5 * (x / s) ** 2)
    c = -delta
    pts = [c - 20.0 * r, c - r, c, c + r, c + 20.0 * r]
    first = _quad(lambda x: p(x) * r / ((x - c) ** 2 + r * r), lo, hi, pts)
    second = _quad(lambda x: p(x) * (x - c) / ((x - c) ** 2 + r * r), lo, hi, pts)
    return first, second


def residuals(dist, r, delta, theta0, r0):
    first, second = integrals(dist, delta, r)
    return np.array([first - np.sin(theta0) / r0, second - np.cos(theta0) / r0])


def _jacobian(dist, r, delta, theta0, r0):
    h_r = 1e-5 * max(r, 1e-3)
    h_r = min(h_r, 0.5 * r)
    h_d = 1e-5 * max(1.0, abs(delta))
    jr = (residuals(dist, r + h_r, delta, theta0, r0) - residuals(dist, r - h_r, delta, theta0, r0)) / (2 * h_r)
    jd = (residuals(dist, r, delta + h_d, theta0, r0) - residuals(dist, r, delta - h_d, theta0, r0)) / (2 * h_d)
    return np.column_stack([jr, jd])


def _newton(dist, theta0, r0, r, delta, max_iter=60):
    """Damped Newton on (r, Delta) keeping r > 0; returns (r, delta, res, iters, ok)."""
    res = residuals(dist, r, delta, theta0, r0)
    norm = np.max(np.abs(res))
    for it in range(1, max_iter + 1):
        if norm < RESIDUAL_TOL:
            return r, delta, res, it - 1, True
        try:
            step = np.linalg.solve(_jacobian(dist, r, delta, theta0, r0), -res)
        except np.linalg.LinAlgError:
            return r, delta, res, it, False
        if not np.all(np.isfinite(step)):
            return r, delta, res, it, False
        lam = 1.0
        if r + step[0] <= 0:
            lam = min(lam, 0.9 * r / -step[0])
        accepted = False
        while lam > 1e-6:
            r_new, d_new = r + lam * step[0], delta + lam * step[1]
            res_new = residuals(dist, r_new, d_new, theta0, r0)
            new_norm = np.max(np.abs(res_new))
            if new_norm < (1.0 - 1e-4 * lam) * norm:
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            return r, delta, res, it, False
        r, delta, res, norm = r_new, d_new, res_new, new_norm
        if r < 1e-14:
            return r, delta, res, it, False
    return r, delta, res, max_iter, norm < RESIDUAL_TOL


def solve_selfconsistent(dist, theta0=np.pi / 2, r0=1.0, initial_guess=None, continuation_steps=24):
    """Find the supercoherent root (r > 0, Delta) or report the decoherent phase.

    Newton starts from the zero-disorder root (r0 sin theta0, r0 cos theta0)
    (and from Delta = 0); if both fail, the root is tracked by continuation in
    sigma from zero disorder.  A missing root is called decoherent only when
    sigma is at or beyond the boundary predicted by the r -> 0 limit;
    otherwise ConvergenceFailure is raised.
    """
    _check_state(theta0, r0)
    sigma = dist.sigma
    guesses = []
    if initial_guess is not None:
        guesses.append(tuple(initial_guess))
    guesses += [(r0 * np.sin(theta0), r0 * np.cos(theta0)), (r0 * np.sin(theta0), 0.0)]
    best = None
    for rg, dg in guesses:
        r, d, res, its, ok = _newton(dist, theta0, r0, max(rg, 1e-8), dg)
        if ok:
            return _classify(r, d, res, sigma, its)
        if best is None or np.max(np.abs(res)) < np.max(np.abs(best[2])):
            best = (r, d, res, its)

    # continuation in sigma from the exact zero-disorder root
    r, d = r0 * np.sin(theta0), r0 * np.cos(theta0)
    total = 0
    for k in range(1, continuation_steps + 1):
        sub = dist.with_sigma(sigma * k / continuation_steps)
        r, d, res, its, ok = _newton(sub, theta0, r0, r, d)
        total += its
        if not ok or r < R_TOL:
            break
    else:
        return _classify(r, d, res, sigma, total)

    boundary = critical_sigma_limit(dist.family, theta0, r0)
    if sigma >= boundary * (1.0 - 1e-6) or r < R_TOL:
        return SelfConsistentSolution(0.0, float("nan"), Phase.DECOHERENT, tuple(best[2]), sigma, total)
    raise ConvergenceFailure(
        f"no root found for {dist.family.value} sigma={sigma} although the r->0 boundary is at {boundary:.6g}"
    )


def _classify(r, delta, res, sigma, iterations):
    if r > R_TOL:
        return SelfConsistentSolution(float(r), float(delta), Phase.SUPERCOHERENT, tuple(float(v) for v in res),
                                      sigma, iterations)
    return SelfConsistentSolution(0.0, float(delta), Phase.DECOHERENT, tuple(float(v) for v in res), sigma, iterations)


# --- critical disorder -------------------------------------------------------


def _unit_pv(family, u):
    """Principal value PV int p_1(v) / (v + u) dv for the unit-width distribution."""
    if family is Family.LORENTZIAN:
        return u / (1.0 + u * u)
    if family is Family.UNIFORM:
        lo, hi, dens = -SQRT3, SQRT3, 1.0 / (2.0 * SQRT3)
        f = lambda v: dens
    else:
        lo, hi = -GAUSS_CUTOFF, GAUSS_CUTOFF
        f = lambda v: np.exp(-0.5 * v * v) / np.sqrt(2.0 * np.pi)
    if not lo < -u < hi:
        val, _ = integrate.quad(lambda v: f(v) / (v + u), lo, hi, epsabs=1e-14, epsrel=1e-12, limit=400)
        return val
    val, _ = integrate.quad(f, lo, hi, weight="cauchy", wvar=-u, epsabs=1e-14, epsrel=1e-12, limit=400)
    return val


def _unit_density(family, u):
    return FrequencyDistribution(family, 1.0).pdf(-u)


def critical_sigma_limit(family, theta0=np.pi / 2, r0=1.0):
    """Boundary from the r -> 0 limit of the self-consistency conditions.

    With u = Delta/sigma, the PV condition fixes u through
    PV(u) / (pi p_1(-u)) = cot(theta0), then pi p_1(-u) / sigma = sin(theta0) / r0.
    """
    family = Family.parse(family)
    _check_state(theta0, r0)
    target = np.cos(theta0) / np.sin(theta0)
    if family is Family.UNIFORM:
        edge = SQRT3 * (1.0 - 1e-12)
        lo, hi = -edge, edge
    else:
        lo, hi = -1.0, 1.0
        ratio = lambda u: _unit_pv(family, u) / (np.pi * _unit_density(family, u))
        while ratio(lo) > target:
            lo *= 2.0
        while ratio(hi) < target:
            hi *= 2.0

    def ratio(u):
        return _unit_pv(family, u) / (np.pi * _unit_density(family, u)) - target

    f_lo, f_hi = ratio(lo), ratio(hi)
    if f_lo > 0 or f_hi < 0:
        # root closer to the uniform band edge than double precision resolves;
        # the density is flat there so the edge gives the same boundary
        u = lo if f_lo > 0 else hi
    else:
        u = optimize.brentq(ratio, lo, hi, xtol=1e-14, rtol=1e-14, maxiter=500)
    return float(np.pi * _unit_density(family, u) * r0 / np.sin(theta0))


def critical_sigma(family, theta0=np.pi / 2, r0=1.0, tol=1e-6):
    """Bisection in sigma on the existence of a supercoherent root.

    Cross-checked against :func:`critical_sigma_limit`; the bisection bracket
    starts around that estimate and widens to (1e-4, 1e3) if needed.
    """
    family = Family.parse(family)
    _check_state(theta0, r0)
    estimate = critical_sigma_limit(family, theta0, r0)
    cache = {}

    def supercoherent(s):
        if s not in cache:
            guess = None
            below = [k for k in cache if k < s and cache[k][0]]
            if below:
                guess = cache[max(below)][1]
            sol = solve_selfconsistent(FrequencyDistribution(family, s), theta0, r0, initial_guess=guess)
            cache[s] = (sol.phase is Phase.SUPERCOHERENT, (sol.r, sol.delta))
        return cache[s][0]

    lo, hi = estimate * 0.95, estimate * 1.05
    if not supercoherent(lo):
        lo = 1e-4
    if supercoherent(hi):
        hi = 1e3
    if not supercoherent(lo) or supercoherent(hi):
        raise NoTransition(f"no phase boundary bracketed for {family.value} in sigma in (1e-4, 1e3)")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if supercoherent(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# --- closed forms ----------------------------------------------------------


def erfi_inv(y, tol=1e-15):
    """Inverse imaginary error function by bracketing bisection then Newton."""
    y = float(y)
    if y == 0:
        return 0.0
    sign = 1.0 if y > 0 else -1.0
    y = abs(y)
    hi = 1.0
    while special.erfi(hi) < y:
        hi *= 2.0
    lo = 0.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if special.erfi(mid) < y:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-3:
            break
    x = 0.5 * (lo + hi)
    for _ in range(50):
        step = (special.erfi(x) - y) / (2.0 / np.sqrt(np.pi) * np.exp(x * x))
        x -= step
        if abs(step) < tol * max(1.0, abs(x)):
            break
    return sign * x


def uniform_closed_form(sigma, theta0=np.pi / 2, r0=1.0):
    """Exact (r, Delta) for the uniform distribution, or (0, nan) past the boundary.

    Solving G(w) = e^{i theta0}/r0 with the logarithmic uniform G gives
    w = -a coth(a e^{i theta0} / r0), a = sqrt(3) sigma.  At theta0 = pi/2
    this is r = a cot(a / r0).
    """
    a = SQRT3 * sigma
    if a == 0:
        return r0 * np.sin(theta0), r0 * np.cos(theta0)
    alpha = a * np.cos(theta0) / r0
    beta = a * np.sin(theta0) / r0
    if beta >= np.pi / 2:
        return 0.0, float("nan")
    denom = 2.0 * (np.sinh(alpha) ** 2 + np.sin(beta) ** 2)  # cosh 2a - cos 2b without cancellation
    r = a * np.sin(2 * beta) / denom
    delta = a * np.sinh(2 * alpha) / denom
    return float(r), float(delta)


def table1_closed_forms(family, sigma, theta0=np.pi / 2, r0=1.0):
    """(sigma_c, eta_bar) from the analytic results for each family.

    Gaussian eta_bar has no closed form and is obtained from the solver.
    """
    family = Family.parse(family)
    _check_state(theta0, r0)
    s_t = np.sin(theta0)
    if family is Family.UNIFORM:
        sigma_c = np.pi * r0 / (2.0 * SQRT3 * s_t)
        if sigma >= sigma_c:
            return sigma_c, 0.0
        r, _ = uniform_closed_form(sigma, theta0, r0)
        return sigma_c, r * r
    if family is Family.LORENTZIAN:
        sigma_c = r0 * s_t
        return sigma_c, (sigma_c - sigma) ** 2 if sigma < sigma_c else 0.0
    q = erfi_inv(np.cos(theta0) / s_t)
    sigma_c = np.sqrt(np.pi / 2.0) * (r0 / s_t) * np.exp(-q * q)
    if sigma >= sigma_c:
        return sigma_c, 0.0
    sol = solve_selfconsistent(FrequencyDistribution(family, sigma), theta0, r0)
    return sigma_c, sol.eta_bar


def analytic_all_to_all(sigma):
    """(E_gap, eta_bar/eta(0)) for uniform disorder and all-to-all coupling.

    E_gap = x (coth x - 1) = 2x / (e^{2x} - 1) and eta_bar/eta(0) = (x / sinh x)^4
    with x = sqrt(3) sigma.
    """
    x = SQRT3 * float(sigma)
    if x == 0:
        return 1.0, 1.0
    gap = 2.0 * x / np.expm1(2.0 * x)
    rel = (x / np.sinh(x)) ** 4
    return float(gap), float(rel)


def fit_critical_exponent(curve, sigma_c, window=(0.8, 0.99), min_points=5):
    """Least-squares slope of log eta_bar against log(sigma_c - sigma)."""
    pts = np.asarray(curve, dtype=float).reshape(-1, 2)
    s, e = pts[:, 0], pts[:, 1]
    mask = (s >= window[0] * sigma_c) & (s <= window[1] * sigma_c) & (s < sigma_c) & (e > 0)
    if mask.sum() < min_points:
        raise InsufficientData(f"need {min_points} points with eta_bar > 0 in the fit window, got {int(mask.sum())}")
    x = np.log(sigma_c - s[mask])
    y = np.log(e[mask])
    if np.ptp(y) < 1e-12:
        raise InsufficientData("eta_bar is constant over the fit window; no power law to fit")
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)
