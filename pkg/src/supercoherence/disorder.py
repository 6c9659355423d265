"""Frequency disorder: distributions, realizations and the free-decay baseline.

All frequencies are rotating-frame detunings in units of the mean coupling
strength J.  ``sigma`` is the standard deviation for the uniform and Gaussian
families and the half width at half maximum for the Lorentzian (whose
variance does not exist).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import integrate, special

from .errors import ValidationError

SQRT3 = np.sqrt(3.0)


class Family(str, Enum):
    UNIFORM = "uniform"
    GAUSSIAN = "gaussian"
    LORENTZIAN = "lorentzian"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {"lorentz": "lorentzian", "cauchy": "lorentzian", "normal": "gaussian", "gauss": "gaussian"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ValidationError(f"unknown distribution family {value!r}") from None


class Scheme(str, Enum):
    IID = "iid"
    STRATIFIED = "stratified"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValidationError(f"unknown sampling scheme {value!r}") from None


@dataclass(frozen=True)
class FrequencyDistribution:
    family: Family
    sigma: float

    def __post_init__(self):
        object.__setattr__(self, "family", Family.parse(self.family))
        sigma = float(self.sigma)
        if not np.isfinite(sigma) or sigma < 0:
            raise ValidationError(f"sigma must be a nonnegative finite number, got {self.sigma!r}")
        object.__setattr__(self, "sigma", sigma)

    @property
    def half_width(self):
        """Half width of the uniform support, sqrt(3)*sigma."""
        return SQRT3 * self.sigma

    def support(self):
        if self.family is Family.UNIFORM:
            return -self.half_width, self.half_width
        if self.family is Family.GAUSSIAN:
            # truncation used by every quadrature in the package
            return -12.0 * self.sigma, 12.0 * self.sigma
        return -np.inf, np.inf

    def pdf(self, omega):
        return pdf(self, omega)

    def quantile(self, u):
        """Inverse CDF on (0, 1)."""
        u = np.asarray(u, dtype=float)
        s = self.sigma
        if self.family is Family.UNIFORM:
            return self.half_width * (2.0 * u - 1.0)
        if self.family is Family.GAUSSIAN:
            return s * special.ndtri(u)
        return s * np.tan(np.pi * (u - 0.5))

    def characteristic(self, t):
        """E[exp(i Omega t)], real because every family is symmetric."""
        t = np.abs(np.asarray(t, dtype=float))
        s = self.sigma
        if self.family is Family.UNIFORM:
            return np.sinc(self.half_width * t / np.pi)
        if self.family is Family.GAUSSIAN:
            return np.exp(-0.5 * (s * t) ** 2)
        return np.exp(-s * t)

    def normalization(self):
        """Integral of the pdf over its support by adaptive quadrature."""
        if self.sigma == 0:
            return 1.0
        if self.family is Family.LORENTZIAN:
            f = lambda x: pdf(self, x)
            left, _ = integrate.quad(f, -np.inf, 0.0, epsabs=1e-13, epsrel=1e-12)
            right, _ = integrate.quad(f, 0.0, np.inf, epsabs=1e-13, epsrel=1e-12)
            return left + right
        lo, hi = self.support()
        val, _ = integrate.quad(lambda x: pdf(self, x), lo, hi, epsabs=1e-13, epsrel=1e-12, limit=200)
        return val

    def with_sigma(self, sigma):
        return FrequencyDistribution(self.family, sigma)


def pdf(dist, omega):
    """Probability density p_sigma(omega); zero outside the uniform support."""
    omega = np.asarray(omega, dtype=float)
    s = dist.sigma
    if s == 0:
        raise ValidationError("the density of a zero-width distribution is a delta function")
    if dist.family is Family.UNIFORM:
        a = dist.half_width
        out = np.where(np.abs(omega) <= a, 1.0 / (2.0 * a), 0.0)
    elif dist.family is Family.GAUSSIAN:
        out = np.exp(-0.5 * (omega / s) ** 2) / (s * np.sqrt(2.0 * np.pi))
    else:
        out = (s / np.pi) / (omega**2 + s**2)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class DisorderRealization:
    omegas: np.ndarray
    distribution: FrequencyDistribution
    scheme: Scheme
    seed: int | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        arr = np.array(self.omegas, dtype=float)
        if arr.ndim != 1 or arr.size < 2:
            raise ValidationError("a disorder realization needs at least two frequencies")
        arr.setflags(write=False)
        object.__setattr__(self, "omegas", arr)

    @property
    def n(self):
        return self.omegas.size

    def __len__(self):
        return self.omegas.size

    def negated(self):
        """Same realization with every detuning flipped, used for sign-inversion checks."""
        return DisorderRealization(-self.omegas, self.distribution, self.scheme, self.seed, dict(self.meta))

    def describe(self):
        return {
            "family": self.distribution.family.value,
            "sigma": self.distribution.sigma,
            "n": self.n,
            "scheme": self.scheme.value,
            "seed": self.seed,
        }


def sample(dist, n, scheme=Scheme.STRATIFIED, seed=None):
    """Draw ``n`` detunings and recenter them to zero mean.

    The stratified scheme places Omega_i at the (i - 1/2)/n quantiles and is a
    deterministic function of (dist, n).  The IID scheme needs a seed.
    """
    scheme = Scheme.parse(scheme)
    n = int(n)
    if n < 2:
        raise ValidationError(f"need n >= 2 spins, got {n}")
    if dist.sigma == 0:
        omegas = np.zeros(n)
    elif scheme is Scheme.STRATIFIED:
        u = (np.arange(1, n + 1) - 0.5) / n
        omegas = np.sort(dist.quantile(u))
    else:
        if seed is None:
            raise ValidationError("IID sampling requires an explicit seed")
        rng = np.random.default_rng(int(seed))
        s = dist.sigma
        if dist.family is Family.UNIFORM:
            omegas = rng.uniform(-dist.half_width, dist.half_width, size=n)
        elif dist.family is Family.GAUSSIAN:
            omegas = rng.normal(0.0, s, size=n)
        else:
            omegas = s * rng.standard_cauchy(size=n)
    omegas = omegas - omegas.mean()
    # a second pass removes the rounding left by the first
    omegas = omegas - omegas.mean()
    return DisorderRealization(omegas, dist, scheme, None if scheme is Scheme.STRATIFIED else int(seed))


def from_values(omegas, dist=None):
    """Wrap user-supplied detunings (recentered) as a realization."""
    omegas = np.asarray(omegas, dtype=float)
    omegas = omegas - omegas.mean()
    if dist is None:
        dist = FrequencyDistribution(Family.UNIFORM, float(np.std(omegas)))
    return DisorderRealization(omegas, dist, Scheme.STRATIFIED, None, {"source": "values"})


def free_decay(dist, eta0, t):
    """Coherence of non-interacting spins: eta0 * |characteristic function|^2.

    uniform: eta0 sinc^2(sqrt(3) sigma t); Gaussian: eta0 exp(-sigma^2 t^2);
    Lorentzian: eta0 exp(-2 sigma t).
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValidationError("free_decay is defined for t >= 0")
    out = eta0 * dist.characteristic(t) ** 2
    return out if out.ndim else float(out)
