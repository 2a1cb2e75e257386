"""Levy measures on (0, inf): Laplace exponents, tilted cumulants and jump draws.

The concrete family is the generalized Gamma measure

    rho(du) = u**(-alpha-1) e^{-b u} du / Gamma(1 - alpha)

with ``0 < alpha < 1, b >= 0`` or ``alpha <= 0, b > 0``.  A family can also be
specified through the density of the infinitely divisible variable ``T``, in
which case the tilted cumulants come from the Thiele recursion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Protocol

import numpy as np
from scipy.special import gammainc, gammaln

from .numerics import (QuadratureConfig, as_generator, integrate_1d,
                       thiele_cumulants)

__all__ = [
    "GenGammaParams",
    "GenGammaFamily",
    "LevyFamily",
    "DensitySpecifiedFamily",
    "SingularTiltError",
    "gen_gamma_psi",
    "gen_gamma_tilted_cumulant",
    "density_family_cumulants",
    "sample_jumps",
    "JumpDraw",
]


class SingularTiltError(ZeroDivisionError):
    """``b + s == 0``: the tilted cumulants do not exist."""


@dataclass(frozen=True)
class GenGammaParams:
    alpha: float
    b: float

    def __post_init__(self):
        a, b = float(self.alpha), float(self.b)
        ok = (0.0 < a < 1.0 and b >= 0.0) or (a <= 0.0 and b > 0.0)
        if not ok or not (math.isfinite(a) and math.isfinite(b)):
            raise ValueError(
                f"invalid generalized Gamma parameters alpha={a}, b={b}: need "
                "0 < alpha < 1 with b >= 0, or alpha <= 0 with b > 0")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "b", b)


def gen_gamma_psi(p: GenGammaParams, s):
    """``((b+s)**alpha - b**alpha)/alpha``; ``log(1 + s/b)`` at ``alpha = 0``."""
    s = np.asarray(s, dtype=float)
    a, b = p.alpha, p.b
    if a == 0.0:
        out = np.log1p(s / b)
    elif b == 0.0:
        out = s ** a / a
    else:
        # b**a * expm1(a*log1p(s/b)) / a keeps precision for small s and a
        out = b ** a * np.expm1(a * np.log1p(s / b)) / a
    return out[()] if out.ndim == 0 else out


def _log_kappa(p: GenGammaParams, l, s):
    s = np.asarray(s, dtype=float)
    base = p.b + s
    if np.any(base <= 0):
        raise SingularTiltError("b + s must be positive for tilted cumulants")
    l = np.asarray(l, dtype=float)
    return gammaln(l - p.alpha) - gammaln(1 - p.alpha) - (l - p.alpha) * np.log(base)


def gen_gamma_tilted_cumulant(p: GenGammaParams, l: int, s):
    """``int u**l e^{-s u} rho(du) = Gamma(l-alpha)/Gamma(1-alpha) (b+s)**(alpha-l)``."""
    if int(l) != l or l < 1:
        raise ValueError("l must be a positive integer")
    out = np.exp(_log_kappa(p, l, s))
    return out[()] if np.ndim(out) == 0 else out


class LevyFamily(Protocol):
    def psi(self, s): ...
    def tilted_cumulant(self, l: int, s): ...
    def log_tilted_cumulant(self, l, s): ...
    def rho_logdensity(self, u): ...
    def finite_mass(self) -> Optional[float]: ...


@dataclass(frozen=True)
class JumpDraw:
    """Jumps ``(u, y)`` plus the expected mass ``int_0^eps u rho(du) * int eta``
    of the jumps left out by truncation (zero for exact draws)."""

    sizes: np.ndarray
    locations: np.ndarray
    neglected_mass: float = 0.0

    def __len__(self):
        return len(self.sizes)

    def __iter__(self):
        return iter(zip(self.sizes, self.locations))


class GenGammaFamily:
    """Generalized Gamma Levy measure with closed-form exponent and cumulants."""

    def __init__(self, alpha: float, b: float):
        self.params = GenGammaParams(alpha, b)

    @property
    def alpha(self):
        return self.params.alpha

    @property
    def b(self):
        return self.params.b

    def __repr__(self):
        return f"GenGammaFamily(alpha={self.alpha}, b={self.b})"

    def psi(self, s):
        return gen_gamma_psi(self.params, s)

    def tilted_cumulant(self, l, s):
        return gen_gamma_tilted_cumulant(self.params, l, s)

    def log_tilted_cumulant(self, l, s):
        return _log_kappa(self.params, l, s)

    def rho_logdensity(self, u):
        u = np.asarray(u, dtype=float)
        return (-self.alpha - 1) * np.log(u) - self.b * u - gammaln(1 - self.alpha)

    def finite_mass(self) -> Optional[float]:
        if self.alpha < 0:
            return self.b ** self.alpha / (-self.alpha)
        return None

    def neglected_mean_mass(self, eps: float) -> float:
        """``int_0^eps u rho(du)``."""
        a, b = self.alpha, self.b
        if b == 0.0:
            return eps ** (1 - a) / math.gamma(2 - a)
        return b ** (a - 1) * float(gammainc(1 - a, b * eps))

    def truncation_for(self, tol: float) -> float:
        """Largest power of ten ``eps`` whose neglected mean mass is below ``tol``."""
        eps = 1.0
        while self.neglected_mean_mass(eps) >= tol:
            eps /= 10.0
            if eps < 1e-300:
                raise ValueError("no truncation level reaches the tolerance")
        return eps

    def mass_above(self, eps: float, cfg: QuadratureConfig | None = None) -> float:
        """``rho([eps, inf))`` by quadrature in ``x = log(u/eps)``."""
        a, b = self.alpha, self.b
        if b == 0.0:
            return eps ** (-a) / (a * math.gamma(1 - a))
        lg = math.lgamma(1 - a)

        def f(x):
            return np.exp(-a * (math.log(eps) + x) - b * eps * np.exp(x) - lg)

        return integrate_1d(f, 0.0, math.inf, cfg, singular=None, scale=max(1.0, -math.log(b * eps)))

    def sample_sizes(self, count: int, eps: float, rng) -> np.ndarray:
        """``count`` i.i.d. draws from ``rho`` restricted to ``[eps, inf)`` and
        normalised (the whole of ``rho`` when the mass is finite)."""
        gen = as_generator(rng)
        a, b = self.alpha, self.b
        if a < 0:
            return gen.gamma(-a, 1.0 / b, size=count)
        if b == 0.0:
            raise NotImplementedError("jump simulation for b = 0 (stable case) is not supported")
        return _truncated_sizes(a, b, eps, count, gen)


def _truncated_sizes(a, b, eps, count, gen):
    # power-law envelope on [eps, c] and shifted exponential beyond c = 1/b
    c = max(eps, 1.0 / b)
    if c > eps:
        if a == 0.0:
            m1 = math.log(c / eps)
        else:
            m1 = (eps ** -a - c ** -a) / a
        m1 *= math.exp(-b * eps)
    else:
        m1 = 0.0
    m2 = c ** (-a - 1) * math.exp(-b * c) / b
    out = np.empty(count)
    filled = 0
    while filled < count:
        k = max(16, 2 * (count - filled))
        left = gen.random(k) < m1 / (m1 + m2)
        u = np.empty(k)
        r = gen.random(k)
        nl = int(left.sum())
        if nl:
            if a == 0.0:
                u[left] = eps * (c / eps) ** r[left]
            else:
                lo, hi = eps ** -a, c ** -a
                u[left] = (lo - r[left] * (lo - hi)) ** (-1.0 / a)
        if k - nl:
            u[~left] = c + gen.exponential(1.0 / b, size=k - nl)
        acc = gen.random(k)
        ratio = np.where(left, np.exp(-b * (u - eps)), (u / c) ** (-a - 1))
        keep = u[acc < ratio]
        take = min(len(keep), count - filled)
        out[filled:filled + take] = keep[:take]
        filled += take
    return out


class DensitySpecifiedFamily:
    """Levy family known only through the density ``f_T`` of ``T``.

    ``psi(s) = -log int e^{-st} f_T(t) dt`` and the tilted cumulants are the
    Thiele transform of the moments of ``e^{-st} f_T(t) e^{psi(s)}``.
    ``scale`` is a rough size of ``T`` used to place quadrature panels.
    """

    def __init__(self, log_f_t: Callable[[np.ndarray], np.ndarray], scale: float = 1.0,
                 cfg: QuadratureConfig | None = None, check: bool = True):
        self.log_f_t = log_f_t
        self.scale = float(scale)
        self.cfg = cfg
        if check:
            total = self._raw_moment(0, 0.0)
            if abs(total - 1.0) > 1e-6:
                raise ValueError(f"f_T integrates to {total}, not 1")

    def _raw_moment(self, l: int, s: float, cfg=None) -> float:
        def f(t):
            with np.errstate(divide="ignore"):
                return np.exp(self.log_f_t(t) - s * t + l * np.log(t))

        return integrate_1d(f, 0.0, math.inf, cfg or self.cfg, singular="a", scale=self.scale)

    def psi(self, s):
        return -math.log(self._raw_moment(0, float(s)))

    def tilted_moments(self, s: float, L: int, cfg=None) -> np.ndarray:
        cfg = cfg or self.cfg
        z = self._raw_moment(0, s, cfg)
        return np.array([self._raw_moment(l, s, cfg) / z for l in range(1, L + 1)])

    def tilted_cumulant(self, l: int, s):
        return float(density_family_cumulants(self, s, l)[l - 1])

    def log_tilted_cumulant(self, l, s):
        return math.log(self.tilted_cumulant(int(l), float(s)))

    def finite_mass(self):
        return None


def density_family_cumulants(fam: DensitySpecifiedFamily, s: float, L: int,
                             cfg: QuadratureConfig | None = None) -> np.ndarray:
    """Tilted cumulants ``kappa_1..kappa_L`` at tilt ``s`` via Thiele."""
    if L < 1:
        raise ValueError("L must be >= 1")
    return thiele_cumulants(fam.tilted_moments(float(s), int(L), cfg))


def _location_sampler(window, eta_density, cfg):
    lo, hi = window
    if eta_density is None:
        return (hi - lo), lambda gen, k: lo + (hi - lo) * gen.random(k)
    if math.isinf(lo) or math.isinf(hi):
        raise ValueError("an unbounded window needs a finite eta integral; pass finite bounds")
    grid = np.linspace(lo, hi, 4097)
    dens = np.asarray(eta_density(grid), dtype=float)
    if np.any(dens < 0):
        raise ValueError("eta density must be non-negative")
    total = integrate_1d(eta_density, lo, hi, cfg, singular=None)
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(grid))])

    def draw(gen, k):
        return np.interp(gen.random(k) * cdf[-1], cdf, grid)

    return total, draw


def sample_jumps(fam: GenGammaFamily, window: tuple, eta_density=None, trunc_eps: float = 1e-8,
                 rng=None, cfg: QuadratureConfig | None = None) -> JumpDraw:
    """Jumps of the Poisson random measure with intensity ``rho(du) eta(y) dy``.

    Exact for finite mass (``alpha < 0``).  Otherwise all jumps with
    ``u >= trunc_eps`` are drawn exactly and the expected mass of the rest is
    reported.  ``eta_density=None`` means the constant density one.
    """
    gen = as_generator(rng)
    lo, hi = float(window[0]), float(window[1])
    if math.isinf(lo) or math.isinf(hi):
        raise ValueError("window must be bounded")
    if not trunc_eps > 0:
        raise ValueError("trunc_eps must be positive")
    if hi <= lo:
        return JumpDraw(np.empty(0), np.empty(0), 0.0)
    eta_mass, draw_loc = _location_sampler((lo, hi), eta_density, cfg)
    fm = fam.finite_mass()
    if fm is not None:
        mass, neglected = fm, 0.0
    else:
        mass = fam.mass_above(trunc_eps, cfg)
        neglected = fam.neglected_mean_mass(trunc_eps) * eta_mass
    count = gen.poisson(mass * eta_mass)
    sizes = fam.sample_sizes(count, trunc_eps, gen)
    locs = draw_loc(gen, count)
    return JumpDraw(sizes, locs, neglected)
