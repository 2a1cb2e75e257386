"""Synthetic data: jump field of the driving process, integrated-volatility
increments through the OU kernel, and returns with known latents."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .distributions import ReturnParams
from .levy import GenGammaFamily, GenGammaParams, JumpDraw, sample_jumps
from .numerics import RandomSource, as_generator
from .ou_kernel import OuKernel

__all__ = ["SimConfig", "SimOutput", "simulate_bdlp", "simulate_dataset"]


@dataclass(frozen=True)
class SimConfig:
    """Simulation settings.  ``t0=None`` picks the tail window so that the
    neglected stationary mean ``e^{-t0} kappa_1`` equals ``tail_tol``."""

    n: int = 100
    delta: float = 1.0
    lam: float = 1.0
    alpha: float = -1.0
    b: float = 1.0
    mu: float = 0.0
    betas: tuple = (0.0,)
    exponents: tuple = (0.5, 1.0)
    t0: Optional[float] = None
    trunc_eps: float = 1e-8
    tail_tol: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        GenGammaParams(self.alpha, self.b)
        if self.b == 0.0:
            raise ValueError("simulation needs b > 0 (the stable case has infinite mean)")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("n must be a positive integer")
        if not (self.delta > 0 and self.lam > 0):
            raise ValueError("delta and lam must be positive")
        if len(self.betas) != len(self.exponents) - 1:
            raise ValueError("need one beta per non-leading exponent")
        if self.t0 is not None and not self.t0 > 0:
            raise ValueError("t0 must be positive")
        if not (self.trunc_eps > 0 and self.tail_tol > 0):
            raise ValueError("trunc_eps and tail_tol must be positive")

    @property
    def family(self) -> GenGammaFamily:
        return GenGammaFamily(self.alpha, self.b)

    @property
    def return_params(self) -> ReturnParams:
        return ReturnParams(mu=self.mu, dt=self.delta, exponents=tuple(self.exponents),
                            betas=tuple(self.betas))

    def kernel(self) -> OuKernel:
        return OuKernel(self.lam, self.delta, self.n, self.family)

    @property
    def kappa1(self) -> float:
        return float(self.family.tilted_cumulant(1, 0.0))

    @property
    def tail_window(self) -> float:
        if self.t0 is not None:
            return float(self.t0)
        return max(1.0, math.log(self.kappa1 / self.tail_tol))

    @property
    def tail_residual(self) -> float:
        """Stationary mean of ``v_0`` left out by the finite window."""
        return math.exp(-self.tail_window) * self.kappa1


@dataclass
class SimOutput:
    x: np.ndarray
    tau: np.ndarray
    z: np.ndarray
    jumps: JumpDraw
    v0: float
    tail_residual: float
    neglected_mass: float
    config: SimConfig = field(repr=False, default=None)


def simulate_bdlp(cfg: SimConfig, rng=None) -> JumpDraw:
    """Jumps on ``(-t0, n delta]``; exact when ``alpha < 0``."""
    gen = as_generator(rng if rng is not None else RandomSource(cfg.seed))
    window = (-cfg.tail_window, cfg.n * cfg.delta)
    return sample_jumps(cfg.family, window, trunc_eps=cfg.trunc_eps, rng=gen)


def simulate_dataset(cfg: SimConfig, rng=None) -> SimOutput:
    """Returns ``X_i = mu delta + sum_j beta_j s_i^{a_j} + s_i^{a_0} eps_i`` with
    ``s_i = tau_i / Z_i`` and ``Z_i`` unit exponential.

    A zero ``tau_i`` (possible only with finitely many jumps) gives the
    degenerate return ``mu delta``.
    """
    gen = as_generator(rng if rng is not None else RandomSource(cfg.seed))
    jd = simulate_bdlp(cfg, gen)
    k = cfg.kernel()
    tau = k.g_matrix(jd.locations) @ jd.sizes if len(jd) else np.zeros(cfg.n)
    neg = jd.locations <= 0
    v0 = float(np.sum(jd.sizes[neg] * np.exp(jd.locations[neg])))
    z = gen.exponential(1.0, cfg.n)
    eps = gen.standard_normal(cfg.n)
    s = np.where(tau > 0, tau / z, 0.0)
    a = cfg.exponents
    x = cfg.mu * cfg.delta + s ** a[0] * eps
    for bj, aj in zip(cfg.betas, a[1:]):
        x = x + bj * s ** aj
    return SimOutput(x=x, tau=tau, z=z, jumps=jd, v0=v0, tail_residual=cfg.tail_residual,
                     neglected_mass=jd.neglected_mass, config=cfg)
