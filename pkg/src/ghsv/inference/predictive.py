"""Posterior predictive density of the next return and the posterior mean of
integrated volatility.

For one posterior draw (``w``, cell atoms, ``theta``, ``mu``, ``beta``) the
next increment is ``tau~ = sum_j J_j g~(Y_j) + mu_Omega(g~)`` where
``mu_Omega`` is the CRM with intensity ``e^{-u Omega(y)} rho(du) eta(dy)``.
With ``w~ = Z/tau~`` and ``Z`` unit exponential,

    p(w~) = (S + D'(w~)) exp(-S w~ - D(w~)),
    S = sum_j J_j g~(Y_j),  D(w~) = int [psi(Omega + w~ g~) - psi(Omega)] eta,

and the return density is ``int p(w~) N(x | mu D~ + shift(w~), w~^{-2a_0}) dw~``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import logsumexp

from ..distributions import ReturnParams
from ..levy import GenGammaFamily
from ..numerics import DEFAULT_QUAD, QuadratureError, gauss_legendre, graded_rule
from ..ou_kernel import KernelTables, OuKernel
from .sampler import LatentState, PosteriorTrace

__all__ = ["PredictiveSpec", "psi_increment", "predictive_density", "posterior_tau_mean",
           "predictive_w_density"]


@dataclass
class PredictiveSpec:
    """Next interval of length ``dt_new`` after ``n delta``.

    ``g_new`` is the kernel weight of a jump at ``y`` in the new increment; it
    must vanish beyond ``n delta + dt_new``.  ``None`` means the OU weight of
    the next interval.
    """

    dt_new: float
    x_grid: np.ndarray
    g_new: Optional[Callable] = None
    w_nodes: int = 200

    def __post_init__(self):
        self.x_grid = np.asarray(self.x_grid, dtype=float)
        if not self.dt_new > 0:
            raise ValueError("dt_new must be positive")
        if self.x_grid.ndim != 1 or self.x_grid.size < 2 or np.any(np.diff(self.x_grid) <= 0):
            raise ValueError("x_grid must be strictly increasing with at least two points")


def psi_increment(fam, a, h):
    """``psi(a + h) - psi(a)`` without cancellation for gen-Gamma families."""
    a = np.asarray(a, dtype=float)
    h = np.asarray(h, dtype=float)
    if isinstance(fam, GenGammaFamily):
        al, b = fam.alpha, fam.b
        base = b + a
        if al == 0.0:
            return np.log1p(h / base)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(base > 0, base ** al * np.expm1(al * np.log1p(h / np.where(base > 0, base, 1.0))) / al,
                         h ** al / al)
        return r
    return fam.psi(a + h) - fam.psi(a)


def _kappa1(fam, s):
    return np.exp(fam.log_tilted_cumulant(1, s))


class _DrawGeometry:
    """Nodes, weights, ``Omega`` and ``g~`` for one draw."""

    def __init__(self, k: OuKernel, w, spec: PredictiveSpec, tables: Optional[KernelTables] = None,
                 w_max: float = 1.0, cutoff: float = 50.0):
        tab = tables or KernelTables(k, w, emax=1)
        lam, D, n = k.lam, k.delta, k.n
        T = n * D
        g_fun = spec.g_new or (lambda y: k.g_interval(T, T + spec.dt_new, y))
        lag = cutoff + max(0.0, math.log(max(w_max, 1.0)))
        om, wt, gg = [], [], []
        # tail in u = e^y
        if spec.g_new is not None or lam * T <= lag:
            u = tab.u
            om.append(tab.R[0] * u)
            wt.append(np.exp(tab.log_wu + tab.log_eta_u) / u)
            gg.append(g_fun(np.log(u)))
        keep = np.arange(1, n + 1)
        if spec.g_new is None:
            keep = keep[lam * (n - keep) * D <= lag]
        om.append(tab.omega[keep - 1].ravel())
        wt.append(np.exp(tab.log_eta[keep - 1] + tab.log_wx[None, :]).ravel())
        gg.append(g_fun(tab.y[keep - 1]).ravel())
        # new piece, graded toward both ends
        xn, wn = graded_rule(0.0, spec.dt_new, 2, 12, grade_left=True, grade_right=True, levels=30)
        yn = T + spec.dt_new - xn
        om.append(np.zeros_like(xn))
        wt.append(wn * k.eta_at(yn))
        gg.append(g_fun(yn))
        self.omega = np.concatenate(om)
        self.weight = np.concatenate(wt)
        self.g = np.concatenate(gg)
        if np.any(self.g < 0) or not np.all(np.isfinite(self.g)):
            raise ValueError("g_new must be finite and non-negative")
        self.fam = k.fam
        self.g_fun = g_fun

    def D(self, wt):
        inc = psi_increment(self.fam, self.omega[None, :], np.outer(wt, self.g))
        return inc @ self.weight

    def dD(self, wt):
        s = self.omega[None, :] + np.outer(wt, self.g)
        ok = s > 0 if getattr(self.fam, "b", 0.0) == 0.0 else np.ones(s.shape, dtype=bool)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            kap = np.where(ok, _kappa1(self.fam, np.where(ok, s, 1.0)), np.inf)
            kap = np.where(self.g[None, :] > 0, kap, 0.0)
        return (kap * self.g[None, :]) @ self.weight


def _state_kernel(k: OuKernel, st: LatentState) -> OuKernel:
    th = st.theta
    if th.lam == k.lam and isinstance(k.fam, GenGammaFamily) and (k.fam.alpha, k.fam.b) == (th.alpha, th.b):
        return k
    return k.with_params(lam=th.lam, fam=th.family())


def predictive_w_density(st: LatentState, spec: PredictiveSpec, k: OuKernel):
    """``(log w~ nodes, log-space weights, p(w~))`` for one draw; the nodes
    span the bulk of ``w~`` on a log scale."""
    k = _state_kernel(k, st)
    tab = KernelTables(k, st.w, emax=1)
    wide = _DrawGeometry(k, st.w, spec, tab, w_max=math.exp(60.0))
    S = float(np.sum(st.jumps * wide.g_fun(st.locations))) if st.jumps.size else 0.0
    # centre: log w~ where S w~ + D(w~) = 1 (the mean of tau~ may be infinite)
    a, b = -60.0, 60.0
    lap = lambda ell: S * math.exp(ell) + float(wide.D(np.array([math.exp(ell)]))[0])
    if not lap(b) > 1.0:
        raise QuadratureError("predictive increment is zero with non-negligible probability", lap(b), math.inf)
    for _ in range(40):
        c0 = 0.5 * (a + b)
        if lap(c0) > 1.0:
            b = c0
        else:
            a = c0
    lo, hi = c0 - 30.0, c0 + 30.0
    geo = _DrawGeometry(k, st.w, spec, tab, w_max=math.exp(hi))
    ell = np.linspace(lo, hi, spec.w_nodes)
    wt = np.exp(ell)
    with np.errstate(over="ignore", invalid="ignore"):
        logp = np.log(S + geo.dD(wt)) - S * wt - geo.D(wt)
    logp = np.where(np.isfinite(logp), logp, -np.inf)
    h = ell[1] - ell[0]
    lw = np.full(ell.size, math.log(h))
    lw[[0, -1]] += math.log(0.5)
    return ell, lw, logp


def _log_normal(x, wt, params: ReturnParams):
    sd = wt ** (-params.exponents[0])
    z = (x[:, None] - params.mu * params.dt - params.mean_shift(wt)[None, :]) / sd[None, :]
    return -0.5 * z * z - np.log(sd)[None, :] - 0.5 * math.log(2 * math.pi)


def predictive_density(trace, spec: PredictiveSpec, k: OuKernel, cfg=None, exponents=(0.5, 1.0),
                       max_draws: Optional[int] = None):
    """Trace-averaged predictive density on ``spec.x_grid``.

    Returns ``(density, mc_se, w_mass)`` where ``w_mass`` is the per-draw
    quadrature mass of ``p(w~)`` (should be one).
    """
    states = trace.states if isinstance(trace, PosteriorTrace) else list(trace)
    if not states:
        raise ValueError("trace has no stored states")
    if max_draws is not None and len(states) > max_draws:
        idx = np.linspace(0, len(states) - 1, max_draws).round().astype(int)
        states = [states[i] for i in idx]
    dens = np.empty((len(states), spec.x_grid.size))
    mass = np.empty(len(states))
    for d, st in enumerate(states):
        ell, lw, logp = predictive_w_density(st, spec, k)
        wt = np.exp(ell)
        lterm = lw + ell + logp
        mass[d] = math.exp(logsumexp(lterm))
        params = ReturnParams(mu=st.mu, dt=spec.dt_new, exponents=tuple(exponents), betas=tuple(st.betas))
        dens[d] = np.exp(logsumexp(lterm[None, :] + _log_normal(spec.x_grid, wt, params), axis=1))
    mean = dens.mean(axis=0)
    se = dens.std(axis=0, ddof=1) / math.sqrt(len(states)) if len(states) > 1 else np.zeros_like(mean)
    return mean, se, mass


def _tau_mean_one(k: OuKernel, st: LatentState, t_grid: np.ndarray) -> np.ndarray:
    """``E[tau(t) | w, atoms, theta]`` on ``t_grid``."""
    tab = KernelTables(k, st.w, emax=1)
    lam, D, n = k.lam, k.delta, k.n
    fam = k.fam
    out = np.zeros(t_grid.size)
    # atoms
    for J, Y in zip(st.jumps, st.locations):
        out += J * np.array([k.g_interval(0.0, t, Y) if t > 0 else 0.0 for t in t_grid])
    tail = math.exp(tab.logT[0])
    # per-piece A_k = int kappa_1 eta,  b_k = int e^{-lam x} kappa_1 eta  (x = kD - y)
    kap = _kappa1(fam, tab.omega) * np.exp(tab.log_eta + tab.log_wx[None, :])
    A = kap.sum(axis=1)
    B = (kap * np.exp(-lam * tab.grid.x)[None, :]).sum(axis=1)
    cumA = np.concatenate([[0.0], np.cumsum(A)])
    # S_K = sum_{k<=K} e^{-lam (K-k) D} B_k
    SB = np.zeros(n + 1)
    q = math.exp(-lam * D)
    for kk in range(1, n + 1):
        SB[kk] = SB[kk - 1] * q + B[kk - 1]
    xg, wg = gauss_legendre(32)
    for j, t in enumerate(t_grid):
        if t <= 0:
            continue
        val = -math.expm1(-lam * t) / lam * tail
        K = min(int(math.floor(t / D + 1e-12)), n)
        val += (cumA[K] - math.exp(-lam * (t - K * D)) * SB[K]) / lam
        if t > K * D + 1e-14 * max(1.0, t) and K < n:
            y = K * D + (t - K * D) * xg
            om = k.omega_piecewise(st.w, y)
            g = -np.expm1(-lam * (t - y)) / lam
            val += (t - K * D) * float(np.sum(wg * g * _kappa1(fam, om) * k.eta_at(y)))
        out[j] += val
    return out


def posterior_tau_mean(trace, k: OuKernel, t_grid, cfg=None):
    """Trace-averaged ``E[tau(t) | X]`` and its Monte Carlo SE.

    Also returns the per-draw curves as the third element.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(t_grid < 0) or np.any(t_grid > k.n * k.delta * (1 + 1e-12)):
        raise ValueError("t grid must lie in [0, n delta]")
    states = trace.states if isinstance(trace, PosteriorTrace) else list(trace)
    if not states:
        raise ValueError("trace has no stored states")
    curves = np.array([_tau_mean_one(_state_kernel(k, st), st, t_grid) for st in states])
    mean = curves.mean(axis=0)
    se = curves.std(axis=0, ddof=1) / math.sqrt(len(states)) if len(states) > 1 else np.zeros_like(mean)
    return mean, se, curves
