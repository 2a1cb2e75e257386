"""Gibbs/Metropolis sampler over ``(w, partition or s-path, jumps, locations,
mu, beta, theta)``.

Sweep order: collapsed partition (or s-path) update given ``w`` -> cell atoms
``(J, Y)`` given the partition -> ``w`` (coordinate-wise independence MH with
GIG proposals) -> ``(mu, beta)`` jointly Gaussian -> ``theta = (alpha, b, lam)``
by a random walk on the collapsed target, redrawing the cell atoms from
their conditional whenever ``theta`` moves.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy import stats
from scipy.special import logsumexp

from .. import kernels
from ..distributions import ReturnParams, gig_sample_many
from ..levy import GenGammaFamily, GenGammaParams
from ..numerics import RandomSource, as_generator
from ..ou_kernel import KernelTables, OuKernel, PieceGrid
from ..partitions import Partition, SPath, partition_to_spath, validate_spath
from .crp import crp_sample
from .likelihood import ReturnsData, log_normal_terms

__all__ = [
    "ThetaParams",
    "Priors",
    "McmcConfig",
    "LatentState",
    "PosteriorTrace",
    "SweepError",
    "GhsvSampler",
    "gibbs_sweep",
    "spath_mh_move",
    "run_chain",
]


class SweepError(RuntimeError):
    """A block failed numerically; ``payload`` carries diagnostics."""

    def __init__(self, message, payload=None):
        super().__init__(message)
        self.payload = payload or {}


@dataclass(frozen=True)
class ThetaParams:
    alpha: float = 0.0
    b: float = 1.0
    lam: float = 1.0

    def __post_init__(self):
        GenGammaParams(self.alpha, self.b)
        if not self.lam > 0:
            raise ValueError("lam must be positive")

    def family(self) -> GenGammaFamily:
        return GenGammaFamily(self.alpha, self.b)


@dataclass(frozen=True)
class Priors:
    """Normal priors on ``mu`` and the ``beta_j``; log-Normal on ``b`` and
    ``lam``; uniform ``alpha`` on ``alpha_range``."""

    mu_sd: float = 10.0
    beta_sd: float = 10.0
    log_b_mean: float = 0.0
    log_b_sd: float = 1.5
    log_lam_mean: float = 0.0
    log_lam_sd: float = 1.5
    alpha_range: tuple = (-1.5, 0.9)

    def __post_init__(self):
        lo, hi = self.alpha_range
        if not -2.0 < lo < hi < 1.0:
            raise ValueError("alpha_range must be a sub-interval of (-2, 1)")
        if min(self.mu_sd, self.beta_sd, self.log_b_sd, self.log_lam_sd) <= 0:
            raise ValueError("prior scales must be positive")

    def log_theta(self, th: ThetaParams) -> float:
        lo, hi = self.alpha_range
        if not lo <= th.alpha <= hi:
            return -math.inf
        return (stats.norm.logpdf(math.log(th.b), self.log_b_mean, self.log_b_sd)
                + stats.norm.logpdf(math.log(th.lam), self.log_lam_mean, self.log_lam_sd))


@dataclass(frozen=True)
class McmcConfig:
    iters: int = 1000
    burnin: int = 200
    thin: int = 1
    seed: int = 0
    stream: int = 0
    sampler: str = "spath"
    spath_moves: Optional[int] = None
    multiplicity: bool = True
    theta_step: tuple = (0.3, 0.2, 0.1)  # log b, log lam, alpha
    update_partition: bool = True
    update_atoms: bool = True
    update_w: bool = True
    update_mu_beta: bool = True
    update_alpha: bool = True
    update_b: bool = True
    update_lam: bool = True
    keep_states: bool = True

    def __post_init__(self):
        if self.iters < 0 or self.burnin < 0 or self.thin < 1:
            raise ValueError("need iters >= 0, burnin >= 0, thin >= 1")
        if self.sampler not in ("spath", "partition"):
            raise ValueError("sampler must be 'spath' or 'partition'")

    @property
    def update_theta(self) -> bool:
        return self.update_alpha or self.update_b or self.update_lam


@dataclass
class LatentState:
    """Full sampler state.

    Cells are described by ``cell_e`` (size), ``cell_istar`` (minimal index,
    1-based), ``jumps`` and ``locations``.  In s-path mode ``m`` is the
    authoritative description; in partition mode ``cells`` is.
    """

    w: np.ndarray
    mu: float
    betas: tuple
    theta: ThetaParams
    m: Optional[np.ndarray] = None
    cells: Optional[list] = None
    jumps: np.ndarray = field(default_factory=lambda: np.empty(0))
    locations: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def n(self) -> int:
        return self.w.size

    def cell_shapes(self):
        """``(e, i_star)`` arrays in the order of ``jumps``."""
        if self.cells is not None:
            e = np.array([len(c) for c in self.cells], dtype=np.int64)
            i = np.array([c[0] for c in self.cells], dtype=np.int64)
            return e, i
        idx = np.flatnonzero(self.m > 0)
        return self.m[idx].astype(np.int64), idx + 1

    @property
    def n_p(self) -> int:
        return len(self.cells) if self.cells is not None else int(np.count_nonzero(self.m))

    def spath(self) -> SPath:
        if self.cells is not None:
            return partition_to_spath(Partition(self.cells, self.n))
        return SPath(self.m)

    def copy(self) -> "LatentState":
        return LatentState(self.w.copy(), self.mu, tuple(self.betas), self.theta,
                           None if self.m is None else self.m.copy(),
                           None if self.cells is None else [list(c) for c in self.cells],
                           self.jumps.copy(), self.locations.copy())

    def validate(self):
        if not (np.all(np.isfinite(self.w)) and np.all(self.w > 0)):
            raise SweepError("w must be finite and positive", {"w": self.w.tolist()})
        e, i = self.cell_shapes()
        if self.m is not None and not validate_spath(self.m):
            raise SweepError("s-path left the valid set", {"m": self.m.tolist()})
        if len(self.jumps) != len(e) or len(self.locations) != len(e):
            raise SweepError("atoms do not match cells")
        if self.jumps.size and np.any(self.jumps <= 0):
            raise SweepError("jumps must be positive", {"jumps": self.jumps.tolist()})
        return True

    def to_json(self) -> dict:
        return {
            "w": self.w.tolist(), "mu": self.mu, "betas": list(self.betas),
            "theta": asdict(self.theta),
            "m": None if self.m is None else self.m.tolist(),
            "cells": self.cells,
            "jumps": self.jumps.tolist(), "locations": self.locations.tolist(),
        }

    @classmethod
    def from_json(cls, d: dict) -> "LatentState":
        return cls(np.asarray(d["w"], dtype=float), float(d["mu"]), tuple(d["betas"]),
                   ThetaParams(**d["theta"]),
                   None if d.get("m") is None else np.asarray(d["m"], dtype=np.int64),
                   d.get("cells"), np.asarray(d["jumps"], dtype=float),
                   np.asarray(d["locations"], dtype=float))


class PosteriorTrace:
    """Kept iterations: scalar records plus (optionally) the latent states."""

    def __init__(self, n_betas: int = 1):
        self.records: list = []
        self.states: list = []
        self.n_betas = n_betas

    def __len__(self):
        return len(self.records)

    def append(self, rec: dict, state: Optional[LatentState]):
        self.records.append(rec)
        if state is not None:
            self.states.append(state)

    @property
    def columns(self) -> list:
        betas = ["beta"] if self.n_betas == 1 else [f"beta{j + 1}" for j in range(self.n_betas)]
        return (["iter", "mu"] + betas + ["alpha", "b", "lam", "n_p", "log_normal", "log_b_sum",
                 "neg_lambda", "loglik", "acc_partition", "acc_w", "acc_theta"])

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.records], dtype=float)

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(self.columns)
        for r in self.records:
            wr.writerow([_fmt(r[c]) for c in self.columns])
        return buf.getvalue()

    def states_jsonl(self) -> str:
        return "".join(json.dumps(s.to_json(), sort_keys=True) + "\n" for s in self.states)

    @classmethod
    def from_files(cls, csv_text: str, states_text: Optional[str] = None) -> "PosteriorTrace":
        rows = list(csv.DictReader(io.StringIO(csv_text)))
        nb = sum(1 for c in (rows[0].keys() if rows else []) if c.startswith("beta"))
        tr = cls(max(nb, 1))
        for r in rows:
            tr.records.append({k: float(v) for k, v in r.items()})
        if states_text:
            tr.states = [LatentState.from_json(json.loads(line)) for line in states_text.splitlines() if line.strip()]
        return tr


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


class _Context:
    """Kernel, grid and tables for the current ``theta`` and ``w``."""

    def __init__(self, sampler: "GhsvSampler", theta: ThetaParams, w: np.ndarray, emax: int):
        self.theta = theta
        self.kernel = OuKernel(theta.lam, sampler.delta, sampler.n, theta.family(), sampler.eta,
                               sampler.quad, check=False)
        self.grid = sampler._grid_for(self.kernel)
        self.tables = KernelTables(self.kernel, w, emax=emax, grid=self.grid)


class GhsvSampler:
    """Holds data, priors and configuration; :meth:`sweep` advances a state."""

    def __init__(self, data: ReturnsData, priors: Priors = Priors(), mcmc: McmcConfig = McmcConfig(),
                 exponents=(0.5, 1.0), eta=None, quad=None):
        self.data = data
        self.x = data.x
        self.n = data.n
        self.delta = data.delta
        self.priors = priors
        self.mcmc = mcmc
        self.exponents = tuple(float(a) for a in exponents)
        self.eta = eta
        self.quad = quad
        self._grids: dict = {}
        self.ctx: Optional[_Context] = None

    # -- helpers -------------------------------------------------------------
    def _grid_for(self, kernel: OuKernel) -> PieceGrid:
        stable = kernel.fam.b == 0.0
        levels = int(math.ceil(math.log2(max(1.0, kernel.lam * kernel.delta * kernel.n)))) + 4
        key = (levels, stable, kernel.fam.alpha if stable else None)
        if key not in self._grids:
            self._grids[key] = PieceGrid.build(kernel, levels=max(levels, 40) if stable else levels)
        return self._grids[key]

    def params_of(self, st: LatentState) -> ReturnParams:
        return ReturnParams(mu=st.mu, dt=self.delta, exponents=self.exponents, betas=st.betas)

    def context(self, st: LatentState) -> _Context:
        ctx = self.ctx
        emax = int(max(4, (st.m.max() if st.m is not None else max((len(c) for c in st.cells), default=1)) + 2))
        if ctx is None or ctx.theta != st.theta or not np.array_equal(ctx.tables.w, st.w):
            ctx = _Context(self, st.theta, st.w, emax)
            self.ctx = ctx
        else:
            ctx.tables.extend(emax)
        return ctx

    def log_b_term(self, st: LatentState, tables: KernelTables) -> float:
        """``log prod_j theta(C_j)`` summed over partitions sharing the s-path
        (s-path mode) or for the current partition (partition mode)."""
        if st.cells is not None:
            return float(sum(tables.log_theta(c) for c in st.cells))
        e, i = st.cell_shapes()
        tables.extend(int(e.max()))
        out = tables.kernel.log_a_n() + float(np.sum(tables.logphi[i - 1, e - 1]))
        if self.mcmc.multiplicity:
            out += kernels.log_multiplicity(st.m)
        return out

    # -- initial state ---------------------------------------------------------
    def initial_state(self, rng, theta: ThetaParams = ThetaParams(), mu: float = 0.0, betas=None) -> LatentState:
        gen = as_generator(rng)
        k = len(self.exponents) - 1
        betas = tuple([0.0] * k) if betas is None else tuple(betas)
        xc = self.x - np.median(self.x)
        scale = np.var(self.x) if self.n > 1 else 1.0
        w = 1.0 / (0.5 * xc ** 2 + 0.5 * max(scale, 1e-8))
        st = LatentState(w=w, mu=mu, betas=betas, theta=theta)
        ctx = self.context(LatentState(w=w, mu=mu, betas=betas, theta=theta, m=np.ones(self.n, dtype=np.int64)))
        p, _ = crp_sample(ctx.kernel, w, gen, tables=ctx.tables)
        if self.mcmc.sampler == "spath":
            st.m = np.asarray(partition_to_spath(p), dtype=np.int64)
        else:
            st.cells = [list(c) for c in p.cells]
        self.draw_atoms(st, gen)
        return st

    # -- blocks ------------------------------------------------------------------
    def update_spath(self, st: LatentState, gen, n_moves: Optional[int] = None) -> float:
        ctx = self.context(st)
        K = n_moves if n_moves is not None else (self.mcmc.spath_moves or max(self.n, 10))
        if self.n == 1 or K == 0:
            return 0.0
        acc = _spath_moves(st.m, ctx.tables, gen, K, self.mcmc.multiplicity)
        return acc / K

    def update_partition(self, st: LatentState, gen) -> float:
        """Collapsed reseating of every index; returns the fraction of indices
        that changed cell."""
        ctx = self.context(st)
        tab = ctx.tables
        cells = [list(c) for c in st.cells]
        moved = 0
        for i in range(1, self.n + 1):
            src = next(j for j, c in enumerate(cells) if i in c)
            cells[src].remove(i)
            if not cells[src]:
                cells.pop(src)
                src = -1
            lw = [tab.log_theta([i])]
            for c in cells:
                lw.append(tab.log_theta(c + [i]) - tab.log_theta(c))
            lw = np.asarray(lw)
            p = np.exp(lw - logsumexp(lw))
            j = int(gen.choice(len(p), p=p / p.sum()))
            if j == 0:
                cells.append([i])
                moved += src != -1
            else:
                cells[j - 1].append(i)
                cells[j - 1].sort()
                moved += (j - 1) != src
        cells.sort(key=lambda c: c[0])
        st.cells = cells
        return moved / self.n

    def draw_atoms(self, st: LatentState, gen, ctx: Optional[_Context] = None):
        """Cell atoms from their conditional: location from the cell's
        location density, jump ``Gamma(e - alpha, b + Omega(Y))``."""
        ctx = ctx or self.context(st)
        e, i_star = st.cell_shapes()
        tab = ctx.tables
        if e.size:
            tab.extend(int(e.max()))
        Y = np.array([_draw_location(tab, int(ee), int(ii), gen) for ee, ii in zip(e, i_star)])
        om = ctx.kernel.omega_piecewise(st.w, Y) if Y.size else np.empty(0)
        th = st.theta
        J = gen.gamma(e - th.alpha, 1.0 / (th.b + om)) if Y.size else np.empty(0)
        st.jumps = np.asarray(J, dtype=float)
        st.locations = Y

    def update_w(self, st: LatentState, gen) -> float:
        ctx = self.context(st)
        tab = ctx.tables
        k = ctx.kernel
        G = k.g_matrix(st.locations) if st.locations.size else np.zeros((self.n, 0))
        S = G @ st.jumps
        params = self.params_of(st)
        A = self.x - st.mu * self.delta
        dlt = abs(st.betas[0]) if st.betas else 0.0
        v = np.sqrt(np.maximum(A * A + 2 * S, 1e-300))
        w_prop = gig_sample_many(1.5, np.full(self.n, dlt), v, gen)
        w_prop = np.maximum(w_prop, 1e-300)
        lr_prop = _log_remainder(self.x, w_prop, params, dlt, A)
        lr_cur = _log_remainder(self.x, st.w, params, dlt, A)
        log_u = np.log(gen.random(self.n))
        th = st.theta
        g = tab.grid
        psi_piece = np.ascontiguousarray(k.psi(tab.omega))
        psi_tail = np.ascontiguousarray(k.psi(tab.R[0] * tab.u))
        W_piece = np.ascontiguousarray(np.exp(tab.log_eta + tab.log_wx[None, :]))
        W_tail = np.ascontiguousarray(np.exp(tab.log_wu + tab.log_eta_u) / tab.u)
        a_x = -np.expm1(-th.lam * g.x) / th.lam
        e_x = np.exp(-th.lam * g.x)
        w = st.w.copy()
        R = tab.R.copy()
        accepted, _ = kernels.laplace_w_scan(w, R, psi_piece, psi_tail, w_prop, lr_prop, lr_cur, log_u,
                                             th.lam, self.delta, a_x, e_x, W_piece, np.ascontiguousarray(tab.u),
                                             W_tail, th.alpha, th.b)
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise SweepError("w update produced invalid values", {"w": w.tolist()})
        st.w = w
        return float(np.mean(accepted))

    def update_mu_beta(self, st: LatentState, gen):
        a = self.exponents
        D = np.column_stack([np.full(self.n, self.delta)] + [st.w ** (-aj) for aj in a[1:]])
        prec_w = st.w ** (2 * a[0])
        prior_prec = np.array([1.0 / self.priors.mu_sd ** 2] + [1.0 / self.priors.beta_sd ** 2] * (len(a) - 1))
        P = (D * prec_w[:, None]).T @ D + np.diag(prior_prec)
        h = (D * prec_w[:, None]).T @ self.x
        L = np.linalg.cholesky(P)
        mean = np.linalg.solve(P, h)
        z = gen.standard_normal(len(mean))
        draw = mean + np.linalg.solve(L.T, z)
        st.mu = float(draw[0])
        st.betas = tuple(float(b) for b in draw[1:])

    def collapsed_theta_target(self, st: LatentState, ctx: _Context) -> float:
        return (self.priors.log_theta(ctx.theta) - ctx.tables.total_laplace_exponent()
                + self.log_b_term(st, ctx.tables))

    def update_theta(self, st: LatentState, gen) -> bool:
        ctx = self.context(st)
        s_b, s_l, s_a = self.mcmc.theta_step
        th = st.theta
        z = gen.standard_normal(3)
        u = math.log(gen.random())
        b = th.b * math.exp(s_b * z[0]) if self.mcmc.update_b else th.b
        lam = th.lam * math.exp(s_l * z[1]) if self.mcmc.update_lam else th.lam
        alpha = th.alpha + s_a * z[2] if self.mcmc.update_alpha else th.alpha
        lo, hi = self.priors.alpha_range
        if not lo <= alpha <= hi:
            return False
        try:
            prop = ThetaParams(alpha, b, lam)
        except ValueError:
            return False
        cur = self.collapsed_theta_target(st, ctx)
        new_ctx = _Context(self, prop, st.w, ctx.tables.emax)
        new = self.collapsed_theta_target(st, new_ctx)
        if not math.isfinite(new) or not u < new - cur:
            return False
        st.theta = prop
        self.ctx = new_ctx
        self.draw_atoms(st, gen, new_ctx)
        return True

    # -- sweep -------------------------------------------------------------------
    def sweep(self, st: LatentState, rng) -> tuple:
        """One full sweep in place; returns the acceptance indicators."""
        gen = as_generator(rng)
        cfg = self.mcmc
        acc = {"acc_partition": math.nan, "acc_w": math.nan, "acc_theta": math.nan}
        try:
            if cfg.update_partition:
                if st.cells is not None:
                    acc["acc_partition"] = self.update_partition(st, gen)
                else:
                    acc["acc_partition"] = self.update_spath(st, gen)
            if cfg.update_atoms:
                self.draw_atoms(st, gen)
            if cfg.update_w:
                acc["acc_w"] = self.update_w(st, gen)
            if cfg.update_mu_beta:
                self.update_mu_beta(st, gen)
            if cfg.update_theta:
                acc["acc_theta"] = float(self.update_theta(st, gen))
        except SweepError:
            raise
        except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
            raise SweepError(f"numerical failure in sweep: {exc}", {"state": st.to_json()}) from exc
        return acc

    def record(self, it: int, st: LatentState, acc: dict) -> dict:
        ctx = self.context(st)
        ln = float(np.sum(log_normal_terms(self.x, st.w, self.params_of(st))))
        lb = self.log_b_term(st, ctx.tables)
        nl = -ctx.tables.total_laplace_exponent()
        rec = {"iter": it, "mu": st.mu, "alpha": st.theta.alpha, "b": st.theta.b,
               "lam": st.theta.lam, "n_p": st.n_p, "log_normal": ln, "log_b_sum": lb,
               "neg_lambda": nl, "loglik": ln + lb + nl}
        if len(st.betas) == 1:
            rec["beta"] = st.betas[0]
        else:
            for j, b in enumerate(st.betas):
                rec[f"beta{j + 1}"] = b
        rec.update(acc)
        return rec


def _log_remainder(x, w, params: ReturnParams, dlt, A):
    """Target factor in ``w_i`` not matched by the GIG(3/2) proposal kernel."""
    return log_normal_terms(x, w, params) - (0.5 * np.log(w) - 0.5 * (dlt * dlt / w + A * A * w))


def _spath_moves(m: np.ndarray, tables: KernelTables, gen, K: int, multiplicity: bool) -> int:
    n = m.size
    pi = gen.integers(0, n, size=K)
    pj = gen.integers(0, n - 1, size=K)
    pj = pj + (pj >= pi)
    log_u = np.log(gen.random(K))
    pi = pi.astype(np.int64)
    pj = pj.astype(np.int64)
    start = 0
    total = 0
    while True:
        tab = np.ascontiguousarray(tables.phi_table(tables.emax))
        stop, acc = kernels.spath_mh_steps(m, tab, pi, pj, log_u, start, multiplicity)
        total += acc
        if stop >= K:
            return total
        tables.extend(max(tables.emax * 2, int(m.max()) + 2))
        start = stop


def _draw_location(tab: KernelTables, e: int, i_star: int, gen, bins: int = 512) -> float:
    """Location of a cell with size ``e`` and minimal index ``i_star``."""
    k = tab.kernel
    lam, D = k.lam, k.delta
    logs = np.concatenate([[tab.logT[e - 1]], tab.logP[: i_star - 1, e - 1], [tab.logQ[i_star - 1, e - 1]]])
    p = np.exp(logs - logs.max())
    piece = int(gen.choice(len(p), p=p / p.sum()))
    if piece == 0:
        # tail: density of t with u = t**p on (0, 1)
        t = np.linspace(0.0, 1.0, bins + 1)[1:]
        pw = tab.grid.p
        u = t ** pw
        with np.errstate(divide="ignore"):
            ld = ((e - 1) * np.log(u) + k.log_kappa(e, tab.R[0] * u) + k.log_eta_at(np.log(u))
                  + math.log(pw) + (pw - 1) * np.log(t))
        tt = _sample_piecewise_linear(np.concatenate([[0.0], t]), np.concatenate([[ld[0]], ld]), gen)
        return float(math.log(max(tt, 1e-300) ** pw))
    kk = piece  # 1-based piece index
    gamma = max(1.0, math.log1p(lam * D * (e + 1) * 16))
    s = np.linspace(0.0, 1.0, bins + 1)
    x = D * np.expm1(gamma * s) / math.expm1(gamma)
    x[0] = 0.0
    wk = tab.w[kk - 1]
    om = wk * -np.expm1(-lam * x) / lam + tab.R[kk] * np.exp(-lam * x)
    with np.errstate(divide="ignore"):
        lk = k.log_kappa(e, np.maximum(om, 1e-300)) + k.log_eta_at(kk * D - x)
        if kk < i_star:
            ld = -lam * e * x + lk
        else:
            ld = np.log(-np.expm1(-lam * x)) - lam * (e - 1) * x + lk
    xx = _sample_piecewise_linear(x, ld, gen)
    return float(kk * D - xx)


def _sample_piecewise_linear(x, logd, gen) -> float:
    """Draw from the density that interpolates ``exp(logd)`` linearly on ``x``."""
    with np.errstate(invalid="ignore"):
        d = np.exp(logd - np.max(logd[np.isfinite(logd)]))
    d = np.where(np.isfinite(d), d, 0.0)
    mass = 0.5 * (d[1:] + d[:-1]) * np.diff(x)
    j = int(gen.choice(mass.size, p=mass / mass.sum()))
    f0, f1, h = d[j], d[j + 1], x[j + 1] - x[j]
    r = gen.random()
    # invert the CDF of the linear density on one bin
    if abs(f1 - f0) < 1e-12 * max(f0, f1):
        frac = r
    else:
        frac = (-f0 + math.sqrt(f0 * f0 + r * (f1 * f1 - f0 * f0))) / (f1 - f0)
    return float(x[j] + frac * h)


# -- functional entry points -----------------------------------------------------

def gibbs_sweep(state: LatentState, X, k: OuKernel, priors: Priors = Priors(),
                cfg: McmcConfig = McmcConfig(), rng=None, exponents=(0.5, 1.0)) -> LatentState:
    """Return a new state after one sweep (the input is not modified)."""
    data = X if isinstance(X, ReturnsData) else ReturnsData(X, k.delta)
    smp = GhsvSampler(data, priors, cfg, exponents=exponents, eta=k.eta)
    st = state.copy()
    smp.sweep(st, rng)
    return st


def spath_mh_move(state: LatentState, X, k: OuKernel, cfg: McmcConfig = McmcConfig(), rng=None,
                  n_moves: int = 1) -> LatentState:
    """``n_moves`` unit-move Metropolis proposals on the s-path at fixed ``w``."""
    if state.m is None:
        raise ValueError("state has no s-path")
    data = X if isinstance(X, ReturnsData) else ReturnsData(X, k.delta)
    smp = GhsvSampler(data, Priors(), cfg, eta=k.eta)
    st = state.copy()
    smp.update_spath(st, as_generator(rng), n_moves)
    return st


def run_chain(X, k: OuKernel, priors: Priors = Priors(), mcmc: McmcConfig = McmcConfig(), rng=None,
              exponents=(0.5, 1.0), init: Optional[LatentState] = None, progress=None) -> PosteriorTrace:
    """Burn-in, then ``iters`` kept iterations every ``thin`` sweeps."""
    data = X if isinstance(X, ReturnsData) else ReturnsData(X, k.delta)
    if rng is None:
        rng = RandomSource(mcmc.seed, mcmc.stream)
    gen = as_generator(rng)
    smp = GhsvSampler(data, priors, mcmc, exponents=exponents, eta=k.eta)
    theta = ThetaParams(k.fam.alpha, k.fam.b, k.lam)
    trace = PosteriorTrace(len(exponents) - 1)
    if mcmc.iters == 0:
        return trace
    st = init.copy() if init is not None else smp.initial_state(gen, theta)
    total = mcmc.burnin + mcmc.iters * mcmc.thin
    for it in range(1, total + 1):
        try:
            acc = smp.sweep(st, gen)
        except SweepError as exc:
            exc.payload["iteration"] = it
            raise SweepError(f"iteration {it}: {exc}", exc.payload) from exc
        if it > mcmc.burnin and (it - mcmc.burnin) % mcmc.thin == 0:
            trace.append(smp.record(it, st, acc), st.copy() if mcmc.keep_states else None)
        if progress is not None:
            progress(it, total)
    return trace
