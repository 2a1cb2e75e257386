"""Quadrature, log-domain helpers, the Thiele recursion and seeded random streams."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.special import logsumexp

__all__ = [
    "QuadratureConfig",
    "QuadratureError",
    "DivergentIntegralError",
    "RandomSource",
    "as_generator",
    "gauss_legendre",
    "graded_rule",
    "integrate_1d",
    "logsumexp",
    "log_integrate_1d",
    "thiele_cumulants",
    "moments_from_cumulants",
]


class QuadratureError(ArithmeticError):
    """Raised when composite quadrature fails to converge.

    Carries the last estimate and the last error estimate so callers can decide
    whether the value is still usable.
    """

    def __init__(self, message: str, estimate: float, error: float):
        super().__init__(f"{message} (estimate={estimate!r}, error={error!r})")
        self.estimate = estimate
        self.error = error


class DivergentIntegralError(QuadratureError):
    """Refinement makes the estimate grow without bound."""


@dataclass(frozen=True)
class QuadratureConfig:
    """Settings for composite Gauss-Legendre quadrature.

    ``panels`` and ``nodes_per_panel`` define the starting mesh; every refinement
    doubles the panel count and deepens the geometric grading toward singular
    endpoints by ``grade_levels``.
    """

    panels: int = 4
    nodes_per_panel: int = 16
    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    grade_levels: int = 20
    grade_ratio: float = 0.2
    max_refinements: int = 7

    def __post_init__(self):
        if self.panels < 1:
            raise ValueError("panels must be >= 1")
        if self.nodes_per_panel < 2:
            raise ValueError("nodes_per_panel must be >= 2")
        if self.abs_tol < 0 or self.rel_tol < 0:
            raise ValueError("tolerances must be non-negative")
        if self.abs_tol == 0 and self.rel_tol == 0:
            raise ValueError("at least one of abs_tol, rel_tol must be positive")
        if not 0.0 < self.grade_ratio < 1.0:
            raise ValueError("grade_ratio must lie in (0, 1)")


DEFAULT_QUAD = QuadratureConfig()


@lru_cache(maxsize=64)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the ``order``-point Gauss-Legendre rule on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _breakpoints(a, b, panels, grade_left, grade_right, levels, ratio):
    edges = np.linspace(a, b, panels + 1)
    h = edges[1] - edges[0]
    pieces = [edges]
    d = h * ratio ** np.arange(1, levels + 1)
    if grade_left and levels > 0:
        pieces.append(a + d[d > 64 * np.finfo(float).eps * max(abs(a), 1e-300)])
    if grade_right and levels > 0:
        pieces.append(b - d[d > 64 * np.finfo(float).eps * max(abs(b), 1e-300)])
    pts = np.unique(np.concatenate(pieces))
    return pts[(pts >= a) & (pts <= b)]


def graded_rule(a: float, b: float, panels: int, order: int, *,
                grade_left: bool = False, grade_right: bool = False,
                levels: int = 0, ratio: float = 0.5) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule on [a, b] with optional geometric grading.

    Returns ``(nodes, weights)``; nodes never coincide with ``a`` or ``b``.
    """
    pts = _breakpoints(a, b, panels, grade_left, grade_right, levels, ratio)
    x0, w0 = gauss_legendre(order)
    lo = pts[:-1, None]
    width = np.diff(pts)[:, None]
    nodes = (lo + width * x0[None, :]).ravel()
    weights = (width * w0[None, :]).ravel()
    return nodes, weights


def integrate_1d(f: Callable[[np.ndarray], np.ndarray], a: float, b: float,
                 cfg: QuadratureConfig | None = None, *,
                 singular: str | None = "both", scale: float = 1.0) -> float:
    """Integrate a vectorised ``f`` over [a, b] (``b`` may be ``inf``).

    The mesh is ``cfg.panels`` uniform panels plus geometric panels toward the
    endpoints listed in ``singular`` ("a", "b", "both" or None); this absorbs
    integrable endpoint singularities such as ``x**-0.5`` at 0.  Refinement
    doubles the panels and deepens the grading until two successive estimates
    agree to ``max(abs_tol, rel_tol*|I|)``.  An infinite upper limit is handled
    by splitting at ``a + scale`` and mapping the remainder with ``x = a + scale/t``.

    Raises
    ------
    QuadratureError
        If the tolerance is not met within ``cfg.max_refinements`` refinements.
    """
    cfg = cfg or DEFAULT_QUAD
    if math.isinf(a) or not a < b:
        raise ValueError(f"need finite a < b, got a={a!r}, b={b!r}")
    if math.isinf(b):
        head = _integrate_finite(f, a, a + scale, cfg, singular in ("a", "both"), False)

        def g(t):
            return f(a + scale / t) * (scale / (t * t))

        return head + _integrate_finite(g, 0.0, 1.0, cfg, True, False)
    return _integrate_finite(f, a, b, cfg, singular in ("a", "both"),
                             singular in ("b", "both"))


def _integrate_finite(g, lo, hi, cfg, left, right):
    def estimate(level):
        x, w = graded_rule(lo, hi, cfg.panels * 2 ** level, cfg.nodes_per_panel,
                           grade_left=left, grade_right=right,
                           levels=cfg.grade_levels * (level + 1), ratio=cfg.grade_ratio)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            vals = np.asarray(g(x), dtype=float)
        return float(np.dot(w, vals))

    prev = estimate(0)
    history = [prev]
    err = math.inf
    for level in range(1, cfg.max_refinements + 1):
        cur = estimate(level)
        history.append(cur)
        err = abs(cur - prev)
        if math.isfinite(cur) and err <= max(cfg.abs_tol, cfg.rel_tol * abs(cur)):
            return cur
        prev = cur
    if not math.isfinite(prev):
        raise DivergentIntegralError("integrand produced non-finite values", prev, err)
    tail = [abs(v) for v in history[-4:]]
    if all(t1 > 1.05 * t0 for t0, t1 in zip(tail, tail[1:])):
        raise DivergentIntegralError("integral appears divergent", prev, err)
    raise QuadratureError("quadrature did not converge", prev, err)


def log_integrate_1d(logf: Callable[[np.ndarray], np.ndarray], a: float, b: float,
                     cfg: QuadratureConfig | None = None, *, shift: float | None = None,
                     singular: str | None = "both") -> float:
    """``log`` of the integral of ``exp(logf)``, computed with a constant shift.

    ``shift`` should be close to the maximum of ``logf``; if omitted it is taken
    from a coarse scan of the interval.
    """
    if shift is None:
        if math.isinf(b):
            xs = a + np.concatenate([np.linspace(0.0, 1.0, 257)[1:], 1.0 / np.linspace(1.0, 0.0, 257)[1:-1]])
        else:
            xs = np.linspace(a, b, 513)[1:-1]
        with np.errstate(all="ignore"):
            vals = np.asarray(logf(xs), dtype=float)
        vals = vals[np.isfinite(vals)]
        shift = float(vals.max()) if vals.size else 0.0

    def f(x):
        with np.errstate(all="ignore"):
            return np.exp(np.asarray(logf(x), dtype=float) - shift)

    val = integrate_1d(f, a, b, cfg, singular=singular)
    if val <= 0:
        return -math.inf
    return math.log(val) + shift


def thiele_cumulants(moments: Sequence[float]) -> np.ndarray:
    """Cumulants from raw moments ``m_1..m_L`` via

        k_l = m_l - sum_{k=1}^{l-1} C(l-1, k-1) k_k m_{l-k}.
    """
    m = np.asarray(moments, dtype=float)
    if m.ndim != 1 or m.size < 1:
        raise ValueError("need a non-empty 1-d sequence of moments")
    kappa = np.empty_like(m)
    for l in range(1, m.size + 1):
        acc = m[l - 1]
        for k in range(1, l):
            acc -= math.comb(l - 1, k - 1) * kappa[k - 1] * m[l - k - 1]
        kappa[l - 1] = acc
    return kappa


def moments_from_cumulants(cumulants: Sequence[float]) -> np.ndarray:
    """Inverse of :func:`thiele_cumulants`."""
    kappa = np.asarray(cumulants, dtype=float)
    m = np.empty_like(kappa)
    full = [1.0]
    for l in range(1, kappa.size + 1):
        acc = 0.0
        for k in range(1, l + 1):
            acc += math.comb(l - 1, k - 1) * kappa[k - 1] * full[l - k]
        full.append(acc)
        m[l - 1] = acc
    return m


class RandomSource:
    """Reproducible random stream identified by ``(seed, stream)``.

    Streams with different identifiers are statistically independent (they are
    spawned from one :class:`numpy.random.SeedSequence`), so each chain or
    replicate can own its own stream.
    """

    def __init__(self, seed: int = 0, stream: int = 0):
        if not 0 <= int(seed) < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.seed = int(seed)
        self.stream = int(stream)
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream,))
        self.gen = np.random.Generator(np.random.PCG64(ss))

    def child(self, index: int) -> "RandomSource":
        """Independent sub-stream (e.g. one per chain)."""
        return RandomSource(self.seed, self.stream * 1_000_003 + 1 + int(index))

    def __repr__(self):
        return f"RandomSource(seed={self.seed}, stream={self.stream})"


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RandomSource):
        return rng.gen
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None or isinstance(rng, (int, np.integer)):
        return RandomSource(0 if rng is None else int(rng)).gen
    raise TypeError(f"cannot use {type(rng).__name__} as a random source")
