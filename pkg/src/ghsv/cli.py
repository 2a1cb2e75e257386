"""Command line front end: ``ghsv {simulate,fit,predict,validate}``.

Exit codes: 0 ok, 1 validation failure, 2 usage or config error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import concurrent.futures as cf
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from .levy import GenGammaParams
from .numerics import QuadratureConfig, QuadratureError, RandomSource

log = logging.getLogger("ghsv")

SCHEMA_VERSION = 1
EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


# -- configuration ---------------------------------------------------------------

@dataclass
class RunConfig:
    model: dict = field(default_factory=dict)
    data: dict = field(default_factory=dict)
    simulate: dict = field(default_factory=dict)
    mcmc: dict = field(default_factory=dict)
    priors: dict = field(default_factory=dict)
    numerics: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    base_dir: Path = Path(".")

    MODEL_DEFAULTS = {"lam": 1.0, "alpha": 0.0, "b": 1.0, "mu": 0.0, "beta": 0.0, "betas": None,
                      "exponents": [0.5, 1.0], "eta": None}
    MCMC_DEFAULTS = {"iters": 1000, "burnin": 200, "thin": 1, "seed": 0, "chains": 1, "sampler": "spath",
                     "multiplicity": True, "theta_step": [0.3, 0.2, 0.1], "fixed": []}

    # -- accessors with validation --
    def model_value(self, key):
        return self.model.get(key, self.MODEL_DEFAULTS[key])

    @property
    def betas(self) -> tuple:
        bs = self.model_value("betas")
        if bs is None:
            bs = [self.model_value("beta")]
        return tuple(float(b) for b in bs)

    @property
    def exponents(self) -> tuple:
        return tuple(float(a) for a in self.model_value("exponents"))

    @property
    def delta(self) -> float:
        return float(self.data.get("delta", 1.0))

    def mcmc_value(self, key):
        return self.mcmc.get(key, self.MCMC_DEFAULTS[key])

    def path(self, p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else self.base_dir / p

    @property
    def out_dir(self) -> Path:
        return self.path(self.output.get("dir", "out"))

    def quad(self) -> QuadratureConfig:
        try:
            return QuadratureConfig(**self.numerics)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"numerics block: {exc}") from exc

    def validate(self):
        unknown = set(self.model) - set(self.MODEL_DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown model keys: {sorted(unknown)}")
        unknown = set(self.mcmc) - set(self.MCMC_DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown mcmc keys: {sorted(unknown)}")
        try:
            GenGammaParams(float(self.model_value("alpha")), float(self.model_value("b")))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if not float(self.model_value("lam")) > 0:
            raise ConfigError("model.lam must be positive (lam > 0)")
        if not self.delta > 0:
            raise ConfigError("data.delta must be positive")
        if len(self.betas) != len(self.exponents) - 1:
            raise ConfigError("need one beta per non-leading exponent")
        if self.model_value("eta") is not None:
            raise ConfigError("only the constant location density (eta = null) is supported from the CLI")
        if self.mcmc_value("sampler") not in ("spath", "partition"):
            raise ConfigError("mcmc.sampler must be 'spath' or 'partition'")
        for key in ("iters", "burnin", "thin", "chains"):
            v = self.mcmc_value(key)
            if not isinstance(v, int) or v < (1 if key in ("thin", "chains") else 0):
                raise ConfigError(f"mcmc.{key} must be a non-negative integer (thin, chains >= 1)")
        bad = set(self.mcmc_value("fixed")) - {"alpha", "b", "lam"}
        if bad:
            raise ConfigError(f"mcmc.fixed entries must be among alpha, b, lam; got {sorted(bad)}")
        self.quad()


def load_config(path: Optional[str], seed: Optional[int] = None, out_dir: Optional[str] = None) -> RunConfig:
    if path is None:
        cfg = RunConfig()
    else:
        p = Path(path)
        try:
            raw = json.loads(p.read_text(encoding="utf-8"))
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {p}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        ver = raw.pop("schema_version", None)
        if ver != SCHEMA_VERSION:
            raise ConfigError(f"schema_version must be {SCHEMA_VERSION}, got {ver!r}")
        known = {f.name for f in fields(RunConfig)} - {"base_dir"}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config blocks: {sorted(unknown)}")
        cfg = RunConfig(**{k: dict(v) for k, v in raw.items()}, base_dir=p.parent)
    if seed is not None:
        cfg.mcmc["seed"] = int(seed)
        cfg.simulate["seed"] = int(seed)
    if out_dir is not None:
        cfg.output["dir"] = str(Path(out_dir).resolve())
    cfg.validate()
    return cfg


# -- io helpers --------------------------------------------------------------------

def atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    for r in rows:
        wr.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def read_returns(path: Path) -> np.ndarray:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.DictReader(fh))
    except FileNotFoundError as exc:
        raise ConfigError(f"data file not found: {path}") from exc
    if not rows or "x" not in rows[0]:
        raise ConfigError(f"data file {path} needs a header with column 'x' and at least one row")
    try:
        x = np.array([float(r["x"]) for r in rows])
    except ValueError as exc:
        raise ConfigError(f"data file {path}: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise ConfigError(f"data file {path} contains non-finite returns")
    return x


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("GHSV_THREADS", "1")))
    except ValueError:
        return 1


# -- commands ------------------------------------------------------------------------

def cmd_simulate(cfg: RunConfig) -> int:
    from .simulation import SimConfig, simulate_dataset

    s = cfg.simulate
    try:
        sc = SimConfig(n=int(s.get("n", 250)), delta=cfg.delta, lam=float(cfg.model_value("lam")),
                       alpha=float(cfg.model_value("alpha")), b=float(cfg.model_value("b")),
                       mu=float(cfg.model_value("mu")), betas=cfg.betas, exponents=cfg.exponents,
                       t0=s.get("t0"), trunc_eps=float(s.get("trunc_eps", 1e-8)),
                       tail_tol=float(s.get("tail_tol", 1e-6)), seed=int(s.get("seed", 0)))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    out = simulate_dataset(sc, RandomSource(sc.seed))
    d = cfg.out_dir
    t = np.arange(1, sc.n + 1) * sc.delta
    atomic_write(d / "returns.csv", _csv_text(["t", "x"], zip(t, out.x)))
    atomic_write(d / "latents.csv", _csv_text(["t", "tau", "z"], zip(t, out.tau, out.z)))
    atomic_write(d / "jumps.csv", _csv_text(["u", "y"], zip(out.jumps.sizes, out.jumps.locations)))
    manifest = {"schema_version": SCHEMA_VERSION, "seed": sc.seed, "n": sc.n, "delta": sc.delta,
                "model": {"lam": sc.lam, "alpha": sc.alpha, "b": sc.b, "mu": sc.mu, "betas": list(sc.betas),
                          "exponents": list(sc.exponents)},
                "tail_window": sc.tail_window, "tail_residual": out.tail_residual,
                "trunc_eps": sc.trunc_eps, "neglected_mass": out.neglected_mass,
                "n_jumps": len(out.jumps), "v0": out.v0}
    atomic_write(d / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(f"wrote {sc.n} returns and {len(out.jumps)} jumps to {d}")
    return EXIT_OK


def _fit_one(args):
    cfg_dict, x, chain = args
    from .inference.likelihood import ReturnsData
    from .inference.sampler import McmcConfig, Priors, ThetaParams, run_chain
    from .levy import GenGammaFamily
    from .ou_kernel import OuKernel

    m, mc, pr, quad, delta, exps = cfg_dict
    fixed = set(mc["fixed"])
    mcfg = McmcConfig(iters=mc["iters"], burnin=mc["burnin"], thin=mc["thin"], seed=mc["seed"], stream=chain,
                      sampler=mc["sampler"], multiplicity=mc["multiplicity"],
                      theta_step=tuple(mc["theta_step"]), update_alpha="alpha" not in fixed,
                      update_b="b" not in fixed, update_lam="lam" not in fixed)
    k = OuKernel(m["lam"], delta, x.size, GenGammaFamily(m["alpha"], m["b"]), cfg=QuadratureConfig(**quad))
    trace = run_chain(ReturnsData(x, delta), k, Priors(**pr), mcfg, RandomSource(mc["seed"], chain),
                      exponents=exps)
    return trace.to_csv(), trace.states_jsonl(), trace


def _ess(x: np.ndarray) -> float:
    """Effective sample size from the initial positive autocorrelation sequence."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 4 or np.var(x) == 0:
        return float(n)
    xc = x - x.mean()
    f = np.fft.rfft(xc, 2 * n)
    ac = np.fft.irfft(f * np.conj(f))[:n] / (np.arange(n, 0, -1) * np.var(x))
    # Geyer: tau = -1 + 2 * sum of positive paired autocorrelations
    tau = -1.0
    for t in range(0, n - 1, 2):
        pair = ac[t] + ac[t + 1]
        if pair <= 0:
            break
        tau += 2.0 * pair
    return float(n / max(tau, 1.0 / n))


def _summary(traces) -> dict:
    out = {"schema_version": SCHEMA_VERSION, "chains": len(traces), "parameters": {}, "acceptance": {}}
    first = traces[0]
    names = [c for c in first.columns if c not in ("iter",) and not c.startswith("acc_")]
    for c in names:
        v = np.concatenate([t.column(c) for t in traces]) if len(first) else np.empty(0)
        if v.size == 0:
            out["parameters"][c] = None
            continue
        q = np.percentile(v, [5, 50, 95])
        out["parameters"][c] = {"mean": float(v.mean()), "sd": float(v.std(ddof=1)) if v.size > 1 else 0.0,
                                "p05": float(q[0]), "p50": float(q[1]), "p95": float(q[2]),
                                "ess": float(sum(_ess(t.column(c)) for t in traces))}
    for c in [c for c in first.columns if c.startswith("acc_")]:
        v = np.concatenate([t.column(c) for t in traces]) if len(first) else np.empty(0)
        v = v[np.isfinite(v)]
        out["acceptance"][c] = float(v.mean()) if v.size else None
    return out


def cmd_fit(cfg: RunConfig, data: Optional[str] = None) -> int:
    dpath = cfg.path(data) if data else (cfg.path(cfg.data["path"]) if "path" in cfg.data else None)
    if dpath is None:
        raise ConfigError("no data file: pass --data or set data.path")
    x = read_returns(dpath)
    m = {k: float(cfg.model_value(k)) for k in ("lam", "alpha", "b")}
    mc = {k: cfg.mcmc_value(k) for k in cfg.MCMC_DEFAULTS}
    payload = (m, mc, dict(cfg.priors), dict(cfg.numerics), cfg.delta, cfg.exponents)
    try:
        from .inference.sampler import Priors
        Priors(**cfg.priors)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"priors block: {exc}") from exc
    chains = mc["chains"]
    jobs = [(payload, x, c) for c in range(chains)]
    workers = min(_threads(), chains)
    if workers > 1:
        with cf.ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_fit_one, jobs))
    else:
        results = [_fit_one(j) for j in jobs]
    d = cfg.out_dir
    for c, (csv_text, states, _) in enumerate(results):
        stem = "trace" if chains == 1 else f"trace_chain{c}"
        atomic_write(d / f"{stem}.csv", csv_text)
        atomic_write(d / f"{stem}.states.jsonl", states)
    summary = _summary([r[2] for r in results])
    summary["data"] = {"path": str(dpath), "n": int(x.size), "delta": cfg.delta}
    atomic_write(d / "summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(f"wrote {chains} trace(s) with {len(results[0][2])} kept iterations to {d}")
    return EXIT_OK


def _parse_grid(spec: str):
    try:
        lo, hi, cnt = spec.split(",")
        lo, hi, cnt = float(lo), float(hi), int(cnt)
    except ValueError as exc:
        raise ConfigError("--grid must be MIN,MAX,COUNT") from exc
    if not (hi > lo and cnt >= 2):
        raise ConfigError("--grid needs MAX > MIN and COUNT >= 2")
    return np.linspace(lo, hi, cnt)


def cmd_predict(cfg: RunConfig, trace: str, grid: str, horizon: float) -> int:
    from .inference.predictive import PredictiveSpec, predictive_density
    from .inference.sampler import PosteriorTrace
    from .levy import GenGammaFamily
    from .ou_kernel import OuKernel

    xs = _parse_grid(grid)
    if not horizon > 0:
        raise ConfigError("--horizon must be positive")
    tpath = Path(trace)
    spath = tpath.with_name(tpath.name[:-4] + ".states.jsonl") if tpath.suffix == ".csv" else tpath
    try:
        states_text = spath.read_text(encoding="utf-8")
        csv_text = tpath.read_text(encoding="utf-8") if tpath != spath else None
    except FileNotFoundError as exc:
        raise ConfigError(f"trace file not found: {exc.filename}") from exc
    try:
        tr = PosteriorTrace.from_files(csv_text or "iter\n", states_text)
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot parse trace: {exc}") from exc
    if not tr.states:
        raise ConfigError("trace is empty")
    n = tr.states[0].w.size
    k = OuKernel(float(cfg.model_value("lam")), cfg.delta, n,
                 GenGammaFamily(float(cfg.model_value("alpha")), float(cfg.model_value("b"))), cfg=cfg.quad())
    dens, se, mass = predictive_density(tr, PredictiveSpec(horizon, xs), k, exponents=cfg.exponents)
    integral = float(np.trapezoid(dens, xs))
    text = _csv_text(["x", "density", "mc_se"], zip(xs, dens, se))
    text += f"# grid_integral={integral!r}\n# draws={len(tr.states)}\n# min_w_mass={float(mass.min())!r}\n"
    atomic_write(cfg.out_dir / "predictive.csv", text)
    print(f"grid integral {integral:.6f} over [{xs[0]}, {xs[-1]}]")
    return EXIT_OK


def cmd_validate(suite: str, n: Optional[int]) -> int:
    from .validation import SUITES, run_suite

    if suite not in SUITES:
        print(f"unknown suite {suite!r}; available: {', '.join(SUITES)}", file=sys.stderr)
        return EXIT_USAGE
    rep = run_suite(suite, n)
    print(rep.table())
    return EXIT_OK if rep.passed else EXIT_FAIL


# -- entry point -------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ghsv", description="GH stochastic volatility with OU-driven jumps")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required=True):
        sp.add_argument("--config", required=config_required, metavar="PATH")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out-dir", default=None, metavar="PATH")

    common(sub.add_parser("simulate", help="simulate a dataset"))
    fit = sub.add_parser("fit", help="run the MCMC sampler")
    common(fit)
    fit.add_argument("--data", default=None, metavar="PATH")
    pred = sub.add_parser("predict", help="posterior predictive density of the next return")
    common(pred)
    pred.add_argument("--trace", required=True, metavar="PATH")
    pred.add_argument("--grid", required=True, metavar="MIN,MAX,COUNT")
    pred.add_argument("--horizon", type=float, default=None)
    val = sub.add_parser("validate", help="run an oracle suite")
    common(val, config_required=False)
    val.add_argument("--suite", required=True)
    val.add_argument("--n", type=int, default=None)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    # let "--grid -5,5,101" through: argparse would read the value as a flag
    for i in range(len(argv) - 1):
        if argv[i] == "--grid" and argv[i + 1].startswith("-"):
            argv[i:i + 2] = [f"--grid={argv[i + 1]}", ""]
    argv = [a for a in argv if a != ""]
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    from .inference.sampler import SweepError

    try:
        if args.command == "validate":
            return cmd_validate(args.suite, args.n)
        cfg = load_config(args.config, args.seed, args.out_dir)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "fit":
            return cmd_fit(cfg, args.data)
        horizon = args.horizon if args.horizon is not None else cfg.delta
        return cmd_predict(cfg, args.trace, args.grid, horizon)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SweepError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (QuadratureError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
