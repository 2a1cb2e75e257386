import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from ghsv import _kernels_py, kernels
from ghsv.levy import GenGammaFamily, gen_gamma_psi, GenGammaParams
from ghsv.ou_kernel import KernelTables, OuKernel
from ghsv.partitions import enumerate_spaths, log_spath_multiplicity

try:
    from ghsv import _kernels as _kernels_c
except ImportError:
    _kernels_c = None

needs_ext = pytest.mark.skipif(_kernels_c is None, reason="compiled extension not built")
ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "benchmarks"))


def test_backend_flags():
    assert kernels.BACKEND in ("cython", "python")
    assert set(kernels.KERNEL_BACKENDS) == {"spath_mh_steps", "laplace_w_scan", "log_multiplicity",
                                            "psi_gen_gamma"}


def test_pure_python_env_flag():
    env = {**os.environ, "GHSV_PURE_PYTHON": "1"}
    out = subprocess.run([sys.executable, "-c", "from ghsv import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@pytest.mark.parametrize("mod", [_kernels_py] + ([_kernels_c] if _kernels_c else []))
def test_log_multiplicity(mod):
    for n in range(1, 7):
        for m in enumerate_spaths(n):
            assert mod.log_multiplicity(np.asarray(m, dtype=np.int64)) == pytest.approx(
                log_spath_multiplicity(m), abs=1e-12)


@pytest.mark.parametrize("mod", [_kernels_py] + ([_kernels_c] if _kernels_c else []))
def test_psi(mod):
    s = np.array([0.0, 0.1, 2.0, 50.0])
    for a, b in [(0.0, 1.0), (0.5, 1.0), (-1.0, 2.0), (0.5, 0.0)]:
        np.testing.assert_allclose(mod.psi_gen_gamma(s, a, b), gen_gamma_psi(GenGammaParams(a, b), s),
                                   rtol=1e-13, atol=1e-300)


@needs_ext
@pytest.mark.parametrize("n", [5, 40])
def test_backends_agree(n):
    from bench_kernels import _copy, _inputs
    spath, scan = _inputs(n, seed=n)
    outs = []
    for mod in (_kernels_py, _kernels_c):
        m = spath[0].copy()
        stop, acc = mod.spath_mh_steps(m, *spath[1:])
        args = _copy(scan)
        accepted, dtot = mod.laplace_w_scan(**args)
        outs.append((m, stop, acc, np.asarray(accepted), dtot, args["w"], args["R"]))
    for a, b in zip(*outs):
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-14)


def test_spath_steps_stop_on_missing_column():
    k = OuKernel(1.0, 1.0, 4, GenGammaFamily(0.0, 1.0))
    tab = KernelTables(k, np.ones(4), emax=1)
    m = np.array([1, 1, 1, 1], dtype=np.int64)
    pi = np.array([0], dtype=np.int64)
    pj = np.array([1], dtype=np.int64)
    # growing m_2 to 2 needs column e = 2 but the table stops at e = 1
    for mod in [_kernels_py] + ([_kernels_c] if _kernels_c else []):
        stop, acc = mod.spath_mh_steps(m, np.ascontiguousarray(tab.phi_table(1)), pi, pj,
                                       np.array([0.0]), 0, True)
        assert stop == 0 and acc == 0 and list(m) == [1, 1, 1, 1]
        with pytest.raises(ValueError):
            mod.spath_mh_steps(np.array([4, 0, 0, 0], dtype=np.int64), np.ascontiguousarray(tab.phi_table(1)),
                               pi, pj, np.array([0.0]), 0, True)


def test_w_scan_rebuilds_tables_consistently():
    """After a scan, R and w agree with a fresh table (the scan updates R in place)."""
    from bench_kernels import _copy, _inputs
    _, scan = _inputs(12, seed=1)
    args = _copy(scan)
    kernels.laplace_w_scan(**args)
    k = OuKernel(0.5, 1.0, 12, GenGammaFamily(0.3, 1.0))
    np.testing.assert_allclose(args["R"], k.scaled_r(args["w"]), rtol=1e-12)


def test_benchmark_script_runs():
    out = subprocess.run([sys.executable, str(ROOT / "benchmarks" / "bench_kernels.py"), "--n", "20",
                          "--repeat", "1"], capture_output=True, text=True, check=True)
    assert "python" in out.stdout
