"""Generalized hyperbolic stochastic volatility driven by an OU process with
generalized-Gamma jumps: densities, kernels, exact likelihoods, MCMC and
simulation."""

from .distributions import (GigParams, ReturnParams, gig_logpdf, gig_sample, ghsv_logpdf,
                            ghsv_logpdf_via_mixture, sample_return)
from .kernels import BACKEND
from .levy import DensitySpecifiedFamily, GenGammaFamily, GenGammaParams, sample_jumps
from .numerics import QuadratureConfig, QuadratureError, RandomSource, integrate_1d, thiele_cumulants
from .ou_kernel import KernelTables, OuKernel
from .partitions import Partition, SPath, enumerate_partitions, enumerate_spaths
from .simulation import SimConfig, SimOutput, simulate_bdlp, simulate_dataset

__version__ = "0.1.0"
