"""Likelihoods, samplers and posterior summaries."""

from .crp import crp_predictive_weights, crp_sample, crp_tree
from .likelihood import ReturnsData, log_normal_terms, loglik_partition_sum, loglik_spath_sum
from .predictive import PredictiveSpec, posterior_tau_mean, predictive_density
from .sampler import (GhsvSampler, LatentState, McmcConfig, PosteriorTrace, Priors, SweepError,
                      ThetaParams, gibbs_sweep, run_chain, spath_mh_move)
