"""Conditional risk minimization for dependent stochastic processes.

Kernel-weighted estimation of the conditional risk, predictors fitted by
weighted least squares, a hidden-Markov simulator with exact conditional
oracles, and numerical evaluation of the finite-sample concentration bound.
"""

from .backend import BACKEND_NAME, HAVE_COMPILED
from .bounds import (BoundParams, VacuousRegimeError, block_schedule,
                     derived_thresholds, hypercube_covering,
                     linear_covering_bound, scaling_check, concentration_bound,
                     concentration_terms)
from .estimator import (Hypothesis, NoEffectiveSamplesError, SampleSequence,
                        WeightVector, conditional_risk_estimate,
                        empirical_marginal_risk, estimate_p, estimate_q,
                        history_weights, read_sequence, write_sequence)
from .kernels import (KernelSpec, LabeledHistory, StratifiedKernelSpec,
                      eval_kernel, stratified_set_weight, verify_kernel_axioms)
from .learners import (DegenerateDesignError, TrainConfig, ecrm_fit, erm_fit,
                       loss, sliding_window_fit)
from .processes import (HiddenMarkovSpec, InconsistentObservationError,
                        NotMixingError, StatePosterior, beta_mixing_bound,
                        conditional_risk_oracle, forward_posterior,
                        per_state_risks, random_chain, simulate)

__version__ = "0.1.0"

__all__ = [
    "BACKEND_NAME", "HAVE_COMPILED", "BoundParams", "VacuousRegimeError",
    "block_schedule", "derived_thresholds", "hypercube_covering",
    "linear_covering_bound", "scaling_check", "concentration_bound",
    "concentration_terms", "Hypothesis", "NoEffectiveSamplesError",
    "SampleSequence", "WeightVector", "conditional_risk_estimate",
    "empirical_marginal_risk", "estimate_p", "estimate_q", "history_weights",
    "read_sequence", "write_sequence", "KernelSpec", "LabeledHistory",
    "StratifiedKernelSpec", "eval_kernel", "stratified_set_weight",
    "verify_kernel_axioms", "DegenerateDesignError", "TrainConfig",
    "ecrm_fit", "erm_fit", "loss", "sliding_window_fit", "HiddenMarkovSpec",
    "InconsistentObservationError", "NotMixingError", "StatePosterior",
    "beta_mixing_bound", "conditional_risk_oracle", "forward_posterior",
    "per_state_risks", "random_chain", "simulate",
]
