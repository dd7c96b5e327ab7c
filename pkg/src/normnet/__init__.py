"""Norm-constrained ReLU networks: explicit constructions with certified
budgets, complexity probes and small-scale training."""

__version__ = "0.1.0"

from .errors import (ConfigError, Diagnostic, DimensionError, DivergenceError,
                     InfeasibleBudgetError, NormNetError, RegimeError, ResourceCapError)
from .net import (AffineLayer, KappaReport, ReluNet, evaluate, kappa, lipschitz_probe, load,
                  normalize, rescale, save, snn_embed, truncate)
from .algebra import (BudgetBound, compose, concat, identity_net, lincomb, linear_sum, pad,
                      precompose_affine, stack)
from .probes import (GridSpec, SignPack, BumpClassSpec, RademacherEstimate, approx_lower_bound_formulas,
                     bump_eval, greedy_sign_packing, rademacher_bound_formulas,
                     rademacher_linear_lb, rho2, sup_error, w1_nn_probe)
from .constructions import (ApproxCertificate, HolderSpec, build_approximant, build_monomial,
                            build_partition, build_product, build_square, build_taylor_net,
                            certify, make_target)
from .learn import (GanConfig, RegressionConfig, TrainReport, backprop, ipm_estimate,
                    kappa_penalty_grad, kappa_project, scaling_identity_check, train_gan,
                    train_regression)
from .harness import ExperimentConfig, load_config, run, validate
