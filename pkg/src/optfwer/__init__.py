"""Most powerful family-wise error control for exchangeable hypotheses."""

from .baselines import bonferroni, hochberg, holm, hommel, hommel_closure_oracle
from .coefficients import CoefficientBundle, error_coeffs, esp_all, net_benefits, power_coeff
from .densities import AlternativeModel, g_eval, parse_model, sample_p
from .estimator import LabeledSampleBatch, avg_power_hat, fwer_hat, fwer_integral_oracle, make_batch, power_hat
from .optimizer import FitResult, OptimizerConfig, bisect_coordinate, contraction_diagnostic, fit
from .policy import DualVector, PolicyResult, decide, optimal_l_star

__version__ = "0.1.0"
