"""Fee-setting intermediation between one seller and one buyer.

The intermediary posts a fee schedule ``w(P)``; the seller picks a price, the
buyer accepts or not, and the intermediary keeps ``w(P)`` on a sale.  This
package computes the seller's equilibrium, the intermediary's expected revenue,
and the Myerson and efficient benchmarks, and checks the approximation bounds
that relate them.
"""

from .dist import (
    Distribution,
    Exponential,
    GeneralizedPareto,
    MaxOfIID,
    Power,
    ReverseGeneralizedPareto,
    Support,
    TabulatedDistribution,
    Uniform,
    WorstCaseSeller,
    diff_distribution,
    max_of_iid,
)
from .errors import (
    AccuracyError,
    ConfigurationError,
    ConsistencyError,
    DomainError,
    EquilibriumNotFound,
    FeeSettingError,
    PreconditionError,
    RangeError,
    SingularityError,
)
from .evaluation import (
    EvalReport,
    MonteCarlo,
    Quadrature,
    expected_fee_revenue,
    expected_max_surplus,
    expected_myerson_revenue,
    ratio_report,
    rev_apx_uniform_closed_form,
)
from .mech import (
    Affine,
    Constant,
    FeeSchedule,
    General,
    SellerStrategy,
    TradeOutcome,
    bne_affine,
    bne_general,
    ln13_affine_schedule,
    mhr_constant_schedule,
    myerson_outcome,
    optimal_fee_schedule,
    run_fee_mechanism,
    thm1_schedule,
    vcg_outcome,
)
from .numerics import Estimate

__version__ = "0.1.0"

__all__ = [
    "Distribution",
    "Exponential",
    "GeneralizedPareto",
    "MaxOfIID",
    "Power",
    "ReverseGeneralizedPareto",
    "Support",
    "TabulatedDistribution",
    "Uniform",
    "WorstCaseSeller",
    "diff_distribution",
    "max_of_iid",
    "AccuracyError",
    "ConfigurationError",
    "ConsistencyError",
    "DomainError",
    "EquilibriumNotFound",
    "FeeSettingError",
    "PreconditionError",
    "RangeError",
    "SingularityError",
    "EvalReport",
    "MonteCarlo",
    "Quadrature",
    "expected_fee_revenue",
    "expected_max_surplus",
    "expected_myerson_revenue",
    "ratio_report",
    "rev_apx_uniform_closed_form",
    "Affine",
    "Constant",
    "FeeSchedule",
    "General",
    "SellerStrategy",
    "TradeOutcome",
    "bne_affine",
    "bne_general",
    "ln13_affine_schedule",
    "mhr_constant_schedule",
    "myerson_outcome",
    "optimal_fee_schedule",
    "run_fee_mechanism",
    "thm1_schedule",
    "vcg_outcome",
    "Estimate",
]
