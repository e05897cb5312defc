"""Second-order Rayleigh-Schroedinger energy corrections.

Exact and floating backends for model problems (oscillator, hydrogen s
states, particle in a box) and finite matrices, together with partial-sum
analysis, the beta/theta cascade and large-n asymptotics.
"""

from .cascade import (
    CascadeDecomposition,
    decompose,
    product_diagnostic,
    reconstruct,
)
from .core import (
    Approx,
    CorrectionRecord,
    CorrectionSeries,
    Exact,
    RSPTError,
    Scalar,
    compare,
    scalar_eval,
)
from .engine import GridSpec, compute_series, second_order
from .matrixlab import MatrixProblem, random_problem, second_order_all
from .models import PIB_LINEAR, HydrogenS, Oscillator, ParticleInBox, closed_form_E2
from .sumrules import asymptotic_fit, check_inequality, classify, partial_sums

__version__ = "0.1.0"

__all__ = [
    "Approx",
    "CascadeDecomposition",
    "CorrectionRecord",
    "CorrectionSeries",
    "Exact",
    "GridSpec",
    "HydrogenS",
    "MatrixProblem",
    "Oscillator",
    "PIB_LINEAR",
    "ParticleInBox",
    "RSPTError",
    "Scalar",
    "asymptotic_fit",
    "check_inequality",
    "classify",
    "closed_form_E2",
    "compare",
    "compute_series",
    "decompose",
    "partial_sums",
    "product_diagnostic",
    "random_problem",
    "reconstruct",
    "scalar_eval",
    "second_order",
    "second_order_all",
]
