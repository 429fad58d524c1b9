"""Certified Floquet analysis of linear time-periodic systems via truncated Hill matrices."""

from .bounds import (ErrorCertificate, direct_error_bound, optimal_required_truncation,
                     required_truncation, subharmonic_error_bound, taylor_remainder,
                     xi_polynomial_bound)
from .errors import (ConvergenceError, DimensionError, DomainError, EmptyFitError,
                     HillCertError, InvalidEnvelopeError, ParameterError, StiffnessError,
                     StructureError)
from .floquet import (Status, StabilityVerdict, analyze_stability, certify_disk_containment,
                      certify_instability, floquet_multipliers, mathieu_verdict,
                      minimal_n_for_guarantee, pseudospectrum_membership)
from .fourier import (DecayEnvelope, FourierMatrixSeries, coefficients_from_samples, convolve,
                      eval_series, fit_decay_envelope, optimal_finite_support_envelope)
from .hill import (HillOperators, SubharmonicOperators, assemble_full_subharmonic, assemble_hill,
                   assemble_subharmonic_pair, permutation_decouple)
from .projection import (Formulation, FundamentalApprox, direct_fundamental, q_blocks,
                         reference_fundamental, subharmonic_fundamental)

__version__ = "0.1.0"
