"""Arbitrary-precision laboratory for a Jacobi weight with an essential
singularity at both endpoints.

The library computes moments, recurrence coefficients and Hankel
determinants for the weight (1-x^2)^alpha * exp(-t/(1-x^2)) on (-1, 1),
then verifies the web of exact relations those quantities satisfy:
ladder-operator compatibility identities, nonlinear difference equations,
the polynomial's second-order ODE, t-evolution and Riccati equations, a
Painleve-V reduction with its sigma form, and the large-n behaviour
predicted by a Coulomb-fluid equilibrium measure.  Every check returns a
:class:`~pjlab.reports.ResidualReport` carrying the raw and relative
residual at a stated precision.
"""

from .coulomb import (
    DecayFit,
    DegenerateInputError,
    EquilibriumMeasure,
    ExpansionSeries,
    LogDFit,
    SeriesKind,
    UnfittedConstantError,
    beta_expansion,
    check_equilibrium,
    check_multiplier_derivative,
    decay_fit,
    density,
    density_mass,
    expansion_eval,
    fit_logd_constants,
    free_energy,
    free_energy_derivative,
    free_energy_expansion,
    logd_expansion,
    multiplier_expansion,
    p_expansion,
    sigma_expansion,
    solve_support,
    support_root_radical,
)
from .orthopoly import (
    MomentTable,
    PolyCoeffs,
    RecurrenceTable,
    WeightParams,
    build_moments,
    build_recurrence_table,
    ladder_integrals,
    moment_closed_form,
    moments_by_quadrature,
    polynomial_coeffs,
    weight_value,
)
from .painleve import (
    StencilBundle,
    build_stencil_bundle,
    cached_table,
    check_painleve_v,
    check_painleve_v_r0,
    check_riccati,
    check_second_order_odes,
    check_sigma_ode,
    check_t_evolution,
    closed_form_r0,
)
from .precision import (
    GUARD_BITS,
    DomainError,
    PrecisionContext,
    PrecisionExhaustedError,
    central_derivative,
    kummer_u,
    real_cubic_root,
    run_with_escalation,
    stencil_derivative,
    tanh_sinh_family,
    tanh_sinh_integrate,
)
from .relations import (
    check_compatibility,
    check_lowering,
    check_polynomial_ode,
    ladder_rational,
    residual_beta_difference,
    residual_p_difference,
    residual_sigma_difference,
)
from .reports import (
    CSV_COLUMNS,
    ResidualReport,
    format_mpf,
    make_report,
    report_row,
    reports_to_csv,
    reports_to_json,
    rows_to_csv,
    rows_to_json,
    sort_reports,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
