"""
dialab: Monte Carlo, closure and continued-fraction solutions of a
non-Markovian stochastic oscillator and of wave propagation in a random
medium.
"""

from .errors import (
    AccuracyError,
    ConfigError,
    DialabError,
    DivergenceError,
    DomainError,
    FitError,
    InputError,
    InversionError,
    ParameterError,
    PoleError,
)
from .stochastic import (
    EnsembleStats,
    OUParams,
    OUPath,
    RngSeed,
    TimeGrid,
    estimate_autocorrelation,
    generate_ou_path,
    monte_carlo_phase_average,
    sample_ou_paths,
)
from .solvers import (
    ModelParams,
    Series,
    WaveParams,
    ensemble_green_function,
    ensemble_wave_field,
    solve_dia_volterra_model,
    solve_dia_volterra_wave,
    solve_model_sample,
    solve_wave_sample,
)
from .laplace import (
    ApproximantSpec,
    InversionConfig,
    InversionWarning,
    LaplaceFunction,
    abscissa_bound,
    approximant_function,
    approximant_poles,
    dia_approximant,
    functional_residual,
    invert_approximant,
    invert_laplace,
    perturbative_transform,
)
from .closed_forms import (
    AttenuationReport,
    FirstOrderCoeffs,
    appendix_f_approx,
    appendix_green_first,
    appendix_mu_sq,
    attenuation_report,
    dia_freq_factor,
    dia_rate,
    dia_third_green,
    dia_wave,
    first_order_system_coeffs,
    freq_sq_shift,
    freq_sq_shift_closed,
    perturbative_freq_factor,
    perturbative_green,
    perturbative_rate,
    perturbative_wave,
    phase_average_closed,
)
from .analysis import (
    EnvelopeFit,
    ErrorMetrics,
    compare_series,
    emit_table,
    fit_damped_oscillation,
)

__version__ = "0.1.0"
