"""Exact dephasing of a qubit centrally coupled to a transverse-field Ising ring."""

from .errors import (
    AmbiguityError,
    DomainError,
    IntegrationError,
    InvalidConfigError,
    InvalidGridError,
    IsingEchoError,
    NotFoundError,
    PhysicalityError,
    ResourceError,
)
from .spectrum import (
    ChainConfig,
    ModeSpectrum,
    bogoliubov_angle,
    dispersion,
    mode_spectrum,
    momentum_grid,
)
from .echo import (
    DecoherenceSeries,
    TimeGrid,
    decoherence_factor,
    echo_series,
    equatorial_state,
    exact_qubit_state,
    loschmidt_echo,
    nyquist_dt,
    pure_state,
    purity,
)
from .dynamics import RateSeries, dephasing_rate, evolve_master_equation, lamb_shift, rate_series
from .measures import (
    NonMarkovianityReport,
    blp_measure,
    fisher_flow,
    recurrence_time,
    rhp_entanglement_measure,
    trace_distance,
)
from .sweep import SweepSpec, detect_critical_point, load_sweep_spec, run_sweep

__version__ = "0.1.0"
