"""Monitored spin-1/2 chains: Lyapunov spectra, entanglement transitions,
and fixed-point checks of the outcome-averaged channel."""

from .analysis import (
    GapFitResult,
    GapSeries,
    equilibration_time,
    fit_gap_extrapolation,
    load_gap_series,
    timeseries_stats,
)
from .circuit import (
    FLOQUET,
    TEMPORALLY_RANDOM,
    CircuitModel,
    OutcomeRecord,
    TrajectoryEngine,
    apply_measurement_layer,
    brickwork_layer,
    floquet_theta,
    read_trajectory_log,
    sample_outcomes,
    sample_theta,
    write_trajectory_log,
)
from .core import (
    KrausPair,
    PauliString,
    StateVector,
    ThetaSet,
    TwoSiteUnitary,
    apply_single_site,
    apply_two_site,
    build_kraus,
    build_two_site_gate,
    pauli_dense,
)
from .cptp import (
    AlgebraClosure,
    StationaryReport,
    SuperOperator,
    algebra_closure,
    build_superoperator,
    pauli_construction_check,
    stationary_analysis,
)
from .lyapunov import (
    LyapunovAccumulator,
    LyapunovEstimate,
    ProbeEnsemble,
    check_convergence,
    default_bin_size,
    evolve_bin,
    init_probes,
    orthonormalize,
    prepare_engine,
    record_bin,
    run_spectrum,
    shift_spectrum,
    svd_oracle,
)
from .observables import (
    GapValue,
    ReducedDensityMatrix,
    ground_state_probe,
    half_chain_entropy,
    endpoint_mutual_information,
    mutual_information,
    reduced_density_matrix,
    spectral_gap,
    von_neumann_entropy,
)

__version__ = "0.1.0"
