"""Numerical laboratory for curve shortening flow and its rescaled picture."""

__version__ = "0.1.0"

from .curvegeo import (
    DiscreteCurve,
    GeometryFields,
    circle,
    ellipse,
    f_functional,
    fourier_curve,
    gaussian_weights,
    geometry,
    hausdorff_distance,
    random_fourier,
    resample,
    shrinker_quantity,
)
from .errors import (
    BlowupDetected,
    ConfigInvalid,
    ConvergenceFailure,
    ConvexityLost,
    DegenerateCurve,
    EnergyUnderflow,
    ExactShrinker,
    FrameMissing,
    InterpolationFailure,
    InvalidCurve,
    NotAGraph,
    NotShrinking,
    ShrinkerLabError,
    StepRejected,
    TimeOutOfRange,
    WindowTooShort,
)
from .flowcore import (
    FlowTrajectory,
    SingularityEstimate,
    StepControl,
    estimate_singularity,
    from_rmcf,
    rescale_to_rmcf,
    run_mcf,
    run_rmcf,
)
from .gauge import (
    GraphFunction,
    ResidualReport,
    apply_L,
    normal_graph,
    reconstruct,
    residual,
)
from .spectral import (
    Spectrum,
    WeightedOperator,
    assemble,
    eigenpairs,
    rayleigh_bound,
)
from .frequency import (
    FrequencyTrace,
    LojasiewiczFit,
    approach_series,
    d_coefficient,
    dirichlet_einstein,
    dirichlet_energy,
    energy_I,
    frequency_U,
    lojasiewicz_fit,
    monitor,
    phi_c2_norm,
    shrinker_energy,
    superexponential_flag,
)
from .labcli import (
    ScenarioConfig,
    SeparationReport,
    build_curve,
    experiment_rate,
    experiment_separation,
    load_config,
    main,
    parse_config,
    parse_config_text,
    run,
    validate_config,
)
