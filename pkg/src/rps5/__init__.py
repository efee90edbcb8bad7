"""Five-species cyclic competition: simulation, symbolic itineraries and
stability regions of cycling patterns near the heteroclinic network."""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    BETA,
    DerivedQuantities,
    Equilibrium,
    Params,
    XiQSpectrum,
    axis_equilibrium,
    derived_quantities,
    jacobian,
    rotate,
    sufficient_condition,
    vector_field,
    xi_q,
    xi_q_eigenvalues,
    xi_q_stability,
    xi_t,
)
from .integrate import (  # noqa: F401
    IntegratorOptions,
    Trajectory,
    default_start,
    integrate,
    to_linear,
    to_log,
)
from .itinerary import (  # noqa: F401
    ItineraryRecord,
    RootDetection,
    Word,
    canonical_rotation,
    classify_point,
    detect_root,
    epoch_ratios,
    extract_itinerary,
    word_of,
)
from .returnmap import (  # noqa: F401
    LogState,
    MapParams,
    Orbit,
    global_map,
    iterate,
    local_map,
    make_state,
    phi,
    time_of_flight,
)
from .stability import (  # noqa: F401
    ClosedFormResult,
    Collection,
    EigenData,
    StabilityReport,
    basic_matrix,
    closed_form,
    collection,
    eigen3,
    sequence_stability,
    stability_scalar,
)
from .sweep import (  # noqa: F401
    BoundaryPolyline,
    Classification,
    CrossValidation,
    GridSpec,
    TongueFamily,
    classify_by_simulation,
    cross_validate,
    enumerate_tongues,
    grid_sweep,
    trace_boundary,
)
