"""Resource states, virtual-space simulation and gate-algebra analysis for
measurement-based computation in one-dimensional symmetry-protected phases."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .linalg import Channel, channel_spectrum, real_span_closure, trace_distance
from .cohomology import (
    Character,
    Cocycle,
    FiniteAbelianGroup,
    LogicalOps,
    ProjectiveIrrep,
    all_characters,
    canonicalize_generators,
    is_maximally_noncommutative,
    logical_ops_for_rep,
    projective_irrep,
    restrict_to_prime_power,
    standard_cocycle,
    trivial_cocycle,
    weyl_cocycle,
    weyl_ops,
)
from .mps import (
    MPSTensor,
    aklt_tensor,
    block_sites,
    fixed_point_data,
    haldane_tensor,
    is_primitive,
    random_primitive_junk,
    spt_tensor,
    symmetric_tensor,
    symmetry_check,
)
from .mbqc import (
    GateProgram,
    MeasurementBasis,
    MixedVirtualState,
    NuMatrix,
    aklt_basis,
    calibrate_nu,
    compile_rotation,
    error_scan,
    execute_and_compare,
    operational_nu,
    predicted_gate,
    program_for,
    pump_fixed_point,
    readout_probabilities,
    run_program,
    sample_trajectories,
    sum_over_outcomes_step,
    tilted_basis,
    wire_basis,
)
from .lie import (
    GeneratorSet,
    GridState,
    apply_move,
    brute_force_closure,
    fill_grid,
    generator_set,
    grid_init,
    reachability_report,
)
