"""Holonomic gate simulator for Josephson charge-qubit networks.

Wilson-loop transport, real-time adiabatic evolution and closed-form
quadratures for the dark-state gates of switchable junction blocks, plus a
decoherence budget for the operating window.
"""

from .analysis import (
    BudgetReport,
    ErrorBudget,
    OperationWindow,
    adiabatic_window,
    evaluate_budget,
    example_budget,
    fidelity,
    lz_probability,
    phase_error,
    quasiparticle_rate,
)
from .evolution import (
    GateEstimate,
    LoopDiagnostics,
    ScanResult,
    Schedule,
    adaptive_profile,
    adiabatic_gate,
    calibrate_schedule,
    default_scan_etas,
    geometric_phase,
    landau_zener_scan,
    propagate,
    realized_eta,
    survey_loop,
    traversal_profile,
    traversal_rate,
)
from .gates import (
    Encoding,
    LogicalGate,
    compose,
    euler_decompose,
    extract_logical,
    ideal_gate,
    phase_distance,
    strip_global_phase,
)
from .holonomy import (
    ConnectionEstimate,
    HolonomyResult,
    LoopSegment,
    ParameterLoop,
    TransportError,
    berry_phase_cz,
    berry_phase_z,
    canonical_loop_phase_cz,
    canonical_loop_phase_z,
    dark_energy,
    loop_holonomy,
    rotation_angle_x,
    standard_loop,
    wilczek_zee_connection,
)
from .junction import (
    JunctionParams,
    amplitude,
    coupling_at,
    effective_coupling,
    phase_shift,
)
from .network import (
    BlockKind,
    BlockLayout,
    ControlSettings,
    HermitianOperator,
    block_generators,
    block_hamiltonian,
    conserved_charges,
    control_coefficients,
    cz_layout,
    joint_tunneling_amplitudes,
    path_coefficients,
    prototype_hamiltonian,
    x_layout,
    z_layout,
)
from .spectrum import (
    EigenSystem,
    SubspaceBasis,
    analytic_cz_subspace,
    analytic_x_corner_limit,
    analytic_x_subspace,
    analytic_z_subspace,
    default_tolerance,
    degenerate_subspace,
    eigendecompose,
    projector_distance,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
