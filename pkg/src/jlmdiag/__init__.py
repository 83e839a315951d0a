"""Joint light-matter diagram enumeration and effective Hamiltonians.

Build a model, enumerate its operator strings by order, weigh them, and
eliminate fast-oscillating terms::

    from jlmdiag import build_preset, assemble_effective, EliminationPolicy

    model = build_preset("jc")
    H = assemble_effective(model, 1, EliminationPolicy(T=1000))
    print(H.to_text())
"""

from .algebra import (
    BosonString,
    NormalPolynomial,
    TransitionString,
    compose,
    detuning_of,
    hermitian_conjugate,
    liouvillian_eigencheck,
    normal_order,
)
from .diagrams import (
    DiagramClass,
    ResourceError,
    TermClassification,
    classify,
    combinatorial_bound,
    enumerate_order_n,
    render_diagram,
)
from .elimination import (
    EffectiveHamiltonian,
    EffectiveTerm,
    EliminationPolicy,
    assemble_effective,
    continuum_mediated,
    project,
    pv_integral,
    resonance_fraction,
)
from .fock import FockBasis, FockTruncation, TruncationError
from .model import (
    PRESETS,
    BosonMode,
    ContinuumFamily,
    FlatEnvelope,
    GaussianEnvelope,
    InteractionModel,
    MatterLevel,
    ModelValidationError,
    QubitModel,
    QubitOp,
    ZerothOp,
    build_preset,
    discretize_continuum,
    embed_qubits,
    validate_model,
)
from .oracle import (
    ComparisonReport,
    compare_effective_vs_exact,
    dressed_spectrum,
    fock_hamiltonian,
    propagate,
    quadrature_weight,
)
from .weights import (
    Placement,
    WeightFunction,
    WeightTerm,
    canonical_weight,
    degenerate_limit_weight,
    placements,
    reverse_weight,
    total_weight,
)

__version__ = "0.1.0"
