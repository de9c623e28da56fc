"""Symbolic chart tensors, projective connections, and parallel transport."""

from .expr import (
    EvalDomainError,
    ExactModeError,
    Expr,
    ExprError,
    ExprSyntaxError,
    VariableRangeError,
    diff,
    evaluate,
    gradient,
    parse,
    to_text,
)
from .kernel import BACKEND, available_backends, eval_scalar, eval_table
from .program import compile_expr, compile_table
from .tensor import (
    PointTensor,
    Tensor,
    TensorField,
    antisymmetrize,
    contract,
    kronecker_delta,
    lower_index,
    raise_index,
    symmetrize,
    tensor_product,
    trace_free_skew,
    trace_free_sym,
)
from .geometry import (
    AffineConnection,
    ChartGeometry,
    CurvaturePack,
    GeometryError,
    SingularMetricError,
    connection_pack,
    cotton_weyl_relation,
    covariant_derivative,
    derive_pack,
    levi_civita,
    riemann,
    torsion,
    verify_bianchi,
)
from .projective import (
    Upsilon,
    check_weyl_cotton_invariance,
    einstein_deviation,
    gradient_upsilon,
    projective_change,
)
from .tractor import (
    CotractorSection,
    S2CotractorSection,
    S2TractorSection,
    Section,
    SkewTractorSection,
    TractorSection,
    cotractor_nabla,
    flat_skew_prolong_nabla,
    induced_s2_section,
    metric_lift,
    metrisability_obstruction,
    metrisability_prolong_nabla,
    proj_prolong_nabla,
    s2_cotractor_dual_pairing,
    s2_dual_nabla,
    s2_tractor_nabla,
    s2_tractor_nabla_expanded,
    skew_induced_parts,
    splitting_transform,
    tractor_cotractor_pairing,
    tractor_curvature,
    tractor_nabla,
)
from .transport import (
    CurveSegment,
    HolonomyReport,
    NonClosedLoopError,
    NotParallelError,
    TangentSection,
    TransportBundle,
    TransportError,
    circle_loop,
    cotractor_bundle,
    holonomy_dimension,
    line_segment,
    loop_matrix,
    rectangle_loop,
    reverse_loop,
    s2_cotractor_bundle,
    s2_tractor_bundle,
    sampled_pde_residual,
    seeded_loops,
    skew_bundle,
    solution_correspondence,
    tangent_bundle,
    tractor_bundle,
    transport,
    transported_sampler,
)

__version__ = "0.1.0"
