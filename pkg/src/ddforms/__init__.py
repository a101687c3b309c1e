"""Discrete distributional differential forms on simplicial meshes.

Builds broken finite element spaces over the strata of a simplicial complex
with partial boundary markings, assembles the piecewise ("horizontal") and
jump ("vertical") differentials, and computes harmonic spaces of the
resulting finite-dimensional Hilbert complexes.  The distrib module ties
everything together: it verifies, on concrete meshes, the isomorphism
chain connecting simplicial homology to the harmonic spaces of the
conforming complex through the graded distributional complexes.
"""

from ddforms.mesh import (
    Simplex,
    RelativePair,
    build_complex,
    orientation_sign,
    boundary_matrix,
    betti_numbers,
    patch_pair,
    check_local_patch_condition,
    skeleton_pair,
    generate_mesh,
    load_mesh_file,
    save_mesh_file,
)
from ddforms.polyforms import (
    BarycentricForm,
    Family,
    whitney,
    whitney_form,
    build_element_space,
    exterior_derivative,
    wedge,
    hodge_star,
    codifferential,
    trace_to_face,
    l2_inner_product,
    check_local_exactness,
    check_geometric_decomposition,
    check_trace_surjectivity,
)
from ddforms.assembly import (
    BrokenSpace,
    LinearOp,
    Subspace,
    broken_space,
    graded_space,
    operator_D,
    operator_T,
    derivative_operator,
    kernel_space,
    adjoint,
    export_matrix,
)
from ddforms.hilbert import (
    ComplexInstance,
    harmonic_space,
    betti_from_complex,
    hodge_decompose,
    hodge_laplacian,
    laplace_solve,
    pseudoinverse,
)
from ddforms.distrib import (
    FamilySpec,
    build_family,
    total_complex,
    conforming_complex,
    chainlike_complex,
    redirected_lambda,
    redirected_gamma,
    harmonic_lambda,
    harmonic_gamma,
    harmonic_family,
    regularizer_R,
    regularizer_S,
    iso_step,
    verify_chain,
    skeleton_projection,
    verify_double_complex,
    check_conditions,
)

__all__ = [
    "Simplex",
    "RelativePair",
    "build_complex",
    "orientation_sign",
    "boundary_matrix",
    "betti_numbers",
    "patch_pair",
    "check_local_patch_condition",
    "skeleton_pair",
    "generate_mesh",
    "load_mesh_file",
    "save_mesh_file",
    "BarycentricForm",
    "Family",
    "whitney",
    "whitney_form",
    "build_element_space",
    "exterior_derivative",
    "wedge",
    "hodge_star",
    "codifferential",
    "trace_to_face",
    "l2_inner_product",
    "check_local_exactness",
    "check_geometric_decomposition",
    "check_trace_surjectivity",
    "BrokenSpace",
    "LinearOp",
    "Subspace",
    "broken_space",
    "graded_space",
    "operator_D",
    "operator_T",
    "derivative_operator",
    "kernel_space",
    "adjoint",
    "export_matrix",
    "ComplexInstance",
    "harmonic_space",
    "betti_from_complex",
    "hodge_decompose",
    "hodge_laplacian",
    "laplace_solve",
    "pseudoinverse",
    "FamilySpec",
    "build_family",
    "total_complex",
    "conforming_complex",
    "chainlike_complex",
    "redirected_lambda",
    "redirected_gamma",
    "harmonic_lambda",
    "harmonic_gamma",
    "harmonic_family",
    "regularizer_R",
    "regularizer_S",
    "iso_step",
    "verify_chain",
    "skeleton_projection",
    "verify_double_complex",
    "check_conditions",
]

__version__ = "0.1.0"
