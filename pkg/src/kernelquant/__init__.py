"""Operator-valued kernels, their connection geometry and the quantization of
kernel-preserving flows, with finite-sample numerics."""
from .conventions import DEFAULT as DEFAULT_CONVENTIONS, Conventions
from .fd import DEFAULT_STEPS, FDSteps
from .gauge_geometry import (Chart1Form, Chart2Form, FlowSpec, HamiltonianPair, bracket,
                             cocycle_solve, connection_form, covariant_diff, curvature,
                             flow_invariance_residual, hamiltonian_residual,
                             lie_deriv_connection_residual, metric_compat_residual, phi_from_pair)
from .kernel_core import (BundlePoint, ChartKernel, ChartPoint, Representation, bundle_extend,
                          eval_kernel, hermitian_residual, make_kernel, transition_amplitude)
from .quantization import (CoherentFrame, GeneratorMatrix, KernelSection, Propagator, build_frame,
                           generator_matrix, ks_apply, prequantization_commutator_residual, propagate,
                           propagator_vs_flow_residual, reconstruct_F, selfadjointness_residual,
                           unitary_gauge)
from .rkhs import (FeatureMap, GramSystem, SpanElement, assemble_gram, certify_positivity, factorize,
                   factorization_equivalence, norm_bound_check, reproducing_residual)

__version__ = "0.1.0"
