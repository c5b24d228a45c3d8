"""Curvature functionals W(r) = integral of F(H, K) on surfaces in R^3.

Submodules: ``functional`` (integrands and their jets), ``surface``
(analytic patches and their geometry), ``variational`` (Euler-Lagrange
residual, stress tensor, fluxes, boundary conditions, FD oracles), ``axisym``
(meridian ODE for rotationally symmetric critical surfaces), ``mesh``
(discrete curvature on triangle meshes), ``flow`` (gradient descent on
meshes) and ``cli``.
"""

from .errors import (
    ClosedSurface,
    DegenerateMetric,
    DegenerateTriangle,
    FloorHit,
    InvalidParams,
    JetSingular,
    MissingSupportNormal,
    NonAdmissiblePoint,
    NonManifold,
    NumericalError,
    OutOfRange,
    ParseError,
    StepFloor,
    ValidationError,
    WsurfError,
)
from .functional import FunctionalSpec, builtin, classify_scaling, eval_jet, scaling_excess
from .surface import SurfacePatch, geometry_at, geometry_batch, make_builtin, rescale
from .variational import (
    VariationField,
    boundary_conditions,
    el_residual,
    first_variation,
    flux_check,
    stress_divergence_check,
    stress_tensor,
)
from .axisym import OdeState, Trajectory, integrate, shoot
from .mesh import TriMesh, load_mesh, save_mesh, tessellate, vertex_curvatures
from .flow import FlowConfig, FlowTrace, descent_step, discrete_energy, run_flow

__version__ = "0.1.0"
