"""Extended finite elements for 2D fracture with conformal-map quadrature on cut elements."""

from .errors import XfracError
from .geometry import CrackPath, InterfaceLine, Polygon, TipFrame, clip_element, side_of_path, signed_area
from .mesh import Mesh, perturb_mesh, structured_mesh
from .sccm import ConformalMap, chebyshev_disk_rule, midpoint_disk_rule, polygon_quadrature, solve_parameter_problem
from .quadrature import QuadratureConfig, QuadratureSet, sccm_rule, subcell_rule
from .enrichment import DofMap, build_dofmap, classify_nodes
from .fem import MaterialModel, assemble, discretize, solve
from .fracture import SifPair, hoop_angle, interaction_integral, quasi_static_run
from .bench import BenchmarkSpec, run

__version__ = "0.1.0"
