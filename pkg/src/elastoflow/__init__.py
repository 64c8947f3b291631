"""Displacement estimation for elastography image pairs.

Optical flow with three extras that matter for tissue under compression:
quadratic pull toward tracked speckle-bubble motions, physical boundary
conditions on the field itself, and a linear-elastic background so the solver
only has to explain the deviation. A coarse-to-fine driver handles motions
beyond the linearization range.
"""

__version__ = "0.1.0"

from .fields import (GridGeometry, ScalarField, VectorField, field_linear_combine,
                     field_norm_l2, scalar_norm_l2)
from .linalg import ConvergenceError, IndefiniteOperatorError, PcgResult, pcg
from .derivatives import (ImagePair, sample_bilinear, spatial_gradient,
                          temporal_derivative, warp_image)
from .field_io import (FIELD_MAGIC, load_field, load_image, save_colormap_png,
                       save_field, save_image)
from .speckle import (Bubble, detect_bubbles, read_bubbles_csv, track_bubbles,
                      write_bubbles_csv)
from .elasticity import (BoundarySegment, BoundarySpec, MaterialParams,
                         solve_background, solve_plane_strain)
from .solver import (AssembledSystem, FunctionalTerms, SolverConfig, assemble,
                     functional_terms, functional_value, gaussian_weight, solve)
from .pyramid import (PyramidLevel, build_pyramid, decimate_field,
                      run_coarse_to_fine, upsample_double)
from .phantom import PhantomSpec, generate_phantom
from .metrics import ErrorReport, compare
from .config import ConfigError, ExperimentConfig, TrackerParams

__all__ = [
    "__version__",
    "GridGeometry", "ScalarField", "VectorField",
    "field_linear_combine", "field_norm_l2", "scalar_norm_l2",
    "ConvergenceError", "IndefiniteOperatorError", "PcgResult", "pcg",
    "ImagePair", "sample_bilinear", "spatial_gradient", "temporal_derivative", "warp_image",
    "FIELD_MAGIC", "load_field", "load_image", "save_colormap_png", "save_field", "save_image",
    "Bubble", "detect_bubbles", "read_bubbles_csv", "track_bubbles", "write_bubbles_csv",
    "BoundarySegment", "BoundarySpec", "MaterialParams", "solve_background", "solve_plane_strain",
    "AssembledSystem", "FunctionalTerms", "SolverConfig", "assemble",
    "functional_terms", "functional_value", "gaussian_weight", "solve",
    "PyramidLevel", "build_pyramid", "decimate_field", "run_coarse_to_fine", "upsample_double",
    "PhantomSpec", "generate_phantom",
    "ErrorReport", "compare",
    "ConfigError", "ExperimentConfig", "TrackerParams",
]
