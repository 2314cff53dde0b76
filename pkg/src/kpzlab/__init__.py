"""Deterministic exponential LPP laboratory.

Geodesic trees, Busemann fields, dual weight fields, and competition
interface portraits on Z^2, with exact finite-volume duality checks and
rescaled-coordinate estimators for the limit's fractal exponents.
"""

from .errors import (ConfigurationError, ConsistencyError, EstimatorError,
                     InsufficientCertificationError, InsufficientDataError,
                     KpzlabError, OrderingError)
from .lattice import (ArrayField, DualPoint, LatticePoint, RotatedCoord,
                      WeightField, Window, box_of, derive_seed, derive_weight,
                      from_rotated, to_rotated)
from .lpp import (LatticePath, PassageTable, composition_layer_max, geodesic,
                  passage_table, restriction_uniqueness_check)
from .trees import (BusemannField, GeodesicTree, StabilizationCertificate,
                    build_tree, busemann_field, certify_stabilization,
                    coalescence_point, trifurcation_census)
from .duality import (DualWeightField, DualityReport, InterfaceForest,
                      dual_weight_distribution, dual_weights,
                      interface_portrait, trace_interface, verify_duality)
from .scaling import (RescaledPath, ScalingParams, landscape_point_to_lattice,
                      rescale_path, rescale_value, skew_transform)
from . import stats

__version__ = "0.1.0"
