"""Exact symbolic engine for filtered and graded bundles."""

from .algebra import BOTTOM, CoordinateFrame, Indeterminate, WeightedPolynomial
from .bundles import (
    Atlas,
    FilteredBundleSpec,
    FilteredMorphism,
    TransitionMap,
    ValidationReport,
    check_cocycle,
    check_inverse_pairs,
    compose_morphisms,
    compose_transitions,
    identity_map,
    invert_map,
    validate_bundle,
    validate_morphism,
    validate_transition,
)
from .coefficients import BaseField, base_field
from .dsl import BundleDocument, parse, serialize
from .functors import (
    dual_vertical_lift,
    gr_bundle,
    gr_morphism,
    jet_prolong,
    jet_prolong_morphism,
    linearise,
    linearise_morphism,
    tangent_lift,
    total_weight,
    vertical_lift,
)
from .graded import FiltrationPresentation, compute_rank, extract_homogeneous_generators
from .towers import AffineTowerSpec, check_filterable_atlas, tower_of

__version__ = "0.1.0"
