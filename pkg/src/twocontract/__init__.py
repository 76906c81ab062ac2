"""Planar 2-contraction analysis: compound matrices, indices, regions and basin estimates."""

from .compound import (NormKind, additive_compound, compound_measure, lex_sequences, matrix_measure, minor,
                       multiplicative_compound)
from .equilibria import EquilibriumPoint, classify, find_equilibria
from .errors import AnalysisError
from .poincare import Circle, Polyline, quarter_turn_table, winding_number
from .regions import RegionLabel, build_region_grid, energy_spec_for
from .simulate import area_evolution, boa_validate, integrate
from .systems import FamilyParams, NetworkParams, family_to_field, field_from_json, network_to_field

__version__ = "0.1.0"
