"""Exceptional points and spectral reality of parametric non-Hermitian matrices."""

from .config import DEFAULT, Tolerances
from .ep import EpRecord, JordanStructure, canonical_form, classify_ep, classify_point, find_eps
from .flow import cheb_spectrum, domain_map, is_all_real, physical_interval, real_count, sweep
from .linalg import char_poly, eigen
from .models import get_family, list_families
from .poly import BiPoly, UniPoly, discriminant_in_F, symbolic_char_poly

__all__ = [
    "DEFAULT",
    "Tolerances",
    "EpRecord",
    "JordanStructure",
    "canonical_form",
    "classify_ep",
    "classify_point",
    "find_eps",
    "cheb_spectrum",
    "domain_map",
    "is_all_real",
    "physical_interval",
    "real_count",
    "sweep",
    "char_poly",
    "eigen",
    "get_family",
    "list_families",
    "BiPoly",
    "UniPoly",
    "discriminant_in_F",
    "symbolic_char_poly",
]
