"""Numerical tolerances shared by every module.

Defaults suit dense double-precision work at N <= 32.  Any field can be
overridden from the environment as ``EPCAT_TOL_<FIELD>`` (e.g.
``EPCAT_TOL_REAL=1e-8``) or explicitly through :func:`dataclasses.replace`.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields, replace


@dataclass(frozen=True)
class Tolerances:
    resid: float = 1e-10     # eigenpair residual, relative to ||H||
    poly: float = 1e-9       # polynomial evaluation / multiset comparisons
    real: float = 1e-9       # |Im lambda| below this counts as real
    rank: float = 1e-8       # singular values below rank * sigma_max are zero
    cluster: float = 1e-6    # root clustering radius, times max(1, |r|)
    canon: float = 1e-7      # canonical-form conjugation residual, relative
    disc: float = 1e-12      # EP refinement width in the free parameter
    rank_cap: float = 1e-4   # ceiling for the gap-scaled rank tolerance

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not (value > 0):
                raise ValueError(f"tolerance {f.name} must be > 0, got {value!r}")

    @classmethod
    def from_env(cls, environ=None) -> "Tolerances":
        environ = os.environ if environ is None else environ
        overrides = {}
        for f in fields(cls):
            key = f"EPCAT_TOL_{f.name.upper()}"
            if key in environ:
                overrides[f.name] = float(environ[key])
        return replace(cls(), **overrides)


DEFAULT = Tolerances()
