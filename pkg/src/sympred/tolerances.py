"""Named tolerances for every verification check, with per-run overrides."""
from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping

from .errors import InvalidInputError


@dataclass(frozen=True)
class Tolerance:
    value: float
    # "<=": residual must not exceed value; ">": residual must exceed it (expected-negative checks)
    relation: str = "<="
    relative: bool = False

    def passes(self, residual: float, scale: float = 1.0) -> bool:
        bound = self.value * (abs(scale) if self.relative else 1.0)
        if self.relation == ">":
            return residual > bound
        return residual <= bound


DEFAULTS: Mapping[str, Tolerance] = MappingProxyType(
    {
        "sp_membership": Tolerance(1e-12),
        "on_surface": Tolerance(1e-10),
        "geodesic": Tolerance(1e-12),
        "geodesic_converse_median": Tolerance(1e-3, ">"),
        "torsion": Tolerance(1e-10),
        "affine": Tolerance(1e-10),
        "vertical": Tolerance(1e-10),
        "reduced_torsion": Tolerance(1e-9),
        "reduced_parallel": Tolerance(1e-9),
        "lift_bracket": Tolerance(1e-9),
        "antisymmetry": Tolerance(1e-12),
        "bianchi": Tolerance(1e-10),
        "symplectic_symmetry": Tolerance(1e-10),
        "w_norm": Tolerance(1e-9),
        "kappa_fit": Tolerance(1e-9),
        "kappa_variation": Tolerance(1e-9, relative=True),
        "kappa_value": Tolerance(1e-9, relative=True),
        "u_form": Tolerance(1e-10),
        "u_generic": Tolerance(1e-3, ">"),
        "nabla_ricci": Tolerance(1e-6),
        "oracle_discrepancy": Tolerance(1e-4),
        "richardson": Tolerance(0.3),
        "chart_constraints": Tolerance(1e-12),
    }
)


def resolve(overrides: Mapping[str, float] | None = None) -> dict[str, Tolerance]:
    """Defaults with numeric overrides applied; unknown names are rejected."""
    table = dict(DEFAULTS)
    for name, value in (overrides or {}).items():
        if name not in table:
            raise InvalidInputError(f"unknown tolerance {name!r}")
        try:
            v = float(value)
        except (TypeError, ValueError):
            raise InvalidInputError(f"tolerance {name!r} must be a number") from None
        if not v > 0:
            raise InvalidInputError(f"tolerance {name!r} must be positive")
        t = table[name]
        table[name] = Tolerance(v, t.relation, t.relative)
    return table
