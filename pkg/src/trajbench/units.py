"""Energy and force unit conversion with a fixed constant table.

Canonical internal units are eV for energies and eV/A for forces; all other
units exist only at the ingestion and reporting boundaries.
"""

from __future__ import annotations

from .errors import UnitError

# 2019 SI exact values: elementary charge and the Avogadro constant.
_ELEMENTARY_CHARGE = 1.602176634e-19  # J per eV
_AVOGADRO = 6.02214076e23  # 1/mol
_JOULE_PER_KCAL = 4184.0  # thermochemical calorie

# 1 kcal/mol in eV (~0.04336410; derivable from the constants above).
KCAL_PER_MOL_IN_EV = _JOULE_PER_KCAL / (_AVOGADRO * _ELEMENTARY_CHARGE)

_ENERGY_IN_EV = {
    "kcal/mol": KCAL_PER_MOL_IN_EV,
    "eV": 1.0,
    "meV": 1e-3,
}

_FORCE_IN_EV_A = {
    "kcal/mol/A": KCAL_PER_MOL_IN_EV,
    "eV/A": 1.0,
    "meV/A": 1e-3,
}


def _dimension(unit: str) -> tuple[str, float]:
    if unit in _ENERGY_IN_EV:
        return "energy", _ENERGY_IN_EV[unit]
    if unit in _FORCE_IN_EV_A:
        return "force", _FORCE_IN_EV_A[unit]
    raise UnitError(f"unknown unit {unit!r}")


def convert_units(value: float, from_unit: str, to_unit: str) -> float:
    """Convert `value` between two energy units or two force units."""
    dim_from, scale_from = _dimension(from_unit)
    dim_to, scale_to = _dimension(to_unit)
    if dim_from != dim_to:
        raise UnitError(f"cannot convert {from_unit!r} ({dim_from}) to {to_unit!r} ({dim_to})")
    return value * (scale_from / scale_to)
