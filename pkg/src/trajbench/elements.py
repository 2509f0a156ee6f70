"""Fixed element table (Z = 1..86) and the Species value type."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DatasetError

# Symbols indexed by atomic number - 1, hydrogen through radon.
_SYMBOLS = (
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne",
    "Na", "Mg", "Al", "Si", "P", "S", "Cl", "Ar", "K", "Ca",
    "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn",
    "Ga", "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr", "Y", "Zr",
    "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In", "Sn",
    "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd",
    "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb",
    "Lu", "Hf", "Ta", "W", "Re", "Os", "Ir", "Pt", "Au", "Hg",
    "Tl", "Pb", "Bi", "Po", "At", "Rn",
)

MAX_ATOMIC_NUMBER = len(_SYMBOLS)

SYMBOL_TO_Z = {sym: z for z, sym in enumerate(_SYMBOLS, start=1)}


@dataclass(frozen=True, order=True)
class Species:
    """One chemical element; ordering follows atomic number."""

    atomic_number: int
    symbol: str

    def __post_init__(self):
        if not 1 <= self.atomic_number <= MAX_ATOMIC_NUMBER:
            raise DatasetError(f"atomic number {self.atomic_number} outside 1..{MAX_ATOMIC_NUMBER}")
        if _SYMBOLS[self.atomic_number - 1] != self.symbol:
            raise DatasetError(
                f"symbol {self.symbol!r} does not match atomic number {self.atomic_number}"
            )

    @classmethod
    def from_symbol(cls, symbol: str) -> "Species":
        z = SYMBOL_TO_Z.get(symbol)
        if z is None:
            raise DatasetError(f"unknown element symbol {symbol!r}")
        return cls(z, symbol)

    @classmethod
    def from_atomic_number(cls, z: int) -> "Species":
        if not 1 <= z <= MAX_ATOMIC_NUMBER:
            raise DatasetError(f"atomic number {z} outside 1..{MAX_ATOMIC_NUMBER}")
        return cls(z, _SYMBOLS[z - 1])


H = Species.from_symbol("H")
C = Species.from_symbol("C")
N = Species.from_symbol("N")
O = Species.from_symbol("O")
