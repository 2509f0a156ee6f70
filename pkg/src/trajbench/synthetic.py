"""Deterministic synthetic trajectories with closed-form energies and forces.

These generators exist so the harness can be exercised, tested, and demoed
without any quantum-chemistry data: dimers on analytic potentials for the
temporal suites, and a small library of molecules with realistic species
inventories (labels `a`..`g`) for the cross-molecule suite. Every generator
is seeded and bit-reproducible.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Callable

import numpy as np

from .dataset import Frame, Trajectory, frames_to_extxyz
from .elements import Species

# Molecule library: label -> formula counts of small organic molecules.
MOLECULE_FORMULAS: dict[str, dict[str, int]] = {
    "a": {"C": 9, "H": 8, "O": 4},            # aspirin-like
    "b": {"C": 2, "H": 6, "O": 1},            # ethanol-like
    "c": {"C": 3, "H": 4, "O": 2},            # malonaldehyde-like
    "d": {"C": 10, "H": 8},                   # naphthalene-like
    "e": {"C": 7, "H": 6, "O": 3},            # salicylic-acid-like
    "f": {"C": 7, "H": 8},                    # toluene-like
    "g": {"C": 4, "H": 4, "N": 2, "O": 2},    # uracil-like
}

# Per-species baseline energies (eV), roughly on the total-energy scale of
# ab initio codes so merged datasets have strongly molecule-dependent levels.
SPECIES_BASE_ENERGY = {"H": -16.0, "C": -1030.0, "N": -1485.0, "O": -2043.0}

_BOND_CUTOFF = 1.8   # A: equilibrium pairs closer than this are bonded
_BOND_K = 4.0        # eV/A^2 harmonic constant

# A radial potential maps bond length r to (energy, dE/dr).
RadialPotential = Callable[[float], tuple[float, float]]


def _quartic_well(r: float) -> tuple[float, float]:
    k2, k3, k4, r0 = 8.0, -4.0, 12.0, 1.0
    d = r - r0
    return (k2 * d * d + k3 * d**3 + k4 * d**4,
            2 * k2 * d + 3 * k3 * d * d + 4 * k4 * d**3)


def _quadratic_well(r: float) -> tuple[float, float]:
    return (r - 1.0) ** 2, 2.0 * (r - 1.0)


def _dimer_frame(potential: RadialPotential, positions: np.ndarray,
                 source_index: int) -> Frame:
    d = positions[1] - positions[0]
    r = float(np.linalg.norm(d))
    u = d / r
    energy, dedr = potential(r)
    forces = np.array([dedr * u, -dedr * u])
    return Frame(positions=positions, species=(Species.from_symbol("H"),) * 2,
                 energy=energy, forces=forces, source_index=source_index)


def quadratic_dimer_frames(n: int, r_lo: float = 0.8, r_hi: float = 1.2,
                           seed: int = 0) -> list[Frame]:
    """H2 frames sweeping the bond length with E(r) = (r - 1)^2, random pose."""
    rng = np.random.default_rng(seed)
    frames = []
    for k in range(n):
        r = r_lo + (r_hi - r_lo) * (k / max(n - 1, 1))
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        offset = rng.normal(size=3) * 0.5
        pos = np.array([offset, offset + r * axis])
        frames.append(_dimer_frame(_quadratic_well, pos, source_index=k))
    return frames


def quadratic_dimer_energy(positions: np.ndarray) -> float:
    """Closed-form dimer energy E = (|x2 - x1| - 1)^2, for oracle checks."""
    return (float(np.linalg.norm(positions[1] - positions[0])) - 1.0) ** 2


def quadratic_dimer_forces(positions: np.ndarray) -> np.ndarray:
    d = positions[1] - positions[0]
    r = float(np.linalg.norm(d))
    u = d / r
    dedr = 2.0 * (r - 1.0)
    return np.array([dedr * u, -dedr * u])


def anharmonic_dimer_trajectory(n_frames: int = 2000, seed: int = 1,
                                jitter: float = 0.02,
                                molecule_id: str = "osc") -> Trajectory:
    """Velocity-Verlet trajectory of an anharmonic H2 oscillator.

    The potential is a quartic well around r0 = 1; small positional jitter
    thickens the sampled manifold while labels stay exact at the jittered
    geometry.
    """
    rng = np.random.default_rng(seed)
    r, v, dt, mass = 1.15, 0.0, 0.01, 1.0
    frames = []
    for k in range(n_frames):
        a = -_quartic_well(r)[1] / mass
        r_next = r + v * dt + 0.5 * a * dt * dt
        v = v + 0.5 * (a - _quartic_well(r_next)[1] / mass) * dt
        r = r_next
        pos = np.array([[0.0, 0.0, 0.0], [r, 0.0, 0.0]]) + rng.normal(size=(2, 3)) * jitter
        frames.append(_dimer_frame(_quartic_well, pos, source_index=k))
    return Trajectory(molecule_id=molecule_id, frames=tuple(frames))


def drifting_dimer_trajectory(n_frames: int = 2000, seed: int = 2,
                              drift: float = 0.35, wobble: float = 0.06,
                              jitter: float = 0.01,
                              molecule_id: str = "drift") -> Trajectory:
    """Bond length drifts upward over time, so late windows resemble the final
    test window far more than early ones."""
    rng = np.random.default_rng(seed)
    frames = []
    for k in range(n_frames):
        t = k / (n_frames - 1)
        r = 1.0 + drift * t + wobble * math.sin(2 * math.pi * 9 * t)
        pos = np.array([[0.0, 0.0, 0.0], [r, 0.0, 0.0]]) + rng.normal(size=(2, 3)) * jitter
        frames.append(_dimer_frame(_quadratic_well, pos, source_index=k))
    return Trajectory(molecule_id=molecule_id, frames=tuple(frames))


# --------------------------------------------------------------------------
# molecule library for the cross-molecule suite


def hash_label(label: str) -> int:
    # stable across processes, unlike builtin hash()
    return sum((i + 1) * ord(ch) for i, ch in enumerate(label)) + 7


def _equilibrium_geometry(label: str) -> tuple[np.ndarray, tuple[Species, ...]]:
    """Seeded random packing with >= 0.9 A separation; fixed per label."""
    formula = MOLECULE_FORMULAS[label]
    symbols = [sym for sym in sorted(formula) for _ in range(formula[sym])]
    rng = np.random.default_rng(hash_label(label))
    placed: list[np.ndarray] = []
    radius = 0.9 * len(symbols) ** (1 / 3) + 0.8
    for _ in symbols:
        for _attempt in range(10000):
            p = rng.uniform(-radius, radius, size=3)
            if np.linalg.norm(p) > radius:
                continue
            if all(np.linalg.norm(p - q) >= 0.9 for q in placed):
                placed.append(p)
                break
        else:
            raise RuntimeError(f"could not pack geometry for molecule {label!r}")
    return np.array(placed), tuple(Species.from_symbol(s) for s in symbols)


def _bond_pairs(eq: np.ndarray) -> list[tuple[int, int, float]]:
    pairs = []
    for i in range(len(eq)):
        for j in range(i + 1, len(eq)):
            r0 = float(np.linalg.norm(eq[i] - eq[j]))
            if r0 < _BOND_CUTOFF:
                pairs.append((i, j, r0))
    # every atom needs at least one partner so the elastic network stays coupled
    bonded = {i for p in pairs for i in p[:2]}
    for i in range(len(eq)):
        if i not in bonded:
            r0, j = min((float(np.linalg.norm(eq[i] - eq[j])), j)
                        for j in range(len(eq)) if j != i)
            pairs.append((min(i, j), max(i, j), r0))
    return sorted(set(pairs))


def _elastic_labels(pos: np.ndarray, species: tuple[Species, ...],
                    pairs: list[tuple[int, int, float]]) -> tuple[float, np.ndarray]:
    energy = sum(SPECIES_BASE_ENERGY[s.symbol] for s in species)
    forces = np.zeros_like(pos)
    for i, j, r0 in pairs:
        d = pos[i] - pos[j]
        r = float(np.linalg.norm(d))
        energy += _BOND_K * (r - r0) ** 2
        g = 2.0 * _BOND_K * (r - r0) * d / r
        forces[i] -= g
        forces[j] += g
    return energy, forces


def molecule_frame(label: str) -> Frame:
    """Equilibrium frame of one library molecule (forces exactly zero)."""
    eq, species = _equilibrium_geometry(label)
    pairs = _bond_pairs(eq)
    energy, forces = _elastic_labels(eq, species, pairs)
    return Frame(positions=eq, species=species, energy=energy, forces=forces,
                 source_index=0)


def molecule_trajectory(label: str, n_frames: int = 200, seed: int | None = None,
                        amplitude: float = 0.05) -> Trajectory:
    """Deterministic oscillation of a library molecule around equilibrium,
    labeled by its elastic-network potential plus per-species baselines."""
    if label not in MOLECULE_FORMULAS:
        raise KeyError(f"unknown molecule label {label!r}; have {sorted(MOLECULE_FORMULAS)}")
    eq, species = _equilibrium_geometry(label)
    pairs = _bond_pairs(eq)
    rng = np.random.default_rng(hash_label(label) * 31 + (seed or 0))
    freqs = rng.uniform(2.0, 6.0, size=eq.shape)
    phases = rng.uniform(0, 2 * math.pi, size=eq.shape)
    frames = []
    for k in range(n_frames):
        t = k / n_frames
        pos = eq + amplitude * np.sin(2 * math.pi * freqs * t + phases)
        energy, forces = _elastic_labels(pos, species, pairs)
        frames.append(Frame(positions=pos, species=species, energy=energy,
                            forces=forces, source_index=k))
    return Trajectory(molecule_id=label, frames=tuple(frames))


def write_dataset(store: dict[str, Trajectory], out_dir: str | Path,
                  manifest_name: str = "manifest.json") -> Path:
    """Write trajectories as extended XYZ plus a manifest, ready for ingestion."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    molecules = []
    for mol_id in sorted(store):
        fname = f"{mol_id}.extxyz"
        (out_dir / fname).write_text(frames_to_extxyz(store[mol_id].frames))
        molecules.append({"id": mol_id, "path": fname, "units": "ev"})
    manifest_path = out_dir / manifest_name
    manifest_path.write_text(json.dumps({"molecules": molecules}, indent=2) + "\n")
    return manifest_path
