import numpy as np
import pytest

from trajbench.dataset import Frame, Trajectory
from trajbench.elements import Species

H = Species.from_symbol("H")
C = Species.from_symbol("C")
O = Species.from_symbol("O")


def make_frame(positions, species="H", energy=0.0, forces=None, source_index=0):
    positions = np.asarray(positions, dtype=float)
    if isinstance(species, str):
        species = (Species.from_symbol(species),) * len(positions)
    else:
        species = tuple(Species.from_symbol(s) if isinstance(s, str) else s for s in species)
    if forces is None:
        forces = np.zeros_like(positions)
    return Frame(positions=positions, species=species, energy=energy,
                 forces=np.asarray(forces, dtype=float), source_index=source_index)


def make_trajectory(n_frames=20, n_atoms=3, molecule_id="t", seed=0):
    rng = np.random.default_rng(seed)
    base = rng.uniform(-1.5, 1.5, size=(n_atoms, 3))
    frames = []
    for k in range(n_frames):
        pos = base + 0.05 * np.sin(k / 3.0 + np.arange(n_atoms * 3).reshape(n_atoms, 3))
        frames.append(make_frame(pos, energy=-1.0 - 0.01 * k,
                                 forces=rng.normal(size=(n_atoms, 3)) * 0.1,
                                 source_index=k))
    return Trajectory(molecule_id=molecule_id, frames=tuple(frames))


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def small_trajectory():
    return make_trajectory()
