"""Train/test fixture construction over trajectories.

Everything here is deterministic and seed-free: temporal splits use a fixed
ceiling rule, window bounds use a fixed floor rule, and subset sampling uses
the even-stride rule ``index_j = floor(j * W / k)``. The last 10% of a
trajectory is reserved as the test window and no training window may overlap
it.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .dataset import Frame, Trajectory
from .elements import Species
from .errors import FixtureError

log = logging.getLogger("trajbench.fixtures")

TRAIN_BUDGET_FRACTION = 0.9  # training may only ever touch the first 90%
DEFAULT_TEST_FRACTION = 0.1

SAMPLE_EFFICIENCY_COUNTS = (200, 400, 600, 800, 1000, 15000, 50000)
GRID_WINDOW_SIZES = (0.30, 0.45, 0.60, 0.75, 0.90)
GRID_WINDOW_STARTS = (0.0, 0.15, 0.30, 0.45, 0.60)
GRID_SAMPLE_COUNTS = (1000, 15000)

# Training builds for the cross-molecule generalization suite, one to five
# molecules, chosen to overlap within and across sizes.
GENERALIZATION_BUILDS = (
    "f", "b", "a",
    "ab", "bc", "de",
    "abg", "abd", "cef",
    "abeg", "bcdf", "abce",
    "abceg", "abcde", "bcdef",
)

_EPS = 1e-9  # snap tolerance for float fraction-times-length arithmetic


def _floor(x: float) -> int:
    return math.floor(x + _EPS)


def _ceil(x: float) -> int:
    return math.ceil(x - _EPS)


# --------------------------------------------------------------------------
# temporal split and windows


@dataclass(frozen=True)
class TemporalSplit:
    train_indices: tuple[int, ...]
    test_indices: tuple[int, ...]
    test_fraction: float


def temporal_split(traj: Trajectory, test_fraction: float = DEFAULT_TEST_FRACTION) -> TemporalSplit:
    """Split off the last ceil(test_fraction * T) frames as the test subset."""
    if not 0.0 < test_fraction < 1.0:
        raise FixtureError(f"test_fraction must be in (0,1), got {test_fraction}")
    T = len(traj)
    if T < 10:
        raise FixtureError(f"trajectory too short for a temporal split: {T} < 10 frames")
    n_test = _ceil(test_fraction * T)
    return TemporalSplit(
        train_indices=tuple(range(T - n_test)),
        test_indices=tuple(range(T - n_test, T)),
        test_fraction=test_fraction,
    )


@dataclass(frozen=True)
class WindowSpec:
    """A training window as fractions of the trajectory, plus a sample budget."""

    start_frac: float
    size_frac: float
    sample_count: int

    def __post_init__(self):
        if not 0.0 <= self.start_frac < 1.0:
            raise FixtureError(f"start_frac {self.start_frac} outside [0,1)")
        if not 0.0 < self.size_frac <= 1.0:
            raise FixtureError(f"size_frac {self.size_frac} outside (0,1]")
        if self.start_frac + self.size_frac > TRAIN_BUDGET_FRACTION + 1e-12:
            raise FixtureError(
                f"window [{self.start_frac}, {self.start_frac + self.size_frac}) overlaps "
                f"the final test region (limit {TRAIN_BUDGET_FRACTION})")
        if self.sample_count < 1:
            raise FixtureError(f"sample_count must be positive, got {self.sample_count}")

    @property
    def fixture_id(self) -> str:
        return f"win_s{self.start_frac:.2f}_w{self.size_frac:.2f}_n{self.sample_count}"


def window_indices(T: int, spec: WindowSpec) -> range:
    """Half-open frame range [floor(start*T), floor((start+size)*T))."""
    lo = _floor(spec.start_frac * T)
    hi = _floor((spec.start_frac + spec.size_frac) * T)
    if hi <= lo:
        raise FixtureError(f"window {spec} is empty for trajectory length {T}")
    return range(lo, hi)


def deterministic_sample(window_length: int, k: int) -> tuple[int, ...]:
    """Even-stride sample: window-relative indices floor(j*W/k), j = 0..k-1."""
    if k < 1:
        raise FixtureError(f"sample count must be positive, got {k}")
    if k > window_length:
        raise FixtureError(f"cannot sample {k} from a window of {window_length}")
    return tuple((j * window_length) // k for j in range(k))


@dataclass(frozen=True)
class SampledSubset:
    """Concrete index set realizing a WindowSpec (or the full range when spec is None)."""

    spec: WindowSpec | None
    indices: tuple[int, ...]

    def __post_init__(self):
        idx = self.indices
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise FixtureError("subset indices must be strictly increasing")


def sample_window(T: int, spec: WindowSpec) -> SampledSubset:
    rng = window_indices(T, spec)
    rel = deterministic_sample(len(rng), spec.sample_count)
    return SampledSubset(spec=spec, indices=tuple(rng.start + r for r in rel))


def sample_efficiency_series(
    traj: Trajectory, counts: Sequence[int] = SAMPLE_EFFICIENCY_COUNTS
) -> list[SampledSubset]:
    """One even-stride subset of the first-90% window per requested count.

    Counts exceeding the window length are dropped with a warning.
    """
    T = len(traj)
    window = _floor(TRAIN_BUDGET_FRACTION * T)
    subsets = []
    for k in counts:
        if k > window:
            log.warning("dropping sample count %d: training window has only %d frames", k, window)
            continue
        spec = WindowSpec(0.0, TRAIN_BUDGET_FRACTION, k)
        subsets.append(sample_window(T, spec))
    if not subsets:
        log.warning("no requested sample count fits the %d-frame training window", window)
    return subsets


def grid_scan_specs(counts: Sequence[int] = GRID_SAMPLE_COUNTS) -> list[WindowSpec]:
    """Cross product of window sizes and starts, filtered to the training budget,
    duplicated for every sample count."""
    specs = []
    for size in GRID_WINDOW_SIZES:
        for start in GRID_WINDOW_STARTS:
            if start + size > TRAIN_BUDGET_FRACTION + 1e-12:
                continue
            for k in sorted(counts):
                specs.append(WindowSpec(start, size, k))
    return specs


# --------------------------------------------------------------------------
# reference energies and combined datasets


@dataclass(frozen=True)
class ReferenceEnergies:
    """Per-species energy offsets from least squares on frame compositions."""

    values: dict[Species, float]
    residual_rms: float
    fallback: bool

    def predict(self, frame: Frame) -> float:
        return sum(self.values[s] * n for s, n in frame.species_counts().items())


def _design_matrix(frames: Sequence[Frame]) -> tuple[np.ndarray, np.ndarray, list[Species]]:
    species = sorted({s for fr in frames for s in fr.species})
    col = {s: j for j, s in enumerate(species)}
    A = np.zeros((len(frames), len(species)))
    for i, fr in enumerate(frames):
        for s, n in fr.species_counts().items():
            A[i, col[s]] = n
    E = np.array([fr.energy for fr in frames])
    return A, E, species


def fit_reference_energies(frames: Sequence[Frame]) -> ReferenceEnergies:
    """Least-squares per-species reference energies min_c sum_m (E_m - sum_s c_s N_ms)^2.

    Solved by normal equations with a Cholesky factorization and a single
    1e-10 relative diagonal jitter retry. A rank-deficient design (all frames
    sharing one composition, say) falls back to the mean per-atom energy
    assigned equally to every species, flagged in the result.
    """
    if not frames:
        raise FixtureError("cannot fit reference energies on an empty frame set")
    A, E, species = _design_matrix(frames)
    if np.linalg.matrix_rank(A) < len(species):
        per_atom = float(np.mean([fr.energy / fr.n_atoms for fr in frames]))
        values = {s: per_atom for s in species}
        resid = E - A @ np.full(len(species), per_atom)
        log.warning("reference-energy design matrix is rank deficient; "
                    "assigning mean per-atom energy %.6g eV to every species", per_atom)
        return ReferenceEnergies(values=values, fallback=True,
                                 residual_rms=float(np.sqrt(np.mean(resid**2))))
    G = A.T @ A
    rhs = A.T @ E
    scale = float(np.trace(G)) / len(G)
    c = None
    for jitter in (0.0, 1e-10):
        try:
            L = np.linalg.cholesky(G + jitter * scale * np.eye(len(G)))
            c = np.linalg.solve(L.T, np.linalg.solve(L, rhs))
            break
        except np.linalg.LinAlgError:
            continue
    if c is None:
        raise FixtureError("reference-energy normal equations singular even with jitter")
    resid = E - A @ c
    return ReferenceEnergies(values=dict(zip(species, (float(v) for v in c))),
                             residual_rms=float(np.sqrt(np.mean(resid**2))),
                             fallback=False)


@dataclass(frozen=True)
class TaggedFrame:
    molecule_id: str
    frame: Frame


@dataclass(frozen=True)
class CombinedDataset:
    """Frames of several molecules merged under shared per-species reference energies.

    When `centered`, the reference energies include a uniform per-atom shift
    that makes the residuals E_m - sum_s c_s N_ms average exactly to zero over
    the dataset.
    """

    member_ids: tuple[str, ...]
    frames: tuple[TaggedFrame, ...]
    reference_energies: ReferenceEnergies
    centered: bool

    def residuals(self) -> np.ndarray:
        return np.array([tf.frame.energy - self.reference_energies.predict(tf.frame)
                         for tf in self.frames])

    def centered_frames(self) -> list[TaggedFrame]:
        """Frames with energies replaced by their reference-model residuals."""
        return [TaggedFrame(tf.molecule_id,
                            replace(tf.frame, energy=tf.frame.energy
                                    - self.reference_energies.predict(tf.frame)))
                for tf in self.frames]


def build_combined_dataset(
    store: Mapping[str, Trajectory],
    member_ids: Iterable[str],
    samples_per_molecule: int = 1000,
    center: bool = True,
) -> CombinedDataset:
    """Even-stride sample each member trajectory and fit shared reference energies."""
    members = tuple(member_ids)
    tagged: list[TaggedFrame] = []
    for mol in members:
        if mol not in store:
            raise FixtureError(f"molecule {mol!r} not present in the dataset store")
        traj = store[mol]
        rel = deterministic_sample(len(traj), min(samples_per_molecule, len(traj)))
        tagged.extend(TaggedFrame(mol, traj.frames[i]) for i in rel)
    ref = fit_reference_energies([tf.frame for tf in tagged])
    if center:
        resid = np.array([tf.frame.energy - ref.predict(tf.frame) for tf in tagged])
        atoms = np.array([tf.frame.n_atoms for tf in tagged])
        delta = float(resid.mean() / atoms.mean())
        ref = ReferenceEnergies(values={s: v + delta for s, v in ref.values.items()},
                                residual_rms=ref.residual_rms, fallback=ref.fallback)
    return CombinedDataset(member_ids=members, frames=tuple(tagged),
                           reference_energies=ref, centered=center)


# --------------------------------------------------------------------------
# generalization plans


@dataclass(frozen=True)
class GeneralizationPlan:
    """A training build plus the unseen molecules it can be tested on."""

    train_build: str
    test_molecules: tuple[str, ...]

    @property
    def fixture_id(self) -> str:
        return f"gen_{self.train_build}"


def build_generalization_plans(
    inventories: Mapping[str, frozenset[Species]],
    builds: Sequence[str] = GENERALIZATION_BUILDS,
) -> list[GeneralizationPlan]:
    """For each build, test on every absent molecule whose species are all covered.

    `inventories` maps molecule label to its species set (from the manifest or
    the trajectories themselves).
    """
    plans = []
    for build in builds:
        missing = [m for m in build if m not in inventories]
        if missing:
            raise FixtureError(f"build {build!r} references molecules missing "
                               f"from the dataset: {missing}")
        covered: set[Species] = set()
        for m in build:
            covered |= inventories[m]
        tests = tuple(sorted(
            mol for mol, inv in inventories.items()
            if mol not in build and inv <= covered
        ))
        plans.append(GeneralizationPlan(train_build=build, test_molecules=tests))
    return plans
