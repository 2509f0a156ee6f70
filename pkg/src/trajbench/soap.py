"""SOAP power-spectrum descriptors and window similarity.

The neighbor density of a center atom is a sum of width-sigma Gaussians at
the neighbor positions, each weighted by the smooth cutoff
f(r) = (cos(pi r / r_cut) + 1) / 2. Expanding the density in an
orthonormalized Gaussian radial basis and real spherical harmonics gives

    c[s,n,l,m] = sum_{j in species s} f(d_j) * 4*pi * Y_lm(u_j)
                 * integral_0^rcut R_n(r) exp(-a (r^2 + d_j^2)) i_l(2 a r d_j) r^2 dr

with a = 1/(2 sigma^2). The radial integral runs on fixed-order
Gauss-Legendre nodes with the Bessel exponent folded in for stability. The
rotation-invariant power spectrum contracts over m:

    p[(s,n) <= (s',n'), l] = pi * sqrt(8/(2l+1)) * sum_m c[s,n,l,m] * c[s',n',l,m]

stored once per unordered (species, n) pair with off-diagonal entries scaled
by sqrt(2). Components are laid out pair-major (row-major upper triangle),
with l ascending within each pair.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss

from .dataset import Frame
from .elements import Species
from .errors import SoapConfigError
from .fixtures import deterministic_sample
from .harmonics import MAX_L, real_sph_harm, scaled_mod_sph_bessel

ZERO_NORM_FLOOR = 1e-300


@dataclass(frozen=True)
class SoapParams:
    """Descriptor hyperparameters; species_list fixes the channel order."""

    species_list: tuple[Species, ...]
    r_cut: float = 5.0
    sigma: float = 0.5
    n_max: int = 8
    l_max: int = 6
    quadrature_order: int = 64

    def __post_init__(self):
        if self.r_cut <= 0:
            raise SoapConfigError(f"r_cut must be positive, got {self.r_cut}")
        if self.sigma <= 0:
            raise SoapConfigError(f"sigma must be positive, got {self.sigma}")
        if not 1 <= self.n_max <= 12:
            raise SoapConfigError(f"n_max must be in 1..12, got {self.n_max}")
        if not 0 <= self.l_max <= MAX_L:
            raise SoapConfigError(f"l_max must be in 0..{MAX_L}, got {self.l_max}")
        if not self.species_list:
            raise SoapConfigError("species_list must not be empty")
        if list(self.species_list) != sorted(self.species_list):
            raise SoapConfigError("species_list must be sorted by atomic number")

    @classmethod
    def for_frames(cls, frames: Iterable[Frame], **overrides) -> "SoapParams":
        species = tuple(sorted({s for fr in frames for s in fr.species}))
        return cls(species_list=species, **overrides)

    @property
    def n_channels(self) -> int:
        return len(self.species_list) * self.n_max

    @property
    def dimension(self) -> int:
        P = self.n_channels
        return P * (P + 1) // 2 * (self.l_max + 1)

    def channel(self, species: Species) -> int:
        try:
            return self.species_list.index(species)
        except ValueError:
            raise SoapConfigError(
                f"species {species.symbol} not in descriptor species list "
                f"{[s.symbol for s in self.species_list]}") from None

    def to_dict(self) -> dict:
        return {
            "species": [s.symbol for s in self.species_list],
            "r_cut": self.r_cut,
            "sigma": self.sigma,
            "n_max": self.n_max,
            "l_max": self.l_max,
            "quadrature_order": self.quadrature_order,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SoapParams":
        return cls(
            species_list=tuple(sorted(Species.from_symbol(s) for s in doc["species"])),
            r_cut=float(doc["r_cut"]), sigma=float(doc["sigma"]),
            n_max=int(doc["n_max"]), l_max=int(doc["l_max"]),
            quadrature_order=int(doc["quadrature_order"]),
        )

    def component_labels(self) -> list[str]:
        chan = [f"{s.symbol}{n}" for s in self.species_list for n in range(self.n_max)]
        labels = []
        for a in range(len(chan)):
            for b in range(a, len(chan)):
                for l in range(self.l_max + 1):
                    labels.append(f"p_{chan[a]}_{chan[b]}_l{l}")
        return labels


@dataclass(frozen=True)
class _Tables:
    """Quadrature nodes/weights and the orthonormalized radial basis at the nodes."""

    nodes: np.ndarray        # (Q,) radii in (0, r_cut)
    radial_weighted: np.ndarray  # (n_max, Q): R_n(r_q) * w_q * r_q^2


@lru_cache(maxsize=16)
def _tables(params: SoapParams) -> _Tables:
    if params.quadrature_order < 2 * params.n_max:
        raise SoapConfigError(
            f"quadrature_order {params.quadrature_order} below 2*n_max = {2 * params.n_max}")
    x, w = leggauss(params.quadrature_order)
    r = 0.5 * params.r_cut * (x + 1.0)
    w = 0.5 * params.r_cut * w
    centers = np.linspace(0.0, params.r_cut, params.n_max)
    width = params.r_cut / params.n_max
    phi = np.exp(-((r[None, :] - centers[:, None]) ** 2) / (2.0 * width**2))
    overlap = (phi * w * r**2) @ phi.T
    evals, evecs = np.linalg.eigh(overlap)
    inv_sqrt = (evecs / np.sqrt(np.maximum(evals, 1e-12))) @ evecs.T
    radial = inv_sqrt @ phi
    t = _Tables(nodes=r, radial_weighted=radial * w * r**2)
    t.nodes.setflags(write=False)
    t.radial_weighted.setflags(write=False)
    return t


def cutoff_weight(r: np.ndarray, r_cut: float) -> np.ndarray:
    """Smooth cutoff (cos(pi r / r_cut) + 1) / 2, reaching 0 at r_cut."""
    return 0.5 * (np.cos(np.pi * np.asarray(r) / r_cut) + 1.0)


# --------------------------------------------------------------------------
# neighbor lists


@dataclass(frozen=True)
class Neighbors:
    """Neighbors of one atom: indices, displacement vectors, distances."""

    indices: np.ndarray
    displacements: np.ndarray
    distances: np.ndarray


def neighbor_list(frame: Frame, r_cut: float) -> list[Neighbors]:
    """All pairs j != i with |x_j - x_i| < r_cut (no periodic images)."""
    pos = frame.positions
    delta = pos[None, :, :] - pos[:, None, :]
    dist = np.linalg.norm(delta, axis=-1)
    np.fill_diagonal(dist, np.inf)
    out = []
    for i in range(frame.n_atoms):
        mask = dist[i] < r_cut
        out.append(Neighbors(indices=np.nonzero(mask)[0],
                             displacements=delta[i][mask],
                             distances=dist[i][mask]))
    return out


# --------------------------------------------------------------------------
# expansion coefficients and power spectra


def _pair_coefficients(params: SoapParams, centers: np.ndarray, channels: np.ndarray,
                       displacements: np.ndarray, distances: np.ndarray,
                       n_atoms: int) -> np.ndarray:
    """Accumulate per-(center, neighbor) contributions into c (N, S, n_max, (l_max+1)^2)."""
    S, L = len(params.species_list), params.l_max
    c = np.zeros((n_atoms, S, params.n_max, (L + 1) ** 2))
    if len(distances) == 0:
        return c
    t = _tables(params)
    alpha = 1.0 / (2.0 * params.sigma**2)
    d = distances
    u = displacements / d[:, None]
    Y = real_sph_harm(L, u)                                        # (p, (L+1)^2)
    E = np.exp(-alpha * (t.nodes[None, :] - d[:, None]) ** 2)      # (p, Q)
    B = scaled_mod_sph_bessel(L, 2.0 * alpha * d[:, None] * t.nodes[None, :])  # (p, Q, L+1)
    radial = np.einsum("nq,pq,pql->pnl", t.radial_weighted, E, B)  # (p, n, L+1)
    w = 4.0 * np.pi * cutoff_weight(d, params.r_cut)               # (p,)
    for l in range(L + 1):
        lo, hi = l * l, (l + 1) ** 2
        contrib = w[:, None, None] * radial[:, :, l : l + 1] * Y[:, None, lo:hi]
        np.add.at(c[:, :, :, lo:hi], (centers, channels), contrib)
    return c


def expansion_coefficients(frame: Frame, center: int, params: SoapParams) -> np.ndarray:
    """Density-expansion coefficients c[s, n, l*l+l+m] of one center atom.

    The center atom is excluded from its own density, so an isolated atom has
    all-zero coefficients.
    """
    nl = neighbor_list(frame, params.r_cut)[center]
    channels = np.array([params.channel(frame.species[j]) for j in nl.indices], dtype=int)
    c = _pair_coefficients(params, np.zeros(len(nl.indices), dtype=int), channels,
                           nl.displacements, nl.distances, 1)
    return c[0]


def power_spectrum(coefficients: np.ndarray, params: SoapParams) -> np.ndarray:
    """Contract expansion coefficients over m into the invariant power spectrum."""
    return _power_spectra(coefficients[None, ...], params)[0]


def _power_spectra(c: np.ndarray, params: SoapParams) -> np.ndarray:
    """Batched power spectra: c (N, S, n_max, (L+1)^2) -> (N, dimension)."""
    N = c.shape[0]
    P, L = params.n_channels, params.l_max
    cc = c.reshape(N, P, (L + 1) ** 2)
    iu, ju = np.triu_indices(P)
    offdiag = np.where(iu == ju, 1.0, np.sqrt(2.0))
    blocks = np.empty((N, len(iu), L + 1))
    for l in range(L + 1):
        cl = cc[:, :, l * l : (l + 1) ** 2]
        pl = np.pi * np.sqrt(8.0 / (2 * l + 1)) * np.einsum("apk,aqk->apq", cl, cl)
        blocks[:, :, l] = pl[:, iu, ju] * offdiag[None, :]
    return blocks.reshape(N, -1)


def atomic_descriptors(frame: Frame, params: SoapParams) -> np.ndarray:
    """Power-spectrum descriptor of every atom in the frame; shape (N, dimension)."""
    pos = frame.positions
    n = frame.n_atoms
    delta = pos[None, :, :] - pos[:, None, :]
    dist = np.linalg.norm(delta, axis=-1)
    np.fill_diagonal(dist, np.inf)
    ci, cj = np.nonzero(dist < params.r_cut)
    channels = np.array([params.channel(frame.species[j]) for j in cj], dtype=int)
    c = _pair_coefficients(params, ci, channels, delta[ci, cj], dist[ci, cj], n)
    return _power_spectra(c, params)


@dataclass(frozen=True)
class StructureDescriptor:
    """L2-normalized mean of a frame's atomic descriptors."""

    vector: np.ndarray
    norm: float
    zero: bool


def structure_descriptor(frame: Frame, params: SoapParams) -> StructureDescriptor:
    mean = atomic_descriptors(frame, params).mean(axis=0)
    norm = float(np.linalg.norm(mean))
    if norm < ZERO_NORM_FLOOR:
        return StructureDescriptor(vector=np.zeros_like(mean), norm=0.0, zero=True)
    v = mean / norm
    v.setflags(write=False)
    return StructureDescriptor(vector=v, norm=norm, zero=False)


def cosine_similarity(d1: StructureDescriptor, d2: StructureDescriptor) -> float:
    """Dot product of the unit vectors; identical inputs give exactly 1.0.

    Exactly equal (or exactly negated) vectors short-circuit so that
    self-similarity is 1.0 to the bit, not 1 - ulp.
    """
    if d1.zero or d2.zero:
        raise SoapConfigError("cosine similarity undefined for a zero descriptor "
                              "(structure has no neighbor pairs within r_cut)")
    if np.array_equal(d1.vector, d2.vector):
        return 1.0
    if np.array_equal(d1.vector, -d2.vector):
        return -1.0
    return float(d1.vector @ d2.vector)


# --------------------------------------------------------------------------
# window similarity


@dataclass(frozen=True)
class WindowSimilarity:
    mean: float
    min: float
    max: float
    n_train: int
    n_test: int


def window_similarity(
    train_frames: Sequence[Frame],
    test_frames: Sequence[Frame],
    params: SoapParams,
    max_pairs_per_side: int = 64,
) -> WindowSimilarity:
    """Mean pairwise cosine similarity between two frame windows.

    Each window is first thinned to at most `max_pairs_per_side` frames by
    even stride, capping the pairwise cost.
    """
    if not train_frames or not test_frames:
        raise SoapConfigError("window similarity requires two nonempty windows")

    def thin(frames: Sequence[Frame]) -> list[Frame]:
        k = min(max_pairs_per_side, len(frames))
        return [frames[i] for i in deterministic_sample(len(frames), k)]

    a = [structure_descriptor(fr, params) for fr in thin(train_frames)]
    b = [structure_descriptor(fr, params) for fr in thin(test_frames)]
    sims = np.array([[cosine_similarity(da, db) for db in b] for da in a])
    return WindowSimilarity(mean=float(sims.mean()), min=float(sims.min()),
                            max=float(sims.max()), n_train=len(a), n_test=len(b))


# --------------------------------------------------------------------------
# CSV export


def descriptors_to_csv(descriptors: Sequence[StructureDescriptor], ids: Sequence[str],
                       params: SoapParams) -> str:
    """One row per structure, header row naming every power-spectrum component."""
    lines = ["structure," + ",".join(params.component_labels())]
    for sid, d in zip(ids, descriptors):
        lines.append(sid + "," + ",".join(f"{v:.17g}" for v in d.vector))
    return "\n".join(lines) + "\n"


def similarity_matrix_csv(train_frames: Sequence[Frame], test_frames: Sequence[Frame],
                          params: SoapParams) -> str:
    """Pairwise cosine similarities, rows = train frame ordinals, cols = test ordinals."""
    a = [structure_descriptor(fr, params) for fr in train_frames]
    b = [structure_descriptor(fr, params) for fr in test_frames]
    lines = ["train\\test," + ",".join(str(j) for j in range(len(b)))]
    for i, da in enumerate(a):
        row = [f"{cosine_similarity(da, db):.17g}" for db in b]
        lines.append(f"{i}," + ",".join(row))
    return "\n".join(lines) + "\n"
