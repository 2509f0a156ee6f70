"""Built-in baseline force field: per-species ridge regression on SOAP descriptors.

Energies are modeled as E = sum_i (c_{z_i} + w_{z_i} . p_i) where c are
per-species reference energies, p_i the atomic power-spectrum descriptors,
and w per-species weight vectors. Only energies are fitted; forces come from
central finite differences of the predicted energy.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .dataset import Frame
from .elements import Species
from .errors import ModelError
from .fixtures import ReferenceEnergies, fit_reference_energies
from .jsonio import dumps_17g
from .soap import SoapParams, atomic_descriptors

log = logging.getLogger("trajbench.baseline")

JITTER_LADDER = (0.0, 1e-10, 1e-8, 1e-6)


@dataclass(frozen=True)
class TrainConfig:
    """Training hyperparameters; energy_weight/force_weight are recorded for
    protocol models, the baseline itself fits energies only."""

    soap: SoapParams
    ridge_lambda: float = 1e-8
    energy_weight: float = 1.0
    force_weight: float = 0.0
    fd_step: float = 1e-3

    def __post_init__(self):
        if self.ridge_lambda < 0:
            raise ModelError(f"ridge_lambda must be nonnegative, got {self.ridge_lambda}")
        if not 1e-5 <= self.fd_step <= 1e-2:
            raise ModelError(f"fd_step {self.fd_step} outside [1e-5, 1e-2]")

    def to_dict(self) -> dict:
        return {
            "ridge_lambda": self.ridge_lambda,
            "energy_weight": self.energy_weight,
            "force_weight": self.force_weight,
            "fd_step": self.fd_step,
            "soap": self.soap.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "TrainConfig":
        return cls(soap=SoapParams.from_dict(doc["soap"]),
                   ridge_lambda=float(doc["ridge_lambda"]),
                   energy_weight=float(doc["energy_weight"]),
                   force_weight=float(doc["force_weight"]),
                   fd_step=float(doc["fd_step"]))


@dataclass
class FitReport:
    residual_rms: float
    sample_count: int
    reference_fallback: bool = False


@dataclass
class RidgeSoapModel:
    reference_energies: ReferenceEnergies
    weights: dict[Species, np.ndarray]
    config: TrainConfig
    fit_report: FitReport = field(default_factory=lambda: FitReport(0.0, 0))

    @property
    def species(self) -> frozenset[Species]:
        return frozenset(self.weights)

    def _check_species(self, frame: Frame) -> None:
        unseen = set(frame.species) - self.species
        if unseen:
            raise ModelError("frame contains species unseen in training: "
                             f"{sorted(s.symbol for s in unseen)}")

    def predict_energy(self, frame: Frame) -> float:
        self._check_species(frame)
        descs = atomic_descriptors(frame, self.config.soap)
        e = 0.0
        for i, s in enumerate(frame.species):
            e += self.reference_energies.values[s] + float(self.weights[s] @ descs[i])
        return e

    def predict_forces(self, frame: Frame) -> np.ndarray:
        self._check_species(frame)

        def energy_of(positions: np.ndarray) -> float:
            return self.predict_energy(replace(frame, positions=positions))

        return finite_difference_forces(energy_of, frame.positions, self.config.fd_step)

    # -- serialization ------------------------------------------------------

    def to_json(self) -> str:
        doc = {
            "schema_version": 1,
            "kind": "ridge_soap",
            "config": self.config.to_dict(),
            "reference_energies": {s.symbol: v for s, v in
                                   self.reference_energies.values.items()},
            "reference_fallback": self.reference_energies.fallback,
            "reference_residual_rms": self.reference_energies.residual_rms,
            "weights": {s.symbol: list(map(float, w)) for s, w in self.weights.items()},
            "fit_report": {"residual_rms": self.fit_report.residual_rms,
                           "sample_count": self.fit_report.sample_count,
                           "reference_fallback": self.fit_report.reference_fallback},
        }
        return dumps_17g(doc) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RidgeSoapModel":
        doc = json.loads(text)
        if doc.get("kind") != "ridge_soap" or doc.get("schema_version") != 1:
            raise ModelError("not a ridge_soap model document")
        config = TrainConfig.from_dict(doc["config"])
        ref = ReferenceEnergies(
            values={Species.from_symbol(s): float(v)
                    for s, v in doc["reference_energies"].items()},
            residual_rms=float(doc["reference_residual_rms"]),
            fallback=bool(doc["reference_fallback"]))
        weights = {Species.from_symbol(s): np.array(w, dtype=float)
                   for s, w in doc["weights"].items()}
        fr = doc["fit_report"]
        return cls(reference_energies=ref, weights=weights, config=config,
                   fit_report=FitReport(residual_rms=float(fr["residual_rms"]),
                                        sample_count=int(fr["sample_count"]),
                                        reference_fallback=bool(fr["reference_fallback"])))


def finite_difference_forces(energy_of: Callable[[np.ndarray], float],
                             positions: np.ndarray, h: float) -> np.ndarray:
    """Central differences f[i,u] = -(E(x + h e_iu) - E(x - h e_iu)) / (2h)."""
    forces = np.zeros_like(positions, dtype=float)
    for i in range(positions.shape[0]):
        for u in range(3):
            plus = positions.copy()
            plus[i, u] += h
            minus = positions.copy()
            minus[i, u] -= h
            forces[i, u] = -(energy_of(plus) - energy_of(minus)) / (2.0 * h)
    return forces


def fit(frames: Sequence[Frame], config: TrainConfig) -> RidgeSoapModel:
    """Fit reference energies, then ridge-regress residual energies onto
    per-species summed descriptors (normal equations, Cholesky, jitter ladder)."""
    if len(frames) < 2:
        raise ModelError(f"training needs at least 2 frames, got {len(frames)}")
    species = sorted({s for fr in frames for s in fr.species})
    for s in species:
        config.soap.channel(s)  # descriptor must have a channel for every species

    ref = fit_reference_energies(frames)
    residual = np.array([fr.energy - ref.predict(fr) for fr in frames])

    D = config.soap.dimension
    X = np.zeros((len(frames), len(species) * D))
    for m, fr in enumerate(frames):
        descs = atomic_descriptors(fr, config.soap)
        for i, s in enumerate(fr.species):
            j = species.index(s)
            X[m, j * D : (j + 1) * D] += descs[i]

    G = X.T @ X
    G[np.diag_indices_from(G)] += config.ridge_lambda
    rhs = X.T @ residual
    scale = float(np.trace(G)) / len(G) if len(G) else 1.0
    w = None
    for jitter in JITTER_LADDER:
        try:
            L = np.linalg.cholesky(G + jitter * scale * np.eye(len(G)))
            w = np.linalg.solve(L.T, np.linalg.solve(L, rhs))
            break
        except np.linalg.LinAlgError:
            log.debug("Cholesky failed at jitter %.1e, retrying", jitter)
    if w is None:
        raise ModelError("ridge normal equations singular after jitter ladder")

    weights = {s: w[j * D : (j + 1) * D].copy() for j, s in enumerate(species)}
    fit_rms = float(np.sqrt(np.mean((X @ w - residual) ** 2)))
    return RidgeSoapModel(
        reference_energies=ref, weights=weights, config=config,
        fit_report=FitReport(residual_rms=fit_rms, sample_count=len(frames),
                             reference_fallback=ref.fallback))
