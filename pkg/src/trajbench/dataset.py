"""Trajectory dataset ingestion: extended-XYZ parsing, temporal ordering, validation.

The on-disk dialect is plain extended XYZ: an atom-count header line, a
comment line of `key=value` tokens (`energy=` required, `old_index=` and
`units=` optional), then one `symbol x y z fx fy fz` line per atom. Energies
and forces are converted to the canonical eV / eV/A on ingest.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .elements import Species
from .errors import DatasetError, ParseError
from .units import convert_units

log = logging.getLogger("trajbench.dataset")

# Manifest / comment-line unit declarations mapped to (energy unit, force unit).
UNIT_DECLARATIONS = {
    "ev": ("eV", "eV/A"),
    "kcal_mol": ("kcal/mol", "kcal/mol/A"),
}

MIN_INTERATOMIC_DISTANCE = 0.3  # Angstrom, validation floor


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Frame:
    """One time step: positions (N,3) in A, per-atom species, energy in eV, forces (N,3) in eV/A."""

    positions: np.ndarray
    species: tuple[Species, ...]
    energy: float
    forces: np.ndarray
    source_index: int

    def __post_init__(self):
        object.__setattr__(self, "positions", _frozen(self.positions))
        object.__setattr__(self, "forces", _frozen(self.forces))
        n = len(self.species)
        if n < 1:
            raise DatasetError("frame must contain at least one atom")
        if self.positions.shape != (n, 3) or self.forces.shape != self.positions.shape:
            raise DatasetError(
                f"positions {self.positions.shape} and forces {self.forces.shape} "
                f"must both be ({n}, 3)"
            )
        if not (np.isfinite(self.positions).all() and np.isfinite(self.forces).all()):
            raise DatasetError("non-finite coordinate or force component")
        if not math.isfinite(self.energy):
            raise DatasetError("non-finite energy")
        if self.source_index < 0:
            raise DatasetError("source_index must be nonnegative")

    @property
    def n_atoms(self) -> int:
        return len(self.species)

    def species_multiset(self) -> tuple[Species, ...]:
        return tuple(sorted(self.species))

    def species_counts(self) -> dict[Species, int]:
        counts: dict[Species, int] = {}
        for s in self.species:
            counts[s] = counts.get(s, 0) + 1
        return counts


@dataclass(frozen=True)
class Trajectory:
    """Temporally ordered frames of one molecule."""

    molecule_id: str
    frames: tuple[Frame, ...]

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        if not self.frames:
            raise DatasetError("empty trajectory")
        ref = self.frames[0].species_multiset()
        prev = -1
        for k, fr in enumerate(self.frames):
            if fr.species_multiset() != ref:
                raise DatasetError(f"frame {k}: species multiset differs from frame 0")
            if fr.source_index <= prev:
                raise DatasetError(f"frame {k}: source_index not strictly increasing")
            prev = fr.source_index

    def __len__(self) -> int:
        return len(self.frames)

    def species_inventory(self) -> frozenset[Species]:
        return frozenset(self.frames[0].species)


# --------------------------------------------------------------------------
# extended XYZ


def _parse_float(token: str, what: str, frame: int, line: int) -> float:
    try:
        v = float(token)
    except ValueError:
        raise ParseError(f"malformed {what} {token!r}", frame=frame, line=line) from None
    if not math.isfinite(v):
        raise ParseError(f"non-finite {what} {token!r}", frame=frame, line=line)
    return v


def _comment_fields(comment: str) -> dict[str, str]:
    fields: dict[str, str] = {}
    for token in comment.split():
        if "=" in token:
            key, _, value = token.partition("=")
            fields[key] = value
    return fields


def parse_extxyz(text: str | Iterable[str], units: str = "ev") -> list[Frame]:
    """Parse extended-XYZ frames in file order, converting to canonical units.

    `units` is the manifest declaration for the file; a `units=` key on a
    comment line must agree with it. `old_index` becomes source_index when
    present, otherwise the file ordinal is used (with a warning, since the
    temporal calibration then rests on file order).
    """
    if units not in UNIT_DECLARATIONS:
        raise ParseError(f"unknown units declaration {units!r}")
    energy_unit, force_unit = UNIT_DECLARATIONS[units]
    e_scale = convert_units(1.0, energy_unit, "eV")
    f_scale = convert_units(1.0, force_unit, "eV/A")

    lines = text.splitlines() if isinstance(text, str) else [ln.rstrip("\n") for ln in text]
    frames: list[Frame] = []
    missing_old_index = False
    i = 0
    while i < len(lines):
        if not lines[i].strip():
            i += 1
            continue
        ordinal = len(frames)
        header_line = i + 1
        try:
            n_atoms = int(lines[i].strip())
        except ValueError:
            raise ParseError(f"expected atom count, got {lines[i]!r}",
                             frame=ordinal, line=header_line) from None
        if n_atoms < 1:
            raise ParseError(f"atom count must be positive, got {n_atoms}",
                             frame=ordinal, line=header_line)
        if i + 1 >= len(lines):
            raise ParseError("missing comment line", frame=ordinal, line=header_line + 1)
        fields = _comment_fields(lines[i + 1])
        if "energy" not in fields:
            raise ParseError("missing energy key on comment line",
                             frame=ordinal, line=header_line + 1)
        energy = _parse_float(fields["energy"], "energy", ordinal, header_line + 1)
        declared = fields.get("units")
        if declared is not None and declared != units:
            raise ParseError(f"comment declares units={declared!r} but manifest says {units!r}",
                             frame=ordinal, line=header_line + 1)
        if "old_index" in fields:
            try:
                source_index = int(fields["old_index"])
            except ValueError:
                raise ParseError(f"malformed old_index {fields['old_index']!r}",
                                 frame=ordinal, line=header_line + 1) from None
        else:
            source_index = ordinal
            missing_old_index = True

        body = lines[i + 2 : i + 2 + n_atoms]
        if len(body) < n_atoms or any(not ln.strip() for ln in body):
            raise ParseError(
                f"header declares {n_atoms} atoms but only {sum(bool(ln.strip()) for ln in body)} "
                "body lines follow", frame=ordinal, line=header_line)
        species: list[Species] = []
        positions = np.empty((n_atoms, 3))
        forces = np.empty((n_atoms, 3))
        for a, ln in enumerate(body):
            lineno = header_line + 2 + a
            parts = ln.split()
            if len(parts) != 7:
                raise ParseError(f"expected 'symbol x y z fx fy fz', got {ln!r}",
                                 frame=ordinal, line=lineno)
            try:
                species.append(Species.from_symbol(parts[0]))
            except DatasetError as exc:
                raise ParseError(str(exc), frame=ordinal, line=lineno) from None
            positions[a] = [_parse_float(p, "coordinate", ordinal, lineno) for p in parts[1:4]]
            forces[a] = [_parse_float(p, "force", ordinal, lineno) for p in parts[4:7]]

        frames.append(Frame(positions=positions, species=tuple(species),
                            energy=energy * e_scale, forces=forces * f_scale,
                            source_index=source_index))
        i += 2 + n_atoms

    if missing_old_index:
        log.warning("old_index missing on at least one frame; falling back to file order")
    return frames


def _fmt(x: float) -> str:
    return repr(float(x))


def frames_to_extxyz(frames: Iterable[Frame]) -> str:
    """Serialize frames to the canonical dialect (eV units, shortest-round-trip floats)."""
    out: list[str] = []
    for fr in frames:
        out.append(str(fr.n_atoms))
        out.append(f"energy={_fmt(fr.energy)} old_index={fr.source_index} units=ev")
        for s, p, f in zip(fr.species, fr.positions, fr.forces):
            out.append(" ".join([s.symbol] + [_fmt(v) for v in (*p, *f)]))
    return "\n".join(out) + "\n"


# --------------------------------------------------------------------------
# ordering and validation


def restore_temporal_order(frames: list[Frame], molecule_id: str = "traj") -> Trajectory:
    """Sort frames ascending by source_index into a Trajectory."""
    seen: dict[int, int] = {}
    for k, fr in enumerate(frames):
        if fr.source_index in seen:
            raise DatasetError(
                f"duplicate source_index {fr.source_index} (frames {seen[fr.source_index]} and {k})")
        seen[fr.source_index] = k
    ordered = sorted(frames, key=lambda fr: fr.source_index)
    return Trajectory(molecule_id=molecule_id, frames=tuple(ordered))


@dataclass(frozen=True)
class Violation:
    frame: int | None
    message: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, frame: int | None, message: str) -> None:
        self.violations.append(Violation(frame, message))


def validate_trajectory(traj: Trajectory) -> ValidationReport:
    """Report every invariant violation (does not raise)."""
    report = ValidationReport()
    if len(traj) < 10:
        report.add(None, f"trajectory has {len(traj)} frames, need >= 10")
    ref = traj.frames[0].species_multiset()
    prev = -1
    for k, fr in enumerate(traj.frames):
        if fr.species_multiset() != ref:
            report.add(k, "species multiset differs from frame 0")
        if fr.source_index <= prev:
            report.add(k, "source_index not strictly increasing")
        prev = fr.source_index
        if not np.isfinite(fr.positions).all():
            report.add(k, "non-finite coordinate")
        if not np.isfinite(fr.forces).all():
            report.add(k, "non-finite force component")
        if not math.isfinite(fr.energy):
            report.add(k, "non-finite energy")
        if fr.n_atoms > 1:
            deltas = fr.positions[:, None, :] - fr.positions[None, :, :]
            dist = np.linalg.norm(deltas, axis=-1)
            dist[np.diag_indices_from(dist)] = np.inf
            dmin = float(dist.min())
            if dmin <= MIN_INTERATOMIC_DISTANCE:
                report.add(k, f"minimum inter-atomic distance {dmin:.4f} A <= "
                              f"{MIN_INTERATOMIC_DISTANCE} A")
    return report


# --------------------------------------------------------------------------
# manifest and canonical store


@dataclass(frozen=True)
class ManifestEntry:
    molecule_id: str
    path: Path
    units: str
    frames: int | None = None
    species: frozenset[Species] | None = None


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple[ManifestEntry, ...]

    def __post_init__(self):
        ids = [e.molecule_id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise DatasetError(f"duplicate molecule ids in manifest: {ids}")


def load_manifest(path: str | Path) -> DatasetManifest:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DatasetError(f"manifest {path}: {exc}") from None
    entries = []
    for m in doc.get("molecules", []):
        for key in ("id", "path", "units"):
            if key not in m:
                raise DatasetError(f"manifest entry missing {key!r}: {m}")
        if m["units"] not in UNIT_DECLARATIONS:
            raise DatasetError(f"manifest entry {m['id']!r}: unknown units {m['units']!r}")
        species = None
        if "species" in m:
            species = frozenset(Species.from_symbol(s) for s in m["species"])
        entries.append(ManifestEntry(
            molecule_id=m["id"],
            path=path.parent / m["path"],
            units=m["units"],
            frames=m.get("frames"),
            species=species,
        ))
    return DatasetManifest(entries=tuple(entries))


def ingest_manifest(manifest: DatasetManifest, out_dir: str | Path) -> dict[str, Trajectory]:
    """Parse, order, validate, and write every manifest entry to a canonical store."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    store: dict[str, Trajectory] = {}
    index = []
    for entry in sorted(manifest.entries, key=lambda e: e.molecule_id):
        if not entry.path.exists():
            raise DatasetError(f"manifest file not found: {entry.path}")
        frames = parse_extxyz(entry.path.read_text(), units=entry.units)
        if entry.frames is not None and entry.frames != len(frames):
            raise DatasetError(
                f"{entry.molecule_id}: manifest declares {entry.frames} frames, parsed {len(frames)}")
        traj = restore_temporal_order(frames, molecule_id=entry.molecule_id)
        if entry.species is not None and traj.species_inventory() != entry.species:
            raise DatasetError(f"{entry.molecule_id}: species inventory differs from manifest")
        report = validate_trajectory(traj)
        if not report.ok:
            details = "; ".join(f"frame {v.frame}: {v.message}" for v in report.violations[:5])
            raise DatasetError(f"{entry.molecule_id}: validation failed: {details}")
        fname = f"{entry.molecule_id}.extxyz"
        (out_dir / fname).write_text(frames_to_extxyz(traj.frames))
        counts = {s.symbol: c for s, c in sorted(traj.frames[0].species_counts().items())}
        index.append({"id": entry.molecule_id, "file": fname,
                      "frames": len(traj), "species": counts, "units": "ev"})
        store[entry.molecule_id] = traj
    doc = {"schema_version": 1, "molecules": index}
    (out_dir / "store.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return store


def load_store(store_dir: str | Path) -> dict[str, Trajectory]:
    """Load a canonical store written by ingest_manifest."""
    store_dir = Path(store_dir)
    index_path = store_dir / "store.json"
    if not index_path.exists():
        raise DatasetError(f"not a dataset store (missing {index_path})")
    doc = json.loads(index_path.read_text())
    if doc.get("schema_version") != 1:
        raise DatasetError(f"unsupported store schema_version {doc.get('schema_version')!r}")
    store = {}
    for m in doc["molecules"]:
        frames = parse_extxyz((store_dir / m["file"]).read_text(), units=m["units"])
        store[m["id"]] = Trajectory(molecule_id=m["id"], frames=tuple(frames))
    return store
