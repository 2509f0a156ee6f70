"""Evaluation metrics, result records, and their CSV / JSON-lines schemas.

Force MAE is component-wise: the mean of |f - f~| over all 3N Cartesian
components of the selected atoms, which makes the per-species decomposition
an exact partition of the overall value. Energy MAE divides each frame's
|E - E~| by its atom count before averaging.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, fields as dataclass_fields
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .dataset import Frame
from .elements import Species
from .errors import ReportError
from .units import convert_units

SCHEMA_VERSION = 1

CORE_METRICS = ("force_mae_all", "energy_mae_per_atom")  # plus force_mae_species:<symbol>


@dataclass(frozen=True)
class PredictionEntry:
    """Ground truth and prediction for one test frame."""

    frame: Frame
    predicted_energy: float
    predicted_forces: np.ndarray

    def __post_init__(self):
        pf = np.asarray(self.predicted_forces, dtype=float)
        if pf.shape != self.frame.forces.shape:
            raise ReportError(f"predicted forces shape {pf.shape} does not match "
                              f"frame shape {self.frame.forces.shape}")
        object.__setattr__(self, "predicted_forces", pf)


@dataclass(frozen=True)
class PredictionBatch:
    fixture_id: str
    model_id: str
    entries: tuple[PredictionEntry, ...]

    def __post_init__(self):
        if not self.entries:
            raise ReportError("prediction batch is empty")

    @property
    def frame_count(self) -> int:
        return len(self.entries)

    @property
    def atom_count(self) -> int:
        return sum(e.frame.n_atoms for e in self.entries)


@dataclass
class MetricRecord:
    """One (fixture, model, metric) result row; canonical units meV/A and meV."""

    fixture_id: str
    model_id: str
    metric: str
    value: float | None
    unit: str
    frame_count: int = 0
    atom_count: int = 0
    alt_value: float | None = None
    alt_unit: str | None = None
    value_per_molecule: float | None = None
    value_min: float | None = None
    value_max: float | None = None
    suite: str | None = None
    molecule_id: str | None = None
    train_build: str | None = None
    test_molecule: str | None = None
    window_start: float | None = None
    window_size: float | None = None
    sample_count: int | None = None
    fixture_hash: str | None = None
    params_hash: str | None = None
    status: str = "ok"
    message: str | None = None
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        if self.status == "ok" and self.value is not None and self.metric != "window_similarity":
            if self.value < 0:
                raise ReportError(f"metric value must be nonnegative, got {self.value}")


def force_mae(batch: PredictionBatch, species_filter: Species | None = None) -> MetricRecord:
    """Component-wise force MAE in meV/A over all (or one species') atoms."""
    errs = []
    n_atoms = 0
    for e in batch.entries:
        diff = np.abs(e.predicted_forces - e.frame.forces)
        if species_filter is None:
            sel = np.ones(e.frame.n_atoms, dtype=bool)
        else:
            sel = np.array([s == species_filter for s in e.frame.species])
        if sel.any():
            errs.append(diff[sel].ravel())
            n_atoms += int(sel.sum())
    if not errs:
        name = species_filter.symbol if species_filter else "any"
        raise ReportError(f"no atoms of species {name!r} in batch {batch.fixture_id}")
    value_ev = float(np.mean(np.concatenate(errs)))
    value = convert_units(value_ev, "eV/A", "meV/A")
    metric = ("force_mae_all" if species_filter is None
              else f"force_mae_species:{species_filter.symbol}")
    return MetricRecord(
        fixture_id=batch.fixture_id, model_id=batch.model_id, metric=metric,
        value=value, unit="meV/A",
        alt_value=convert_units(value, "meV/A", "kcal/mol/A"), alt_unit="kcal/mol/A",
        frame_count=batch.frame_count, atom_count=n_atoms)


def energy_mae_per_atom(batch: PredictionBatch) -> MetricRecord:
    """Mean over frames of |E - E~| / N, in meV; per-molecule meV carried alongside."""
    per_atom = [abs(e.predicted_energy - e.frame.energy) / e.frame.n_atoms
                for e in batch.entries]
    per_mol = [abs(e.predicted_energy - e.frame.energy) for e in batch.entries]
    value = convert_units(float(np.mean(per_atom)), "eV", "meV")
    return MetricRecord(
        fixture_id=batch.fixture_id, model_id=batch.model_id, metric="energy_mae_per_atom",
        value=value, unit="meV",
        alt_value=convert_units(value, "meV", "kcal/mol"), alt_unit="kcal/mol",
        value_per_molecule=convert_units(float(np.mean(per_mol)), "eV", "meV"),
        frame_count=batch.frame_count, atom_count=batch.atom_count)


def rank_records(records: Sequence[MetricRecord]) -> list[MetricRecord]:
    """Ascending by value, ties broken by fixture id; errored records sort last."""
    metrics = {r.metric for r in records}
    if len(metrics) > 1:
        raise ReportError(f"cannot rank records with mixed metrics: {sorted(metrics)}")

    def key(r: MetricRecord):
        v = r.value if (r.status == "ok" and r.value is not None) else math.inf
        return (v, r.fixture_id)

    return sorted(records, key=key)


@dataclass
class GroupedSeries:
    key: float
    records: list[MetricRecord] = field(default_factory=list)


def group_project(records: Sequence[MetricRecord], axis: str) -> list[GroupedSeries]:
    """Group window-scan records by size or start; each series ordered by the other axis."""
    if axis not in ("window_size", "window_start"):
        raise ReportError(f"unknown grouping axis {axis!r}")
    for r in records:
        if r.window_start is None or r.window_size is None:
            raise ReportError(f"record {r.fixture_id}/{r.metric} lacks window metadata")
    group_of = (lambda r: r.window_size) if axis == "window_size" else (lambda r: r.window_start)
    other_of = (lambda r: r.window_start) if axis == "window_size" else (lambda r: r.window_size)
    groups: dict[float, list[MetricRecord]] = {}
    for r in records:
        groups.setdefault(group_of(r), []).append(r)
    return [GroupedSeries(key=k, records=sorted(groups[k], key=other_of))
            for k in sorted(groups)]


# --------------------------------------------------------------------------
# records I/O

_COLUMNS = [f.name for f in dataclass_fields(MetricRecord)]
_FLOAT_FIELDS = {"value", "alt_value", "value_per_molecule", "value_min", "value_max",
                 "window_start", "window_size"}
_INT_FIELDS = {"frame_count", "atom_count", "sample_count", "schema_version"}


def _cell(name: str, v) -> str:
    if v is None:
        return ""
    if name in _FLOAT_FIELDS:
        return format(float(v), ".17g")
    return str(v)


def records_to_csv(records: Sequence[MetricRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_COLUMNS)
    for r in records:
        writer.writerow([_cell(name, getattr(r, name)) for name in _COLUMNS])
    return buf.getvalue()


def records_to_jsonl(records: Sequence[MetricRecord]) -> str:
    lines = []
    for r in records:
        doc = {name: getattr(r, name) for name in _COLUMNS if getattr(r, name) is not None}
        lines.append(json.dumps(doc, sort_keys=True))
    return "\n".join(lines) + "\n"


def _record_from_dict(doc: dict) -> MetricRecord:
    kwargs: dict = {"value": None, "unit": ""}  # absent on error-tagged records
    for name in _COLUMNS:
        if name not in doc or doc[name] in ("", None):
            continue
        v = doc[name]
        if name in _FLOAT_FIELDS:
            v = float(v)
        elif name in _INT_FIELDS:
            v = int(v)
        kwargs[name] = v
    return MetricRecord(**kwargs)


def read_records(path: str | Path) -> list[MetricRecord]:
    """Read a records file (.csv or .jsonl); mixed schema versions are an error."""
    path = Path(path)
    records: list[MetricRecord] = []
    if path.suffix == ".jsonl":
        for line in path.read_text().splitlines():
            if line.strip():
                records.append(_record_from_dict(json.loads(line)))
    else:
        with path.open(newline="") as fh:
            for row in csv.DictReader(fh):
                records.append(_record_from_dict(row))
    versions = sorted({r.schema_version for r in records})
    if len(versions) > 1:
        raise ReportError(f"mixed record schema versions: {versions}")
    if versions and versions[0] != SCHEMA_VERSION:
        raise ReportError(f"unsupported records schema version {versions[0]} "
                          f"(this build reads {SCHEMA_VERSION})")
    return records


def write_records(records: Iterable[MetricRecord], out_dir: str | Path) -> tuple[Path, Path]:
    """Write records.csv and records.jsonl sorted by (fixture, model, metric, test molecule)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ordered = sorted(records, key=lambda r: (r.fixture_id, r.model_id, r.metric,
                                             r.test_molecule or ""))
    csv_path = out_dir / "records.csv"
    jsonl_path = out_dir / "records.jsonl"
    csv_path.write_text(records_to_csv(ordered))
    jsonl_path.write_text(records_to_jsonl(ordered))
    return csv_path, jsonl_path
