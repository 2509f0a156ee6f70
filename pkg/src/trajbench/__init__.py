"""Trajectory-aware benchmark harness for machine-learning force fields."""

__version__ = "0.1.0"

from .baseline import RidgeSoapModel, TrainConfig, finite_difference_forces, fit
from .dataset import (
    DatasetManifest,
    Frame,
    Trajectory,
    frames_to_extxyz,
    ingest_manifest,
    load_manifest,
    load_store,
    parse_extxyz,
    restore_temporal_order,
    validate_trajectory,
)
from .elements import Species
from .errors import (
    DatasetError,
    FixtureError,
    ModelError,
    ParseError,
    ProtocolError,
    ReportError,
    SoapConfigError,
    TrajbenchError,
    UnitError,
)
from .fixtures import (
    CombinedDataset,
    GeneralizationPlan,
    ReferenceEnergies,
    SampledSubset,
    TemporalSplit,
    WindowSpec,
    build_combined_dataset,
    build_generalization_plans,
    deterministic_sample,
    fit_reference_energies,
    grid_scan_specs,
    sample_efficiency_series,
    temporal_split,
    window_indices,
)
from .metrics import (
    MetricRecord,
    PredictionBatch,
    PredictionEntry,
    energy_mae_per_atom,
    force_mae,
    group_project,
    rank_records,
    read_records,
)
from .protocol import ModelHandle, Timeouts, load_golden_transcript, replay_transcript
from .soap import (
    SoapParams,
    StructureDescriptor,
    atomic_descriptors,
    cosine_similarity,
    expansion_coefficients,
    neighbor_list,
    power_spectrum,
    structure_descriptor,
    window_similarity,
)
from .suites import RunConfig, run_suite
from .units import convert_units

__all__ = [name for name in dir() if not name.startswith("_")]
