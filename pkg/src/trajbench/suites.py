"""Benchmark suite orchestration: fixtures -> models -> records.

Each suite builds its fixtures (written as auditable JSON with explicit index
lists), trains and evaluates one model per fixture (builtin ridge baseline or
an external protocol model), and collects MetricRecords. A failed fixture
yields an error-tagged record and never aborts the batch. Records are sorted
before writing so identical configurations produce byte-identical outputs
regardless of worker scheduling.
"""

from __future__ import annotations

import logging
import shlex
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import baseline
from .dataset import Frame, Trajectory, load_store
from .errors import FixtureError, TrajbenchError
from .fixtures import (
    GENERALIZATION_BUILDS,
    GRID_SAMPLE_COUNTS,
    SAMPLE_EFFICIENCY_COUNTS,
    TRAIN_BUDGET_FRACTION,
    WindowSpec,
    build_combined_dataset,
    build_generalization_plans,
    deterministic_sample,
    grid_scan_specs,
    sample_window,
    temporal_split,
    window_indices,
)
from .jsonio import canonical_dumps, sha256_hex
from .metrics import MetricRecord, PredictionBatch, PredictionEntry, energy_mae_per_atom, force_mae, write_records
from .protocol import ModelHandle, Timeouts
from .soap import SoapParams, window_similarity

log = logging.getLogger("trajbench.suites")

SUITES = ("sample_efficiency", "time_extrapolation", "cross_molecule", "soap_similarity")
BUILTIN_MODEL_ID = "ridge_soap"


@dataclass
class RunConfig:
    data_dir: Path
    suite: str
    out_dir: Path
    model_spec: str = "builtin"
    molecule: str | None = None
    samples: tuple[int, ...] | None = None
    test_samples: int | None = None
    soap_r_cut: float = 5.0
    soap_sigma: float = 0.5
    soap_n_max: int = 8
    soap_l_max: int = 6
    soap_quadrature_order: int = 64
    ridge_lambda: float = 1e-8
    fd_step: float = 1e-3
    workers: int = 1
    seed: int = 0
    train_timeout_s: float = 600.0
    predict_timeout_s: float = 300.0
    similarity_max_pairs: int = 64

    def __post_init__(self):
        if self.suite not in SUITES:
            raise TrajbenchError(f"unknown suite {self.suite!r}; choose from {SUITES}")
        self.data_dir = Path(self.data_dir)
        self.out_dir = Path(self.out_dir)

    def soap_params(self, frames: Sequence[Frame]) -> SoapParams:
        return SoapParams.for_frames(
            frames, r_cut=self.soap_r_cut, sigma=self.soap_sigma,
            n_max=self.soap_n_max, l_max=self.soap_l_max,
            quadrature_order=self.soap_quadrature_order)

    def echo(self) -> dict:
        return {
            "data_dir": str(self.data_dir), "suite": self.suite,
            "model": self.model_spec, "molecule": self.molecule,
            "samples": list(self.samples) if self.samples else None,
            "test_samples": self.test_samples,
            "soap": {"r_cut": self.soap_r_cut, "sigma": self.soap_sigma,
                     "n_max": self.soap_n_max, "l_max": self.soap_l_max,
                     "quadrature_order": self.soap_quadrature_order},
            "ridge_lambda": self.ridge_lambda, "fd_step": self.fd_step,
            "workers": self.workers, "seed": self.seed,
            "train_timeout_s": self.train_timeout_s,
            "predict_timeout_s": self.predict_timeout_s,
            "similarity_max_pairs": self.similarity_max_pairs,
        }


# --------------------------------------------------------------------------
# model drivers


class BuiltinDriver:
    """In-process ridge-on-SOAP baseline."""

    def __init__(self, config: RunConfig, train_frames: Sequence[Frame]):
        self.model_id = BUILTIN_MODEL_ID
        self._train_config = baseline.TrainConfig(
            soap=config.soap_params(train_frames),
            ridge_lambda=config.ridge_lambda, fd_step=config.fd_step)
        self._model: baseline.RidgeSoapModel | None = None

    def train(self, frames: Sequence[Frame]) -> dict:
        self._model = baseline.fit(frames, self._train_config)
        return {"residual_rms": self._model.fit_report.residual_rms,
                "sample_count": self._model.fit_report.sample_count}

    def predict(self, frames: Sequence[Frame]) -> tuple[np.ndarray, list[np.ndarray]]:
        energies = np.array([self._model.predict_energy(fr) for fr in frames])
        forces = [self._model.predict_forces(fr) for fr in frames]
        return energies, forces

    def close(self) -> None:
        pass


class ExternalDriver:
    """One protocol subprocess, isolated to one fixture."""

    def __init__(self, config: RunConfig, train_frames: Sequence[Frame]):
        cmd = shlex.split(config.model_spec[len("cmd:"):])
        self._handle = ModelHandle(cmd, Timeouts(train_s=config.train_timeout_s,
                                                 predict_s=config.predict_timeout_s))
        self._handle.handshake()
        self.model_id = f"external:{self._handle.model_name}"
        self._wire_config = {
            "ridge_lambda": config.ridge_lambda,
            "energy_weight": 1.0,
            "force_weight": 0.0,
            "fd_step": config.fd_step,
            "soap": config.soap_params(train_frames).to_dict(),
        }
        self._seed = config.seed

    def train(self, frames: Sequence[Frame]) -> dict:
        return self._handle.train(frames, self._wire_config, seed=self._seed)

    def predict(self, frames: Sequence[Frame]) -> tuple[np.ndarray, list[np.ndarray]]:
        return self._handle.predict(frames)

    def close(self) -> None:
        self._handle.close()


def _make_driver(config: RunConfig, train_frames: Sequence[Frame]):
    if config.model_spec == "builtin":
        return BuiltinDriver(config, train_frames)
    if config.model_spec.startswith("cmd:"):
        return ExternalDriver(config, train_frames)
    raise TrajbenchError(f"model spec must be 'builtin' or 'cmd:\"...\"', "
                         f"got {config.model_spec!r}")


# --------------------------------------------------------------------------
# fixture jobs


@dataclass
class FixtureJob:
    fixture_id: str
    document: dict
    train_frames: list[Frame]
    # list of (test label or None, frames to score)
    test_sets: list[tuple[str | None, list[Frame]]]
    meta: dict = field(default_factory=dict)

    @property
    def fixture_hash(self) -> str:
        return sha256_hex(canonical_dumps(self.document))


@dataclass
class RunResult:
    records: list[MetricRecord]
    fixtures_total: int
    fixtures_failed: int
    out_dir: Path


def _subsample_tests(indices: Sequence[int], limit: int | None) -> list[int]:
    if limit is None or limit >= len(indices):
        return list(indices)
    rel = deterministic_sample(len(indices), limit)
    return [indices[i] for i in rel]


def _species_records(batch: PredictionBatch) -> list[MetricRecord]:
    records = [energy_mae_per_atom(batch), force_mae(batch)]
    species = sorted({s for e in batch.entries for s in e.frame.species})
    records.extend(force_mae(batch, species_filter=s) for s in species)
    return records


def _run_model_job(config: RunConfig, job: FixtureJob) -> list[MetricRecord]:
    driver = _make_driver(config, job.train_frames)
    try:
        driver.train(job.train_frames)
        records: list[MetricRecord] = []
        for test_label, test_frames in job.test_sets:
            energies, forces = driver.predict(test_frames)
            batch = PredictionBatch(
                fixture_id=job.fixture_id, model_id=driver.model_id,
                entries=tuple(PredictionEntry(frame=fr, predicted_energy=float(e),
                                              predicted_forces=f)
                              for fr, e, f in zip(test_frames, energies, forces)))
            recs = _species_records(batch)
            if job.meta.get("suite") == "cross_molecule":
                recs = [r for r in recs if r.metric != "energy_mae_per_atom"]
            for r in recs:
                r.test_molecule = test_label
            records.extend(recs)
        return records
    finally:
        driver.close()


def _finalize_records(job: FixtureJob, records: list[MetricRecord],
                      params_hash: str) -> None:
    for r in records:
        r.suite = job.meta.get("suite")
        r.molecule_id = job.meta.get("molecule_id")
        r.train_build = job.meta.get("train_build")
        r.window_start = job.meta.get("window_start")
        r.window_size = job.meta.get("window_size")
        r.sample_count = job.meta.get("sample_count")
        r.fixture_hash = job.fixture_hash
        r.params_hash = params_hash


# --------------------------------------------------------------------------
# suite fixture builders


def _frame_doc_meta(spec: WindowSpec | None) -> dict:
    if spec is None:
        return {"window": "full_range"}
    return {"start_frac": spec.start_frac, "size_frac": spec.size_frac,
            "sample_count": spec.sample_count}


def _pick_molecule(config: RunConfig, store: dict[str, Trajectory]) -> Trajectory:
    mol = config.molecule or sorted(store)[0]
    if mol not in store:
        raise TrajbenchError(f"molecule {mol!r} not in store; have {sorted(store)}")
    return store[mol]


def _sample_efficiency_jobs(config: RunConfig, store) -> list[FixtureJob]:
    traj = _pick_molecule(config, store)
    split = temporal_split(traj)
    counts = config.samples or SAMPLE_EFFICIENCY_COUNTS
    window = int(TRAIN_BUDGET_FRACTION * len(traj) + 1e-9)
    jobs = []
    for k in sorted(counts):
        if k > window:
            log.warning("sample_efficiency: dropping count %d (window has %d frames)", k, window)
            continue
        spec = WindowSpec(0.0, TRAIN_BUDGET_FRACTION, k)
        subset = sample_window(len(traj), spec)
        test_idx = _subsample_tests(split.test_indices, config.test_samples)
        doc = {
            "schema_version": 1, "suite": "sample_efficiency",
            "fixture_id": f"se_n{k}", "molecule_id": traj.molecule_id,
            "spec": _frame_doc_meta(spec), "sampling_rule": "even_stride",
            "train_indices": list(subset.indices), "test_indices": list(test_idx),
        }
        jobs.append(FixtureJob(
            fixture_id=f"se_n{k}", document=doc,
            train_frames=[traj.frames[i] for i in subset.indices],
            test_sets=[(None, [traj.frames[i] for i in test_idx])],
            meta={"suite": "sample_efficiency", "molecule_id": traj.molecule_id,
                  "window_start": 0.0, "window_size": TRAIN_BUDGET_FRACTION,
                  "sample_count": k}))
    return jobs


def _time_extrapolation_jobs(config: RunConfig, store) -> list[FixtureJob]:
    traj = _pick_molecule(config, store)
    split = temporal_split(traj)
    counts = config.samples or GRID_SAMPLE_COUNTS
    jobs = []
    for spec in grid_scan_specs(counts):
        rng = window_indices(len(traj), spec)
        if spec.sample_count > len(rng):
            log.warning("time_extrapolation: skipping %s (window has %d frames)",
                        spec.fixture_id, len(rng))
            continue
        subset = sample_window(len(traj), spec)
        test_idx = _subsample_tests(split.test_indices, config.test_samples)
        doc = {
            "schema_version": 1, "suite": "time_extrapolation",
            "fixture_id": spec.fixture_id, "molecule_id": traj.molecule_id,
            "spec": _frame_doc_meta(spec), "sampling_rule": "even_stride",
            "train_indices": list(subset.indices), "test_indices": list(test_idx),
        }
        jobs.append(FixtureJob(
            fixture_id=spec.fixture_id, document=doc,
            train_frames=[traj.frames[i] for i in subset.indices],
            test_sets=[(None, [traj.frames[i] for i in test_idx])],
            meta={"suite": "time_extrapolation", "molecule_id": traj.molecule_id,
                  "window_start": spec.start_frac, "window_size": spec.size_frac,
                  "sample_count": spec.sample_count}))
    return jobs


def _cross_molecule_jobs(config: RunConfig, store) -> list[FixtureJob]:
    inventories = {mol: traj.species_inventory() for mol, traj in store.items()}
    per_mol = (config.samples or (1000,))[0]
    jobs = []
    for build in GENERALIZATION_BUILDS:
        missing = sorted(set(build) - set(store))
        if missing:
            log.warning("cross_molecule: skipping build %r (missing molecules %s)",
                        build, missing)
            continue
        plan = build_generalization_plans(inventories, builds=[build])[0]
        if not plan.test_molecules:
            log.warning("cross_molecule: build %r has no admissible test molecule", build)
            continue
        k = min(per_mol, min(len(store[m]) for m in build))
        combined = build_combined_dataset(store, build, samples_per_molecule=k, center=True)
        train_frames = [tf.frame for tf in combined.centered_frames()]
        test_sets = []
        test_doc = {}
        for mol in plan.test_molecules:
            traj = store[mol]
            n_test = min(config.test_samples or per_mol, len(traj))
            idx = deterministic_sample(len(traj), n_test)
            test_sets.append((mol, [traj.frames[i] for i in idx]))
            test_doc[mol] = list(idx)
        member_indices = {mol: list(deterministic_sample(len(store[mol]), k))
                          for mol in build}
        doc = {
            "schema_version": 1, "suite": "cross_molecule",
            "fixture_id": plan.fixture_id, "train_build": build,
            "sampling_rule": "even_stride",
            "samples_per_molecule": k,
            "train_indices": member_indices,
            "test_indices": test_doc,
            "reference_energies": {s.symbol: v for s, v in
                                   sorted(combined.reference_energies.values.items())},
            "reference_fallback": combined.reference_energies.fallback,
            "centered": True,
        }
        jobs.append(FixtureJob(
            fixture_id=plan.fixture_id, document=doc, train_frames=train_frames,
            test_sets=test_sets,
            meta={"suite": "cross_molecule", "train_build": build}))
    if not jobs:
        raise TrajbenchError("cross_molecule: no build is satisfiable with this store")
    return jobs


def _similarity_jobs(config: RunConfig, store) -> list[FixtureJob]:
    traj = _pick_molecule(config, store)
    split = temporal_split(traj)
    geometries = sorted({(s.start_frac, s.size_frac) for s in grid_scan_specs((1,))})
    jobs = []
    for start, size in geometries:
        spec = WindowSpec(start, size, 1)
        rng = window_indices(len(traj), spec)
        fixture_id = f"win_s{start:.2f}_w{size:.2f}"
        doc = {
            "schema_version": 1, "suite": "soap_similarity",
            "fixture_id": fixture_id, "molecule_id": traj.molecule_id,
            "spec": {"start_frac": start, "size_frac": size},
            "max_pairs_per_side": config.similarity_max_pairs,
            "train_indices": list(rng), "test_indices": list(split.test_indices),
        }
        jobs.append(FixtureJob(
            fixture_id=fixture_id, document=doc,
            train_frames=[traj.frames[i] for i in rng],
            test_sets=[(None, [traj.frames[i] for i in split.test_indices])],
            meta={"suite": "soap_similarity", "molecule_id": traj.molecule_id,
                  "window_start": start, "window_size": size}))
    return jobs


def _run_similarity_job(config: RunConfig, job: FixtureJob) -> list[MetricRecord]:
    params = config.soap_params(job.train_frames)
    _, test_frames = job.test_sets[0]
    sim = window_similarity(job.train_frames, test_frames, params,
                            max_pairs_per_side=config.similarity_max_pairs)
    return [MetricRecord(
        fixture_id=job.fixture_id, model_id="soap",
        metric="window_similarity", value=sim.mean, unit="cosine",
        value_min=sim.min, value_max=sim.max,
        frame_count=sim.n_train + sim.n_test, atom_count=0)]


# --------------------------------------------------------------------------
# run loop


_JOB_BUILDERS = {
    "sample_efficiency": _sample_efficiency_jobs,
    "time_extrapolation": _time_extrapolation_jobs,
    "cross_molecule": _cross_molecule_jobs,
    "soap_similarity": _similarity_jobs,
}


def run_suite(config: RunConfig) -> RunResult:
    from . import charts  # local import: keeps module import light

    store = load_store(config.data_dir)
    if not store:
        raise TrajbenchError(f"store at {config.data_dir} contains no molecules")
    jobs = _JOB_BUILDERS[config.suite](config, store)
    if not jobs:
        raise TrajbenchError(f"suite {config.suite!r} produced no feasible fixtures")

    out_dir = config.out_dir
    fixtures_dir = out_dir / "fixtures"
    fixtures_dir.mkdir(parents=True, exist_ok=True)
    for job in sorted(jobs, key=lambda j: j.fixture_id):
        (fixtures_dir / f"{job.fixture_id}.json").write_text(canonical_dumps(job.document))

    any_frames = jobs[0].train_frames
    params_hash = sha256_hex(canonical_dumps(config.soap_params(any_frames).to_dict(),
                                             indent=None))

    def execute(job: FixtureJob) -> tuple[FixtureJob, list[MetricRecord], str | None]:
        try:
            if config.suite == "soap_similarity":
                recs = _run_similarity_job(config, job)
            else:
                recs = _run_model_job(config, job)
            return job, recs, None
        except Exception as exc:  # a failed fixture must never abort the batch
            log.error("fixture %s failed: %s", job.fixture_id, exc)
            return job, [MetricRecord(
                fixture_id=job.fixture_id, model_id=config.model_spec, metric="error",
                value=None, unit="", status="error", message=str(exc))], str(exc)

    results = []
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(execute, jobs))
    else:
        results = [execute(job) for job in jobs]

    all_records: list[MetricRecord] = []
    failures = 0
    for job, recs, err in results:
        _finalize_records(job, recs, params_hash)
        all_records.extend(recs)
        failures += err is not None

    write_records(all_records, out_dir)
    chart_paths = charts.render_for_suite(config.suite, all_records, out_dir / "charts")

    report = {
        "schema_version": 1,
        "suite": config.suite,
        "run_config": config.echo(),
        "environment": _environment(),
        "fixtures": [{"id": j.fixture_id, "hash": j.fixture_hash}
                     for j in sorted(jobs, key=lambda j: j.fixture_id)],
        "charts": [str(p.relative_to(out_dir)) for p in chart_paths],
        "failures": failures,
    }
    (out_dir / "report.json").write_text(canonical_dumps(report))
    return RunResult(records=all_records, fixtures_total=len(jobs),
                     fixtures_failed=failures, out_dir=out_dir)


def _environment() -> dict:
    import scipy

    from . import __version__
    return {
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "trajbench": __version__,
    }
