"""End-to-end benchmark runs on synthetic data: all four suites.

Equivalent CLI commands are printed alongside; the CLI and the library share
the same RunConfig path, and identical configurations reproduce records files
byte for byte.
"""

from pathlib import Path

from trajbench import RunConfig, run_suite
from trajbench.dataset import ingest_manifest, load_manifest
from trajbench.synthetic import (
    anharmonic_dimer_trajectory,
    drifting_dimer_trajectory,
    molecule_trajectory,
    write_dataset,
)

root = Path("demo_output/05_benchmark")
root.mkdir(parents=True, exist_ok=True)

# -- build and ingest two synthetic datasets --------------------------------
temporal_raw = root / "raw_temporal"
manifest = write_dataset({
    "osc": anharmonic_dimer_trajectory(1500, molecule_id="osc"),
    "drift": drifting_dimer_trajectory(1500, molecule_id="drift"),
}, temporal_raw)
temporal_store = root / "store_temporal"
ingest_manifest(load_manifest(manifest), temporal_store)

library_raw = root / "raw_library"
manifest2 = write_dataset({m: molecule_trajectory(m, n_frames=60) for m in "abcdefg"},
                          library_raw)
library_store = root / "store_library"
ingest_manifest(load_manifest(manifest2), library_store)
print("ingested stores:", temporal_store, "and", library_store)

soap_small = dict(soap_n_max=3, soap_l_max=2, soap_quadrature_order=16)

# -- 1. sample efficiency ----------------------------------------------------
print("\n# trajbench run --suite sample_efficiency --data", temporal_store,
      "--molecule osc --samples 50,100,200 ...")
res = run_suite(RunConfig(data_dir=temporal_store, suite="sample_efficiency",
                          out_dir=root / "out_se", molecule="osc",
                          samples=(50, 100, 200), test_samples=40, **soap_small))
for r in sorted(res.records, key=lambda r: r.sample_count or 0):
    if r.metric == "force_mae_all":
        print(f"  n={r.sample_count:<4} force MAE {r.value:8.3f} meV/A")

# -- 2. time extrapolation ----------------------------------------------------
print("\n# trajbench run --suite time_extrapolation --data", temporal_store,
      "--molecule drift --samples 80 ...")
res = run_suite(RunConfig(data_dir=temporal_store, suite="time_extrapolation",
                          out_dir=root / "out_te", molecule="drift",
                          samples=(80,), test_samples=30, **soap_small))
ranked = sorted((r for r in res.records if r.metric == "force_mae_all"),
                key=lambda r: r.value)
print("  best window :", ranked[0].fixture_id, f"{ranked[0].value:.3f} meV/A")
print("  worst window:", ranked[-1].fixture_id, f"{ranked[-1].value:.3f} meV/A")

# -- 3. window similarity diagnostic -----------------------------------------
print("\n# trajbench run --suite soap_similarity --data", temporal_store,
      "--molecule drift ...")
res = run_suite(RunConfig(data_dir=temporal_store, suite="soap_similarity",
                          out_dir=root / "out_sim", molecule="drift",
                          similarity_max_pairs=16, **soap_small))
for r in sorted(res.records, key=lambda r: (r.window_size, r.window_start)):
    if r.window_size == 0.30:
        print(f"  start {r.window_start:.2f}: similarity {r.value:.4f}")

# -- 4. cross-molecule generalization ----------------------------------------
print("\n# trajbench run --suite cross_molecule --data", library_store,
      "--samples 30 ...")
res = run_suite(RunConfig(data_dir=library_store, suite="cross_molecule",
                          out_dir=root / "out_gen", samples=(30,), test_samples=10,
                          **soap_small))
rows = sorted((r for r in res.records if r.metric == "force_mae_all"),
              key=lambda r: r.value)
for r in rows[:5]:
    print(f"  {r.train_build:>6} -> {r.test_molecule}: {r.value:8.2f} meV/A")
print(f"  ... {len(rows)} build/test pairs total")

print("\ncharts and records under", root / "out_*",
      "- re-render any time with: trajbench report --records <records.csv> --out <dir>")
