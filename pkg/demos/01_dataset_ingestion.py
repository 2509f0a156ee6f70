"""Walk through dataset ingestion: extended XYZ, temporal order, validation.

Trajectory files arrive as extended XYZ with an `energy=` comment key and an
optional `old_index=` key recording the original time ordinal. Ingestion
parses, restores temporal order, validates, and converts units to eV / eV/A.
"""

from pathlib import Path

import numpy as np

from trajbench import (
    convert_units,
    load_manifest,
    ingest_manifest,
    load_store,
    parse_extxyz,
    restore_temporal_order,
    validate_trajectory,
)
from trajbench.dataset import frames_to_extxyz
from trajbench.synthetic import anharmonic_dimer_trajectory, write_dataset

out = Path("demo_output/01_dataset")
out.mkdir(parents=True, exist_ok=True)

# A trajectory whose file order was shuffled (as happens when a dataset is
# distributed sorted by something other than time).
traj = anharmonic_dimer_trajectory(n_frames=200, molecule_id="osc")
rng = np.random.default_rng(5)
shuffled = [traj.frames[i] for i in rng.permutation(len(traj))]
(out / "osc.extxyz").write_text(frames_to_extxyz(shuffled))
(out / "manifest.json").write_text(
    '{"molecules": [{"id": "osc", "path": "osc.extxyz", "units": "ev"}]}\n')

# Parsing keeps file order; old_index is only *recorded* at this stage.
frames = parse_extxyz((out / "osc.extxyz").read_text())
print("first five source indices in file order:",
      [fr.source_index for fr in frames[:5]])

# Reordering is a separate, explicit step.
ordered = restore_temporal_order(frames, molecule_id="osc")
print("after restore_temporal_order:",
      [fr.source_index for fr in ordered.frames[:5]])

report = validate_trajectory(ordered)
print("validation violations:", len(report.violations))

# Unit conversions are exact multiplications by fixed constants.
print("1 kcal/mol =", convert_units(1.0, "kcal/mol", "eV"), "eV")
print("1 eV       =", convert_units(1.0, "eV", "meV"), "meV")

# The same flow as one call: manifest -> canonical store.
store_dir = out / "store"
ingest_manifest(load_manifest(out / "manifest.json"), store_dir)
store = load_store(store_dir)
print("store molecules:", sorted(store),
      "| frames:", len(store["osc"]),
      "| monotone:", all(b.source_index > a.source_index
                         for a, b in zip(store["osc"].frames, store["osc"].frames[1:])))
