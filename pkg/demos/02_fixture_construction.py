"""Walk through fixture construction: splits, window grids, reference energies.

Everything is deterministic and seed-free so two machines always build the
same index sets byte for byte.
"""

from trajbench import (
    build_combined_dataset,
    build_generalization_plans,
    deterministic_sample,
    fit_reference_energies,
    grid_scan_specs,
    sample_efficiency_series,
    temporal_split,
    window_indices,
)
from trajbench.synthetic import MOLECULE_FORMULAS, anharmonic_dimer_trajectory, molecule_trajectory

traj = anharmonic_dimer_trajectory(n_frames=1000)

# The test subset is always the *last* 10% of the time series: models are
# judged on their ability to predict the future, not interpolate the past.
split = temporal_split(traj, test_fraction=0.1)
print(f"train 0..{split.train_indices[-1]}, test {split.test_indices[0]}..{split.test_indices[-1]}")

# Sample-efficiency series: even-stride subsets of the first-90% window.
# Counts that do not fit the window are dropped (here everything above 900).
series = sample_efficiency_series(traj, counts=(50, 100, 200, 400, 15000))
print("sample-efficiency subsets:", [s.spec.sample_count for s in series])
print("  n=50 starts:", series[0].indices[:5], "... stride", series[0].indices[1])

# The time-extrapolation grid: 5 sizes x admissible starts, never touching
# the final 10%.
specs = grid_scan_specs(counts=(100,))
print(f"grid: {len(specs)} window specs")
for spec in specs[:3]:
    rng = window_indices(len(traj), spec)
    print(f"  {spec.fixture_id}: frames [{rng.start}, {rng.stop})")

# Even-stride sampling is the one sampling rule used everywhere.
print("deterministic_sample(10, 5) ->", deterministic_sample(10, 5))

# Cross-molecule fixtures merge trajectories after fitting per-species
# reference energies by least squares, then centering. Three distinct
# compositions pin down the three species constants; with fewer the fit
# falls back to a flagged equal per-atom split.
store = {m: molecule_trajectory(m, n_frames=60) for m in "abeg"}
combined = build_combined_dataset(store, "abe", samples_per_molecule=30)
print("reference energies (eV):",
      {s.symbol: round(v, 2) for s, v in combined.reference_energies.values.items()})
print("fallback used:", combined.reference_energies.fallback,
      "| centered residual mean:", float(combined.residuals().mean()))

ref = fit_reference_energies([tf.frame for tf in combined.frames])
print("residual RMS around the reference model:", round(ref.residual_rms, 3), "eV")

# Which unseen molecules may a build be tested on? Only those whose species
# all appear in the training build: uracil-like 'g' carries nitrogen, which
# 'ab' never saw, so it is excluded rather than scored nonsensically.
inventories = {m: store[m].species_inventory() for m in store}
for plan in build_generalization_plans(inventories, builds=["ab", "b"]):
    print(f"build {plan.train_build!r} -> test molecules {plan.test_molecules}")
print("formulas:", {m: MOLECULE_FORMULAS[m] for m in "abeg"})
