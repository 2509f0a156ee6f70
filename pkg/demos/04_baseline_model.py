"""Walk through the built-in baseline: ridge regression on SOAP descriptors.

The model is deliberately simple (per-species reference energies plus linear
weights on atomic descriptors, forces by finite differences) so the harness
runs end to end with no external dependencies. It is a floor, not a
contender.
"""

from pathlib import Path

import numpy as np

from trajbench import RidgeSoapModel, SoapParams, TrainConfig, fit
from trajbench.synthetic import quadratic_dimer_forces, quadratic_dimer_frames

out = Path("demo_output/04_baseline")
out.mkdir(parents=True, exist_ok=True)

# A dimer sweeping its bond length over a quadratic well, in random poses.
frames = quadratic_dimer_frames(80)
train, held_out = frames[:60], frames[60:]

config = TrainConfig(soap=SoapParams.for_frames(train, n_max=6, l_max=4,
                                                quadrature_order=32))
model = fit(train, config)
print(f"fit on {model.fit_report.sample_count} frames, "
      f"training residual RMS {model.fit_report.residual_rms:.2e} eV")

energy_errs = [abs(model.predict_energy(fr) - fr.energy) / fr.n_atoms
               for fr in held_out]
print(f"held-out energy MAE: {1000 * float(np.mean(energy_errs)):.3f} meV/atom")

# Forces come from central finite differences of the predicted energy and
# can be compared against the analytic gradient of the generating potential.
fr = held_out[0]
predicted = model.predict_forces(fr)
analytic = quadratic_dimer_forces(fr.positions)
print("max |predicted - analytic| force:",
      float(np.abs(predicted - analytic).max()), "eV/A")
print("net predicted force (should vanish):",
      float(np.abs(predicted.sum(axis=0)).max()), "eV/A")

# Models serialize to a single JSON document and round-trip exactly.
path = out / "model.json"
path.write_text(model.to_json())
back = RidgeSoapModel.from_json(path.read_text())
identical = all(np.array_equal(back.weights[s], model.weights[s]) for s in model.weights)
print(f"serialized to {path} ({path.stat().st_size} bytes); "
      f"weights bit-identical after reload: {identical}")
