import type { ModelModule, TrainedModel, WireFrame } from "./protocol.js";

/**
 * The bundled baseline: learns the training-set mean energy per atom and
 * predicts it scaled by atom count, with zero forces. Deterministic and
 * composition-only, which makes it the analytic cross-check model for the
 * harness (its force MAE equals the mean |true force| of the test set).
 */
export const meanPredictor: ModelModule = {
  name: "mean-predictor",

  fit(frames: WireFrame[]): TrainedModel {
    let total = 0;
    for (const f of frames) {
      if (typeof f.energy !== "number" || !Number.isFinite(f.energy)) {
        throw new Error("train frame lacks a finite energy");
      }
      total += f.energy / f.species.length;
    }
    const perAtom = total / frames.length;

    return {
      predict(query: WireFrame[]) {
        const energies = query.map((f) => perAtom * f.species.length);
        const forces = query.map((f) => f.species.map(() => [0, 0, 0]));
        return { energies, forces };
      },
    };
  },
};

/**
 * Resolve the model to serve. A real force field mounts by exporting the
 * same two-function contract ({ name, fit(frames, config) -> { predict } })
 * from a module named via TRAJBENCH_ADAPTER_MODEL.
 */
export async function loadModel(): Promise<ModelModule> {
  const mount = process.env.TRAJBENCH_ADAPTER_MODEL;
  if (!mount) {
    return meanPredictor;
  }
  const mod = await import(mount);
  const model: ModelModule = mod.default ?? mod.model;
  if (!model || typeof model.fit !== "function") {
    throw new Error(`mounted module ${mount} does not export a model`);
  }
  return model;
}
