/** Wire types for protocol version 1: newline-delimited JSON over stdio. */

export const PROTOCOL_VERSION = "1";

export interface WireFrame {
  species: string[];
  positions: number[][];
  source_index?: number;
  energy?: number;
  forces?: number[][];
}

export interface TrainedModel {
  predict(frames: WireFrame[]): { energies: number[]; forces: number[][][] };
}

/** Two-function contract a mounted model module must satisfy. */
export interface ModelModule {
  name: string;
  fit(frames: WireFrame[], config: Record<string, unknown>): TrainedModel;
}

export type Message = Record<string, unknown> & { type: string };

export function errorMessage(code: string, message: string): Message {
  return { type: "error", code, message };
}

export function validateFrame(doc: unknown, where: string): WireFrame {
  const f = doc as WireFrame;
  if (!f || !Array.isArray(f.species) || !Array.isArray(f.positions)) {
    throw new Error(`${where}: frame needs species and positions arrays`);
  }
  if (f.positions.length !== f.species.length) {
    throw new Error(
      `${where}: ${f.species.length} species but ${f.positions.length} position rows`,
    );
  }
  for (const row of f.positions) {
    if (!Array.isArray(row) || row.length !== 3 || !row.every(Number.isFinite)) {
      throw new Error(`${where}: positions must be finite [x, y, z] rows`);
    }
  }
  return f;
}
