"""Drive an external model through the subprocess protocol.

Any executable that speaks the newline-delimited JSON protocol (version 1)
can be benchmarked: the harness launches one process per fixture, performs a
hello handshake, streams training frames, and requests predictions. The
reference adapter under adapter/ implements the protocol in TypeScript
around a trivial mean predictor.
"""

import shutil
import subprocess
import sys
from pathlib import Path

from trajbench import ModelHandle, Timeouts, load_golden_transcript, replay_transcript
from trajbench.protocol import load_protocol_schema
from trajbench.synthetic import anharmonic_dimer_trajectory

ADAPTER = Path(__file__).resolve().parents[1] / "adapter" / "dist" / "main.js"

schema = load_protocol_schema()
kinds = [alt["properties"]["type"]["const"] for alt in schema["oneOf"]]
print("protocol version 1 message types:", ", ".join(kinds))

if not ADAPTER.exists() or shutil.which("node") is None:
    print("\nreference adapter not built; run:  cd adapter && npm install && npm run build")
    sys.exit(0)

cmd = ["node", str(ADAPTER)]
print("\nlaunching", " ".join(cmd))

traj = anharmonic_dimer_trajectory(60)
with ModelHandle(cmd, Timeouts(handshake_s=10, train_s=30, predict_s=30)) as handle:
    caps = handle.handshake()
    print("handshake ok:", handle.model_name, "| capabilities:", caps)
    report = handle.train(list(traj.frames[:40]), {"ridge_lambda": 0.0}, seed=1)
    print("train_done:", report)
    energies, forces = handle.predict(list(traj.frames[40:44]))
    print("predicted energies:", [round(float(e), 4) for e in energies])
    print("predicted force blocks:", len(forces), "(all zeros for the mean predictor)")

# Conformance is checked by replaying the published golden transcript.
mismatches = replay_transcript(cmd, load_golden_transcript())
print("golden transcript mismatches:", mismatches or "none")
