#!/usr/bin/env python3
"""Configurable protocol test double.

Modes:
  mean           well-behaved mean-predictor (per-atom mean energy, zero forces)
  echo           mean-predictor that also echoes train_frames inside fit_report
  bad-version    answers hello with protocol_version "2"
  garbage        answers hello with a non-JSON line
  silent         never answers anything
  crash-on-train exits with code 3 (and a stderr diagnostic) on train
  nan-forces     returns NaN force components
  bad-request-id answers predict with a wrong request_id
  short-energies returns one energy too few
"""

import argparse
import json
import sys


def emit(doc):
    sys.stdout.write(json.dumps(doc) + "\n")
    sys.stdout.flush()


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--mode", default="mean")
    mode = parser.parse_args().mode

    per_atom_mean = None

    for raw in sys.stdin:
        line = raw.strip()
        if not line:
            continue
        if mode == "silent":
            continue
        try:
            msg = json.loads(line)
        except json.JSONDecodeError:
            emit({"type": "error", "code": "bad_request", "message": "line is not JSON"})
            continue
        kind = msg.get("type")

        if kind == "hello":
            if mode == "bad-version":
                emit({"type": "hello", "protocol_version": "2", "model_name": "from-the-future"})
            elif mode == "garbage":
                sys.stdout.write("definitely not json\n")
                sys.stdout.flush()
            else:
                name = "echo" if mode == "echo" else "mean-predictor"
                emit({"type": "hello", "protocol_version": "1", "model_name": name,
                      "capabilities": {"forces": "zero"}})
        elif kind == "train":
            if mode == "crash-on-train":
                print("synthetic training explosion", file=sys.stderr)
                sys.exit(3)
            frames = msg["train_frames"]
            per_atom_mean = sum(f["energy"] / len(f["species"]) for f in frames) / len(frames)
            report = {"sample_count": len(frames)}
            if mode == "echo":
                report["frames_echo"] = frames
            emit({"type": "train_progress", "message": "halfway"})
            emit({"type": "train_done", "fit_report": report})
        elif kind == "predict":
            if per_atom_mean is None:
                emit({"type": "error", "code": "not_trained",
                      "message": "predict before train"})
                continue
            frames = msg["frames"]
            energies = [per_atom_mean * len(f["species"]) for f in frames]
            forces = [[[0.0, 0.0, 0.0] for _ in f["species"]] for f in frames]
            if mode == "nan-forces":
                forces[0][0][0] = float("nan")
            if mode == "short-energies":
                energies = energies[:-1]
            request_id = "wrong" if mode == "bad-request-id" else msg["request_id"]
            emit({"type": "prediction", "request_id": request_id,
                  "energies": energies, "forces": forces})
        elif kind == "shutdown":
            return
        else:
            emit({"type": "error", "code": "bad_request",
                  "message": f"unknown message type {kind!r}"})


if __name__ == "__main__":
    main()
