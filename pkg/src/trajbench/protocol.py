"""Subprocess protocol for external force-field models.

Transport is newline-delimited JSON over the child's stdin/stdout with
diagnostics on stderr. The harness speaks first:

    -> hello {protocol_version, harness}
    <- hello {protocol_version, model_name, capabilities}
    -> train {config, train_frames}
    <- train_done {fit_report}          (train_progress lines may precede it)
    -> predict {request_id, frames}
    <- prediction {request_id, energies, forces}
    -> shutdown {}                       (child exits)

Any reply may instead be error {code, message}. Every wait is bounded by a
timeout so a dead child can never deadlock the run loop.
"""

from __future__ import annotations

import json
import logging
import queue
import subprocess
import threading
from collections import deque
from dataclasses import dataclass
from importlib import resources
from typing import Any, Sequence

import numpy as np

from .dataset import Frame
from .elements import Species
from .errors import ProtocolError

log = logging.getLogger("trajbench.protocol")

PROTOCOL_VERSION = "1"
MAX_LINE_BYTES = 64 * 1024 * 1024

_EOF = object()


def frame_to_wire(frame: Frame, labels: bool = True) -> dict:
    doc: dict[str, Any] = {
        "species": [s.symbol for s in frame.species],
        "positions": [[float(v) for v in row] for row in frame.positions],
        "source_index": frame.source_index,
    }
    if labels:
        doc["energy"] = float(frame.energy)
        doc["forces"] = [[float(v) for v in row] for row in frame.forces]
    return doc


def wire_to_frame(doc: dict) -> Frame:
    return Frame(
        positions=np.array(doc["positions"], dtype=float),
        species=tuple(Species.from_symbol(s) for s in doc["species"]),
        energy=float(doc.get("energy", 0.0)),
        forces=np.array(doc.get("forces", np.zeros_like(doc["positions"])), dtype=float),
        source_index=int(doc.get("source_index", 0)),
    )


@dataclass(frozen=True)
class Timeouts:
    handshake_s: float = 10.0
    train_s: float = 600.0
    predict_s: float = 300.0


class ModelHandle:
    """One external model process; legal states launched -> ready -> trained -> closed."""

    def __init__(self, cmd: Sequence[str], timeouts: Timeouts = Timeouts()):
        self.cmd = list(cmd)
        self.timeouts = timeouts
        self.state = "launched"
        self.model_name: str | None = None
        self._request_counter = 0
        self._stderr_tail: deque[str] = deque(maxlen=50)
        self._lines: queue.Queue = queue.Queue()
        try:
            self._proc = subprocess.Popen(
                self.cmd, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                stderr=subprocess.PIPE, text=True, bufsize=1)
        except OSError as exc:
            self.state = "closed"
            raise ProtocolError("launch_failed", f"cannot launch {self.cmd}: {exc}") from None
        threading.Thread(target=self._read_stdout, daemon=True).start()
        threading.Thread(target=self._read_stderr, daemon=True).start()

    # -- plumbing -----------------------------------------------------------

    def _read_stdout(self):
        for line in self._proc.stdout:
            self._lines.put(line.rstrip("\n"))
        self._lines.put(_EOF)

    def _read_stderr(self):
        for line in self._proc.stderr:
            self._stderr_tail.append(line.rstrip("\n"))

    def _diag(self) -> str:
        return ("; adapter stderr: " + " | ".join(self._stderr_tail)) if self._stderr_tail else ""

    def _fail(self, code: str, message: str) -> ProtocolError:
        self.close()
        return ProtocolError(code, message + self._diag())

    def _send(self, doc: dict) -> None:
        line = json.dumps(doc, sort_keys=True)
        if len(line.encode()) > MAX_LINE_BYTES:
            raise self._fail("oversized_message",
                             f"message of {len(line)} bytes exceeds the {MAX_LINE_BYTES} byte cap; "
                             "downsample the fixture")
        try:
            self._proc.stdin.write(line + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError):
            raise self._fail("process_exit", "adapter closed its stdin") from None

    def _recv(self, timeout_s: float, context: str) -> dict:
        while True:
            try:
                line = self._lines.get(timeout=timeout_s)
            except queue.Empty:
                raise self._fail("timeout", f"no reply within {timeout_s}s while {context}") \
                    from None
            if line is _EOF:
                code = self._proc.poll()
                raise self._fail("process_exit",
                                 f"adapter exited with code {code} while {context}")
            try:
                doc = json.loads(line)
            except json.JSONDecodeError:
                raise self._fail("malformed_reply",
                                 f"adapter sent a non-JSON line while {context}: {line[:200]!r}") \
                    from None
            if not isinstance(doc, dict) or "type" not in doc:
                raise self._fail("malformed_reply", f"reply lacks a type field: {line[:200]!r}")
            if doc["type"] == "train_progress":
                log.debug("train_progress: %s", doc)
                continue
            if doc["type"] == "error":
                raise self._fail(str(doc.get("code", "model_error")),
                                 f"adapter error while {context}: {doc.get('message', '')}")
            return doc

    # -- protocol operations --------------------------------------------------

    def handshake(self) -> dict:
        if self.state != "launched":
            raise ProtocolError("bad_state", f"handshake in state {self.state}")
        self._send({"type": "hello", "protocol_version": PROTOCOL_VERSION,
                    "harness": "trajbench"})
        reply = self._recv(self.timeouts.handshake_s, "waiting for hello")
        if reply["type"] != "hello":
            raise self._fail("protocol", f"expected hello, got {reply['type']!r}")
        if reply.get("protocol_version") != PROTOCOL_VERSION:
            raise self._fail("version_mismatch",
                             f"adapter speaks protocol {reply.get('protocol_version')!r}, "
                             f"harness requires {PROTOCOL_VERSION!r}")
        self.model_name = str(reply.get("model_name", "external"))
        self.state = "ready"
        return reply.get("capabilities", {})

    def train(self, frames: Sequence[Frame], config: dict, seed: int | None = None) -> dict:
        if self.state != "ready":
            raise ProtocolError("bad_state", f"train in state {self.state}")
        if not frames:
            raise ProtocolError("empty_train_set", "refusing to send an empty training set")
        msg = {"type": "train", "config": dict(config),
               "train_frames": [frame_to_wire(fr, labels=True) for fr in frames]}
        if seed is not None:
            msg["config"]["seed"] = seed
        self._send(msg)
        reply = self._recv(self.timeouts.train_s, "training")
        if reply["type"] != "train_done":
            raise self._fail("protocol", f"expected train_done, got {reply['type']!r}")
        self.state = "trained"
        return reply.get("fit_report", {})

    def predict(self, frames: Sequence[Frame]) -> tuple[np.ndarray, list[np.ndarray]]:
        if self.state != "trained":
            raise ProtocolError("bad_state", f"predict in state {self.state}")
        self._request_counter += 1
        request_id = f"r{self._request_counter}"
        self._send({"type": "predict", "request_id": request_id,
                    "frames": [frame_to_wire(fr, labels=False) for fr in frames]})
        reply = self._recv(self.timeouts.predict_s, "predicting")
        if reply["type"] != "prediction":
            raise self._fail("protocol", f"expected prediction, got {reply['type']!r}")
        if reply.get("request_id") != request_id:
            raise self._fail("protocol", f"prediction request_id {reply.get('request_id')!r} "
                             f"does not match {request_id!r}")
        energies = reply.get("energies")
        forces = reply.get("forces")
        if not isinstance(energies, list) or len(energies) != len(frames):
            raise self._fail("shape_mismatch",
                             f"expected {len(frames)} energies, got "
                             f"{len(energies) if isinstance(energies, list) else type(energies)}")
        if not isinstance(forces, list) or len(forces) != len(frames):
            raise self._fail("shape_mismatch", f"expected {len(frames)} force blocks")
        e = np.array(energies, dtype=float)
        f_blocks = []
        for k, (fr, blk) in enumerate(zip(frames, forces)):
            arr = np.array(blk, dtype=float)
            if arr.shape != (fr.n_atoms, 3):
                raise self._fail("shape_mismatch",
                                 f"force block {k} has shape {arr.shape}, "
                                 f"expected {(fr.n_atoms, 3)}")
            f_blocks.append(arr)
        if not np.isfinite(e).all() or not all(np.isfinite(b).all() for b in f_blocks):
            raise self._fail("non_finite", "prediction contains non-finite values")
        return e, f_blocks

    def close(self) -> None:
        if self.state == "closed":
            return
        self.state = "closed"
        if self._proc.poll() is None:
            try:
                self._proc.stdin.write(json.dumps({"type": "shutdown"}) + "\n")
                self._proc.stdin.flush()
            except (BrokenPipeError, OSError, ValueError):
                pass
            try:
                self._proc.wait(timeout=5.0)
            except subprocess.TimeoutExpired:
                self._proc.terminate()
                try:
                    self._proc.wait(timeout=5.0)
                except subprocess.TimeoutExpired:
                    self._proc.kill()
        try:
            self._proc.stdin.close()
        except (OSError, ValueError):
            pass

    def __enter__(self) -> "ModelHandle":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


# --------------------------------------------------------------------------
# golden transcript replay


def subset_matches(expected: Any, actual: Any) -> bool:
    """True when `actual` carries every leaf of `expected` with equal values."""
    if isinstance(expected, dict):
        return (isinstance(actual, dict)
                and all(k in actual and subset_matches(v, actual[k])
                        for k, v in expected.items()))
    if isinstance(expected, list):
        return (isinstance(actual, list) and len(expected) == len(actual)
                and all(subset_matches(e, a) for e, a in zip(expected, actual)))
    if isinstance(expected, (int, float)) and isinstance(actual, (int, float)):
        return float(expected) == float(actual)
    return expected == actual


def load_golden_transcript() -> dict:
    text = resources.files("trajbench").joinpath("data/golden_transcript.json").read_text()
    return json.loads(text)


def load_protocol_schema() -> dict:
    text = resources.files("trajbench").joinpath("data/protocol_v1.schema.json").read_text()
    return json.loads(text)


def replay_transcript(cmd: Sequence[str], transcript: dict,
                      step_timeout_s: float = 20.0) -> list[str]:
    """Run `cmd` and replay the transcript against it; returns mismatch messages."""
    mismatches: list[str] = []
    proc = subprocess.Popen(list(cmd), stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                            stderr=subprocess.PIPE, text=True, bufsize=1)
    lines: queue.Queue = queue.Queue()

    def pump():
        for line in proc.stdout:
            lines.put(line.rstrip("\n"))
        lines.put(_EOF)

    threading.Thread(target=pump, daemon=True).start()
    try:
        for k, step in enumerate(transcript["steps"]):
            label = f"step {k}"
            if "send_raw" in step:
                proc.stdin.write(step["send_raw"] + "\n")
            else:
                proc.stdin.write(json.dumps(step["send"], sort_keys=True) + "\n")
            proc.stdin.flush()
            if step.get("expect_exit"):
                try:
                    code = proc.wait(timeout=step_timeout_s)
                    if code != 0:
                        mismatches.append(f"{label}: exit code {code}, expected 0")
                except subprocess.TimeoutExpired:
                    mismatches.append(f"{label}: adapter did not exit after shutdown")
                continue
            if "expect" not in step:
                continue
            reply = None
            while True:  # progress notifications are not replies
                try:
                    line = lines.get(timeout=step_timeout_s)
                except queue.Empty:
                    mismatches.append(f"{label}: no reply within {step_timeout_s}s")
                    break
                if line is _EOF:
                    mismatches.append(f"{label}: adapter exited unexpectedly")
                    break
                try:
                    reply = json.loads(line)
                except json.JSONDecodeError:
                    mismatches.append(f"{label}: non-JSON reply {line[:200]!r}")
                    break
                if (isinstance(reply, dict) and reply.get("type") == "train_progress"
                        and step["expect"].get("type") != "train_progress"):
                    reply = None
                    continue
                break
            if reply is None:
                break
            if not subset_matches(step["expect"], reply):
                mismatches.append(f"{label}: reply {reply} does not match expected "
                                  f"{step['expect']}")
    finally:
        if proc.poll() is None:
            proc.kill()
            proc.wait()
    return mismatches
