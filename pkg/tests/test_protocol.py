import sys
from pathlib import Path

import numpy as np
import pytest

import trajbench.protocol as protocol
from trajbench.errors import ProtocolError
from trajbench.protocol import (
    ModelHandle,
    Timeouts,
    frame_to_wire,
    load_golden_transcript,
    load_protocol_schema,
    replay_transcript,
    subset_matches,
)

from .conftest import make_frame

ADAPTER = Path(__file__).parent / "adapters" / "testmodel.py"


def adapter_cmd(mode="mean"):
    return [sys.executable, str(ADAPTER), "--mode", mode]


def handle(mode="mean", **t):
    return ModelHandle(adapter_cmd(mode), Timeouts(**t))


def frames(n=3, n_atoms=2):
    out = []
    for k in range(n):
        pos = [[0.1 * k + 0.01 * a, 0.0, float(a)] for a in range(n_atoms)]
        out.append(make_frame(pos, energy=-1.0 - k, source_index=k))
    return out


# --------------------------------------------------------------------------
# handshake


def test_handshake_success():
    with handle() as h:
        caps = h.handshake()
        assert h.state == "ready"
        assert h.model_name == "mean-predictor"
        assert caps == {"forces": "zero"}


def test_handshake_version_mismatch():
    with handle("bad-version") as h:
        with pytest.raises(ProtocolError) as exc:
            h.handshake()
        assert exc.value.code == "version_mismatch"
        assert h.state == "closed"


def test_handshake_timeout():
    with handle("silent", handshake_s=0.4) as h:
        with pytest.raises(ProtocolError) as exc:
            h.handshake()
        assert exc.value.code == "timeout"
        assert h.state == "closed"


def test_handshake_malformed_line():
    with handle("garbage") as h:
        with pytest.raises(ProtocolError) as exc:
            h.handshake()
        assert exc.value.code == "malformed_reply"


def test_launch_failure():
    with pytest.raises(ProtocolError) as exc:
        ModelHandle(["/nonexistent/interpreter"])
    assert exc.value.code == "launch_failed"


# --------------------------------------------------------------------------
# train


def test_train_reports_sample_count():
    with handle() as h:
        h.handshake()
        report = h.train(frames(4), {"ridge_lambda": 0.0}, seed=11)
        assert report["sample_count"] == 4
        assert h.state == "trained"


def test_train_rejects_empty_set():
    with handle() as h:
        h.handshake()
        with pytest.raises(ProtocolError) as exc:
            h.train([], {})
        assert exc.value.code == "empty_train_set"


def test_train_requires_ready_state():
    with handle() as h:
        with pytest.raises(ProtocolError) as exc:
            h.train(frames(2), {})
        assert exc.value.code == "bad_state"


def test_train_process_exit_carries_stderr():
    with handle("crash-on-train") as h:
        h.handshake()
        with pytest.raises(ProtocolError) as exc:
            h.train(frames(2), {})
        assert exc.value.code == "process_exit"
        assert "synthetic training explosion" in str(exc.value)


# --------------------------------------------------------------------------
# predict


def test_predict_shapes_and_values():
    with handle() as h:
        h.handshake()
        h.train(frames(2), {})  # energies -1, -2 with 2 atoms each
        energies, force_blocks = h.predict(frames(3))
        assert energies.shape == (3,)
        np.testing.assert_allclose(energies, -1.5)  # mean per-atom * 2 atoms
        assert len(force_blocks) == 3
        for blk in force_blocks:
            np.testing.assert_array_equal(blk, np.zeros((2, 3)))


def test_predict_before_train_is_a_state_error():
    with handle() as h:
        h.handshake()
        with pytest.raises(ProtocolError) as exc:
            h.predict(frames(1))
        assert exc.value.code == "bad_state"


def test_predict_rejects_nan():
    with handle("nan-forces") as h:
        h.handshake()
        h.train(frames(2), {})
        with pytest.raises(ProtocolError) as exc:
            h.predict(frames(2))
        assert exc.value.code == "non_finite"


def test_predict_rejects_request_id_mismatch():
    with handle("bad-request-id") as h:
        h.handshake()
        h.train(frames(2), {})
        with pytest.raises(ProtocolError) as exc:
            h.predict(frames(2))
        assert exc.value.code == "protocol"


def test_predict_rejects_shape_mismatch():
    with handle("short-energies") as h:
        h.handshake()
        h.train(frames(2), {})
        with pytest.raises(ProtocolError) as exc:
            h.predict(frames(2))
        assert exc.value.code == "shape_mismatch"


def test_oversized_message_rejected(monkeypatch):
    monkeypatch.setattr(protocol, "MAX_LINE_BYTES", 200)
    with handle() as h:
        h.handshake()
        with pytest.raises(ProtocolError) as exc:
            h.train(frames(50), {})
        assert exc.value.code == "oversized_message"
        assert "downsample" in str(exc.value)


# --------------------------------------------------------------------------
# payload fidelity


def test_echo_round_trip_is_bit_exact():
    tricky = [0.1, 1.0 / 3.0, -2.5e-17, 1e-300, 12345.678901234567, -0.0]
    pos = np.array(tricky[:6]).reshape(2, 3)
    fr = make_frame(pos, energy=tricky[1], forces=pos * np.pi, source_index=9)
    with handle("echo") as h:
        h.handshake()
        report = h.train([fr, fr], {})
        echoed = report["frames_echo"][0]
    sent = frame_to_wire(fr, labels=True)
    assert echoed == sent  # exact float equality after two JSON round trips


# --------------------------------------------------------------------------
# golden transcript


def test_subset_matching_semantics():
    assert subset_matches({"a": 1}, {"a": 1, "b": 2})
    assert subset_matches({"a": [1.0, 2]}, {"a": [1, 2.0]})
    assert not subset_matches({"a": [1, 2]}, {"a": [1, 2, 3]})
    assert not subset_matches({"a": {"b": 1}}, {"a": {}})
    assert subset_matches(-2.0, -2)


def test_golden_transcript_passes_against_mean_adapter():
    transcript = load_golden_transcript()
    mismatches = replay_transcript(adapter_cmd("mean"), transcript)
    assert mismatches == []


def test_golden_transcript_detects_deviations():
    transcript = load_golden_transcript()
    mismatches = replay_transcript(adapter_cmd("echo"), transcript)
    assert mismatches  # model_name differs from the expected mean-predictor


def test_protocol_schema_document_loads():
    schema = load_protocol_schema()
    assert schema["$id"] == "trajbench-model-protocol-v1"
    kinds = {alt["properties"]["type"]["const"] for alt in schema["oneOf"]}
    assert kinds == {"hello", "train", "train_progress", "train_done",
                     "predict", "prediction", "error", "shutdown"}
