import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trajbench.dataset import (
    Frame,
    Trajectory,
    frames_to_extxyz,
    ingest_manifest,
    load_manifest,
    load_store,
    parse_extxyz,
    restore_temporal_order,
    validate_trajectory,
)
from trajbench.elements import Species
from trajbench.errors import DatasetError, ParseError
from trajbench.units import KCAL_PER_MOL_IN_EV

from .conftest import make_frame

ONE_FRAME = """1
energy=-1.5
H 0 0 0 0.1 0 0
"""


def test_parse_single_frame():
    frames = parse_extxyz(ONE_FRAME)
    assert len(frames) == 1
    fr = frames[0]
    assert fr.n_atoms == 1
    assert fr.energy == -1.5
    assert fr.species[0].symbol == "H"
    np.testing.assert_array_equal(fr.forces, [[0.1, 0.0, 0.0]])


def test_parse_atom_count_mismatch():
    text = "3\nenergy=-1.0\nH 0 0 0 0 0 0\nH 1 0 0 0 0 0\n"
    with pytest.raises(ParseError, match="3 atoms"):
        parse_extxyz(text)


def test_parse_keeps_file_order_with_old_index():
    text = ("1\nenergy=-1.0 old_index=7\nH 0 0 0 0 0 0\n"
            "1\nenergy=-2.0 old_index=3\nH 1 0 0 0 0 0\n")
    frames = parse_extxyz(text)
    assert [fr.source_index for fr in frames] == [7, 3]
    assert [fr.energy for fr in frames] == [-1.0, -2.0]


def test_parse_missing_old_index_warns_and_uses_file_order(caplog):
    text = "1\nenergy=-1.0\nH 0 0 0 0 0 0\n" * 2
    with caplog.at_level("WARNING", logger="trajbench.dataset"):
        frames = parse_extxyz(text)
    assert [fr.source_index for fr in frames] == [0, 1]
    assert any("old_index" in rec.message for rec in caplog.records)


def test_parse_missing_energy():
    with pytest.raises(ParseError, match="energy"):
        parse_extxyz("1\nold_index=0\nH 0 0 0 0 0 0\n")


def test_parse_unknown_symbol_reports_location():
    with pytest.raises(ParseError, match=r"Xx.*frame 0, line 3"):
        parse_extxyz("1\nenergy=0\nXx 0 0 0 0 0 0\n")


def test_parse_non_finite_number():
    with pytest.raises(ParseError, match="non-finite"):
        parse_extxyz("1\nenergy=nan\nH 0 0 0 0 0 0\n")
    with pytest.raises(ParseError, match="non-finite"):
        parse_extxyz("1\nenergy=0\nH 0 0 inf 0 0 0\n")


def test_parse_kcal_units_convert_to_ev():
    frames = parse_extxyz("1\nenergy=1.0\nH 0 0 0 1 0 0\n", units="kcal_mol")
    assert frames[0].energy == pytest.approx(KCAL_PER_MOL_IN_EV, rel=1e-15)
    assert frames[0].forces[0, 0] == pytest.approx(KCAL_PER_MOL_IN_EV, rel=1e-15)


def test_units_key_must_match_declaration():
    with pytest.raises(ParseError, match="units"):
        parse_extxyz("1\nenergy=0 units=kcal_mol\nH 0 0 0 0 0 0\n", units="ev")


def test_restore_temporal_order_sorts():
    frames = [make_frame([[0, 0, 0]], source_index=i) for i in (2, 0, 1)]
    traj = restore_temporal_order(frames)
    assert [fr.source_index for fr in traj.frames] == [0, 1, 2]


def test_restore_temporal_order_idempotent():
    frames = [make_frame([[0, 0, 0]], source_index=i) for i in range(5)]
    once = restore_temporal_order(frames)
    twice = restore_temporal_order(list(once.frames))
    assert once.frames == twice.frames


def test_restore_temporal_order_duplicate_index():
    frames = [make_frame([[0, 0, 0]], source_index=5) for _ in range(2)]
    with pytest.raises(DatasetError, match="duplicate source_index 5"):
        restore_temporal_order(frames)


def test_restore_temporal_order_inconsistent_species():
    frames = [make_frame([[0, 0, 0]], species="H", source_index=0),
              make_frame([[0, 0, 0]], species="C", source_index=1)]
    with pytest.raises(DatasetError, match="species"):
        restore_temporal_order(frames)


def _invalid_frame(**overrides):
    """Bypass Frame validation to exercise the report-only validator."""
    fr = make_frame([[0, 0, 0], [1, 0, 0]], source_index=overrides.pop("source_index", 0))
    for key, value in overrides.items():
        arr = np.array(getattr(fr, key))
        arr[:] = value
        object.__setattr__(fr, key, arr)
    return fr


def test_validate_clean_trajectory(small_trajectory):
    assert validate_trajectory(small_trajectory).ok


def test_validate_reports_short_trajectory():
    traj = Trajectory("t", tuple(make_frame([[0, 0, 0]], source_index=i) for i in range(3)))
    report = validate_trajectory(traj)
    assert not report.ok
    assert any(">= 10" in v.message for v in report.violations)


def test_validate_reports_coincident_atoms():
    frames = [make_frame([[0, 0, 0], [1, 0, 0]], source_index=i) for i in range(10)]
    bad = make_frame([[0, 0, 0], [0.1, 0, 0]], source_index=10)
    traj = Trajectory("t", tuple(frames) + (bad,))
    report = validate_trajectory(traj)
    assert [v.frame for v in report.violations] == [10]
    assert "distance" in report.violations[0].message


def test_validate_reports_nan_force():
    frames = [make_frame([[0, 0, 0], [1, 0, 0]], source_index=i) for i in range(10)]
    frames.append(_invalid_frame(forces=np.nan, source_index=10))
    traj = Trajectory("t", tuple(frames))
    report = validate_trajectory(traj)
    assert any("force" in v.message for v in report.violations)


def test_frame_rejects_nan():
    with pytest.raises(DatasetError):
        make_frame([[0, 0, np.nan]])
    with pytest.raises(DatasetError):
        make_frame([[0, 0, 0]], energy=float("inf"))


def test_frame_shape_mismatch():
    with pytest.raises(DatasetError):
        Frame(positions=np.zeros((2, 3)), species=(Species.from_symbol("H"),) * 2,
              energy=0.0, forces=np.zeros((3, 3)), source_index=0)


finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(finite, finite, finite, finite, finite, finite, finite),
                min_size=1, max_size=4),
       st.integers(0, 10))
def test_round_trip_is_bit_identical(rows, source_index):
    frames = [make_frame([r[:3] for r in rows],
                         energy=rows[0][6],
                         forces=[r[3:6] for r in rows],
                         source_index=source_index)]
    text = frames_to_extxyz(frames)
    parsed = parse_extxyz(text)
    assert frames_to_extxyz(parsed) == text
    assert parsed[0].energy == frames[0].energy
    np.testing.assert_array_equal(parsed[0].positions, frames[0].positions)
    np.testing.assert_array_equal(parsed[0].forces, frames[0].forces)
    assert parsed[0].source_index == frames[0].source_index


def test_manifest_duplicate_ids(tmp_path):
    doc = {"molecules": [{"id": "a", "path": "a.extxyz", "units": "ev"},
                         {"id": "a", "path": "b.extxyz", "units": "ev"}]}
    p = tmp_path / "manifest.json"
    p.write_text(json.dumps(doc))
    with pytest.raises(DatasetError, match="duplicate"):
        load_manifest(p)


def test_ingest_and_load_store(tmp_path):
    frames = [make_frame([[0, 0, 0], [1.0 + 0.01 * i, 0, 0]],
                         energy=-1.0 - i, source_index=i) for i in range(12)]
    shuffled = [frames[i] for i in (3, 0, 7, 1, 9, 2, 11, 4, 8, 5, 10, 6)]
    (tmp_path / "m.extxyz").write_text(frames_to_extxyz(shuffled))
    manifest_path = tmp_path / "manifest.json"
    manifest_path.write_text(json.dumps(
        {"molecules": [{"id": "m", "path": "m.extxyz", "units": "ev", "frames": 12}]}))
    store_dir = tmp_path / "store"
    ingest_manifest(load_manifest(manifest_path), store_dir)
    store = load_store(store_dir)
    traj = store["m"]
    assert [fr.source_index for fr in traj.frames] == list(range(12))


def test_ingest_frame_count_mismatch(tmp_path):
    (tmp_path / "m.extxyz").write_text(frames_to_extxyz(
        [make_frame([[0, 0, 0]], source_index=i) for i in range(3)]))
    manifest_path = tmp_path / "manifest.json"
    manifest_path.write_text(json.dumps(
        {"molecules": [{"id": "m", "path": "m.extxyz", "units": "ev", "frames": 5}]}))
    with pytest.raises(DatasetError, match="declares 5 frames, parsed 3"):
        ingest_manifest(load_manifest(manifest_path), tmp_path / "store")


def test_ingest_missing_file(tmp_path):
    manifest_path = tmp_path / "manifest.json"
    manifest_path.write_text(json.dumps(
        {"molecules": [{"id": "m", "path": "absent.extxyz", "units": "ev"}]}))
    with pytest.raises(DatasetError, match="absent.extxyz"):
        ingest_manifest(load_manifest(manifest_path), tmp_path / "store")
