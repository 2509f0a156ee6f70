import numpy as np
import pytest

from trajbench.errors import SoapConfigError
from trajbench.soap import (
    SoapParams,
    atomic_descriptors,
    cosine_similarity,
    descriptors_to_csv,
    expansion_coefficients,
    neighbor_list,
    power_spectrum,
    similarity_matrix_csv,
    structure_descriptor,
    window_similarity,
)
from trajbench.synthetic import drifting_dimer_trajectory, molecule_frame

from .conftest import make_frame
from .reference import brute_force_coefficients, random_rotation

H_PARAMS = SoapParams.for_frames([make_frame([[0, 0, 0]])],
                                 n_max=4, l_max=4, quadrature_order=32)


def small_params(frames, **kw):
    kw.setdefault("n_max", 3)
    kw.setdefault("l_max", 3)
    kw.setdefault("quadrature_order", 24)
    return SoapParams.for_frames(frames, **kw)


# --------------------------------------------------------------------------
# parameter validation


def test_params_validation():
    sp = H_PARAMS.species_list
    with pytest.raises(SoapConfigError):
        SoapParams(species_list=sp, r_cut=-1.0)
    with pytest.raises(SoapConfigError):
        SoapParams(species_list=sp, sigma=0.0)
    with pytest.raises(SoapConfigError):
        SoapParams(species_list=sp, n_max=0)
    with pytest.raises(SoapConfigError):
        SoapParams(species_list=sp, l_max=10)
    with pytest.raises(SoapConfigError):
        SoapParams(species_list=())


def test_quadrature_order_floor():
    frame = make_frame([[0, 0, 0], [1, 0, 0]])
    params = SoapParams.for_frames([frame], n_max=8, quadrature_order=8)
    with pytest.raises(SoapConfigError, match="quadrature_order"):
        atomic_descriptors(frame, params)


def test_dimension_formula():
    frame = make_frame([[0, 0, 0], [1, 0, 0]], species=["H", "C"])
    params = small_params([frame])
    P = 2 * params.n_max
    assert params.dimension == P * (P + 1) // 2 * (params.l_max + 1)
    assert atomic_descriptors(frame, params).shape == (2, params.dimension)
    assert len(params.component_labels()) == params.dimension


# --------------------------------------------------------------------------
# neighbor lists


def test_neighbor_list_mutual():
    frame = make_frame([[0, 0, 0], [3.0, 0, 0]])
    nl = neighbor_list(frame, 5.0)
    assert list(nl[0].indices) == [1]
    assert list(nl[1].indices) == [0]
    np.testing.assert_allclose(nl[0].displacements, [[3.0, 0, 0]])


def test_neighbor_list_out_of_range():
    frame = make_frame([[0, 0, 0], [6.0, 0, 0]])
    nl = neighbor_list(frame, 5.0)
    assert len(nl[0].indices) == 0 and len(nl[1].indices) == 0


def test_neighbor_list_collinear():
    frame = make_frame([[0, 0, 0], [4.0, 0, 0], [8.0, 0, 0]])
    nl = neighbor_list(frame, 5.0)
    assert sorted(nl[1].indices) == [0, 2]
    assert list(nl[0].indices) == [1]
    assert list(nl[2].indices) == [1]


# --------------------------------------------------------------------------
# expansion coefficients


def test_no_neighbors_zero_coefficients():
    frame = make_frame([[0, 0, 0], [50.0, 0, 0]])
    c = expansion_coefficients(frame, 0, H_PARAMS)
    assert np.all(c == 0.0)
    d = structure_descriptor(frame, H_PARAMS)
    assert d.zero


def test_axial_symmetry_single_neighbor_on_z():
    frame = make_frame([[0, 0, 0], [0, 0, 1.3]])
    c = expansion_coefficients(frame, 0, H_PARAMS)
    for l in range(H_PARAMS.l_max + 1):
        base = l * l + l
        for m in range(-l, l + 1):
            if m != 0:
                np.testing.assert_array_equal(c[0, :, base + m], 0.0)
    assert np.abs(c[0, :, 0]).max() > 0


def test_quadrature_convergence_32_vs_64():
    frame = make_frame([[0, 0, 0], [0.7, 1.1, -0.4]])
    p32 = SoapParams.for_frames([frame], n_max=8, l_max=6, quadrature_order=32)
    p64 = SoapParams.for_frames([frame], n_max=8, l_max=6, quadrature_order=64)
    c32 = expansion_coefficients(frame, 0, p32)
    c64 = expansion_coefficients(frame, 0, p64)
    rel = np.linalg.norm(c32 - c64) / np.linalg.norm(c64)
    assert rel <= 1e-9


def test_coefficients_match_brute_force_integration():
    frame = make_frame([[0, 0, 0], [1.0, 0.3, -0.2], [-0.8, 0.9, 0.5]],
                       species=["H", "C", "C"])
    params = small_params([frame], r_cut=4.0)
    impl = expansion_coefficients(frame, 0, params)
    oracle = brute_force_coefficients(frame, 0, params)
    rel = np.linalg.norm(impl - oracle) / np.linalg.norm(oracle)
    assert rel < 1e-8


# --------------------------------------------------------------------------
# power spectra and invariances


def test_zero_coefficients_zero_descriptor():
    c = np.zeros((1, H_PARAMS.n_max, (H_PARAMS.l_max + 1) ** 2))
    assert np.all(power_spectrum(c, H_PARAMS) == 0.0)


def test_rotation_invariance(rng):
    frame = make_frame(rng.normal(size=(5, 3)) * 1.4, species=["H", "C", "H", "O", "C"])
    params = small_params([frame])
    d0 = atomic_descriptors(frame, params)
    for _ in range(25):
        Q = random_rotation(rng)
        rotated = make_frame(frame.positions @ Q.T, species=frame.species)
        d1 = atomic_descriptors(rotated, params)
        assert np.linalg.norm(d1 - d0) / np.linalg.norm(d0) <= 1e-8


def test_translation_invariance(rng):
    frame = make_frame(rng.normal(size=(4, 3)), species=["H", "H", "C", "O"])
    params = small_params([frame])
    d0 = atomic_descriptors(frame, params)
    shifted = make_frame(frame.positions + np.array([10.0, 10.0, 10.0]),
                         species=frame.species)
    d1 = atomic_descriptors(shifted, params)
    assert np.linalg.norm(d1 - d0) / np.linalg.norm(d0) <= 1e-12


def test_permutation_invariance_of_structure_descriptor(rng):
    frame = make_frame(rng.normal(size=(5, 3)) * 1.3, species=["H", "C", "H", "O", "C"])
    params = small_params([frame])
    d0 = structure_descriptor(frame, params)
    perm = rng.permutation(5)
    permuted = make_frame(frame.positions[perm],
                          species=tuple(frame.species[i] for i in perm))
    d1 = structure_descriptor(permuted, params)
    assert np.linalg.norm(d1.vector - d0.vector) <= 1e-12


def test_homonuclear_dimer_structure_equals_atomic():
    frame = make_frame([[0, 0, 0], [1.1, 0, 0]])
    d_atoms = atomic_descriptors(frame, H_PARAMS)
    np.testing.assert_allclose(d_atoms[0], d_atoms[1], rtol=1e-12)
    d = structure_descriptor(frame, H_PARAMS)
    np.testing.assert_allclose(d.vector, d_atoms[0] / np.linalg.norm(d_atoms[0]),
                               rtol=1e-12)


def test_cutoff_smoothness_at_crossing():
    base = [[0.0, 0.0, 0.0], [0.0, 0.0, 2.0]]
    params = small_params([make_frame(base)])
    inside = make_frame(base + [[0.0, 0.0, 5.0 - 1e-6]])
    outside = make_frame(base + [[0.0, 0.0, 5.0 + 1e-6]])
    d_in = atomic_descriptors(inside, params)[0]
    d_out = atomic_descriptors(outside, params)[0]
    assert np.linalg.norm(d_in - d_out) / np.linalg.norm(d_in) <= 1e-3


# --------------------------------------------------------------------------
# cosine similarity


def test_self_similarity_exactly_one():
    frame = make_frame([[0, 0, 0], [0.9, 0.2, 0.1]])
    d = structure_descriptor(frame, H_PARAMS)
    assert cosine_similarity(d, d) == 1.0


def test_antipodal_similarity():
    from trajbench.soap import StructureDescriptor
    frame = make_frame([[0, 0, 0], [0.9, 0.2, 0.1]])
    d = structure_descriptor(frame, H_PARAMS)
    anti = StructureDescriptor(vector=-d.vector, norm=d.norm, zero=False)
    assert cosine_similarity(d, anti) == -1.0


def test_zero_descriptor_rejected():
    lone = make_frame([[0, 0, 0]])
    d0 = structure_descriptor(lone, H_PARAMS)
    assert d0.zero
    frame = make_frame([[0, 0, 0], [1.0, 0, 0]])
    d1 = structure_descriptor(frame, H_PARAMS)
    with pytest.raises(SoapConfigError):
        cosine_similarity(d0, d1)


def test_dimer_separation_similarity_below_one():
    d_short = structure_descriptor(make_frame([[0, 0, 0], [1.0, 0, 0]]), H_PARAMS)
    d_long = structure_descriptor(make_frame([[0, 0, 0], [1.5, 0, 0]]), H_PARAMS)
    sim = cosine_similarity(d_short, d_long)
    assert -1.0 <= sim < 1.0
    assert sim < 0.999  # materially different structures


def test_jittered_structure_stays_similar(rng):
    frame = molecule_frame("a")  # 21-atom C9H8O4
    params = small_params([frame])
    jittered = make_frame(frame.positions + rng.normal(size=frame.positions.shape) * 0.01,
                          species=frame.species)
    sim = cosine_similarity(structure_descriptor(frame, params),
                            structure_descriptor(jittered, params))
    assert sim > 0.999


def test_similarity_symmetric_and_bounded(rng):
    frames = [make_frame(rng.normal(size=(4, 3)) * 1.2, species=["H", "C", "O", "H"])
              for _ in range(6)]
    params = small_params(frames)
    descs = [structure_descriptor(fr, params) for fr in frames]
    for a in descs:
        for b in descs:
            s_ab = cosine_similarity(a, b)
            s_ba = cosine_similarity(b, a)
            assert s_ab == s_ba
            assert -1.0 - 1e-12 <= s_ab <= 1.0 + 1e-12


# --------------------------------------------------------------------------
# window similarity


def test_window_similarity_identical_singletons():
    frame = make_frame([[0, 0, 0], [1.0, 0, 0]])
    sim = window_similarity([frame], [frame], H_PARAMS)
    assert sim.mean == 1.0 and sim.min == 1.0 and sim.max == 1.0


def test_window_similarity_self_window_bounded():
    traj = drifting_dimer_trajectory(60, jitter=0.0)
    frames = list(traj.frames[:20])
    sim = window_similarity(frames, frames, H_PARAMS, max_pairs_per_side=10)
    assert sim.mean <= 1.0 + 1e-12
    assert sim.n_train == 10 and sim.n_test == 10


def test_window_similarity_empty_window():
    frame = make_frame([[0, 0, 0], [1.0, 0, 0]])
    with pytest.raises(SoapConfigError, match="nonempty"):
        window_similarity([], [frame], H_PARAMS)


def test_drifting_trajectory_similarity_ordering():
    traj = drifting_dimer_trajectory(400, jitter=0.0)
    params = small_params(traj.frames[:1])
    test = list(traj.frames[360:])
    early = window_similarity(list(traj.frames[0:120]), test, params, max_pairs_per_side=24)
    late = window_similarity(list(traj.frames[240:360]), test, params, max_pairs_per_side=24)
    assert early.mean < late.mean


# --------------------------------------------------------------------------
# CSV export


def test_descriptor_csv_shape():
    frames = [make_frame([[0, 0, 0], [1.0 + 0.1 * k, 0, 0]]) for k in range(3)]
    descs = [structure_descriptor(fr, H_PARAMS) for fr in frames]
    text = descriptors_to_csv(descs, [f"f{k}" for k in range(3)], H_PARAMS)
    lines = text.strip().split("\n")
    assert len(lines) == 4
    assert lines[0].startswith("structure,p_H0_H0_l0,")
    assert len(lines[1].split(",")) == 1 + H_PARAMS.dimension


def test_similarity_matrix_csv():
    frames = [make_frame([[0, 0, 0], [1.0 + 0.05 * k, 0, 0]]) for k in range(3)]
    text = similarity_matrix_csv(frames[:2], frames, H_PARAMS)
    lines = text.strip().split("\n")
    assert len(lines) == 3
    first = float(lines[1].split(",")[1])
    assert first == 1.0
