import numpy as np
import pytest

from trajbench.baseline import (
    RidgeSoapModel,
    TrainConfig,
    finite_difference_forces,
    fit,
)
from trajbench.errors import ModelError
from trajbench.soap import SoapParams
from trajbench.synthetic import (
    quadratic_dimer_energy,
    quadratic_dimer_forces,
    quadratic_dimer_frames,
)

from .conftest import make_frame
from .reference import random_rotation


def small_config(frames, **kw):
    params = SoapParams.for_frames(frames, n_max=kw.pop("n_max", 3),
                                   l_max=kw.pop("l_max", 2),
                                   quadrature_order=kw.pop("quadrature_order", 16))
    return TrainConfig(soap=params, **kw)


@pytest.fixture(scope="module")
def dimer_model():
    frames = quadratic_dimer_frames(60)
    config = TrainConfig(soap=SoapParams.for_frames(frames))  # default hyperparameters
    return fit(frames[:50], config), frames[50:]


# --------------------------------------------------------------------------
# configuration


def test_train_config_validation():
    frames = quadratic_dimer_frames(3)
    params = SoapParams.for_frames(frames)
    with pytest.raises(ModelError):
        TrainConfig(soap=params, ridge_lambda=-1.0)
    with pytest.raises(ModelError):
        TrainConfig(soap=params, fd_step=1.0)


def test_fit_needs_two_frames():
    frames = quadratic_dimer_frames(1)
    with pytest.raises(ModelError, match="at least 2"):
        fit(frames, small_config(frames))


# --------------------------------------------------------------------------
# ridge limits and exact structure


def test_huge_lambda_shrinks_to_reference_energies():
    frames = quadratic_dimer_frames(20)
    model = fit(frames, small_config(frames, ridge_lambda=1e12))
    for w in model.weights.values():
        assert np.abs(w).max() < 1e-6
    fr = frames[0]
    ref = model.reference_energies.predict(fr)
    assert model.predict_energy(fr) == pytest.approx(ref, abs=1e-4)


def test_exact_composition_energies_give_zero_weights():
    # E = -2*N_H - 6*N_C exactly, forces zero: the reference regression
    # captures everything and the ridge solve sees a zero residual.
    rows = [(2, 1), (4, 1), (2, 2), (3, 2), (1, 3)]
    frames = []
    for k, (nh, nc) in enumerate(rows):
        species = ["H"] * nh + ["C"] * nc
        pos = np.column_stack([np.arange(len(species)) * 1.2,
                               np.zeros(len(species)), np.zeros(len(species))])
        frames.append(make_frame(pos, species=species, energy=-2.0 * nh - 6.0 * nc,
                                 source_index=k))
    model = fit(frames, small_config(frames, ridge_lambda=0.0))
    for w in model.weights.values():
        np.testing.assert_array_equal(w, 0.0)
    assert model.fit_report.residual_rms == pytest.approx(0.0, abs=1e-12)


def test_dimer_heldout_energy_mae_below_10mev(dimer_model):
    model, held_out = dimer_model
    maes = [abs(model.predict_energy(fr) - fr.energy) / fr.n_atoms for fr in held_out]
    assert float(np.mean(maes)) < 0.010  # eV per atom


def test_fit_is_deterministic():
    frames = quadratic_dimer_frames(12)
    m1 = fit(frames, small_config(frames))
    m2 = fit(frames, small_config(frames))
    for s in m1.weights:
        np.testing.assert_array_equal(m1.weights[s], m2.weights[s])
    assert m1.reference_energies.values == m2.reference_energies.values


# --------------------------------------------------------------------------
# energy prediction


def test_isolated_atom_predicts_reference_energy():
    frames = quadratic_dimer_frames(10)
    model = fit(frames, small_config(frames))
    lone = make_frame([[0.0, 0.0, 0.0]])
    h = lone.species[0]
    assert model.predict_energy(lone) == model.reference_energies.values[h]


def test_energy_invariances(rng, dimer_model):
    model, held_out = dimer_model
    fr = held_out[0]
    e0 = model.predict_energy(fr)
    shifted = make_frame(fr.positions + [3.0, -2.0, 1.0], species=fr.species)
    assert model.predict_energy(shifted) == pytest.approx(e0, rel=1e-12)
    Q = random_rotation(rng)
    rotated = make_frame(fr.positions @ Q.T, species=fr.species)
    assert model.predict_energy(rotated) == pytest.approx(e0, rel=1e-8)
    permuted = make_frame(fr.positions[::-1], species=fr.species)
    assert model.predict_energy(permuted) == pytest.approx(e0, rel=1e-12)


def test_unseen_species_rejected(dimer_model):
    model, _ = dimer_model
    frame = make_frame([[0, 0, 0], [1.0, 0, 0]], species=["N", "N"])
    with pytest.raises(ModelError, match="unseen"):
        model.predict_energy(frame)
    with pytest.raises(ModelError, match="unseen"):
        model.predict_forces(frame)


# --------------------------------------------------------------------------
# forces


def test_isolated_atom_forces_zero():
    frames = quadratic_dimer_frames(10)
    model = fit(frames, small_config(frames))
    lone = make_frame([[0.0, 0.0, 0.0]])
    np.testing.assert_array_equal(model.predict_forces(lone), 0.0)


def test_fd_convergence_order_on_closed_form():
    # Richardson: with the exact dimer energy driving the FD operator, the
    # error against the analytic force must scale as h^2.
    pos = np.array([[0.1, -0.2, 0.3], [1.0, 0.9, -0.1]])
    truth = quadratic_dimer_forces(pos)
    hs = [1e-2, 5e-3, 2.5e-3]
    errs = [np.abs(finite_difference_forces(quadratic_dimer_energy, pos, h) - truth).max()
            for h in hs]
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert 1.8 <= slope <= 2.2
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)  # halving h quarters the error


def test_trained_model_forces_near_analytic(dimer_model):
    model, held_out = dimer_model
    fr = held_out[2]
    predicted = model.predict_forces(fr)
    analytic = quadratic_dimer_forces(fr.positions)
    assert np.abs(predicted - analytic).max() < 0.05  # eV/A, desk-scale fit quality


def test_net_force_vanishes_at_h2_scale(dimer_model):
    model, held_out = dimer_model
    h = model.config.fd_step
    for fr in held_out[:3]:
        net = model.predict_forces(fr).sum(axis=0)
        assert np.abs(net).max() <= 50.0 * h * h


def test_richardson_halving_on_trained_model(dimer_model):
    # FD(h) - FD(h/2) isolates the h^2 truncation term of the operator even
    # though the trained energy surface differs from the closed form.
    model, held_out = dimer_model
    fr = held_out[1]

    def fd(h):
        def energy_of(p):
            return model.predict_energy(make_frame(p, species=fr.species))
        return finite_difference_forces(energy_of, fr.positions, h)

    d1 = np.abs(fd(1e-2) - fd(5e-3)).max()
    d2 = np.abs(fd(5e-3) - fd(2.5e-3)).max()
    assert d1 / d2 == pytest.approx(4.0, rel=0.25)


# --------------------------------------------------------------------------
# serialization


def test_model_json_round_trip(dimer_model):
    model, _ = dimer_model
    text = model.to_json()
    back = RidgeSoapModel.from_json(text)
    assert back.to_json() == text
    for s in model.weights:
        np.testing.assert_array_equal(back.weights[s], model.weights[s])
    assert back.reference_energies.values == model.reference_energies.values
    assert back.config == model.config


def test_model_json_rejects_other_documents():
    with pytest.raises(ModelError):
        RidgeSoapModel.from_json('{"kind": "other", "schema_version": 1}')
