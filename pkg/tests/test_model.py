# coding: utf-8

import numpy as np
import pytest

from bcmlr import model
from bcmlr.data import ChangepointVector
from bcmlr.errors import InvalidInputError


def random_instance(rng, num_classes, n=12, p=3):
    betas = np.vstack([rng.normal(size=(num_classes - 1, p)), np.zeros((1, p))])
    x = rng.normal(size=(n, p))
    kappas = tuple(sorted(rng.choice(np.arange(1, n), size=num_classes - 1, replace=False)))
    return ChangepointVector(kappas, n), betas, x


def test_class_probs():
    assert np.allclose(model.class_probs(np.ones(2), np.zeros((3, 2))), 1 / 3)
    assert np.allclose(model.class_probs(np.array([1.0]), np.array([[np.log(3)], [0.0]])), [0.75, 0.25])

    probs = model.class_probs(np.array([1.0]), np.array([[1000.0], [0.0]]))
    assert np.all(np.isfinite(probs))
    assert probs[0] == pytest.approx(1.0)


def test_class_probs_normalized(rng):
    probs = model.class_probs(rng.normal(size=(50, 4)), rng.normal(size=(5, 4)) * 3)
    assert np.all(np.abs(probs.sum(axis=1) - 1) < 1e-12)


def test_loss_examples():
    x = np.ones((3, 1))
    assert model.loss(ChangepointVector((1,), 3), np.array([[1.0], [0.0]]), x) == pytest.approx(2.9397, abs=1e-4)

    assert model.loss(ChangepointVector((2, 4), 6), np.zeros((3, 1)), np.ones((6, 1))) == pytest.approx(6 * np.log(3))
    assert model.loss(ChangepointVector((), 6), np.zeros((1, 1)), np.ones((6, 1))) == 0


def test_loss_identity_two_classes(rng):
    for _ in range(100):
        kappa, betas, x = random_instance(rng, 2)
        assert model.loss(kappa, betas, x) == pytest.approx(model.eta_form_loss(kappa, betas, x), abs=1e-8)
        assert np.exp(-model.loss(kappa, betas, x)) <= 1


def test_binary_loss_isolates_class(rng):
    "For J >= 3 the loss minus the class j binary term doesn't depend on beta_j."
    for _ in range(20):
        kappa, betas, x = random_instance(rng, 4)
        for j in range(3):
            moved = betas.copy()
            moved[j] += rng.normal(size=betas.shape[1])
            before = model.loss(kappa, betas, x) - model.binary_loss(kappa, betas, x, j)
            after = model.loss(kappa, moved, x) - model.binary_loss(kappa, moved, x, j)
            assert before == pytest.approx(after, abs=1e-8)


def test_eta_and_offset(rng):
    assert model.eta(np.array([2.0, 1.0]), np.array([[0.5, 1.0], [0.0, 0.0]]), 0) == pytest.approx(2.0)
    assert model.eta(np.ones(2), np.zeros((3, 2)), 1) == pytest.approx(-np.log(2))
    assert model.c_offset(np.ones(2), np.zeros((3, 2)), 2) == pytest.approx(np.log(2))
    assert model.c_offset(np.array([1.0]), np.array([[4.0], [0.0]]), 0) == pytest.approx(0)

    betas = np.array([[1.0], [2.0], [0.0]])
    assert model.eta(np.array([1.0]), betas, 0) == pytest.approx(1 - np.log(np.e ** 2 + 1), abs=1e-4)
    assert model.eta(np.array([1.0]), betas, 0) == pytest.approx(-1.1269, abs=1e-4)

    x = rng.normal(size=(10, 3))
    betas = np.vstack([rng.normal(size=(3, 3)), np.zeros((1, 3))])
    for j in range(4):
        assert np.allclose(model.eta(x, betas, j) + model.c_offset(x, betas, j), x @ betas[j])

    with pytest.raises(InvalidInputError):
        model.eta(np.ones(2), np.zeros((1, 2)), 0)


def test_kappa_log_prior():
    assert model.kappa_log_prior(ChangepointVector((2,), 4)) == pytest.approx(np.log(1 / 16))
    assert model.kappa_log_prior(ChangepointVector((1,), 4)) == pytest.approx(np.log(1 / 27))
    assert model.kappa_log_prior(ChangepointVector((1, 2), 3)) == 0, 'unit segments contribute nothing'

    # same segment lengths in another order
    assert model.kappa_log_prior(ChangepointVector((2, 5), 10)) == model.kappa_log_prior(ChangepointVector((5, 8), 10))


def test_bclr_kappa_log_prior():
    assert model.bclr_kappa_log_prior(2, 4) == pytest.approx(np.log(1 / 16))
    assert model.bclr_kappa_log_prior(1, 4) == pytest.approx(np.log(1 / 27))
    assert model.bclr_kappa_log_prior(1, 2) == 0
    assert max(range(1, 100), key=lambda k: model.bclr_kappa_log_prior(k, 100)) == 50

    with pytest.raises(InvalidInputError):
        model.bclr_kappa_log_prior(0, 4)


def test_priors(rng):
    assert isinstance(model.Prior.resolve('gaussian', variance=2.0), model.GaussianPrior)
    assert isinstance(model.Prior.resolve('horseshoe'), model.HorseshoePrior)

    with pytest.raises(InvalidInputError):
        model.Prior.resolve('laplace')

    with pytest.raises(InvalidInputError):
        model.GaussianPrior(covariance=np.array([[1.0, 2.0], [2.0, 1.0]]))

    prior = model.GaussianPrior()
    assert np.allclose(prior.precision(0, 3), np.eye(3) / 3)
    assert prior.sample(2, 3, rng).shape == (2, 3)

    state = model.HorseshoePrior().initial_state(2, 3)
    assert np.all(state.lambda2 == 1) and state.tau2 == 1 and state.xi == 1

    with pytest.raises(InvalidInputError):
        model.HorseshoeState(np.zeros((1, 2)), np.ones((1, 2)), 1.0, 1.0)
