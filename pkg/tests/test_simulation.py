import math

import numpy as np
import pytest

from rootpcp.exceptions import UsageError
from rootpcp.simulation import (
    NoiseKind,
    NoiseModel,
    SimSpec,
    generate_instance,
    relative_error,
    rms_error,
)


def test_instance_composition():
    inst = generate_instance(SimSpec(30, 20, 3, noise=NoiseModel("gaussian", 0.1), seed=4))
    assert inst.d.shape == (30, 20)
    assert np.array_equal(inst.d, inst.l0 + inst.s0 + inst.z0)
    assert np.linalg.matrix_rank(inst.l0) <= 3
    assert set(np.unique(inst.s0)) <= {-0.05, 0.0, 0.05}


def test_seed_determinism():
    spec = SimSpec(25, 25, 2, noise=NoiseModel("poisson", 0.01, 3.0), seed=99)
    a, b = generate_instance(spec), generate_instance(spec)
    for x, y in ((a.l0, b.l0), (a.s0, b.s0), (a.z0, b.z0), (a.d, b.d)):
        assert x.tobytes() == y.tobytes()
    c = generate_instance(spec.with_seed(100))
    assert not np.array_equal(a.d, c.d)


def test_rank_validation():
    with pytest.raises(UsageError):
        SimSpec(5, 4, 5)
    with pytest.raises(UsageError):
        SimSpec(5, 5, 2, rho_s=1.5)


def test_expected_norms_n200():
    l_sq, s_sq = [], []
    for seed in range(50):
        inst = generate_instance(SimSpec(200, 200, 10, rho_s=0.1, seed=seed))
        l_sq.append(np.sum(inst.l0**2))
        s_sq.append(np.sum(inst.s0**2))
    assert np.mean(l_sq) == pytest.approx(10.0, rel=0.2)
    assert np.mean(s_sq) == pytest.approx(0.05**2 * 200**2 * 0.1, rel=0.2)


@pytest.mark.parametrize(
    "model",
    [NoiseModel("gaussian", 0.0), NoiseModel("uniform", 0.0), NoiseModel("poisson", 0.0, 1.0)],
)
def test_zero_sigma_means_zero_noise(model):
    inst = generate_instance(SimSpec(10, 10, 1, noise=model, seed=1))
    assert np.all(inst.z0 == 0.0)


@pytest.mark.parametrize(
    "model",
    [
        NoiseModel("gaussian", 0.01),
        NoiseModel("uniform", 0.01),
        NoiseModel("poisson", 0.01, 1.0),
        NoiseModel("poisson", 0.01, 3.0),
        NoiseModel("poisson", 0.01, 5.0),
    ],
)
def test_noise_second_moment(model):
    inst = generate_instance(SimSpec(500, 500, 1, noise=model, seed=12))
    assert np.mean(inst.z0**2) == pytest.approx(1e-4, rel=0.05)


def test_poisson_nonnegative_and_sparse():
    model = NoiseModel("poisson", 0.01, 1.0)
    assert model.poisson_scale == pytest.approx(0.01 / math.sqrt(2))
    z = generate_instance(SimSpec(300, 300, 1, noise=model, seed=3)).z0
    assert np.all(z >= 0)
    assert np.mean(z == 0) == pytest.approx(math.exp(-1), abs=0.01)


def test_uniform_support():
    z = generate_instance(SimSpec(200, 200, 1, noise=NoiseModel("uniform", 0.02), seed=3)).z0
    assert np.max(np.abs(z)) < math.sqrt(3) * 0.02


def test_sign_balance():
    s0 = generate_instance(SimSpec(400, 400, 1, rho_s=0.2, seed=8)).s0
    support = s0 != 0
    assert np.mean(support) == pytest.approx(0.2, abs=0.005)
    assert np.mean(s0[support] > 0) == pytest.approx(0.5, abs=0.02)


def test_noise_model_validation():
    with pytest.raises(UsageError):
        NoiseModel("laplace", 0.1)
    with pytest.raises(UsageError):
        NoiseModel("poisson", 0.1)
    with pytest.raises(UsageError):
        NoiseModel("gaussian", -1.0)
    assert NoiseModel("gaussian").kind is NoiseKind.GAUSSIAN


def test_rms_error():
    t = np.zeros((2, 2))
    assert rms_error([t], t) == 0.0
    a = np.zeros((2, 2))
    a[0, 0] = 3.0
    b = np.zeros((2, 2))
    b[1, 0] = 4.0
    assert rms_error([a, b], t) == pytest.approx(3.53553, abs=1e-5)
    with pytest.raises(UsageError):
        rms_error([], t)
    with pytest.raises(UsageError):
        rms_error([np.zeros((3, 2))], t)


def test_rms_error_matches_recomputation(rng):
    truths = [rng.standard_normal((6, 5)) for _ in range(20)]
    ests = [t + 0.1 * rng.standard_normal(t.shape) for t in truths]
    expected = math.sqrt(sum(((e - t) ** 2).sum() for e, t in zip(ests, truths)) / 20)
    assert rms_error(ests, truths) == pytest.approx(expected, rel=1e-12)


def test_relative_error():
    t = np.arange(1.0, 7.0).reshape(2, 3)
    assert relative_error(t, t) == 0.0
    assert relative_error(2 * t, t) == pytest.approx(1.0)
    assert relative_error(np.zeros_like(t), t) == pytest.approx(1.0)
    with pytest.raises(UsageError):
        relative_error(t, np.zeros_like(t))
