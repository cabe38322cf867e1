import math
import warnings

import numpy as np
import pytest

from conftest import ring_quadrant_domain
from holoelastic.geometry import sample_boundary
from holoelastic.jets import ActivationKind
from holoelastic.network import (
    BETA1,
    BETA2,
    BETA3,
    BranchPair,
    InitConfig,
    Mode,
    build_mlp,
    checkpoint_load,
    checkpoint_save,
    flatten_params,
    forward_jets,
    init_weights,
    mlp_forward,
    write_params,
)
from holoelastic.rng import Rng


def _ring_probe(n=400, seed=0):
    return np.array([s.z for s in sample_boundary(ring_quadrant_domain(), n, Rng(seed))])


def _init_pair(hidden, seed=0, beta=0.5, m_e=3, mode=Mode.STANDARD):
    pair = BranchPair(build_mlp(hidden, mode=mode), build_mlp(hidden, mode=mode))
    cfg = InitConfig(probe=_ring_probe(), beta=beta, m_e=m_e)
    rng = Rng(seed)
    init_weights(pair.phi, cfg, rng.spawn(0))
    init_weights(pair.psi, cfg, rng.spawn(1))
    return pair


def test_param_count_matches_reference_protocol():
    # two hidden layers of 10: 141 complex parameters per branch
    net = build_mlp([10, 10])
    assert net.n_params() == 141
    pair = BranchPair(net, build_mlp([10, 10]))
    assert flatten_params([pair]).size == 2 * 2 * 141


def test_zero_net_forward_is_zero():
    pair = BranchPair(build_mlp([10, 10]), build_mlp([10, 10]))
    state = mlp_forward(pair.phi, pair.psi, 0.3 + 0.4j)
    assert state.phi == 0 and state.dphi == 0 and state.ddphi == 0
    assert state.psi == 0 and state.dpsi == 0


def test_stress_only_forward_semantics():
    pair = _init_pair([6, 6], mode=Mode.STRESS_ONLY, beta=0.7)
    z = np.array([0.2 + 0.1j, -0.3 + 0.5j])
    state = mlp_forward(pair.phi, pair.psi, z)
    assert state.phi is None and state.psi is None
    # dphi is branch output, ddphi its first jet derivative
    jets = forward_jets(pair.phi, z)
    assert np.allclose(state.dphi, jets[0])
    assert np.allclose(state.ddphi, jets[1])
    jq = forward_jets(pair.psi, z)
    assert np.allclose(state.dpsi, jq[0])


def test_stress_only_constant_output_has_zero_ddphi():
    pair = BranchPair(
        build_mlp([4], mode=Mode.STRESS_ONLY), build_mlp([4], mode=Mode.STRESS_ONLY)
    )
    pair.phi.layers[-1].bias[:] = 2.0 + 1.0j  # constant output
    state = mlp_forward(pair.phi, pair.psi, 0.5 + 0.2j)
    assert state.dphi == 2.0 + 1.0j
    assert state.ddphi == 0.0


def test_jets_match_finite_differences_in_z():
    pair = _init_pair([10, 10], seed=4)
    rng = Rng(9)
    z = (rng.uniform(20, -1.5, -0.2) + 1j * rng.uniform(20, 0.2, 1.5)).astype(complex)
    jets = forward_jets(pair.phi, z)
    h = 1e-5
    fp = forward_jets(pair.phi, z + h)[0]
    fm = forward_jets(pair.phi, z - h)[0]
    d1_fd = (fp - fm) / (2 * h)
    d2_fd = (fp - 2 * jets[0] + fm) / h**2
    assert np.max(np.abs(d1_fd - jets[1]) / np.maximum(1.0, np.abs(jets[1]))) < 1e-6
    assert np.max(np.abs(d2_fd - jets[2]) / np.maximum(1.0, np.abs(jets[2]))) < 1e-4


def test_init_beta_bounds():
    net = build_mlp([4])
    cfg = InitConfig(probe=np.ones(10, dtype=complex), beta=-0.1)
    with pytest.raises(ValueError):
        init_weights(net, cfg, Rng(0))
    with pytest.warns(UserWarning, match="admissible"):
        init_weights(net, InitConfig(probe=np.ones(10, dtype=complex), beta=0.2), Rng(0))
    # beta2 admissible in stress-only, warns in standard only below beta3
    so = build_mlp([4], mode=Mode.STRESS_ONLY)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        init_weights(so, InitConfig(probe=np.ones(10, dtype=complex), beta=BETA2), Rng(0))
        init_weights(net, InitConfig(probe=np.ones(10, dtype=complex), beta=BETA3), Rng(0))
    with pytest.warns(UserWarning):
        init_weights(so, InitConfig(probe=np.ones(10, dtype=complex), beta=0.5), Rng(0))


def test_init_empty_probe_rejected():
    with pytest.raises(ValueError):
        InitConfig(probe=np.array([], dtype=complex))


def test_init_variance_formulas():
    # spec arithmetic: beta=0.5, fan-in 10, unit-modulus inputs -> 0.025
    assert 0.5 / (2 * 10 * 1.0) == 0.025
    # probe layer uses the sampled mean |x|^2, Gaussian layers use e^beta
    net = build_mlp([10, 10])
    probe = np.exp(1j * np.linspace(0, 2 * np.pi, 1000, endpoint=False))  # m_1 = 1
    cfg = InitConfig(probe=probe, beta=0.5, m_e=2)

    class TrackingRng(Rng):
        stds = []

        def complex_normal(self, n, std=1.0):
            TrackingRng.stds.append(std)
            return super().complex_normal(n, std)

    init_weights(net, cfg, TrackingRng(0))
    s1, s2, s3 = TrackingRng.stds
    assert abs(s1**2 - 0.5 / (2 * 1 * 1.0)) < 1e-12
    assert abs(s2**2 - 0.5 / (2 * 10 * math.exp(0.5))) < 1e-15
    assert abs(s3**2 - 0.5 / (2 * 10 * math.exp(0.5))) < 1e-15


def test_init_variance_in_band_on_deep_net():
    # 7 hidden layers x 100 units; pooled Var[y_l] should track beta
    for beta in (BETA3, 0.5, BETA2):
        net = build_mlp([100] * 7)
        cfg = InitConfig(probe=_ring_probe(2000), beta=beta, m_e=3)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            init_weights(net, cfg, Rng(17))
        fresh = _ring_probe(500, seed=23)
        jets = np.zeros((3, fresh.size, 1), dtype=complex)
        jets[0, :, 0] = fresh
        x = fresh.reshape(-1, 1)
        for li, layer in enumerate(net.layers[:-1]):
            y = x @ layer.weights.T
            var = float(np.mean(np.abs(y - y.mean()) ** 2))
            assert 0.5 * beta < var < 1.7 * beta, (beta, li, var)
            x = np.exp(y)


def test_checkpoint_roundtrip_exact(tmp_path):
    pairs = [_init_pair([5, 7], seed=3)]
    path = str(tmp_path / "ckpt.json")
    checkpoint_save(path, pairs)
    loaded = checkpoint_load(path)
    assert len(loaded) == 1
    for branch in ("phi", "psi"):
        a, b = getattr(pairs[0], branch), getattr(loaded[0], branch)
        assert a.activation is b.activation and a.mode is b.mode
        for la, lb in zip(a.layers, b.layers):
            assert np.array_equal(la.weights, lb.weights)
            assert np.array_equal(la.bias, lb.bias)


def test_flatten_write_roundtrip():
    pairs = [_init_pair([4, 4], seed=5)]
    vec = flatten_params(pairs)
    vec2 = vec.copy()
    vec2[3] += 1.5
    write_params(pairs, vec2)
    assert flatten_params(pairs)[3] == vec[3] + 1.5
