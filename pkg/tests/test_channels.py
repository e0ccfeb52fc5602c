import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from secretgraph import oracle
from secretgraph.channels import (
    BellDiagonalPair,
    ChannelError,
    GeneralChannel,
    PauliChannel,
    PauliChannelEstimator,
    compose_all,
    correlators,
    dejmps_fixed_point,
    dejmps_round,
    depolarize,
    detect_deviation,
    estimate_channel,
    sample_probe_records,
    teleport_channel,
    transmit,
)
from secretgraph.graph import TwoColorableGraph, ghz, line

probs4 = st.lists(st.floats(0.0, 1.0), min_size=4, max_size=4).filter(lambda v: sum(v) > 1e-3)


def _channel(v):
    v = np.asarray(v) / sum(v)
    return PauliChannel(tuple(v))


def test_presets():
    assert PauliChannel.depolarizing(0.2).probs == pytest.approx((0.85, 0.05, 0.05, 0.05))
    assert PauliChannel.dephasing(0.1).probs == pytest.approx((0.9, 0, 0, 0.1))
    with pytest.raises(ValueError):
        PauliChannel((0.5, 0.5, 0.1, 0.0))
    with pytest.raises(ValueError):
        PauliChannel.depolarizing(1.5)


def test_compose_is_pauli_product():
    x = PauliChannel((0, 1, 0, 0))
    z = PauliChannel((0, 0, 0, 1))
    assert x.compose(z).probs == (0, 0, 1, 0)
    assert compose_all([x, x]).probs == (1, 0, 0, 0)


def test_dejmps_werner_spot_value():
    pair, p = dejmps_round(BellDiagonalPair.werner(0.8))
    assert pair.fidelity == pytest.approx(0.83815, abs=5e-6)
    assert p == pytest.approx(0.76889, abs=5e-6)


@settings(max_examples=30, deadline=None)
@given(probs4, probs4, st.sampled_from([1.0, 0.97, 0.9]))
def test_dejmps_matches_dense(a, b, q):
    a = np.asarray(a) / sum(a)
    b = np.asarray(b) / sum(b)
    pair, p = dejmps_round(BellDiagonalPair(tuple(a)), q, BellDiagonalPair(tuple(b)))
    coeffs, p_dense = oracle.dejmps_oracle(a, b, q)
    assert abs(p - p_dense) < 1e-10
    assert np.allclose(pair.coeffs, coeffs, atol=1e-10)


def test_dejmps_fixed_point_reaches_unity_noiseless():
    pair, rounds, probs = dejmps_fixed_point(BellDiagonalPair.werner(0.7))
    assert pair.fidelity > 1 - 1e-9
    assert rounds < 60
    assert probs[-1] == pytest.approx(1.0)


def test_dejmps_fixed_point_below_one_with_noise():
    pair, _, _ = dejmps_fixed_point(BellDiagonalPair.werner(0.9), q=0.98)
    assert 0.5 < pair.fidelity < 1


@settings(max_examples=30, deadline=None)
@given(probs4, st.sampled_from([1.0, 0.95]), st.integers(0, 2**31))
def test_teleport_channel_matches_dense(v, q, seed):
    coeffs = np.asarray(v) / sum(v)
    pair = BellDiagonalPair(tuple(coeffs))
    ch = teleport_channel(pair, q)
    rng = np.random.default_rng(seed)
    psi = rng.normal(size=2) + 1j * rng.normal(size=2)
    psi /= np.linalg.norm(psi)
    data = np.outer(psi, psi.conj())
    resource = oracle.bell_diagonal(coeffs)
    if q != 1.0:
        full = np.kron(data, resource)
        full = oracle.depolarize_qubit(full, 0, q, 3)
        full = oracle.depolarize_qubit(full, 1, q, 3)
        got = _teleport_joint(full)
    else:
        got = oracle.teleport(data, resource)
    want = oracle.apply_pauli_channel(data, 0, ch.probs, 1)
    assert np.allclose(got, want, atol=1e-10)


def _teleport_joint(rho):
    rho = oracle.apply_unitary(rho, oracle.cnot_matrix(0, 1, 3))
    rho = oracle.apply_unitary(rho, oracle.embed(oracle.H, 0, 3))
    out = np.zeros((2, 2), dtype=complex)
    corr = {(0, 0): oracle.I2, (0, 1): oracle.X, (1, 0): oracle.Z, (1, 1): oracle.Z @ oracle.X}
    t = rho.reshape(2, 2, 2, 2, 2, 2)
    for (a, b), c in corr.items():
        out += c @ t[a, b, :, a, b, :] @ c.conj().T
    return out


def test_depolarize_is_idempotent_and_keeps_diagonal():
    rng = np.random.default_rng(0)
    m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    c = m @ m.conj().T
    c /= np.trace(c).real
    ch = depolarize(GeneralChannel(c))
    assert np.allclose(ch.probs, np.real(np.diag(c)))
    assert depolarize(ch) == ch
    with pytest.raises(ChannelError):
        GeneralChannel(np.eye(3))


def test_twirled_general_channel_gives_same_graph_diagonal_state():
    # the graph-diagonal part after a general channel equals the twirled channel's output
    rng = np.random.default_rng(1)
    g = ghz(2)
    m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    c = m @ m.conj().T
    c /= np.trace(c).real
    rho = oracle.density_from_lambda(g, np.eye(4)[0])
    rho = oracle.apply_chi_channel(rho, 0, c, 2)
    lam, _ = oracle.gd_project(rho, g)
    fast = transmit(g, 0, [depolarize(GeneralChannel(c)), PauliChannel.identity()])
    assert np.allclose(fast.physical(), lam, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.lists(probs4, min_size=3, max_size=3), st.integers(0, 7))
def test_transmit_matches_dense(vs, mu):
    g = ghz(3)
    chans = [_channel(v) for v in vs]
    rho = oracle.density_from_lambda(g, np.eye(8)[mu])
    for k, ch in enumerate(chans):
        rho = oracle.apply_pauli_channel(rho, k, ch.probs, 3)
    lam, residual = oracle.gd_project(rho, g)
    assert residual < 1e-10
    assert np.allclose(transmit(g, mu, chans).physical(), lam, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.lists(probs4, min_size=3, max_size=3), st.integers(0, 7), st.integers(0, 7))
def test_transmit_shift_covariance(vs, mu, m):
    g = line(3)
    chans = [_channel(v) for v in vs]
    a = transmit(g, mu, chans)
    b = transmit(g, mu ^ m, chans)
    assert np.array_equal(a.lam, b.lam)
    assert b.shift == a.shift ^ m


def test_transmit_disjoint_union_factorizes():
    g1, g2 = ghz(2), line(3)
    union = TwoColorableGraph.from_edges(5, [(1, 2), (3, 4), (4, 5)])
    c1 = [PauliChannel.depolarizing(0.1), PauliChannel.dephasing(0.2)]
    c2 = [PauliChannel((0.7, 0.1, 0.15, 0.05)), PauliChannel.identity(), PauliChannel.depolarizing(0.3)]
    lam = transmit(union, 0, c1 + c2).lam
    # party k is bit k-1, so the second component owns the high bits
    assert np.allclose(lam, np.kron(transmit(g2, 0, c2).lam, transmit(g1, 0, c1).lam))


def test_transmit_needs_one_channel_per_party():
    with pytest.raises(ChannelError):
        transmit(ghz(3), 0, [PauliChannel.identity()])


@pytest.mark.parametrize("ch", [PauliChannel.depolarizing(0.2), PauliChannel((0.7, 0.2, 0.0, 0.1))])
def test_estimate_channel_recovers_truth(ch):
    rng = np.random.default_rng(2)
    est = estimate_channel(sample_probe_records(ch, 20000, rng))
    assert np.allclose(est.channel.probs, ch.probs, atol=5 * est.stderr[0])
    assert est.stderr[0] < 0.01


def test_correlators_of_identity():
    assert list(correlators(PauliChannel.identity())) == [1, 1, 1]


def test_estimate_channel_needs_samples():
    rng = np.random.default_rng(0)
    with pytest.raises(ChannelError):
        estimate_channel(sample_probe_records(PauliChannel.identity(), 10, rng))


def test_estimator_api():
    rng = np.random.default_rng(3)
    est = PauliChannelEstimator(n_sigma=5.0)
    with pytest.raises(NotFittedError):
        est.predict()
    assert clone(est).get_params() == {"min_samples": 30, "n_sigma": 5.0}
    declared = PauliChannel.dephasing(0.05)
    est.fit(sample_probe_records(declared, 10000, rng))
    assert est.predict().sum() == pytest.approx(1)
    flagged, _ = est.detect(declared)
    assert not flagged


def test_detection_power_and_size():
    declared = PauliChannel.dephasing(0.05)
    inflated = PauliChannel.dephasing(0.10)
    rng = np.random.default_rng(4)
    reps = 200
    hits = sum(detect_deviation(estimate_channel(sample_probe_records(inflated, 10000, rng)), declared)[0]
               for _ in range(reps))
    false = sum(detect_deviation(estimate_channel(sample_probe_records(declared, 10000, rng)), declared)[0]
                for _ in range(reps))
    print(f"power={hits / reps:.3f} false_alarm={false / reps:.3f}")
    assert hits / reps >= 0.95
    assert false / reps <= 0.02
