"""Single-qubit channels, transmission of graph states and the bipartite baseline.

Pauli probabilities are always ordered ``(p_I, p_X, p_Y, p_Z)``. A Bell-diagonal
pair is indexed the same way: coefficient ``i`` belongs to
``(I (x) sigma_i) |Phi+>``, so sending half of ``|Phi+>`` through a Pauli
channel yields a pair with the channel's own probabilities.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from sklearn.base import BaseEstimator

from ._validation import check_probabilities, check_unit_interval, renormalize
from .gdstate import GraphDiagonalState, mix_pauli

LETTERS = ("I", "X", "Y", "Z")
# Pauli product table up to phase: index(s_i s_j)
_PRODUCT = np.array([
    [0, 1, 2, 3],
    [1, 0, 3, 2],
    [2, 3, 0, 1],
    [3, 2, 1, 0],
])


class ChannelError(ValueError):
    pass


@dataclass(frozen=True)
class PauliChannel:
    probs: tuple

    def __post_init__(self):
        arr = check_probabilities(self.probs, 4, name="Pauli channel")
        object.__setattr__(self, "probs", tuple(float(x) for x in arr))

    @classmethod
    def identity(cls):
        return cls((1.0, 0.0, 0.0, 0.0))

    @classmethod
    def depolarizing(cls, p):
        """``rho -> (1 - p) rho + p I/2``."""
        p = check_unit_interval(p, "p")
        return cls((1 - 0.75 * p, p / 4, p / 4, p / 4))

    @classmethod
    def dephasing(cls, p):
        p = check_unit_interval(p, "p")
        return cls((1 - p, 0.0, 0.0, p))

    @property
    def fidelity(self):
        return self.probs[0]

    def compose(self, other):
        out = np.zeros(4)
        for i, a in enumerate(self.probs):
            for j, b in enumerate(other.probs):
                out[_PRODUCT[i, j]] += a * b
        return PauliChannel(tuple(out))

    def as_array(self):
        return np.array(self.probs)


def compose_all(channels):
    out = PauliChannel.identity()
    for ch in channels:
        out = out.compose(ch)
    return out


@dataclass(frozen=True, eq=False)
class GeneralChannel:
    """``E(rho) = sum_ij coeff[i, j] s_i rho s_j`` over ``(I, X, Y, Z)``."""

    coeff: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeff, dtype=complex)
        if c.shape != (4, 4):
            raise ChannelError(f"channel matrix must be 4x4, got {c.shape}")
        if np.abs(c - c.conj().T).max() > 1e-10:
            raise ChannelError("channel matrix is not Hermitian")
        if np.linalg.eigvalsh(c).min() < -1e-10:
            raise ChannelError("channel matrix is not positive semidefinite")
        if abs(np.trace(c).real - 1) > 1e-10:
            raise ChannelError("channel matrix trace differs from 1")
        object.__setattr__(self, "coeff", c)


def depolarize(channel):
    """Pauli twirl: keep only the diagonal of the coefficient matrix."""
    if isinstance(channel, PauliChannel):
        return channel
    diag = np.real(np.diag(channel.coeff))
    return PauliChannel(tuple(np.clip(diag, 0, None) / np.clip(diag, 0, None).sum()))


def local_noise(q):
    """Depolarizing channel with reliability ``q`` used for every gate qubit."""
    q = check_unit_interval(q, "q")
    return PauliChannel.depolarizing(1 - q)


def transmit(g, mu, channels):
    """Send ``|mu>_G`` through one Pauli channel per party."""
    from .gdstate import pure_state

    if len(channels) != g.n_vertices:
        raise ChannelError(f"need {g.n_vertices} channels, got {len(channels)}")
    state = pure_state(g, mu)
    lam = state.lam
    for k, ch in enumerate(channels, start=1):
        lam = mix_pauli(lam, g, k, ch.probs)
    return GraphDiagonalState(g, renormalize(lam), state.shift)


@dataclass(frozen=True)
class BellDiagonalPair:
    coeffs: tuple

    def __post_init__(self):
        arr = check_probabilities(self.coeffs, 4, tol=1e-10, name="Bell coefficients")
        object.__setattr__(self, "coeffs", tuple(float(x) for x in arr))

    @classmethod
    def werner(cls, f):
        r = (1 - f) / 3
        return cls((f, r, r, r))

    @classmethod
    def from_channel(cls, channel):
        return cls(channel.probs)

    @property
    def fidelity(self):
        return self.coeffs[0]


def _depolarize_pair(coeffs, q):
    # depolarizing with reliability q on both halves
    qq = q * q
    return qq * coeffs + (1 - qq) / 4


def dejmps_round(pair, q=1.0, other=None):
    """One DEJMPS recurrence round; returns ``(pair', success_probability)``."""
    q = check_unit_interval(q, "q")
    a = np.array(pair.coeffs)
    b = np.array((other or pair).coeffs)
    if q != 1.0:
        a = _depolarize_pair(a, q)
        b = _depolarize_pair(b, q)
    ci, cx, cy, cz = a
    di, dx, dy, dz = b
    # DEJMPS: Phi+ <- {Phi+, Psi-}, Phi- <- cross of those, Psi+ <- {Psi+, Phi-}
    out = np.array([
        ci * di + cy * dy,
        cx * dx + cz * dz,
        cx * dz + cz * dx,
        ci * dy + cy * di,
    ])
    p = out.sum()
    return BellDiagonalPair(tuple(out / p)), float(p)


def dejmps_fixed_point(pair, q=1.0, tol=1e-12, max_rounds=500):
    """Iterate DEJMPS; returns ``(pair, rounds, success_probabilities)``."""
    probs = []
    for rounds in range(1, max_rounds + 1):
        new, p = dejmps_round(pair, q)
        probs.append(p)
        done = abs(new.fidelity - pair.fidelity) < tol
        pair = new
        if done:
            return pair, rounds, probs
    return pair, max_rounds, probs


def teleport_channel(pair, q=1.0):
    """Pauli channel seen by a qubit teleported through ``pair``.

    With ``q < 1`` the sender's Bell measurement is noisy: depolarizing noise
    hits the data qubit and the sender's half before the measurement.
    """
    ch = PauliChannel(pair.coeffs)
    if q != 1.0:
        noise = local_noise(q)
        ch = ch.compose(noise).compose(noise)
    return ch


@dataclass(frozen=True, eq=False)
class ProbeRecords:
    """Outcomes of correlator measurements on probe Bell pairs.

    ``observable`` holds 0, 1, 2 for X(x)X, Y(x)Y, Z(x)Z; ``outcome`` holds +-1.
    """

    observable: np.ndarray
    outcome: np.ndarray

    def __len__(self):
        return len(self.outcome)


_CORR_SIGNS = np.array([
    # rows: correlator c_X, c_Y, c_Z as linear forms in (p_I, p_X, p_Y, p_Z)
    [1, 1, -1, -1],
    [1, -1, 1, -1],
    [1, -1, -1, 1],
])
# <YY> on |Phi+> is -1; c_Y is defined as -<YY>
_YY_SIGN = np.array([1, -1, 1])


def correlators(channel):
    """``(<XX>, -<YY>, <ZZ>)`` of ``|Phi+>`` after ``channel`` on one half."""
    return _CORR_SIGNS @ np.asarray(channel.probs)


def sample_probe_records(channel, n_probes, rng):
    """Measure ``n_probes`` probe pairs, each in a uniformly chosen correlator."""
    obs = rng.integers(0, 3, size=n_probes)
    c = correlators(channel)[obs]
    plus = rng.random(n_probes) < (1 + c) / 2
    outcome = np.where(plus, 1, -1) * _YY_SIGN[obs]
    return ProbeRecords(obs, outcome)


@dataclass(frozen=True)
class ChannelEstimate:
    channel: PauliChannel
    stderr: tuple
    counts: tuple


def _probs_from_correlators(c):
    return np.linalg.solve(np.vstack([np.ones(4), _CORR_SIGNS]), np.concatenate([[1.0], c]))


def estimate_channel(samples, min_samples=30):
    """Maximum-likelihood Pauli-diagonal channel from probe correlator records."""
    obs = np.asarray(samples.observable)
    out = np.asarray(samples.outcome) * _YY_SIGN[obs]
    if len(out) < min_samples:
        raise ChannelError(f"too few probe samples: {len(out)} < {min_samples}")
    counts = np.array([np.sum(obs == k) for k in range(3)])
    plus = np.array([np.sum((obs == k) & (out > 0)) for k in range(3)])
    if np.any(counts == 0):
        raise ChannelError("every correlator needs at least one probe sample")
    c = 2 * plus / counts - 1
    p = _probs_from_correlators(c)
    if np.any(p < 0):
        p = _constrained_ml(plus, counts, p)
    var_c = (1 - c ** 2) / counts
    # each p_i is (1 +- c_X +- c_Y +- c_Z) / 4
    se = np.sqrt(var_c.sum()) / 4
    return ChannelEstimate(PauliChannel(tuple(p / p.sum())), (se,) * 4, tuple(int(x) for x in counts))


def _constrained_ml(plus, counts, start):
    def nll(p):
        c = _CORR_SIGNS @ p
        up = np.clip((1 + c) / 2, 1e-15, 1)
        dn = np.clip((1 - c) / 2, 1e-15, 1)
        return -np.sum(plus * np.log(up) + (counts - plus) * np.log(dn))

    x0 = np.clip(start, 1e-6, None)
    x0 = x0 / x0.sum()
    res = minimize(
        nll, x0, method="SLSQP", bounds=[(0, 1)] * 4,
        constraints=[{"type": "eq", "fun": lambda p: p.sum() - 1}],
    )
    return np.clip(res.x, 0, None)


def deviation_scores(estimate, declared):
    """Per-letter z-scores of the estimate against the declared channel.

    Standard errors are evaluated under the declared channel (the null), with
    a one-count floor so noiseless declarations stay finite.
    """
    counts = np.array(estimate.counts, dtype=float)
    c0 = correlators(declared)
    var_c = np.maximum(1 - c0 ** 2, 1.0 / counts) / counts
    se = np.sqrt(var_c.sum()) / 4
    diff = np.asarray(estimate.channel.probs) - np.asarray(declared.probs)
    return diff / se


def detect_deviation(estimate, declared, n_sigma=5.0):
    z = deviation_scores(estimate, declared)
    return bool(np.max(np.abs(z)) > n_sigma), z


class PauliChannelEstimator(BaseEstimator):
    """Estimator wrapper around :func:`estimate_channel`.

    ``fit`` consumes :class:`ProbeRecords`; ``predict`` returns the fitted
    channel's probabilities; ``detect`` tests the fit against a declared channel.
    """

    def __init__(self, min_samples=30, n_sigma=5.0):
        self.min_samples = min_samples
        self.n_sigma = n_sigma

    def fit(self, records, y=None):
        est = estimate_channel(records, self.min_samples)
        self.estimate_ = est
        self.channel_ = est.channel
        self.stderr_ = np.array(est.stderr)
        return self

    def predict(self, X=None):
        self._check_fitted()
        return np.array(self.channel_.probs)

    def detect(self, declared):
        self._check_fitted()
        return detect_deviation(self.estimate_, declared, self.n_sigma)

    def _check_fitted(self):
        if not hasattr(self, "estimate_"):
            from sklearn.exceptions import NotFittedError

            raise NotFittedError("PauliChannelEstimator is not fitted yet")
