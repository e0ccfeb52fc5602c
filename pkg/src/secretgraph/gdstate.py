"""Graph-diagonal mixed states stored as probability vectors over the graph basis."""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._validation import PROB_TOL, check_index, check_probabilities, renormalize
from .graph import int_to_bits, bits_to_int, pauli_shift_vector

MAX_QUBITS = 24


@lru_cache(maxsize=64)
def _arange(n):
    out = np.arange(1 << n, dtype=np.int64)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=256)
def _parity_signs(n, support):
    """(-1)^{popcount(index & support)} for every index."""
    idx = _arange(n) & support
    bits = np.zeros(idx.shape, dtype=np.int64)
    while support:
        low = support & -support
        bits ^= (idx & low) != 0
        support ^= low
    out = 1.0 - 2.0 * bits
    out.setflags(write=False)
    return out


def xor_permute(lam, offset):
    """Return ``mu`` with ``mu[n] = lam[n ^ offset]``."""
    if offset == 0:
        return lam
    n = lam.shape[0].bit_length() - 1
    return lam[_arange(n) ^ offset]


@dataclass(frozen=True, eq=False)
class GraphDiagonalState:
    """``sum_n lam[n] |n ^ shift><n ^ shift|`` in the basis of ``graph``.

    ``shift`` is the bookkeeping offset known to the central station; the
    physical graph-basis index of component ``n`` is ``n ^ shift``.
    """

    graph: object
    lam: np.ndarray
    shift: int = 0

    def __post_init__(self):
        n = self.graph.n_vertices
        if n > MAX_QUBITS:
            raise ValueError(f"N={n} exceeds the dense cap of {MAX_QUBITS}")
        lam = np.asarray(self.lam, dtype=float)
        if lam.shape != (1 << n,):
            raise ValueError(f"lambda must have length {1 << n}, got {lam.shape}")
        if np.any(lam < -PROB_TOL) or abs(lam.sum() - 1.0) > 1e-10:
            raise ValueError("lambda is not a probability vector")
        lam = np.clip(lam, 0.0, None)
        lam.setflags(write=False)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "shift", check_index(self.shift, n, "shift"))

    @classmethod
    def _trusted(cls, graph, lam, shift=0):
        """Skip validation for arrays produced by this package's own maps."""
        obj = object.__new__(cls)
        lam = np.asarray(lam, dtype=float)
        lam.setflags(write=False)
        object.__setattr__(obj, "graph", graph)
        object.__setattr__(obj, "lam", lam)
        object.__setattr__(obj, "shift", int(shift))
        return obj

    @property
    def n(self):
        return self.graph.n_vertices

    def physical(self):
        """Probability vector indexed by physical graph-basis index."""
        return xor_permute(self.lam, self.shift)

    def strip(self):
        return GraphDiagonalState._trusted(self.graph, self.lam, 0)

    def __eq__(self, other):
        if not isinstance(other, GraphDiagonalState):
            return NotImplemented
        return (
            self.graph == other.graph
            and self.shift == other.shift
            and np.array_equal(self.lam, other.lam)
        )

    __hash__ = None

    def __repr__(self):
        return f"GraphDiagonalState(N={self.n}, shift={int_to_bits(self.shift, self.n)}, F0={self.lam[0]:.6g})"


def pure_state(g, mu):
    mu = check_index(mu, g.n_vertices, "mu")
    lam = np.zeros(1 << g.n_vertices)
    lam[0] = 1.0
    return GraphDiagonalState(g, lam, mu)


def maximally_mixed(g):
    size = 1 << g.n_vertices
    return GraphDiagonalState(g, np.full(size, 1.0 / size), 0)


def from_lambda(g, lam, shift=0):
    return GraphDiagonalState(g, check_probabilities(lam, 1 << g.n_vertices, tol=1e-10, name="lambda"), shift)


def basis_shift(s, m):
    m = check_index(m, s.n, "m")
    return GraphDiagonalState(s.graph, s.lam, s.shift ^ m)


def fidelity(s, mu):
    mu = check_index(mu, s.n, "mu")
    return float(s.lam[mu ^ s.shift])


def stabilizer_expectation(s, j):
    if not 1 <= j <= s.n:
        raise ValueError(f"vertex {j} out of range 1..{s.n}")
    bit = 1 << (j - 1)
    sign = -1.0 if s.shift & bit else 1.0
    return sign * float(np.dot(_parity_signs(s.n, bit), s.lam))


def stabilizer_expectations(s):
    return np.array([stabilizer_expectation(s, j) for j in range(1, s.n + 1)])


def mix_pauli(lam, g, k, probs):
    """Mix ``lam`` with the XOR shifts a Pauli mixture at party ``k`` produces."""
    p_i, p_x, p_y, p_z = probs
    if p_i == 1.0:
        return lam
    out = p_i * lam
    for p, letter in ((p_x, "X"), (p_y, "Y"), (p_z, "Z")):
        if p:
            out = out + p * xor_permute(lam, pauli_shift_vector(g, k, letter))
    return out


def apply_pauli_mixture(s, k, probs):
    probs = check_probabilities(probs, 4)
    lam = mix_pauli(s.lam, s.graph, k, probs)
    return GraphDiagonalState(s.graph, renormalize(lam), s.shift)


def depolarize_all(lam, g, q):
    """Per-qubit depolarizing noise ``rho -> q rho + (1 - q) I/2`` on every party."""
    if q == 1.0:
        return lam
    r = (1.0 - q) / 4.0
    probs = (1.0 - 3.0 * r, r, r, r)
    for k in range(1, g.n_vertices + 1):
        lam = mix_pauli(lam, g, k, probs)
    return lam


def marginal_probabilities(s, mask):
    """Distribution of ``physical_index & mask`` as a dict."""
    phys = _arange(s.n) ^ s.shift
    keys = phys & mask
    out = {}
    for key in np.unique(keys):
        out[int(key)] = float(s.lam[keys == key].sum())
    return out


def serialize_state(s):
    n = s.n
    rows = [f"N {n}", f"shift {int_to_bits(s.shift, n)}"]
    for idx in np.flatnonzero(s.lam):
        rows.append(f"{int_to_bits(int(idx), n)} {s.lam[idx]:.17g}")
    return "\n".join(rows) + "\n"


def parse_state(text, g):
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    head_n = lines[0].split()
    head_s = lines[1].split()
    if head_n[0] != "N" or head_s[0] != "shift":
        raise ValueError("state document must start with 'N <n>' and 'shift <bits>'")
    n = int(head_n[1])
    if n != g.n_vertices:
        raise ValueError(f"state has N={n} but graph has {g.n_vertices} vertices")
    lam = np.zeros(1 << n)
    for ln in lines[2:]:
        bits, val = ln.split()
        lam[bits_to_int(bits)] = float(val)
    return GraphDiagonalState(g, lam, bits_to_int(head_s[1]))
