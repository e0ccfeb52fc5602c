"""Brute-force dense density-matrix simulator used as ground truth.

Qubit ``k`` (party ``k``, 1-based) is the ``k``-th Kronecker factor, most
significant first. Everything here is O(4^n) and meant for n <= 8.
"""

from dataclasses import dataclass
from functools import lru_cache, reduce

import numpy as np

from .graph import correlation_operator, enlarge

MAX_ORACLE_QUBITS = 8

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
PAULIS = {"I": I2, "X": X, "Y": Y, "Z": Z}
PAULI_LIST = (I2, X, Y, Z)


class OracleSizeError(ValueError):
    pass


def _check_size(n):
    if n > MAX_ORACLE_QUBITS:
        raise OracleSizeError(f"dense oracle limited to {MAX_ORACLE_QUBITS} qubits, got {n}")


@dataclass
class DenseState:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        dim = m.shape[0]
        if m.shape != (dim, dim) or dim & (dim - 1):
            raise ValueError(f"bad density matrix shape {m.shape}")
        _check_size(dim.bit_length() - 1)
        if abs(np.trace(m) - 1) > 1e-10:
            raise ValueError("density matrix trace differs from 1")
        if np.abs(m - m.conj().T).max() > 1e-10:
            raise ValueError("density matrix is not Hermitian")
        if np.linalg.eigvalsh(m).min() < -1e-10:
            raise ValueError("density matrix has negative eigenvalues")
        self.matrix = m

    @property
    def dim(self):
        return self.matrix.shape[0]

    @property
    def n_qubits(self):
        return self.dim.bit_length() - 1


def kron_all(ops):
    return reduce(np.kron, ops)


def embed(op, qubit, n):
    """Single-qubit ``op`` on 0-based ``qubit`` of an ``n``-qubit register."""
    ops = [I2] * n
    ops[qubit] = op
    return kron_all(ops)


def pauli_string_matrix(letter, support, n):
    ops = [PAULIS[letter] if (support >> k) & 1 else I2 for k in range(n)]
    return kron_all(ops)


def stabilizer_matrix(g, j):
    op = correlation_operator(g, j)
    return pauli_string_matrix(op.letter, op.support, g.n_vertices)


def _fix_phase(vec):
    pivot = np.flatnonzero(np.abs(vec) > 1e-9)[0]
    return vec * (abs(vec[pivot]) / vec[pivot])


def graph_basis_vector(g, mu):
    """Joint eigenvector of all ``K_j`` with eigenvalues ``(-1)^{mu_j}``."""
    n = g.n_vertices
    _check_size(n)
    dim = 1 << n
    proj = np.eye(dim, dtype=complex)
    for j in range(1, n + 1):
        sign = -1.0 if (mu >> (j - 1)) & 1 else 1.0
        proj = proj @ (np.eye(dim) + sign * stabilizer_matrix(g, j)) / 2
    for col in range(dim):
        vec = proj[:, col]
        norm = np.linalg.norm(vec)
        if norm > 1e-6:
            return _fix_phase(vec / norm)
    raise RuntimeError("projector annihilated every computational basis vector")


@lru_cache(maxsize=32)
def graph_basis_matrix(g):
    """Columns are the graph-basis vectors ordered by packed index."""
    n = g.n_vertices
    cols = [graph_basis_vector(g, mu) for mu in range(1 << n)]
    out = np.stack(cols, axis=1)
    out.setflags(write=False)
    return out


def density_from_lambda(g, lam_physical):
    v = graph_basis_matrix(g)
    return (v * np.asarray(lam_physical)) @ v.conj().T


def density_from_state(s):
    return density_from_lambda(s.graph, s.physical())


def gd_project(rho, g):
    """Graph-basis diagonal of ``rho`` and the norm of what is left off-diagonal."""
    v = graph_basis_matrix(g)
    m = v.conj().T @ rho @ v
    lam = np.real(np.diag(m)).copy()
    residual = float(np.linalg.norm(m - np.diag(np.diag(m))))
    return lam, residual


def apply_unitary(rho, u):
    return u @ rho @ u.conj().T


def apply_pauli_channel(rho, qubit, probs, n):
    out = np.zeros_like(rho)
    for p, pauli in zip(probs, PAULI_LIST):
        if p:
            op = embed(pauli, qubit, n)
            out = out + p * op @ rho @ op
    return out


def apply_chi_channel(rho, qubit, chi, n):
    """``sum_ij chi[i, j] s_i rho s_j`` on one qubit."""
    ops = [embed(p, qubit, n) for p in PAULI_LIST]
    out = np.zeros_like(rho)
    for i in range(4):
        for j in range(4):
            if chi[i, j] != 0:
                out = out + chi[i, j] * ops[i] @ rho @ ops[j].conj().T
    return out


def depolarize_qubit(rho, qubit, q, n):
    r = (1 - q) / 4
    return apply_pauli_channel(rho, qubit, (1 - 3 * r, r, r, r), n)


def cnot_permutation(control, target, n):
    idx = np.arange(1 << n)
    cbit = 1 << (n - 1 - control)
    tbit = 1 << (n - 1 - target)
    return np.where(idx & cbit, idx ^ tbit, idx)


def apply_cnots(rho, pairs, n):
    """Apply CNOT(control, target) for each 0-based pair; CNOTs are permutations."""
    perm = np.arange(1 << n)
    for c, t in pairs:
        perm = cnot_permutation(c, t, n)[perm]
    # new[perm[i]] = old[i]
    inv = np.empty_like(perm)
    inv[perm] = np.arange(perm.size)
    return rho[np.ix_(inv, inv)]


def cnot_matrix(control, target, n):
    perm = cnot_permutation(control, target, n)
    dim = 1 << n
    u = np.zeros((dim, dim))
    u[perm, np.arange(dim)] = 1
    return u


def basis_change(basis_letters):
    """Unitary rotating each qubit's measurement basis onto Z."""
    rot = {"Z": I2, "X": H, "Y": H @ np.diag([1, -1j])}
    return kron_all([rot[b] for b in basis_letters])


def measure_all(rho, basis_letters):
    """Exact outcome distribution; entry ``i`` has bit ``n-1-k`` = outcome of qubit ``k``."""
    u = basis_change(basis_letters)
    probs = np.real(np.diag(u @ rho @ u.conj().T))
    return np.clip(probs, 0, None)


def outcome_bits(index, n):
    """Convert a Kronecker-order outcome index into a packed party-bit integer."""
    out = 0
    for k in range(n):
        if (index >> (n - 1 - k)) & 1:
            out |= 1 << k
    return out


def partial_trace(rho, keep, n):
    """Trace out every qubit not in ``keep`` (0-based)."""
    keep = sorted(keep)
    t = rho.reshape([2] * (2 * n))
    drop = [k for k in range(n) if k not in keep]
    for k in sorted(drop, reverse=True):
        m = t.ndim // 2
        t = np.trace(t, axis1=k, axis2=k + m)
    d = 1 << len(keep)
    return t.reshape(d, d)


def trace_distance(a, b):
    return 0.5 * float(np.abs(np.linalg.eigvalsh(a - b)).sum())


def two_copy_branches(lam1, lam2, g, kind, q=1.0):
    """Dense two-copy recurrence step.

    ``lam1``/``lam2`` are physical graph-basis distributions of the source and
    target copies. Returns ``{syndrome: (probability, lam_out, residual)}``.
    P1: CNOT control copy2 -> target copy1 on every party, copy 2 measured in X.
    P2: CNOT control copy1 -> target copy2, copy 2 measured in Z.
    """
    n = g.n_vertices
    _check_size(2 * n)
    rho1 = density_from_lambda(g, lam1)
    rho2 = density_from_lambda(g, lam2)
    if q != 1.0:
        for k in range(n):
            rho1 = depolarize_qubit(rho1, k, q, n)
            rho2 = depolarize_qubit(rho2, k, q, n)
    rho = np.kron(rho1, rho2)
    if kind == "P1":
        pairs = [(n + k, k) for k in range(n)]
        letter, kept = "X", g.color_a
    elif kind == "P2":
        pairs = [(k, n + k) for k in range(n)]
        letter, kept = "Z", g.color_b
    else:
        raise ValueError(f"unknown map {kind!r}")
    rho = apply_cnots(rho, pairs, 2 * n)
    u = kron_all([I2] * n + [H if letter == "X" else I2] * n)
    rho = u @ rho @ u.conj().T
    dim = 1 << n
    blocks = rho.reshape(dim, dim, dim, dim)
    supports = [(j, g.stabilizer_supports[j - 1]) for j in range(1, n + 1) if (kept >> (j - 1)) & 1]
    grouped = {}
    for xi_index in range(dim):
        xi = outcome_bits(xi_index, n)
        syndrome = 0
        for j, sup in supports:
            if bin(xi & sup).count("1") % 2:
                syndrome |= 1 << (j - 1)
        block = blocks[:, xi_index, :, xi_index]
        grouped[syndrome] = grouped.get(syndrome, 0) + block
    out = {}
    for syndrome, block in grouped.items():
        p = float(np.real(np.trace(block)))
        if p <= 1e-15:
            continue
        lam, residual = gd_project(block / p, g)
        out[syndrome] = (p, lam, residual)
    return out


def enlarged_zero_state(g):
    big = enlarge(g)
    v = graph_basis_vector(big, 0)
    return np.outer(v, v.conj())


def center_product_state(g, m):
    """C's product state for outcome ``m``: Z eigenstates on leaves in A, X on leaves in B."""
    n = g.n_vertices
    big = enlarge(g)
    vecs = []
    for k in range(1, n + 1):
        bit = (m >> (k - 1)) & 1
        if big.in_a(k + n):
            vec = np.array([1, 0], dtype=complex) if bit == 0 else np.array([0, 1], dtype=complex)
        else:
            vec = np.array([1, 1], dtype=complex) / np.sqrt(2) if bit == 0 else np.array([1, -1], dtype=complex) / np.sqrt(2)
        vecs.append(vec)
    return kron_all(vecs)


def shifted_basis_vector(g, m):
    """``sigma_z^{m_A} sigma_x^{m_B} |0>_G`` with the phase that product fixes."""
    n = g.n_vertices
    ops = []
    for k in range(1, n + 1):
        if (m >> (k - 1)) & 1:
            ops.append(Z if g.in_a(k) else X)
        else:
            ops.append(I2)
    return kron_all(ops) @ graph_basis_vector(g, 0)


def center_measurement(rho_big, g):
    """Measure C's qubits of an enlarged-graph state; returns ``{m: (p, rho_agents)}``."""
    n = g.n_vertices
    dim = 1 << n
    out = {}
    for m in range(dim):
        c = center_product_state(g, m)
        proj = np.kron(np.eye(dim), c.reshape(dim, 1))
        block = proj.conj().T @ rho_big @ proj
        p = float(np.real(np.trace(block)))
        out[m] = (p, block / p if p > 1e-15 else block)
    return out


def teleport(rho_data, pair_rho):
    """Teleport one qubit through a two-qubit resource, Pauli-corrected.

    Register order: data, sender half, receiver half. Returns the receiver's
    2x2 density matrix averaged over Bell-measurement outcomes.
    """
    rho = np.kron(rho_data, pair_rho)
    rho = apply_unitary(rho, cnot_matrix(0, 1, 3))
    rho = apply_unitary(rho, embed(H, 0, 3))
    out = np.zeros((2, 2), dtype=complex)
    corrections = {(0, 0): I2, (0, 1): X, (1, 0): Z, (1, 1): Z @ X}
    t = rho.reshape(2, 2, 2, 2, 2, 2)
    for (a, b), corr in corrections.items():
        block = t[a, b, :, a, b, :]
        out += corr @ block @ corr.conj().T
    return out


def bell_state(index):
    """``(I (x) s_index) |Phi+>`` as a density matrix."""
    phi = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
    vec = np.kron(I2, PAULI_LIST[index]) @ phi
    return np.outer(vec, vec.conj())


def bell_diagonal(coeffs):
    return sum(c * bell_state(i) for i, c in enumerate(coeffs))


def bell_coefficients(rho):
    return np.array([float(np.real(np.trace(bell_state(i) @ rho))) for i in range(4)])


def dejmps_oracle(coeffs1, coeffs2=None, q=1.0):
    """Dense DEJMPS round. Register order: A1, B1, A2, B2."""
    if coeffs2 is None:
        coeffs2 = coeffs1
    rho = np.kron(bell_diagonal(coeffs1), bell_diagonal(coeffs2))
    if q != 1.0:
        for k in range(4):
            rho = depolarize_qubit(rho, k, q, 4)
    plus = (I2 + 1j * X) / np.sqrt(2)
    minus = (I2 - 1j * X) / np.sqrt(2)
    rot = kron_all([minus, plus, minus, plus])
    rho = apply_unitary(rho, rot)
    rho = apply_unitary(rho, cnot_matrix(0, 2, 4) @ cnot_matrix(1, 3, 4))
    t = rho.reshape(4, 2, 2, 4, 2, 2)
    kept = t[:, 0, 0, :, 0, 0] + t[:, 1, 1, :, 1, 1]
    p = float(np.real(np.trace(kept)))
    return bell_coefficients(kept / p), p
