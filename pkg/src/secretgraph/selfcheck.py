"""Cross-checks of the fast simulator against the dense oracle.

Each check returns the largest deviation it saw; ``run_all`` bundles them for
the ``oracle-check`` subcommand.
"""

from dataclasses import dataclass

import numpy as np

from . import oracle
from .channels import PauliChannel, transmit
from .gdstate import GraphDiagonalState
from .graph import enlarge, ghz, line
from .recurrence import combine
from .secrecy import agent_marginal_check, completeness_check


def random_lambda(rng, size, sparsity=0.0):
    lam = rng.random(size) ** 3
    if sparsity:
        lam[rng.random(size) < sparsity] = 0.0
        if lam.sum() == 0:
            lam[0] = 1.0
    return lam / lam.sum()


def random_pauli_channel(rng):
    p = rng.dirichlet(np.ones(4) * 0.7)
    return PauliChannel(tuple(p))


def map_deviation(lam1, lam2, g, kind, q=1.0):
    """Largest gap between fast and dense branches (probabilities and lambdas)."""
    fast = combine(lam1, lam2, g, kind, q)
    dense = oracle.two_copy_branches(lam1, lam2, g, kind, q)
    worst = 0.0
    for d in set(fast) | set(dense):
        pf, lf = fast.get(d, (0.0, None))
        pd, ld, _ = dense.get(d, (0.0, None, 0.0))
        worst = max(worst, abs(pf - pd))
        if lf is not None and ld is not None:
            worst = max(worst, float(np.abs(lf - ld).max()))
        elif max(pf, pd) > 1e-12:
            worst = max(worst, max(pf, pd))
    return worst


def check_maps(rng, cases=200, graphs=None):
    graphs = graphs or (ghz(3), line(4))
    worst = 0.0
    for i in range(cases):
        g = graphs[i % len(graphs)]
        size = 1 << g.n_vertices
        lam1 = random_lambda(rng, size, sparsity=0.3 * (i % 2))
        lam2 = random_lambda(rng, size)
        kind = "P1" if i % 4 < 2 else "P2"
        worst = max(worst, map_deviation(lam1, lam2, g, kind))
    return worst


def transmit_deviation(g, mu, channels):
    """``(lambda gap, off-diagonal residual)`` of transmit against dense evolution."""
    n = g.n_vertices
    rho = np.outer(oracle.graph_basis_vector(g, mu), oracle.graph_basis_vector(g, mu).conj())
    for k, ch in enumerate(channels):
        rho = oracle.apply_pauli_channel(rho, k, ch.probs, n)
    lam, residual = oracle.gd_project(rho, g)
    fast = transmit(g, mu, channels).physical()
    return float(np.abs(fast - lam).max()), residual


def check_transmit(rng, cases=30):
    worst = residual = 0.0
    graphs = (ghz(1), ghz(2), ghz(3), line(3))
    for i in range(cases):
        g = graphs[i % len(graphs)]
        mu = int(rng.integers(1 << g.n_vertices))
        chans = [random_pauli_channel(rng) for _ in range(g.n_vertices)]
        d, r = transmit_deviation(g, mu, chans)
        worst = max(worst, d)
        residual = max(residual, r)
    return worst, residual


def cnot_table(g):
    """Overlap of P1-CNOT images with the predicted two-copy index map.

    Returns ``{(m, n): overlap}`` where the prediction is
    ``|m>|n> -> |m_A, m_B ^ n_B>|m_A ^ n_A, n_B>``.
    """
    n = g.n_vertices
    a, b = g.color_a, g.color_b
    pairs = [(n + k, k) for k in range(n)]
    u = np.eye(1 << (2 * n))
    for c, t in pairs:
        u = oracle.cnot_matrix(c, t, 2 * n) @ u
    out = {}
    for m in range(1 << n):
        for k in range(1 << n):
            vec = u @ np.kron(oracle.graph_basis_vector(g, m), oracle.graph_basis_vector(g, k))
            m2 = (m & a) | ((m ^ k) & b)
            k2 = ((m ^ k) & a) | (k & b)
            want = np.kron(oracle.graph_basis_vector(g, m2), oracle.graph_basis_vector(g, k2))
            out[(m, k)] = float(abs(np.vdot(want, vec)))
    return out


def enlarged_decomposition_fidelity(g):
    """``|<0_big| 2^{-N/2} sum_m |m>_G |c_m>|^2`` for the enlarged graph."""
    n = g.n_vertices
    big = oracle.graph_basis_vector(enlarge(g), 0)
    vec = sum(
        np.kron(oracle.shifted_basis_vector(g, m), oracle.center_product_state(g, m))
        for m in range(1 << n)
    ) / np.sqrt(1 << n)
    return float(abs(np.vdot(big, vec)) ** 2)


def center_measurement_deviation(rng, g):
    """Fast center measurement against the dense projection, random enlarged state."""
    from .protocols import measure_out_center

    big = enlarge(g)
    n = g.n_vertices
    lam = random_lambda(rng, 1 << (2 * n))
    dense = oracle.center_measurement(oracle.density_from_lambda(big, lam), g)
    st = GraphDiagonalState(big, lam)
    worst = 0.0
    for m, (p, block) in dense.items():
        lam_d, _ = oracle.gd_project(block, g)
        _, fast = measure_out_center(st, np.random.default_rng(0), g)
        fast_lam = fast.lam[np.arange(1 << n) ^ m]
        worst = max(worst, abs(p - 2.0 ** -n), float(np.abs(fast_lam - lam_d).max()))
    return worst


@dataclass(frozen=True)
class CheckResult:
    name: str
    deviation: float
    tolerance: float

    @property
    def passed(self):
        return self.deviation <= self.tolerance


def run_all(seed=0, cases=40):
    rng = np.random.default_rng(seed)
    out = [CheckResult("maps", check_maps(rng, cases), 1e-10)]
    lam_dev, residual = check_transmit(rng)
    out.append(CheckResult("transmit", lam_dev, 1e-10))
    out.append(CheckResult("twirl_residual", residual, 1e-10))
    table = cnot_table(ghz(2))
    out.append(CheckResult("cnot_table", max(abs(1 - v) for v in table.values()), 1e-10))
    out.append(CheckResult(
        "enlarged_decomposition",
        max(1 - enlarged_decomposition_fidelity(g) for g in (ghz(1), ghz(2), ghz(3))),
        1e-10,
    ))
    out.append(CheckResult(
        "center_measurement", max(center_measurement_deviation(rng, g) for g in (ghz(2), line(3))), 1e-10
    ))
    out.append(CheckResult(
        "agent_marginal", max(agent_marginal_check(g) for g in (ghz(1), ghz(2), ghz(3))), 1e-10
    ))
    out.append(CheckResult("completeness", max(completeness_check(g) for g in (ghz(3), line(4))), 1e-10))
    return out
