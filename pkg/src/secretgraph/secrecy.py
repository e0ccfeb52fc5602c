"""Statistical tests of transcript secrecy.

Histograms are kept per transcript slot (a given round and pair, a final
position, the public string). Slots that did not occur in a trial are counted
under ``"-"`` so that every slot's counts add up to the number of trials.
"""

from collections import Counter
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import chi2, chi2_contingency

from . import oracle
from .graph import enlarge
from .protocols import run_protocol

ABSENT = "-"
EXACT_MAX_N = 4
MIN_BIN = 5


@dataclass
class TranscriptHistogram:
    counts: dict = field(default_factory=dict)
    trials: int = 0

    def add(self, features):
        for slot, value in features.items():
            self.counts.setdefault(slot, Counter())[value] += 1
        self.trials += 1

    def merge(self, other):
        out = TranscriptHistogram({k: Counter(v) for k, v in self.counts.items()}, self.trials)
        for slot, c in other.counts.items():
            out.counts.setdefault(slot, Counter()).update(c)
        out.trials += other.trials
        return out

    def slot(self, key):
        c = Counter(self.counts.get(key, {}))
        missing = self.trials - sum(c.values())
        if missing < 0:
            raise ValueError(f"slot {key} has more counts than trials")
        if missing:
            c[ABSENT] += missing
        return c

    def slots(self):
        return sorted(self.counts, key=repr)


def expand_features(features, n):
    """Exact strings for ``n <= 4``, else single-bit marginals and pairwise parities."""
    if n <= EXACT_MAX_N:
        return features
    out = {}
    for slot, value in features.items():
        head, bits = value[:-n], value[-n:]
        for i in range(n):
            out[slot + ("bit", i)] = head + bits[i]
            for j in range(i + 1, n):
                out[slot + ("pair", i, j)] = head + str(int(bits[i]) ^ int(bits[j]))
    return out


def _trial_seeds(seed, stream, trials):
    return np.random.SeedSequence([int(seed), int(stream)]).spawn(trials)


def transcript_histogram(cfg, trials, scheme="ii", stream=0):
    """Run ``trials`` independent protocols and tabulate the agents' view."""
    if trials < 1000:
        raise ValueError("transcript statistics need at least 1000 trials")
    hist = TranscriptHistogram()
    n = cfg.graph.n_vertices
    for ss in _trial_seeds(cfg.seed, stream, trials):
        rep = run_protocol(cfg, scheme, np.random.default_rng(ss))
        hist.add(expand_features(rep.transcript.features(), n))
    return hist


def _merge_small(c1, c2):
    """Category order plus merged counts; categories below MIN_BIN are pooled."""
    cats = sorted(set(c1) | set(c2), key=lambda k: (c1.get(k, 0) + c2.get(k, 0), k), reverse=True)
    rows = []
    small = []
    for k in cats:
        if c1.get(k, 0) + c2.get(k, 0) >= MIN_BIN:
            rows.append(([k], c1.get(k, 0), c2.get(k, 0)))
        else:
            small.append(k)
    if small:
        pooled = (small, sum(c1.get(k, 0) for k in small), sum(c2.get(k, 0) for k in small))
        if pooled[1] + pooled[2] >= MIN_BIN or not rows:
            rows.append(pooled)
        else:
            keys, a, b = rows.pop()
            rows.append((keys + small, a + pooled[1], b + pooled[2]))
    return rows


@dataclass(frozen=True)
class IndistinguishabilityResult:
    chi_square: float
    dof: int
    p_value: float
    tv_estimate: float
    tv_error: float
    tv_observed: float
    rows: tuple = field(repr=False, default=())

    def __iter__(self):
        return iter((self.chi_square, self.dof, self.p_value, self.tv_estimate))


def compare_histograms(h1, h2, n_boot=200, seed=0):
    """Chi-square homogeneity summed over slots, plus a bias-corrected TV."""
    stat = 0.0
    dof = 0
    rows = []
    tv_obs = []
    pooled = []
    for slot in sorted(set(h1.counts) | set(h2.counts), key=repr):
        c1, c2 = h1.slot(slot), h2.slot(slot)
        merged = _merge_small(c1, c2)
        if len(merged) < 2:
            continue
        table = np.array([[a, b] for _, a, b in merged], dtype=float)
        s, _, d, expected = chi2_contingency(table, correction=False)
        stat += s
        dof += d
        contrib = ((table - expected) ** 2 / expected).sum(axis=1)
        for (keys, a, b), x in zip(merged, contrib):
            rows.append((repr(slot), "|".join(map(str, keys)), int(a), int(b), float(x)))
        p1 = table[:, 0] / table[:, 0].sum()
        p2 = table[:, 1] / table[:, 1].sum()
        tv_obs.append(0.5 * np.abs(p1 - p2).sum())
        pooled.append((table.sum(axis=1) / table.sum(), int(table[:, 0].sum()), int(table[:, 1].sum())))
    if dof == 0:
        return IndistinguishabilityResult(0.0, 0, 1.0, 0.0, 0.0, 0.0, tuple(rows))
    p_value = float(chi2.sf(stat, dof))
    tv = float(np.mean(tv_obs))
    rng = np.random.default_rng(seed)
    null = np.empty(n_boot)
    for b in range(n_boot):
        vals = []
        for p, n1, n2 in pooled:
            a = rng.multinomial(n1, p) / n1
            c = rng.multinomial(n2, p) / n2
            vals.append(0.5 * np.abs(a - c).sum())
        null[b] = np.mean(vals)
    return IndistinguishabilityResult(
        float(stat), int(dof), p_value, tv - float(null.mean()), float(null.std()), tv, tuple(rows)
    )


def indistinguishability_test(g1, g2, cfg, trials, scheme="ii", n_boot=200):
    """Compare the transcripts produced on ``g1`` and ``g2`` under ``cfg``.

    Returns ``(chi_square, dof, p_value, tv_estimate)`` when unpacked; the full
    result also carries the bootstrap error and per-feature rows.
    """
    if g1.n_vertices != g2.n_vertices:
        raise ValueError("graphs must have the same number of vertices")
    h1 = transcript_histogram(replace(cfg, graph=g1), trials, scheme, stream=1)
    h2 = transcript_histogram(replace(cfg, graph=g2), trials, scheme, stream=2)
    return compare_histograms(h1, h2, n_boot, seed=cfg.seed)


def agent_marginal_check(g):
    """Trace distance between the agents' marginal of ``|0>`` on the enlarged graph and ``I/2^N``."""
    n = g.n_vertices
    if 2 * n > oracle.MAX_ORACLE_QUBITS:
        raise oracle.OracleSizeError(f"enlarged state of N={n} exceeds the dense oracle")
    big = enlarge(g)
    vec = oracle.graph_basis_vector(big, 0)
    rho = np.outer(vec, vec.conj())
    agents = oracle.partial_trace(rho, list(range(n)), 2 * n)
    return oracle.trace_distance(agents, np.eye(1 << n) / (1 << n))


def completeness_check(g):
    """Trace distance between the uniform mixture of all ``|m>_G`` and ``I/2^N``."""
    basis = oracle.graph_basis_matrix(g)
    dim = basis.shape[0]
    mix = basis @ basis.conj().T / dim
    return oracle.trace_distance(mix, np.eye(dim) / dim)
