"""Multipartite recurrence maps P1/P2, blind variants and fixed-point analysis.

A two-copy step keeps one color class pointwise and XOR-convolves the other:

* P1 keeps the A-part of copy 1, convolves B-parts, announces the A-part
  syndrome ``a1 ^ a2`` (copy 2 measured in X).
* P2 keeps the B-part of copy 1, convolves A-parts, announces ``b1 ^ b2``
  (copy 2 measured in Z).

Branch ``d`` of P1 is ``lam'[a, g] ~ sum_{b1 ^ b2 = g} lam1[a, b1] lam2[a ^ d, b2]``;
``d = 0`` is the success branch. The convolution runs through a fast
Walsh-Hadamard transform over the convolved sub-lattice.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import hadamard

from ._validation import as_generator, check_unit_interval
from .channels import (
    PauliChannel,
    dejmps_fixed_point,
    BellDiagonalPair,
    teleport_channel,
    transmit,
)
from .gdstate import GraphDiagonalState, depolarize_all, fidelity
from .graph import enlarge

MAPS = ("P1", "P2")


class PurificationError(RuntimeError):
    pass


class NoPurificationRegime(PurificationError):
    pass


@dataclass(frozen=True)
class RecurrenceOutcome:
    state: GraphDiagonalState
    success: bool
    observed_syndrome: int
    probability: float
    revealed: int = 0


@dataclass(frozen=True)
class Schedule:
    sequence: tuple = ("P1", "P2")
    rounds: int = 1

    def __post_init__(self):
        seq = tuple(s.strip().upper() for s in self.sequence)
        if not seq:
            raise ValueError("schedule sequence must be non-empty")
        bad = [s for s in seq if s not in MAPS]
        if bad:
            raise ValueError(f"unknown maps in schedule: {bad}")
        if self.rounds < 0:
            raise ValueError("round count must be non-negative")
        object.__setattr__(self, "sequence", seq)

    def map_for(self, r):
        return self.sequence[r % len(self.sequence)]

    def __iter__(self):
        return (self.map_for(r) for r in range(self.rounds))


def _masks(g, kind):
    if kind == "P1":
        return g.color_a, g.color_b
    if kind == "P2":
        return g.color_b, g.color_a
    raise ValueError(f"unknown map {kind!r}")


def _compress(values, mask):
    out = np.zeros_like(values)
    i = 0
    bit = 0
    while mask >> bit:
        if (mask >> bit) & 1:
            out |= ((values >> bit) & 1) << i
            i += 1
        bit += 1
    return out


def _expand(values, mask):
    out = np.zeros_like(values)
    i = 0
    bit = 0
    while mask >> bit:
        if (mask >> bit) & 1:
            out |= ((values >> i) & 1) << bit
            i += 1
        bit += 1
    return out


@lru_cache(maxsize=64)
def layout(n, kept_mask, conv_mask):
    """Packed index for every (kept, convolved) compressed coordinate pair."""
    nk = bin(kept_mask).count("1")
    nc = bin(conv_mask).count("1")
    k = _expand(np.arange(1 << nk, dtype=np.int64), kept_mask)
    c = _expand(np.arange(1 << nc, dtype=np.int64), conv_mask)
    out = k[:, None] | c[None, :]
    out.setflags(write=False)
    return out


@lru_cache(maxsize=16)
def _hadamard(size):
    out = hadamard(size).astype(float)
    out.setflags(write=False)
    return out


def fwht(a):
    """Unnormalized Walsh-Hadamard transform along the last axis."""
    a = np.array(a, dtype=float)
    size = a.shape[-1]
    if size <= 64:
        return a @ _hadamard(size)
    lead = a.shape[:-1]
    h = 1
    while h < size:
        v = a.reshape(lead + (size // (2 * h), 2, h))
        x = v[..., 0, :]
        y = v[..., 1, :]
        a = np.stack((x + y, x - y), axis=-2).reshape(lead + (size,))
        h *= 2
    return a


def xor_convolve(u, v):
    n = u.shape[-1]
    return fwht(fwht(u) * fwht(v)) / n


def branch_probabilities(lam1, lam2, g, kind):
    """``{d: P(d)}`` for every syndrome, ``d`` packed into the kept mask."""
    kept, conv = _masks(g, kind)
    lay = layout(g.n_vertices, kept, conv)
    s1 = lam1[lay].sum(axis=1)
    s2 = lam2[lay].sum(axis=1)
    # P(d) = sum_a s1[a] s2[a ^ d]; exact sums keep impossible branches at 0
    if s1.size <= 2048:
        rows = np.arange(s1.size)
        corr = (s1[:, None] * s2[rows[:, None] ^ rows[None, :]]).sum(axis=0)
    else:
        corr = np.clip(fwht(fwht(s1) * fwht(s2)) / s1.size, 0.0, None)
    return corr, lay[:, 0]


def _branch_fwht(lam1, lam2, g, kind, dc):
    kept, conv = _masks(g, kind)
    lay = layout(g.n_vertices, kept, conv)
    h1 = fwht(lam1[lay])
    h2 = fwht(lam2[lay])
    rows = np.arange(lay.shape[0])
    out = fwht(h1 * h2[rows ^ dc]) / lay.shape[1]
    lam = np.empty(lam1.size)
    lam[lay] = np.clip(out, 0.0, None)
    return lam


def _branch_naive(lam1, lam2, g, kind, d):
    kept, conv = _masks(g, kind)
    size = lam1.size
    lam = np.zeros(size)
    idx = np.arange(size)
    for n1 in np.flatnonzero(lam1):
        # partner n2 must satisfy (n1 ^ n2) & kept == d
        n2 = idx[((idx ^ n1) & kept) == d]
        out_idx = (n1 & kept) | ((n1 ^ n2) & conv)
        np.add.at(lam, out_idx, lam1[n1] * lam2[n2])
    return lam


def combine(lam1, lam2, g, kind, q=1.0, syndromes=None, method="fwht"):
    """All (or the requested) branches of one two-copy step.

    ``lam1``/``lam2`` are physical distributions of the copy that survives and
    the copy that is measured. Returns ``{d: (probability, lam_out)}``.
    """
    q = check_unit_interval(q, "q")
    if q != 1.0:
        lam1 = depolarize_all(lam1, g, q)
        lam2 = depolarize_all(lam2, g, q)
    kept, conv = _masks(g, kind)
    probs, packed = branch_probabilities(lam1, lam2, g, kind)
    if syndromes is None:
        wanted = [(dc, int(packed[dc])) for dc in range(packed.size) if probs[dc] > 0]
    else:
        lookup = {int(p): dc for dc, p in enumerate(packed)}
        wanted = []
        for d in syndromes:
            if d & ~kept:
                raise ValueError(f"syndrome {d} has bits outside the measured color")
            wanted.append((lookup[d], d))
    out = {}
    for dc, d in wanted:
        if method == "fwht":
            lam = _branch_fwht(lam1, lam2, g, kind, dc)
        elif method == "naive":
            lam = _branch_naive(lam1, lam2, g, kind, d)
        else:
            raise ValueError(f"unknown method {method!r}")
        total = lam.sum()
        if total <= 0:
            out[d] = (0.0, None)
            continue
        out[d] = (float(probs[dc]), lam / total)
    return out


def _map(kind, state, q, other, syndromes, method):
    other = state if other is None else other
    if other.graph != state.graph:
        raise ValueError("copies live on different graphs")
    if abs(state.lam.sum() - 1) > 1e-10 or abs(other.lam.sum() - 1) > 1e-10:
        raise ValueError("input lambda is not normalized")
    res = combine(state.physical(), other.physical(), state.graph, kind, q, syndromes, method)
    return [
        RecurrenceOutcome(GraphDiagonalState._trusted(state.graph, lam, 0), d == 0, d, p)
        for d, (p, lam) in sorted(res.items())
        if lam is not None
    ]


def p1_map(state, q=1.0, other=None, syndromes=None, method="fwht"):
    """P1 branches (one per A-syndrome) for ``state`` combined with ``other``."""
    return _map("P1", state, q, other, syndromes, method)


def p2_map(state, q=1.0, other=None, syndromes=None, method="fwht"):
    """P2 branches (one per B-syndrome)."""
    return _map("P2", state, q, other, syndromes, method)


def apply_map(kind, state, q=1.0, other=None, syndromes=None, method="fwht"):
    return _map(kind, state, q, other, syndromes, method)


def success_branch(kind, state, q=1.0, other=None):
    (out,) = _map(kind, state, q, other, [0], "fwht")
    return out


def blind_combine(copy1, copy2, which, q=1.0, rng=None):
    """Blind two-copy step on shifted states.

    The syndrome is sampled on the shift-stripped states, so the returned
    lambda is bit-identical to the non-blind branch. ``revealed`` holds the
    physical parities the agents announce; only a holder of both shifts can
    turn it back into ``observed_syndrome``.
    """
    rng = as_generator(rng)
    kind = {"P1'": "P1", "P2'": "P2"}.get(which, which)
    g = copy1.graph
    if copy2.graph != g:
        raise ValueError("copies live on different graphs")
    kept, conv = _masks(g, kind)
    lam1, lam2 = copy1.lam, copy2.lam
    if q != 1.0:
        lam1 = depolarize_all(lam1, g, q)
        lam2 = depolarize_all(lam2, g, q)
    probs, packed = branch_probabilities(lam1, lam2, g, kind)
    cdf = np.cumsum(probs)
    dc = min(int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right")), probs.size - 1)
    d = int(packed[dc])
    (outcome,) = _map(kind, copy1.strip(), q, copy2.strip(), [d], "fwht")
    s1, s2 = copy1.shift, copy2.shift
    shift = (s1 & kept) | ((s1 ^ s2) & conv)
    revealed = d ^ ((s1 ^ s2) & kept)
    state = GraphDiagonalState._trusted(g, outcome.state.lam, shift)
    return RecurrenceOutcome(state, d == 0, d, outcome.probability, revealed)


@dataclass(frozen=True)
class FixedPointResult:
    f_max: float
    rounds: int
    trajectory: tuple = field(repr=False)
    state: GraphDiagonalState = field(repr=False, default=None)
    converged: bool = True


class FixedPointDivergence(PurificationError):
    def __init__(self, message, trajectory):
        super().__init__(message)
        self.trajectory = trajectory


def zero_fidelity(lam):
    return float(lam[0])


def fixed_point(state, schedule=None, q=1.0, measure=None, tol=1e-10, max_rounds=200):
    """Iterate success branches until the per-cycle fidelity settles.

    Alternating schedules settle on a cycle rather than a point; the largest
    fidelity on the final cycle is reported.
    """
    schedule = schedule or Schedule()
    measure = measure or zero_fidelity
    seq = schedule.sequence
    cycle = len(seq)
    f_in = measure(state.physical())
    traj = [f_in]
    prev_cycle_end = f_in
    declines = 0
    rounds = 0
    converged = False
    while rounds < max_rounds:
        for kind in seq:
            state = success_branch(kind, state, q).state
            traj.append(measure(state.lam))
            rounds += 1
        f_end = traj[-1]
        declines = declines + cycle if (f_end < prev_cycle_end and f_end < f_in) else 0
        if abs(f_end - prev_cycle_end) < tol:
            converged = True
            break
        prev_cycle_end = f_end
    if not converged and declines >= 10:
        raise FixedPointDivergence(
            f"fidelity still falling below the input value after {rounds} rounds", tuple(traj)
        )
    f_max = max(traj[-cycle:])
    return FixedPointResult(f_max, rounds, tuple(traj), state, converged)


# --- scheme-level fixed points -------------------------------------------------

SCHEMES = ("i", "ii", "iii")
_SCHEME_ALIASES = {
    "i": "i", "channel": "i", "channel-purification": "i",
    "ii": "ii", "blind": "ii", "direct": "ii",
    "iii": "iii", "enlarged": "iii",
}


def scheme_name(scheme):
    try:
        return _SCHEME_ALIASES[str(scheme).lower()]
    except KeyError:
        raise ValueError(f"unknown scheme {scheme!r}") from None


def channel_family(name):
    if callable(name):
        return name
    if name == "depolarizing":
        return PauliChannel.depolarizing
    if name == "dephasing":
        return PauliChannel.dephasing
    raise ValueError(f"unknown channel family {name!r}")


def direct_fidelity(g, channels):
    return fidelity(transmit(g, 0, channels), 0)


def delivered_measure(n_agents):
    """Agents' fidelity after C measures its leaves: ``sum_nu lam[0, nu]``."""
    size = 1 << n_agents

    def measure(lam):
        return float(lam.reshape(size, size)[:, 0].sum())

    return measure


def scheme_fixed_point(g, channels, q, scheme, schedule=None, max_rounds=200):
    """Fixed-point fidelity reached by a scheme.

    (ii) purifies the transmitted N-qubit state directly; (iii) purifies the
    enlarged 2N-qubit state and reports the agents' fidelity after C's
    measurement; (i) purifies every channel with DEJMPS and teleports through
    the purified pairs.
    """
    scheme = scheme_name(scheme)
    schedule = schedule or Schedule()
    if scheme == "ii":
        return fixed_point(transmit(g, 0, channels), schedule, q, max_rounds=max_rounds)
    if scheme == "iii":
        big = enlarge(g)
        ch = list(channels) + [PauliChannel.identity()] * g.n_vertices
        return fixed_point(
            transmit(big, 0, ch), schedule, q, measure=delivered_measure(g.n_vertices),
            max_rounds=max_rounds,
        )
    purified = []
    rounds = 0
    for ch in channels:
        pair, r, _ = dejmps_fixed_point(BellDiagonalPair.from_channel(ch), q)
        purified.append(teleport_channel(pair, q))
        rounds = max(rounds, r)
    f = direct_fidelity(g, purified)
    return FixedPointResult(f, rounds, (direct_fidelity(g, channels), f))


def upper_fixed_point(g, q, scheme, schedule=None):
    """Fixed point reached from noiseless channels; depends on ``q`` only."""
    ident = [PauliChannel.identity()] * g.n_vertices
    return scheme_fixed_point(g, ident, q, scheme, schedule).f_max


def purification_helps(g, family, p, q, scheme, schedule=None, upper=None, atol=1e-6):
    """Whether purification at channel noise ``p`` reaches the upper fixed point
    and that point beats direct transmission.

    Returns ``(helps, f_direct, f_fixed)``. Converging to a lower attractor
    counts as failure even when it happens to exceed the input fidelity.
    """
    channels = [family(p)] * g.n_vertices
    f_in = direct_fidelity(g, channels)
    if upper is None:
        upper = upper_fixed_point(g, q, scheme, schedule)
    try:
        res = scheme_fixed_point(g, channels, q, scheme, schedule)
    except FixedPointDivergence:
        return False, f_in, float("nan")
    ok = res.converged and abs(res.f_max - upper) < atol and upper > f_in + 1e-9
    return ok, f_in, res.f_max


@dataclass(frozen=True)
class ThresholdResult:
    p_threshold: float
    f_min: float
    f_max: float
    scheme: str


def threshold_scan(g, family, q, scheme, schedule=None, p_max=1.0, grid=40, tol=1e-4):
    """Largest channel noise at which purification still beats direct transmission.

    A grid locates the last helping point, bisection refines the edge to
    ``tol``. ``f_min`` is the directly transmitted fidelity at the edge.
    """
    family = channel_family(family)
    scheme = scheme_name(scheme)
    upper = upper_fixed_point(g, q, scheme, schedule)
    ps = np.linspace(0.0, p_max, grid + 1)[1:]
    helps = [purification_helps(g, family, p, q, scheme, schedule, upper)[0] for p in ps]
    if not any(helps):
        raise NoPurificationRegime(f"scheme {scheme} never beats direct transmission at q={q}")
    last = max(i for i, h in enumerate(helps) if h)
    lo = ps[last]
    hi = ps[last + 1] if last + 1 < len(ps) else None
    if hi is not None:
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if purification_helps(g, family, mid, q, scheme, schedule, upper)[0]:
                lo = mid
            else:
                hi = mid
    f_in = direct_fidelity(g, [family(lo)] * g.n_vertices)
    return ThresholdResult(float(lo), f_in, upper, scheme)
