"""Monte Carlo runs of the three distribution schemes.

The central station C owns a :class:`CopyRegister` (states, shifts, success
histories). Agents and eavesdroppers only ever see a
:class:`ProtocolTranscript`, whose event types have no field able to carry a
shift, a syndrome decoding or a success flag.

Scheme (ii) runs blind P1'/P2' rounds on randomly shifted copies, scheme (iii)
purifies the enlarged state non-blindly and lets C's secret leaf outcomes do
the randomizing, scheme (i) purifies every channel with DEJMPS and teleports.
"""

import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from ._validation import as_generator, check_index, check_unit_interval
from .channels import (
    BellDiagonalPair,
    PauliChannel,
    dejmps_fixed_point,
    detect_deviation,
    estimate_channel,
    ProbeRecords,
    sample_probe_records,
    teleport_channel,
    transmit,
)
from .gdstate import GraphDiagonalState
from .graph import TwoColorableGraph, enlarge, int_to_bits, is_enlargement_of
from .recurrence import Schedule, apply_map, blind_combine

Z_95 = 1.6448536269514722
MIN_PROBES = 30


class ProtocolError(ValueError):
    pass


# --- adversary -----------------------------------------------------------------

ADVERSARIES = ("none", "uniform-inflation", "graph-conditioned-inflation")


@dataclass(frozen=True)
class AdversarySpec:
    """Noise inflation applied to transmission slots ``>= start``.

    ``graph-conditioned-inflation`` only acts when the graph's largest degree
    is at least ``min_degree``.
    """

    kind: str = "none"
    factor: float = 1.0
    min_degree: int = 0
    start: int = 0

    def __post_init__(self):
        if self.kind not in ADVERSARIES:
            raise ProtocolError(f"unknown adversary {self.kind!r}")
        if self.factor < 0:
            raise ProtocolError("inflation factor must be non-negative")
        if self.start < 0:
            raise ProtocolError("adversary start slot must be non-negative")

    @classmethod
    def parse(cls, text):
        """``none``, ``uniform-inflation:2`` or ``graph-conditioned-inflation:2:3``."""
        parts = [p.strip() for p in str(text).split(":")]
        kind = parts[0]
        try:
            if kind == "none" and len(parts) == 1:
                return cls()
            if kind == "uniform-inflation" and len(parts) == 2:
                return cls(kind, float(parts[1]))
            if kind == "graph-conditioned-inflation" and len(parts) == 3:
                return cls(kind, float(parts[1]), int(parts[2]))
        except ValueError:
            pass
        raise ProtocolError(f"bad adversary spec {text!r}")


def inflate(channel, factor):
    """Scale the error probabilities of ``channel`` by ``factor`` (capped at 1)."""
    p = np.asarray(channel.probs)
    err = p[1:].sum()
    if err == 0 or factor == 1:
        return channel
    scale = min(factor, 1.0 / err)
    out = np.concatenate([[0.0], p[1:] * scale])
    out[0] = 1.0 - out[1:].sum()
    return PauliChannel(tuple(np.clip(out, 0, None)))


def apply_adversary(spec, channels, round, graph=None):
    """Channels in effect at transmission slot ``round`` under ``spec``."""
    if isinstance(spec, str):
        spec = AdversarySpec.parse(spec)
    if spec.kind == "none" or round < spec.start:
        return list(channels)
    if spec.kind == "graph-conditioned-inflation":
        if graph is None:
            raise ProtocolError("graph-conditioned inflation needs the graph")
        if graph.max_degree < spec.min_degree:
            return list(channels)
    return [inflate(ch, spec.factor) for ch in channels]


# --- configuration -------------------------------------------------------------


@dataclass(frozen=True)
class ProtocolConfig:
    graph: TwoColorableGraph
    mu: int = 0
    copies: int = 16
    channels: tuple = None
    q: float = 1.0
    schedule: Schedule = Schedule(("P1", "P2"), 2)
    seed: int = 0
    secret_position: int = None
    probe_fraction: float = 0.1
    adversary: AdversarySpec = AdversarySpec()
    epsilon: float = 0.05
    blind: bool = True
    leak_success: bool = False
    confidence_z: float = Z_95
    decoys: tuple = ()

    def __post_init__(self):
        n = self.graph.n_vertices
        check_index(self.mu, n, "mu")
        if self.copies < 2:
            raise ProtocolError("need at least two copies")
        if not 0 < self.epsilon < 1:
            raise ProtocolError("epsilon must lie in (0, 1)")
        check_unit_interval(self.q, "q")
        if not 0 <= self.probe_fraction < 1:
            raise ProtocolError("probe fraction must lie in [0, 1)")
        chans = self.channels
        if chans is None:
            chans = (PauliChannel.identity(),) * n
        chans = tuple(chans)
        if len(chans) != n:
            raise ProtocolError(f"need {n} channels, got {len(chans)}")
        object.__setattr__(self, "channels", chans)
        if isinstance(self.adversary, str):
            object.__setattr__(self, "adversary", AdversarySpec.parse(self.adversary))
        decoys = tuple(self.decoys)
        if any(d.n_vertices != n for d in decoys):
            raise ProtocolError("decoy graphs must have as many vertices as the graph")
        object.__setattr__(self, "decoys", decoys)

    @property
    def control(self):
        """Randomization off and success flags public."""
        return not self.blind and self.leak_success

    def with_seed(self, seed):
        return replace(self, seed=seed)


def control_config(cfg):
    return replace(cfg, blind=False, leak_success=True)


# --- transcript ----------------------------------------------------------------


@dataclass(frozen=True)
class Pairing:
    round: int
    pairs: tuple


@dataclass(frozen=True)
class Announcement:
    round: int
    pair: int
    basis: str
    bits: str


@dataclass(frozen=True)
class FinalOrder:
    labels: tuple


@dataclass(frozen=True)
class FinalAnnouncement:
    position: int
    basis: str
    bits: str


@dataclass(frozen=True)
class PublicString:
    bits: str


EVENT_TYPES = (Pairing, Announcement, FinalOrder, FinalAnnouncement, PublicString)


@dataclass(frozen=True)
class ProtocolTranscript:
    events: tuple = ()

    def __post_init__(self):
        events = tuple(self.events)
        for ev in events:
            if type(ev) not in EVENT_TYPES:
                raise TypeError(f"{type(ev).__name__} cannot appear in a public transcript")
        object.__setattr__(self, "events", events)

    def features(self):
        """``{slot: announced string}`` in the agents' view."""
        out = {}
        for ev in self.events:
            if isinstance(ev, Announcement):
                out[("round", ev.round, ev.pair)] = ev.basis + ev.bits
            elif isinstance(ev, FinalAnnouncement):
                out[("final", ev.position)] = ev.basis + ev.bits
            elif isinstance(ev, PublicString):
                out[("public",)] = ev.bits
        return out

    def to_text(self):
        rows = []
        for ev in self.events:
            vals = " ".join(f"{f.name}={getattr(ev, f.name)}" for f in fields(ev))
            rows.append(f"{type(ev).__name__} {vals}")
        return "\n".join(rows) + "\n"


@dataclass(frozen=True)
class LeakedTranscript(ProtocolTranscript):
    """Control-mode transcript that also publishes per-pair success flags."""

    success_flags: tuple = ()

    def features(self):
        out = super().features()
        for (r, i), ok in self.success_flags:
            out[("success", r, i)] = "1" if ok else "0"
        return out


# --- C's private register ------------------------------------------------------


@dataclass
class CopyRegister:
    """C's bookkeeping: every copy's state (with shift), history and flags."""

    graph: TwoColorableGraph
    states: dict = field(default_factory=dict)
    history: dict = field(default_factory=dict)
    clean: dict = field(default_factory=dict)
    alive: dict = field(default_factory=dict)
    leaves: dict = field(default_factory=dict)
    next_label: int = 0

    def add(self, state, history, clean=True):
        label = self.next_label
        self.next_label += 1
        self.states[label] = state
        self.history[label] = history
        self.clean[label] = clean
        self.alive[label] = True
        return label

    def alive_labels(self):
        return [k for k, v in self.alive.items() if v]

    def clean_labels(self):
        return [k for k in self.alive_labels() if self.clean[k]]

    def retire(self, label):
        self.alive[label] = False


def recompute(register, label):
    """Rebuild the stripped lambda of ``label`` from its logged history."""
    h = register.history[label]
    if h[0] == "leaf":
        return register.leaves[h[1]]
    kind, d, q, left, right = h
    lam1 = GraphDiagonalState(register.graph, recompute(register, left))
    lam2 = GraphDiagonalState(register.graph, recompute(register, right))
    (out,) = apply_map(kind, lam1, q, lam2, syndromes=[d])
    return out.state.lam


# --- announcements -------------------------------------------------------------


def _parity(x):
    return bin(x).count("1") & 1


def announcement_bits(g, basis, index, rng):
    """Outcome string of an all-X or all-Z measurement on ``|index>_G``.

    The parities along the measured color's stabilizer supports are fixed by
    ``index``; every other bit is uniform.
    """
    if basis == "X":
        constrained, free = g.color_a, g.color_b
    elif basis == "Z":
        constrained, free = g.color_b, g.color_a
    else:
        raise ValueError(f"basis must be 'X' or 'Z', got {basis!r}")
    xi = int(rng.integers(0, 1 << g.n_vertices)) & free
    for j in range(1, g.n_vertices + 1):
        bit = 1 << (j - 1)
        if constrained & bit:
            want = (index >> (j - 1)) & 1
            if _parity(xi & g.neighborhood(j)) != want:
                xi |= bit
    return xi


def stabilizer_parities(g, basis, xi):
    """``{j: parity of xi over supp(K_j)}`` for the color ``basis`` measures."""
    color = g.color_a if basis == "X" else g.color_b
    return {
        j: _parity(xi & g.stabilizer_supports[j - 1])
        for j in range(1, g.n_vertices + 1)
        if color >> (j - 1) & 1
    }


def sample_index(state, rng):
    """Draw a physical graph-basis index from ``state``."""
    cdf = np.cumsum(state.lam)
    n = min(int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right")), cdf.size - 1)
    return n ^ state.shift


def sample_measurement_announcement(state, basis, rng):
    """Sample the announced string of measuring every qubit of ``state`` in ``basis``.

    ``basis`` is ``"X"`` (X-all) or ``"Z"`` (Z-all). Returns a packed integer.
    """
    basis = {"X-all": "X", "Z-all": "Z"}.get(basis, basis)
    return announcement_bits(state.graph, basis, sample_index(state, rng), rng)


def balanced_bases(count, rng):
    out = ["X", "Z"] * ((count + 1) // 2)
    rng.shuffle(out)
    return out[:count]


# --- verification and probes ---------------------------------------------------


@dataclass(frozen=True)
class Verification:
    estimate: float
    stderr: float
    lower: float
    errors: tuple
    counts: tuple
    failed: tuple


def verify(g, records, epsilon, z=Z_95):
    """Fidelity lower bound ``1 - sum_j e_j`` from stabilizer outcomes.

    ``records`` is a list of ``(basis, xi, reference)`` where ``reference`` is
    the index C expects; ``e_j`` is the fraction of mismatches on ``K_j``.
    Returns None when some stabilizer was never measured.
    """
    n = g.n_vertices
    bad = np.zeros(n)
    cnt = np.zeros(n)
    for basis, xi, ref in records:
        for j, par in stabilizer_parities(g, basis, xi).items():
            cnt[j - 1] += 1
            bad[j - 1] += par != ((ref >> (j - 1)) & 1)
    if np.any(cnt == 0):
        return None
    e = bad / cnt
    est = 1.0 - e.sum()
    se = float(np.sqrt(np.sum(e * (1 - e) / cnt)))
    failed = tuple(j + 1 for j in range(n) if e[j] > epsilon / n)
    return Verification(float(est), se, float(est - z * se), tuple(e), tuple(int(c) for c in cnt), failed)


def _probe_slot_count(cfg):
    f = cfg.probe_fraction
    return int(math.ceil(cfg.copies * f / (1 - f))) if f > 0 else 0


def _detect(cfg, probe_records):
    """Per-party probe estimate tested against the declared channel."""
    if not probe_records or len(probe_records[0][0]) < MIN_PROBES:
        return False, None
    flags = []
    scores = []
    for k, (obs, out) in enumerate(probe_records):
        est = estimate_channel(ProbeRecords(np.array(obs), np.array(out)), MIN_PROBES)
        flag, z = detect_deviation(est, cfg.channels[k])
        flags.append(flag)
        scores.append(float(np.max(np.abs(z))))
    return any(flags), tuple(scores)


# --- report --------------------------------------------------------------------


@dataclass(frozen=True)
class RoundStat:
    round: int
    copies_alive: int
    fidelity: float


@dataclass(frozen=True)
class ProtocolReport:
    scheme: str
    seed: int
    delivered_fidelity: float
    estimate: float
    stderr: float
    lower_bound: float
    accepted: bool
    yield_: float
    transcript: ProtocolTranscript
    detected: bool
    probe_scores: tuple = None
    failed_stabilizers: tuple = ()
    rounds: tuple = ()
    delivered: GraphDiagonalState = field(default=None, repr=False)
    register: CopyRegister = field(default=None, repr=False, compare=False)
    reason: str = ""
    decoy_accepted: tuple = ()

    def __post_init__(self):
        if self.accepted and not self.lower_bound <= self.estimate:
            raise ProtocolError("accepted report with a lower bound above its estimate")


# --- transmission --------------------------------------------------------------


def _transmit_all(cfg, g, channels_for, register, rng, shifts):
    """Fill ``register`` with transmitted copies and collect probe outcomes."""
    n_parties = cfg.graph.n_vertices
    n_probe = _probe_slot_count(cfg)
    total = cfg.copies + n_probe
    is_probe = np.zeros(total, dtype=bool)
    is_probe[rng.permutation(total)[:n_probe]] = True
    probe_records = [([], []) for _ in range(n_parties)] if n_probe else []
    cache = {}
    copy_index = 0
    for slot in range(total):
        agent_ch = apply_adversary(cfg.adversary, cfg.channels, slot, graph=cfg.graph)
        if is_probe[slot]:
            for k in range(n_parties):
                rec = sample_probe_records(agent_ch[k], 1, rng)
                probe_records[k][0].append(int(rec.observable[0]))
                probe_records[k][1].append(int(rec.outcome[0]))
            continue
        key = tuple(ch.probs for ch in agent_ch)
        if key not in cache:
            cache[key] = (len(cache), transmit(g, 0, channels_for(agent_ch)).lam)
        leaf_id, lam = cache[key]
        register.leaves[leaf_id] = lam
        shift = shifts(copy_index)
        register.add(GraphDiagonalState._trusted(g, lam, shift), ("leaf", leaf_id))
        copy_index += 1
    return probe_records


def _check_schedule(cfg, minimum):
    rounds = cfg.schedule.rounds
    if cfg.copies >> rounds < minimum:
        raise ProtocolError(
            f"{cfg.copies} copies cannot survive {rounds} pairing rounds with {minimum} left"
        )


def _pair_round(register, r, kind, cfg, rng, combine, events, leaks):
    labels = register.alive_labels()
    perm = [labels[i] for i in rng.permutation(len(labels))]
    pairs = [(perm[2 * i], perm[2 * i + 1]) for i in range(len(perm) // 2)]
    events.append(Pairing(r, tuple(pairs)))
    for i, (a, b) in enumerate(pairs):
        basis, xi, ok = combine(a, b, kind)
        events.append(Announcement(r, i, basis, int_to_bits(xi, register.graph.n_vertices)))
        if cfg.leak_success:
            leaks.append(((r, i), ok))


def _final_stage(register, delivered_label, g, cfg, rng, events, reference_for):
    """Order the survivors, hide the delivered copy, measure the rest."""
    others = [k for k in register.alive_labels() if k != delivered_label]
    others = [others[i] for i in rng.permutation(len(others))]
    size = len(others) + 1
    if cfg.secret_position is None:
        pos = int(rng.integers(size))
    else:
        pos = int(cfg.secret_position) % size
    order = others[:pos] + [delivered_label] + others[pos:]
    events.append(FinalOrder(tuple(order)))
    bases = balanced_bases(len(others), rng)
    records = []
    b = iter(bases)
    for position, label in enumerate(order):
        if label == delivered_label:
            continue
        basis = next(b)
        st = register.states[label]
        xi = announcement_bits(st.graph, basis, sample_index(st, rng), rng)
        events.append(FinalAnnouncement(position, basis, int_to_bits(xi, g.n_vertices)))
        if register.clean[label]:
            records.append((basis, xi, reference_for(label)))
    return records


def _finish(scheme, cfg, register, events, leaks, delivered, f_exact, records, g_verify,
            probe_records, yield_, rounds, reason=""):
    ver = verify(g_verify, records, cfg.epsilon, cfg.confidence_z)
    detected, scores = _detect(cfg, probe_records)
    if ver is None:
        est = se = lower = float("nan")
        failed = ()
        reason = reason or "some stabilizer was never measured"
    else:
        est, se, lower, failed = ver.estimate, ver.stderr, ver.lower, ver.failed
    accepted = bool(ver is not None and not reason and not detected and lower >= 1 - cfg.epsilon)
    if detected and not reason:
        reason = "probe estimate deviates from declared channel"
    if cfg.leak_success:
        transcript = LeakedTranscript(tuple(events), tuple(leaks))
    else:
        transcript = ProtocolTranscript(tuple(events))
    return ProtocolReport(
        scheme, cfg.seed, float(f_exact), est, se, lower, accepted, float(yield_), transcript,
        bool(detected), scores, failed, tuple(rounds), delivered, register, reason,
    )


def _round_stat(register, r):
    clean = register.clean_labels()
    f = max((float(register.states[k].lam[0]) for k in clean), default=float("nan"))
    return RoundStat(r, len(register.alive_labels()), f)


# --- scheme (ii) ---------------------------------------------------------------


def run_blind_distribution(cfg, rng=None):
    """Scheme (ii): blind P1'/P2' rounds on uniformly shifted copies."""
    rng = as_generator(cfg.seed if rng is None else rng)
    g = cfg.graph
    n = g.n_vertices
    _check_schedule(cfg, 3)
    register = CopyRegister(g)
    if cfg.blind:
        shift_draws = rng.integers(0, 1 << n, size=cfg.copies)
    else:
        shift_draws = np.zeros(cfg.copies, dtype=np.int64)
    probes = _transmit_all(cfg, g, list, register, rng, lambda i: int(shift_draws[i]))
    events, leaks, rounds = [], [], [_round_stat(register, 0)]

    def combine(a, b, kind):
        c1, c2 = register.states[a], register.states[b]
        out = blind_combine(c1, c2, kind, cfg.q, rng)
        ok = out.success and register.clean[a] and register.clean[b]
        register.retire(a)
        register.retire(b)
        register.add(out.state, (kind, out.observed_syndrome, cfg.q, a, b), ok)
        basis = "X" if kind == "P1" else "Z"
        return basis, announcement_bits(g, basis, out.revealed, rng), out.success

    for r, kind in enumerate(cfg.schedule, start=1):
        _pair_round(register, r, kind, cfg, rng, combine, events, leaks)
        rounds.append(_round_stat(register, r))

    clean = register.clean_labels()
    reason = ""
    if clean:
        delivered_label = clean[int(rng.integers(len(clean)))]
    else:
        alive = register.alive_labels()
        delivered_label = alive[int(rng.integers(len(alive)))]
        reason = "no copy with an all-success history"
    # final shifts: the delivered copy is rotated onto mu, the others re-randomized
    for label in register.alive_labels():
        st = register.states[label]
        if label == delivered_label:
            target = cfg.mu
        else:
            target = int(rng.integers(0, 1 << n)) if cfg.blind else 0
        register.states[label] = GraphDiagonalState._trusted(g, st.lam, target)
    delivered = register.states[delivered_label]
    records = _final_stage(
        register, delivered_label, g, cfg, rng, events, lambda k: register.states[k].shift
    )
    f_exact = float(delivered.lam[0])
    yield_ = cfg.copies / len(clean) if clean else float("inf")
    return _finish("ii", cfg, register, events, leaks, delivered, f_exact, records, g,
                   probes, yield_, rounds, reason)


# --- scheme (iii) --------------------------------------------------------------


def _base_graph(big):
    n = big.n_vertices // 2
    low = (1 << n) - 1
    edges = tuple((u, v) for u, v in big.edges if v <= n)
    try:
        g = TwoColorableGraph(n, edges, big.color_a & low, big.color_b & low)
    except ValueError:
        return None
    return g if big.n_vertices % 2 == 0 and is_enlargement_of(big, g) else None


def measure_out_center(enlarged_state, rng=None, g=None):
    """C measures its leaves; returns ``(m, state over g)``.

    Outcome ``m`` is uniform and the agents hold ``lam'_x = sum_nu lam[x, nu]``
    shifted by ``m``.
    """
    rng = as_generator(rng)
    big = enlarged_state.graph
    if g is None:
        g = _base_graph(big)
        if g is None:
            raise ProtocolError("state does not live on an enlarged graph")
    elif not is_enlargement_of(big, g):
        raise ProtocolError("state does not live on the enlargement of g")
    n = g.n_vertices
    lam = enlarged_state.physical().reshape(1 << n, 1 << n).sum(axis=0)
    m = int(rng.integers(0, 1 << n))
    return m, GraphDiagonalState(g, lam / lam.sum(), m)


def run_enlarged_distribution(cfg, rng=None):
    """Scheme (iii): non-blind purification of the enlarged state."""
    rng = as_generator(cfg.seed if rng is None else rng)
    g = cfg.graph
    n = g.n_vertices
    big = enlarge(g)
    _check_schedule(cfg, 3)
    register = CopyRegister(big)
    ident = [PauliChannel.identity()] * n
    probes = _transmit_all(cfg, big, lambda ch: list(ch) + ident, register, rng, lambda i: 0)
    events, leaks = [], []

    def stat(r):
        alive = register.alive_labels()
        lam = [register.states[k].lam.reshape(1 << n, 1 << n)[:, 0].sum() for k in alive]
        return RoundStat(r, len(alive), float(max(lam, default=float("nan"))))

    rounds = [stat(0)]

    def combine(a, b, kind):
        out = blind_combine(register.states[a], register.states[b], kind, cfg.q, rng)
        register.retire(a)
        register.retire(b)
        if out.success:
            register.add(out.state, (kind, out.observed_syndrome, cfg.q, a, b))
        basis = "X" if kind == "P1" else "Z"
        xi = announcement_bits(big, basis, out.revealed, rng)
        # agents announce only their own qubits
        return basis, xi & ((1 << n) - 1), out.success

    for r, kind in enumerate(cfg.schedule, start=1):
        if len(register.alive_labels()) < 2:
            break
        _pair_round(register, r, kind, cfg, rng, combine, events, leaks)
        rounds.append(stat(r))

    alive = register.alive_labels()
    if not alive:
        return _finish("iii", cfg, register, events, leaks, None, 0.0, [], big, probes,
                       float("inf"), rounds, "every copy was lost")
    delivered_label = alive[int(rng.integers(len(alive)))]
    records = _final_stage(register, delivered_label, g, cfg, rng, events, lambda k: 0)
    m, st = measure_out_center(register.states[delivered_label], rng, g)
    events.append(PublicString(int_to_bits(m ^ cfg.mu, n)))
    delivered = GraphDiagonalState(g, st.lam, cfg.mu)
    yield_ = cfg.copies / len(alive)
    return _finish("iii", cfg, register, events, leaks, delivered, float(delivered.lam[0]),
                   records, big, probes, yield_, rounds)


# --- scheme (i) ----------------------------------------------------------------


def run_channel_purification(cfg, rng=None):
    """Scheme (i): DEJMPS-purified channels, then a direct transmission."""
    rng = as_generator(cfg.seed if rng is None else rng)
    g = cfg.graph
    n = g.n_vertices
    cache = {}

    def purify(ch):
        # returns (teleport channel, expected raw pairs per purified pair)
        if ch not in cache:
            pair = BellDiagonalPair.from_channel(ch)
            if pair.fidelity <= 0.5:
                raise ProtocolError(f"pair fidelity {pair.fidelity:.4g} below the bipartite threshold")
            pair, _, probs = dejmps_fixed_point(pair, cfg.q)
            if pair.fidelity <= 0.5:
                raise ProtocolError("DEJMPS fixed point stays below the bipartite threshold")
            cache[ch] = (teleport_channel(pair, cfg.q), float(np.prod([2.0 / p for p in probs])))
        return cache[ch]

    consumed = sum(purify(ch)[1] for ch in cfg.channels)
    register = CopyRegister(g)
    if cfg.blind:
        shift_draws = rng.integers(0, 1 << n, size=cfg.copies)
    else:
        shift_draws = np.zeros(cfg.copies, dtype=np.int64)
    probes = _transmit_all(cfg, g, lambda chs: [purify(ch)[0] for ch in chs], register, rng, lambda i: int(shift_draws[i]))
    labels = register.alive_labels()
    delivered_label = labels[int(rng.integers(len(labels)))]
    for label in labels:
        st = register.states[label]
        target = cfg.mu if label == delivered_label else int(shift_draws[label])
        register.states[label] = GraphDiagonalState._trusted(g, st.lam, target)
    events = []
    records = _final_stage(
        register, delivered_label, g, cfg, rng, events, lambda k: register.states[k].shift
    )
    delivered = register.states[delivered_label]
    rounds = [RoundStat(0, len(labels), float(delivered.lam[0]))]
    return _finish("i", cfg, register, events, [], delivered, float(delivered.lam[0]), records,
                   g, probes, consumed, rounds)


RUNNERS = {
    "i": run_channel_purification,
    "ii": run_blind_distribution,
    "iii": run_enlarged_distribution,
}


def run_protocol(cfg, scheme="ii", rng=None):
    """Run ``scheme`` on ``cfg``, then any decoy runs.

    Decoys are full runs on other graphs with the same parties and channels.
    A rejected decoy counts as detection and rejects the main run; its
    transcript stays private like every accept/reject verdict.
    """
    from .recurrence import scheme_name

    scheme = scheme_name(scheme)
    rng = as_generator(cfg.seed if rng is None else rng)
    rep = RUNNERS[scheme](cfg, rng)
    if not cfg.decoys:
        return rep
    verdicts = []
    for decoy in cfg.decoys:
        dcfg = replace(cfg, graph=decoy, mu=0, secret_position=None, decoys=())
        verdicts.append(RUNNERS[scheme](dcfg, np.random.default_rng(int(rng.integers(2**63)))).accepted)
    if all(verdicts):
        return replace(rep, decoy_accepted=tuple(verdicts))
    reason = rep.reason or "a decoy graph was rejected"
    return replace(rep, accepted=False, detected=True, reason=reason, decoy_accepted=tuple(verdicts))
