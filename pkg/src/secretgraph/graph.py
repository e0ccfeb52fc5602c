"""Two-colorable graphs, their correlation operators and Pauli shift vectors.

Vertices are numbered 1..N in files and APIs. Basis indices are packed
least-significant-bit first: party ``k`` lives in bit ``k - 1``. Bit strings
are written party 1 first, so ``"100"`` is the index with only party 1 set.
"""

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

from ._validation import check_index


class GraphError(ValueError):
    """Raised for malformed or non-two-colorable graphs."""


def bits_to_int(bits):
    bits = bits.strip()
    if not bits or any(c not in "01" for c in bits):
        raise ValueError(f"not a bit string: {bits!r}")
    return sum(1 << i for i, c in enumerate(bits) if c == "1")


def int_to_bits(value, n):
    return "".join("1" if (value >> i) & 1 else "0" for i in range(n))


def mask_of(vertices):
    out = 0
    for v in vertices:
        out |= 1 << (v - 1)
    return out


def vertices_of(mask):
    out = []
    k = 1
    while mask:
        if mask & 1:
            out.append(k)
        mask >>= 1
        k += 1
    return out


@dataclass(frozen=True)
class PauliString:
    """A homogeneous Pauli product: ``letter`` on every vertex in ``support``."""

    letter: str
    support: int

    def __post_init__(self):
        if self.letter not in ("X", "Y", "Z"):
            raise ValueError(f"bad Pauli letter {self.letter!r}")

    @property
    def x_mask(self):
        return self.support if self.letter in ("X", "Y") else 0

    @property
    def z_mask(self):
        return self.support if self.letter in ("Z", "Y") else 0

    def anticommutes(self, other):
        parity = bin((self.x_mask & other.z_mask) ^ (self.z_mask & other.x_mask)).count("1")
        return parity % 2 == 1


@dataclass(frozen=True)
class TwoColorableGraph:
    n_vertices: int
    edges: tuple
    color_a: int
    color_b: int
    neighbors: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = self.n_vertices
        if n < 1:
            raise GraphError("graph needs at least one vertex")
        edges = tuple(sorted(_normalize_edge(u, v, n) for u, v in self.edges))
        if len(set(edges)) != len(edges):
            raise GraphError("duplicate edge")
        object.__setattr__(self, "edges", edges)
        full = (1 << n) - 1
        if self.color_a & self.color_b or (self.color_a | self.color_b) != full:
            raise GraphError("coloring does not partition the vertex set")
        nbrs = [0] * n
        for u, v in edges:
            nbrs[u - 1] |= 1 << (v - 1)
            nbrs[v - 1] |= 1 << (u - 1)
        for u, v in edges:
            same = ((self.color_a >> (u - 1)) & 1) == ((self.color_a >> (v - 1)) & 1)
            if same:
                raise GraphError(f"edge {u}-{v} joins two vertices of the same color")
        object.__setattr__(self, "neighbors", tuple(nbrs))

    @classmethod
    def from_edges(cls, n_vertices, edges):
        edges = [_normalize_edge(u, v, n_vertices) for u, v in edges]
        color_a, color_b = two_color(n_vertices, edges)
        return cls(n_vertices, tuple(edges), color_a, color_b)

    @property
    def full_mask(self):
        return (1 << self.n_vertices) - 1

    def neighborhood(self, j):
        return self.neighbors[j - 1]

    def in_a(self, j):
        return bool((self.color_a >> (j - 1)) & 1)

    def degree(self, j):
        return bin(self.neighbors[j - 1]).count("1")

    @cached_property
    def max_degree(self):
        return max(self.degree(j) for j in range(1, self.n_vertices + 1))

    @cached_property
    def min_degree(self):
        return min(self.degree(j) for j in range(1, self.n_vertices + 1))

    @cached_property
    def stabilizer_supports(self):
        """Support mask of every correlation operator, vertex order."""
        return tuple((1 << (j - 1)) | self.neighbors[j - 1] for j in range(1, self.n_vertices + 1))

    def __str__(self):
        return serialize_graph(self).strip().replace("\n", "; ")


def _normalize_edge(u, v, n):
    u, v = int(u), int(v)
    if u == v:
        raise GraphError(f"self-loop at vertex {u}")
    if u > v:
        u, v = v, u
    if u < 1 or v > n:
        raise GraphError(f"edge {u}-{v} out of range 1..{n}")
    return (u, v)


def two_color(n_vertices, edges):
    """Breadth-first 2-coloring; the lowest vertex of each component goes to A."""
    adj = [[] for _ in range(n_vertices + 1)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    color = [None] * (n_vertices + 1)
    for start in range(1, n_vertices + 1):
        if color[start] is not None:
            continue
        color[start] = 0
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if color[v] is None:
                    color[v] = 1 - color[u]
                    queue.append(v)
                elif color[v] == color[u]:
                    raise GraphError(f"graph is not two-colorable (odd cycle through {u}-{v})")
    color_a = mask_of(v for v in range(1, n_vertices + 1) if color[v] == 0)
    color_b = mask_of(v for v in range(1, n_vertices + 1) if color[v] == 1)
    return color_a, color_b


def parse_graph(text):
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise GraphError("empty graph document")
    try:
        n = int(lines[0])
    except ValueError:
        raise GraphError(f"first line must be the vertex count, got {lines[0]!r}") from None
    edges = []
    seen = set()
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 2:
            raise GraphError(f"malformed edge line {ln!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphError(f"malformed edge line {ln!r}") from None
        if not 1 <= u < v <= n:
            raise GraphError(f"edge line {ln!r} needs 1 <= u < v <= {n}")
        if (u, v) in seen:
            raise GraphError(f"duplicate edge {u}-{v}")
        seen.add((u, v))
        edges.append((u, v))
    return TwoColorableGraph.from_edges(n, edges)


def serialize_graph(g):
    rows = [str(g.n_vertices)] + [f"{u} {v}" for u, v in g.edges]
    return "\n".join(rows) + "\n"


def enlarge(g):
    """Attach a private leaf ``k + N`` to every vertex ``k``."""
    n = g.n_vertices
    edges = list(g.edges) + [(k, k + n) for k in range(1, n + 1)]
    color_a = g.color_a | (g.color_b << n)
    color_b = g.color_b | (g.color_a << n)
    return TwoColorableGraph(2 * n, tuple(edges), color_a, color_b)


def is_enlargement_of(big, g):
    return big.n_vertices == 2 * g.n_vertices and big == enlarge(g)


def correlation_operator(g, j):
    if not 1 <= j <= g.n_vertices:
        raise GraphError(f"vertex {j} out of range 1..{g.n_vertices}")
    letter = "X" if g.in_a(j) else "Z"
    return PauliString(letter, g.stabilizer_supports[j - 1])


@lru_cache(maxsize=4096)
def pauli_shift_vector(g, k, pauli):
    """XOR offset produced on graph-basis indices by ``pauli`` acting on party ``k``.

    Bit ``j`` is set iff the single-qubit Pauli anticommutes with ``K_j``.
    """
    if not 1 <= k <= g.n_vertices:
        raise GraphError(f"party {k} out of range 1..{g.n_vertices}")
    if pauli in ("I", None):
        return 0
    single = PauliString(pauli, 1 << (k - 1))
    out = 0
    for j in range(1, g.n_vertices + 1):
        if single.anticommutes(correlation_operator(g, j)):
            out |= 1 << (j - 1)
    return out


def closed_form_shift(g, k, pauli):
    """Own-letter flips bit k, the other letter flips the neighbor bits."""
    own = "Z" if g.in_a(k) else "X"
    bit = 1 << (k - 1)
    nbrs = g.neighborhood(k)
    if pauli == "Y":
        return bit | nbrs
    return bit if pauli == own else nbrs


def ghz(n):
    """Star graph centered on vertex 1 (locally equivalent to GHZ)."""
    return TwoColorableGraph.from_edges(n, [(1, k) for k in range(2, n + 1)])


def line(n):
    return TwoColorableGraph.from_edges(n, [(k, k + 1) for k in range(1, n)])


def ring(n):
    if n % 2:
        raise GraphError("odd rings are not two-colorable")
    return TwoColorableGraph.from_edges(n, [(k, k % n + 1) for k in range(1, n + 1)])


def cluster(rows, cols):
    def vid(r, c):
        return r * cols + c + 1

    edges = []
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                edges.append((vid(r, c), vid(r, c + 1)))
            if r + 1 < rows:
                edges.append((vid(r, c), vid(r + 1, c)))
    return TwoColorableGraph.from_edges(rows * cols, edges)


def graph_from_preset(name):
    """``ghz:3``, ``line:4``, ``ring:6``, ``cluster:2x3``."""
    kind, _, arg = name.partition(":")
    kind = kind.strip().lower()
    try:
        if kind == "ghz":
            return ghz(int(arg))
        if kind == "line":
            return line(int(arg))
        if kind == "ring":
            return ring(int(arg))
        if kind == "cluster":
            r, c = arg.lower().split("x")
            return cluster(int(r), int(c))
    except ValueError as exc:
        raise GraphError(f"bad graph preset {name!r}: {exc}") from None
    raise GraphError(f"unknown graph preset {name!r}")


def split_index(g, index):
    """Return the (A-part, B-part) masks of a packed basis index."""
    check_index(index, g.n_vertices)
    return index & g.color_a, index & g.color_b
