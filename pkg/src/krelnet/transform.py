"""Weighted-to-unweighted reduction.

Every edge with failure probability p is replaced by a small series-parallel
gadget of edges that each fail with probability 1/2, built from the binary
expansion of the reliability 1 - p, so that the gadget's two-terminal
reliability equals 1 - p exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import InvalidArgument
from .graph_model import HALF, DyadicProb, Edge, NetworkInstance


@dataclass(frozen=True)
class BitExpansion:
    """q = 0.b_1 b_2 ... b_m in binary, with b_m = 1."""

    bits: tuple[int, ...]

    def __post_init__(self):
        if not self.bits or self.bits[-1] != 1 or any(b not in (0, 1) for b in self.bits):
            raise InvalidArgument(f"not a minimal binary expansion: {self.bits}")

    @property
    def m(self) -> int:
        return len(self.bits)

    def zeros(self, k: int) -> int:
        """Number of zeros among the first k bits (zeros(0) == 0)."""
        return k - sum(self.bits[:k])

    def ones(self, k: int) -> int:
        return sum(self.bits[:k])

    def value(self) -> Fraction:
        return sum((Fraction(b, 1 << k) for k, b in enumerate(self.bits, start=1)),
                   Fraction(0))


def dyadic_expansion(q) -> BitExpansion:
    if not isinstance(q, DyadicProb):
        q = DyadicProb.from_fraction(q)
    if not q.transformable:
        raise InvalidArgument(f"expansion needs q strictly inside (0, 1), got {q}")
    num, bits = q.numerator, q.bits
    return BitExpansion(tuple((num >> (bits - k)) & 1 for k in range(1, bits + 1)))


@dataclass(frozen=True)
class Gadget:
    """Local vertices 0..z_m+1 and edges as index pairs; entry 0, exit z_m+1."""

    num_vertices: int
    edges: tuple[tuple[int, int], ...]

    @property
    def entry(self) -> int:
        return 0

    @property
    def exit(self) -> int:
        return self.num_vertices - 1


def build_gadget(expansion: BitExpansion) -> Gadget:
    z_m = expansion.zeros(expansion.m)
    exit_ = z_m + 1
    edges = []
    for k, b in enumerate(expansion.bits, start=1):
        tail = expansion.zeros(k - 1)
        head = expansion.zeros(k) if b == 0 else exit_
        edges.append((tail, head))
    return Gadget(z_m + 2, tuple(edges))


def gadget_instance(gadget: Gadget) -> NetworkInstance:
    """The gadget as a standalone two-terminal instance with p = 1/2 everywhere."""
    names = [f"g{i}" for i in range(gadget.num_vertices)]
    edges = [Edge(names[a], names[b], HALF) for a, b in gadget.edges]
    return NetworkInstance(names, edges, (names[gadget.entry], names[gadget.exit]))


@dataclass(frozen=True)
class UnweightedInstance:
    instance: NetworkInstance
    M: int
    edge_map: tuple[tuple[int, ...], ...]  # original edge index -> new edge indices
    vertex_map: dict

    def __hash__(self):
        return hash((self.instance, self.M, self.edge_map))


def internal_vertex(edge_index: int, k: int) -> str:
    return f"{edge_index}:{k}"


def unweight(instance: NetworkInstance) -> UnweightedInstance:
    """Replace every edge by its reliability-preserving gadget.

    Edges already at 1/2 pass through unchanged. Gadget-internal vertices are
    appended after the original vertices, named ``<edge-index>:<k>``.
    """
    vertices = list(instance.vertices)
    taken = set(vertices)
    edges: list[Edge] = []
    edge_map = []
    for i, e in enumerate(instance.edges):
        if not e.p.transformable:
            raise InvalidArgument(
                f"edge {i} has failure probability {e.p}; the reduction needs p in (0, 1)")
        if e.p == HALF:
            edge_map.append((len(edges),))
            edges.append(e)
            continue
        gadget = build_gadget(dyadic_expansion(e.p.complement()))
        names = [e.u] + [internal_vertex(i, k) for k in range(1, gadget.exit)] + [e.v]
        for name in names[1:-1]:
            if name in taken:
                raise InvalidArgument(f"vertex id {name} collides with a gadget vertex")
            taken.add(name)
            vertices.append(name)
        start = len(edges)
        edges.extend(Edge(names[a], names[b], HALF) for a, b in gadget.edges)
        edge_map.append(tuple(range(start, len(edges))))
    new = NetworkInstance(vertices, edges, instance.terminals)
    return UnweightedInstance(new, len(edges), tuple(edge_map),
                              {v: v for v in instance.vertices})


def serialize_edge_map(uw: UnweightedInstance) -> str:
    return "".join(f"map {i} {' '.join(map(str, new))}\n"
                   for i, new in enumerate(uw.edge_map))


def parse_edge_map(text: str) -> tuple[tuple[int, ...], ...]:
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].split()
        if not body:
            continue
        if body[0] != "map" or len(body) < 3 or int(body[1]) != len(out):
            raise InvalidArgument(f"line {lineno}: malformed map line {raw!r}")
        out.append(tuple(int(t) for t in body[2:]))
    return tuple(out)
