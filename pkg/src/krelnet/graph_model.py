"""Reliability instances, the structure function, instance I/O and grid generators.

An instance is an undirected multigraph whose edges fail independently with
dyadic probabilities, together with a terminal set K. A realization assigns
each edge a state (1 = operational, 0 = failed); it is *safe* when all
terminals are mutually connected through operational edges.
"""

from __future__ import annotations

import enum
import re
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import ContractViolation, InstanceParseError, InvalidArgument

SAFE = 1
UNSAFE = 0

FORMAT_VERSION = 1


@dataclass(frozen=True, order=True)
class DyadicProb:
    """The probability ``numerator / 2**bits`` kept in canonical form.

    Canonical means ``numerator`` is odd, or ``bits == 1`` (which is how 0 and
    1 are spelled: ``0/2`` and ``2/2``).
    """

    numerator: int
    bits: int

    def __post_init__(self):
        if self.bits < 1:
            raise InvalidArgument(f"bits must be positive, got {self.bits}")
        if not 0 <= self.numerator <= 1 << self.bits:
            raise InvalidArgument(
                f"{self.numerator}/2^{self.bits} is not a probability")
        if self.numerator % 2 == 0 and self.bits != 1:
            raise InvalidArgument(
                f"{self.numerator}/2^{self.bits} is not in canonical form")

    @classmethod
    def from_fraction(cls, value) -> DyadicProb:
        q = Fraction(value)
        den = q.denominator
        if den & (den - 1):
            raise InvalidArgument(f"{q} is not a dyadic rational")
        bits = den.bit_length() - 1
        num = q.numerator
        if bits == 0:
            num, bits = num * 2, 1
        return cls(num, bits)

    @property
    def denominator(self) -> int:
        return 1 << self.bits

    @property
    def transformable(self) -> bool:
        """True when the value lies strictly inside (0, 1)."""
        return 0 < self.numerator < self.denominator

    def as_fraction(self) -> Fraction:
        return Fraction(self.numerator, self.denominator)

    def complement(self) -> DyadicProb:
        return DyadicProb.from_fraction(1 - self.as_fraction())

    def __float__(self):
        return self.numerator / self.denominator

    def __str__(self):
        return f"{self.numerator}/{self.denominator}"


HALF = DyadicProb(1, 1)


@dataclass(frozen=True)
class Edge:
    u: str
    v: str
    p: DyadicProb  # failure probability


@dataclass(frozen=True)
class NetworkInstance:
    """G = (V, E, K) with per-edge failure probabilities.

    Parallel edges are allowed and are told apart by their position in
    ``edges``. Self-loops are not.
    """

    vertices: tuple[str, ...]
    edges: tuple[Edge, ...]
    terminals: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "edges", tuple(self.edges))
        object.__setattr__(self, "terminals", tuple(self.terminals))
        known = set(self.vertices)
        if len(known) != len(self.vertices):
            raise InvalidArgument("duplicate vertex ids")
        for i, e in enumerate(self.edges):
            if e.u not in known or e.v not in known:
                raise InvalidArgument(f"edge {i} ({e.u}, {e.v}) uses an undeclared vertex")
            if e.u == e.v:
                raise InvalidArgument(f"edge {i} is a self-loop on {e.u}")
        if len(set(self.terminals)) != len(self.terminals):
            raise InvalidArgument("duplicate terminal ids")
        if len(self.terminals) < 2:
            raise InvalidArgument("at least two terminals are required")
        missing = [t for t in self.terminals if t not in known]
        if missing:
            raise InvalidArgument(f"terminals {missing} are not vertices")

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def vertex_index(self) -> dict[str, int]:
        return {v: i for i, v in enumerate(self.vertices)}

    @cached_property
    def endpoints(self) -> np.ndarray:
        """(m, 2) array of endpoint indices, in edge order."""
        idx = self.vertex_index
        arr = np.array([(idx[e.u], idx[e.v]) for e in self.edges], dtype=np.intp)
        return arr.reshape(len(self.edges), 2)

    @cached_property
    def terminal_index(self) -> np.ndarray:
        return np.array([self.vertex_index[t] for t in self.terminals], dtype=np.intp)

    @cached_property
    def failure_probs(self) -> np.ndarray:
        return np.array([float(e.p) for e in self.edges], dtype=float)

    def is_uniform_half(self) -> bool:
        return all(e.p == HALF for e in self.edges)


def _check_length(instance: NetworkInstance, x) -> None:
    if len(x) != instance.m:
        raise ContractViolation(
            f"realization has {len(x)} states but the instance has {instance.m} edges")


def evaluate_structure(instance: NetworkInstance, x: Sequence[int]) -> int:
    """Structure function: SAFE (1) iff every terminal pair is joined by up edges.

    Breadth-first search from the first terminal over operational edges.
    """
    _check_length(instance, x)
    adj: dict[str, list[str]] = {}
    for e, state in zip(instance.edges, x):
        if state:
            adj.setdefault(e.u, []).append(e.v)
            adj.setdefault(e.v, []).append(e.u)
    start = instance.terminals[0]
    seen = {start}
    queue = deque([start])
    while queue:
        w = queue.popleft()
        for nb in adj.get(w, ()):
            if nb not in seen:
                seen.add(nb)
                queue.append(nb)
    return SAFE if all(t in seen for t in instance.terminals) else UNSAFE


def evaluate_structure_batch(instance: NetworkInstance, states: np.ndarray) -> np.ndarray:
    """Vectorised structure function over a (batch, m) array of edge states.

    Returns a boolean array, True where the realization is safe. Connectivity
    is resolved by min-label propagation until a fixed point.
    """
    states = np.asarray(states, dtype=bool)
    if states.ndim != 2 or states.shape[1] != instance.m:
        raise ContractViolation(
            f"expected a (batch, {instance.m}) state array, got shape {states.shape}")
    batch = states.shape[0]
    labels = np.repeat(np.arange(instance.n, dtype=np.int32)[:, None], batch, axis=1)
    ends = instance.endpoints
    up = states.T
    changed = True
    while changed:
        changed = False
        for j in range(instance.m):
            a, b = ends[j]
            la, lb = labels[a], labels[b]
            live = up[j] & (la != lb)
            if live.any():
                low = np.minimum(la, lb)
                labels[a] = np.where(live, low, la)
                labels[b] = np.where(live, low, lb)
                changed = True
    term = labels[instance.terminal_index]
    return np.all(term == term[0], axis=0)


def realization_probability(instance: NetworkInstance, x: Sequence[int]) -> Fraction:
    """Exact Pr(X) under independent edge failures."""
    _check_length(instance, x)
    prob = Fraction(1)
    for e, state in zip(instance.edges, x):
        p = e.p.as_fraction()
        prob *= (1 - p) if state else p
    return prob


# -- generators ---------------------------------------------------------------

class TerminalPattern(enum.Enum):
    ALL_TERMINAL = "all"
    TWO_TERMINAL = "two"
    CHECKERBOARD = "checker"


def grid_vertex(row: int, col: int) -> str:
    return f"v{row}_{col}"


def make_grid(side: int, pattern: TerminalPattern, p) -> NetworkInstance:
    """side x side lattice with uniform failure probability ``p``.

    Checkerboard terminals are the vertices with even row + col.
    """
    if side < 2:
        raise InvalidArgument(f"grid side must be at least 2, got {side}")
    pattern = TerminalPattern(pattern)
    if not isinstance(p, DyadicProb):
        p = DyadicProb.from_fraction(p)
    vertices = [grid_vertex(r, c) for r in range(side) for c in range(side)]
    edges = []
    for r in range(side):
        for c in range(side):
            if c + 1 < side:
                edges.append(Edge(grid_vertex(r, c), grid_vertex(r, c + 1), p))
            if r + 1 < side:
                edges.append(Edge(grid_vertex(r, c), grid_vertex(r + 1, c), p))
    if pattern is TerminalPattern.ALL_TERMINAL:
        terminals = vertices
    elif pattern is TerminalPattern.TWO_TERMINAL:
        terminals = [grid_vertex(0, 0), grid_vertex(side - 1, side - 1)]
    else:
        terminals = [grid_vertex(r, c) for r in range(side) for c in range(side)
                     if (r + c) % 2 == 0]
    return NetworkInstance(vertices, edges, terminals)


# -- text format --------------------------------------------------------------

_ID = re.compile(r"^[^\s#]+$")
_FRACTION = re.compile(r"^(\d+)/(\d+)$")
_DECIMAL = re.compile(r"^\d*\.\d+$|^\d+$")


def parse_probability(token: str, round_bits: int | None = None) -> DyadicProb:
    """Parse ``num/2^k`` or a decimal token.

    Decimals must be exactly dyadic unless ``round_bits`` is given, in which
    case they are rounded to that many bits (nearest, ties to even).
    """
    m = _FRACTION.match(token)
    if m:
        num, den = int(m.group(1)), int(m.group(2))
        if den == 0 or den & (den - 1):
            raise InvalidArgument(f"denominator of {token!r} is not a power of two")
        return DyadicProb.from_fraction(Fraction(num, den))
    if _DECIMAL.match(token):
        q = Fraction(token)
        den = q.denominator
        if den & (den - 1) == 0:
            return DyadicProb.from_fraction(q)
        if round_bits is None:
            raise InvalidArgument(
                f"{token} is not dyadic; add a 'round <bits>' directive to allow rounding")
        scale = 1 << round_bits
        return DyadicProb.from_fraction(Fraction(round(q * scale), scale))
    raise InvalidArgument(f"cannot read probability {token!r}")


def parse_instance(text: str) -> NetworkInstance:
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].split()
        if body:
            rows.append((lineno, body))
    if not rows:
        raise InstanceParseError("empty instance")

    round_bits = None
    for lineno, body in rows:
        if body[0] == "round":
            if len(body) != 2 or not body[1].isdigit() or int(body[1]) < 1:
                raise InstanceParseError("expected 'round <bits>'", lineno)
            if round_bits is not None:
                raise InstanceParseError("duplicate round directive", lineno)
            round_bits = int(body[1])

    lineno, body = rows[0]
    if body != ["nrel", str(FORMAT_VERSION)]:
        raise InstanceParseError(f"expected header 'nrel {FORMAT_VERSION}'", lineno)

    declared = None
    vertices: list[str] = []
    edges: list[Edge] = []
    terminals = None
    for lineno, body in rows[1:]:
        tag = body[0]
        if tag == "round":
            continue
        if tag == "vertices":
            if declared is not None or len(body) != 2 or not body[1].isdigit():
                raise InstanceParseError("expected a single 'vertices <n>' line", lineno)
            declared = int(body[1])
        elif tag == "v":
            if declared is None:
                raise InstanceParseError("'v' line before 'vertices'", lineno)
            if edges or terminals is not None:
                raise InstanceParseError("vertex declared after edges", lineno)
            if len(body) != 2 or not _ID.match(body[1]):
                raise InstanceParseError("expected 'v <id>'", lineno)
            if body[1] in vertices:
                raise InstanceParseError(f"duplicate vertex {body[1]}", lineno)
            vertices.append(body[1])
        elif tag == "e":
            if terminals is not None:
                raise InstanceParseError("edge after terminal list", lineno)
            if len(body) != 4:
                raise InstanceParseError("expected 'e <u> <v> <prob>'", lineno)
            _, u, v, tok = body
            for w in (u, v):
                if w not in vertices:
                    raise InstanceParseError(f"unknown vertex {w}", lineno)
            if u == v:
                raise InstanceParseError(f"self-loop on {u}", lineno)
            try:
                p = parse_probability(tok, round_bits)
            except InvalidArgument as exc:
                raise InstanceParseError(str(exc), lineno) from None
            edges.append(Edge(u, v, p))
        elif tag == "k":
            if terminals is not None:
                raise InstanceParseError("duplicate terminal list", lineno)
            for t in body[1:]:
                if t not in vertices:
                    raise InstanceParseError(f"unknown terminal {t}", lineno)
            terminals = body[1:]
        else:
            raise InstanceParseError(f"unknown line type {tag!r}", lineno)

    if declared is None:
        raise InstanceParseError("missing 'vertices' line")
    if declared != len(vertices):
        raise InstanceParseError(
            f"'vertices {declared}' but {len(vertices)} vertices listed")
    if terminals is None:
        raise InstanceParseError("missing terminal list")
    try:
        return NetworkInstance(vertices, edges, terminals)
    except InvalidArgument as exc:
        raise InstanceParseError(str(exc)) from None


def serialize_instance(instance: NetworkInstance) -> str:
    lines = [f"nrel {FORMAT_VERSION}", f"vertices {instance.n}"]
    lines += [f"v {v}" for v in instance.vertices]
    lines += [f"e {e.u} {e.v} {e.p}" for e in instance.edges]
    lines.append("k " + " ".join(instance.terminals))
    return "\n".join(lines) + "\n"


def load_instance(path) -> NetworkInstance:
    with open(path) as fh:
        return parse_instance(fh.read())
