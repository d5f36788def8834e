"""Shared fixtures text and hypothesis strategies."""

from fractions import Fraction

from hypothesis import strategies as st

from krelnet.graph_model import DyadicProb, Edge, NetworkInstance

DIAMOND_TEXT = """\
nrel 1
vertices 4
v a
v b
v c
v d
e a b 1/2
e a c 3/8
e b d 1/2
e c d 1/2
k a d
"""

SINGLE_EDGE_TEXT = """\
nrel 1
vertices 2
v u
v v
e u v 1/2
k u v
"""


def instance(vertices, edges, terminals):
    """Build an instance from (u, v, p) triples with p given as a Fraction or string."""
    return NetworkInstance(
        tuple(vertices),
        tuple(Edge(u, v, DyadicProb.from_fraction(Fraction(p))) for u, v, p in edges),
        tuple(terminals))


def dyadic(max_bits, open_interval=True):
    """Strategy for dyadic probabilities with at most ``max_bits`` bits."""
    lo = 1 if open_interval else 0

    @st.composite
    def build(draw):
        bits = draw(st.integers(1, max_bits))
        hi = (1 << bits) - lo
        return DyadicProb.from_fraction(Fraction(draw(st.integers(lo, hi)), 1 << bits))
    return build()


@st.composite
def instances(draw, max_vertices=6, max_edges=8, max_bits=3, open_interval=True):
    """Random multigraph with a random terminal set of size at least two."""
    n = draw(st.integers(2, max_vertices))
    names = [f"n{i}" for i in range(n)]
    pairs = st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)).filter(lambda t: t[0] != t[1])
    ends = draw(st.lists(pairs, min_size=0, max_size=max_edges))
    probs = draw(st.lists(dyadic(max_bits, open_interval), min_size=len(ends),
                          max_size=len(ends)))
    edges = [Edge(names[a], names[b], p) for (a, b), p in zip(ends, probs)]
    k = draw(st.lists(st.sampled_from(names), min_size=2, max_size=n, unique=True))
    return NetworkInstance(names, edges, k)
