import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import SINGLE_EDGE_TEXT, instance, instances
from krelnet.errors import ContractViolation, InstanceParseError, InvalidArgument
from krelnet.graph_model import (HALF, SAFE, UNSAFE, DyadicProb, TerminalPattern,
                                 evaluate_structure, evaluate_structure_batch, grid_vertex,
                                 make_grid, parse_instance, parse_probability,
                                 realization_probability, serialize_instance)


class TestDyadicProb:
    def test_canonical_forms(self):
        assert DyadicProb.from_fraction(Fraction(3, 8)) == DyadicProb(3, 3)
        assert DyadicProb.from_fraction(Fraction(1, 2)) == HALF
        assert DyadicProb.from_fraction(0) == DyadicProb(0, 1)
        assert DyadicProb.from_fraction(1) == DyadicProb(2, 1)
        assert DyadicProb.from_fraction(Fraction(2, 8)) == DyadicProb(1, 2)

    def test_rejects_non_canonical_and_out_of_range(self):
        with pytest.raises(InvalidArgument):
            DyadicProb(2, 3)
        with pytest.raises(InvalidArgument):
            DyadicProb(9, 3)
        with pytest.raises(InvalidArgument):
            DyadicProb(1, 0)
        with pytest.raises(InvalidArgument):
            DyadicProb.from_fraction(Fraction(1, 3))

    def test_complement_and_text(self):
        p = DyadicProb(3, 3)
        assert p.complement() == DyadicProb(5, 3)
        assert str(p) == "3/8"
        assert float(p) == 0.375
        assert p.transformable
        assert not DyadicProb(0, 1).transformable
        assert not DyadicProb(2, 1).transformable

    @given(st.integers(1, 20).flatmap(
        lambda b: st.tuples(st.just(b), st.integers(0, 1 << b))))
    def test_fraction_round_trip(self, pair):
        bits, num = pair
        q = Fraction(num, 1 << bits)
        assert DyadicProb.from_fraction(q).as_fraction() == q


class TestStructure:
    def test_diamond_all_up_is_safe(self, diamond_unweighted):
        assert evaluate_structure(diamond_unweighted, [1] * 6) == SAFE

    def test_diamond_all_down_is_unsafe(self, diamond_unweighted):
        assert evaluate_structure(diamond_unweighted, [0] * 6) == UNSAFE

    def test_diamond_path_a_b_d_is_safe(self, diamond_unweighted):
        assert evaluate_structure(diamond_unweighted, [1, 0, 1, 0, 0, 0]) == SAFE

    def test_diamond_only_detour_is_unsafe(self, diamond_unweighted):
        # a-w-c is up but c-d is down
        assert evaluate_structure(diamond_unweighted, [0, 0, 0, 0, 1, 1]) == UNSAFE

    def test_length_mismatch(self, diamond_unweighted):
        with pytest.raises(ContractViolation):
            evaluate_structure(diamond_unweighted, [1] * 5)
        with pytest.raises(ContractViolation):
            evaluate_structure_batch(diamond_unweighted, np.ones((3, 5)))
        with pytest.raises(ContractViolation):
            realization_probability(diamond_unweighted, [1])

    @settings(max_examples=60, deadline=None)
    @given(instances(max_edges=7))
    def test_batch_agrees_with_bfs(self, inst):
        states = np.array(list(itertools.product((0, 1), repeat=inst.m)), dtype=bool)
        states = states.reshape(1 << inst.m, inst.m)
        batch = evaluate_structure_batch(inst, states)
        for row, safe in zip(states, batch):
            assert evaluate_structure(inst, row) == (SAFE if safe else UNSAFE)

    @settings(max_examples=60, deadline=None)
    @given(instances(max_edges=7), st.data())
    def test_monotone(self, inst, data):
        x = data.draw(st.lists(st.integers(0, 1), min_size=inst.m, max_size=inst.m))
        lift = data.draw(st.lists(st.integers(0, 1), min_size=inst.m, max_size=inst.m))
        y = [a | b for a, b in zip(x, lift)]
        if evaluate_structure(inst, x) == SAFE:
            assert evaluate_structure(inst, y) == SAFE


class TestProbability:
    def test_single_edge_up(self, single_edge):
        assert realization_probability(single_edge, [1]) == Fraction(1, 2)

    def test_diamond_all_up(self, diamond):
        assert realization_probability(diamond, [1, 1, 1, 1]) == Fraction(5, 64)

    @settings(max_examples=40, deadline=None)
    @given(instances(max_edges=6, open_interval=False))
    def test_probabilities_sum_to_one(self, inst):
        total = sum(realization_probability(inst, x)
                    for x in itertools.product((0, 1), repeat=inst.m))
        assert total == 1
        for x in itertools.product((0, 1), repeat=inst.m):
            den = realization_probability(inst, x).denominator
            assert den & (den - 1) == 0


class TestGrid:
    def test_four_two_terminal(self):
        g = make_grid(4, TerminalPattern.TWO_TERMINAL, Fraction(1, 8))
        assert g.n == 16 and g.m == 24
        assert g.terminals == (grid_vertex(0, 0), grid_vertex(3, 3))
        assert all(e.p == DyadicProb(1, 3) for e in g.edges)

    def test_two_all_terminal_is_four_cycle(self):
        g = make_grid(2, TerminalPattern.ALL_TERMINAL, Fraction(1, 2))
        assert g.m == 4 and set(g.terminals) == set(g.vertices)
        degree = {v: 0 for v in g.vertices}
        for e in g.edges:
            degree[e.u] += 1
            degree[e.v] += 1
        assert set(degree.values()) == {2}

    def test_checkerboard_parity(self):
        g = make_grid(3, TerminalPattern.CHECKERBOARD, Fraction(1, 2))
        assert g.terminals == tuple(grid_vertex(r, c) for r in range(3) for c in range(3)
                                    if (r + c) % 2 == 0)

    @pytest.mark.parametrize("side", [2, 3, 5])
    def test_counts_and_connected(self, side):
        g = make_grid(side, "all", Fraction(1, 4))
        assert g.n == side * side and g.m == 2 * side * (side - 1)
        assert evaluate_structure(g, [1] * g.m) == SAFE

    def test_side_too_small(self):
        with pytest.raises(InvalidArgument):
            make_grid(1, TerminalPattern.TWO_TERMINAL, Fraction(1, 2))


class TestInstanceFormat:
    def test_golden_single_edge(self, single_edge):
        assert serialize_instance(single_edge) == SINGLE_EDGE_TEXT
        assert single_edge == instance("uv", [("u", "v", "1/2")], "uv")

    def test_fraction_token(self):
        assert parse_probability("3/8") == DyadicProb(3, 3)

    def test_decimal_tokens(self):
        assert parse_probability("0.375") == DyadicProb(3, 3)
        with pytest.raises(InvalidArgument):
            parse_probability("0.3")
        with pytest.raises(InvalidArgument):
            parse_probability("1/3")
        # 0.3 * 16 = 4.8 rounds to 5
        assert parse_probability("0.3", round_bits=4) == DyadicProb(5, 4)
        # 0.15625 * 8 = 1.25 rounds to 1; 0.3125 * 8 = 2.5 ties to 2
        assert parse_probability("0.15625", round_bits=3) == DyadicProb(5, 5)
        assert parse_probability("0.1", round_bits=3) == DyadicProb(1, 3)

    def test_round_directive(self):
        text = SINGLE_EDGE_TEXT.replace("1/2", "0.3") + "round 4\n"
        assert parse_instance(text).edges[0].p == DyadicProb(5, 4)

    def test_non_dyadic_needs_directive(self):
        text = SINGLE_EDGE_TEXT.replace("1/2", "0.3")
        with pytest.raises(InstanceParseError) as info:
            parse_instance(text)
        assert info.value.line == 5

    @pytest.mark.parametrize("bad, line", [
        ("nrel 1\nvertices 2\nv u\nv v\ne u x 1/2\nk u v\n", 5),
        ("nrel 1\nvertices 2\nv u\nv v\ne u v\nk u v\n", 5),
        ("nrel 1\nvertices 2\nv u\nv v\ne u v 1/2\nk u z\n", 6),
        ("nrel 2\nvertices 2\nv u\nv v\nk u v\n", 1),
        ("nrel 1\nvertices 2\nv u\nv v\nq\nk u v\n", 5),
        ("nrel 1\nvertices 2\nv u\nv v\ne u u 1/2\nk u v\n", 5),
    ])
    def test_errors_carry_line_numbers(self, bad, line):
        with pytest.raises(InstanceParseError) as info:
            parse_instance(bad)
        assert info.value.line == line

    def test_structural_errors(self):
        with pytest.raises(InstanceParseError):
            parse_instance("")
        with pytest.raises(InstanceParseError):
            parse_instance("nrel 1\nvertices 3\nv u\nv v\nk u v\n")
        with pytest.raises(InstanceParseError):
            parse_instance("nrel 1\nvertices 2\nv u\nv v\nk u\n")

    def test_comments_and_blank_lines(self):
        text = "# header\n\n" + SINGLE_EDGE_TEXT.replace("e u v 1/2", "e u v 1/2  # edge")
        assert parse_instance(text).m == 1

    @settings(max_examples=80, deadline=None)
    @given(instances(open_interval=False))
    def test_round_trip(self, inst):
        assert parse_instance(serialize_instance(inst)) == inst
