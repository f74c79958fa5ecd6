import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mlaco.instance import (
    ConflictGraph,
    GenConfig,
    InfeasibleItemError,
    ParseError,
    apply_capacity_multiplier,
    generate_conflicts,
    generate_instance,
    parse_instance,
    read_instance,
    serialize_conflicts,
    serialize_instance,
    validate_pattern,
    write_instance,
)
from mlaco.rng import SplitMix64, derive_seeds

from conftest import make_instance


class TestSplitMix64:
    def test_reference_stream(self):
        # published first outputs for seed 1234567
        g = SplitMix64(1234567)
        assert [g.next_u64() for _ in range(5)] == [
            6457827717110365317,
            3203168211198807973,
            9817491932198370423,
            4593380528125082431,
            16408922859458223821,
        ]

    def test_random_in_unit_interval(self):
        g = SplitMix64(7)
        xs = [g.random() for _ in range(10000)]
        assert 0.0 <= min(xs) and max(xs) < 1.0
        assert abs(np.mean(xs) - 0.5) < 0.02

    def test_randint_bounds_and_coverage(self):
        g = SplitMix64(3)
        xs = [g.randint(20, 25) for _ in range(3000)]
        assert set(xs) == set(range(20, 26))

    def test_derive_seeds_distinct(self):
        seeds = derive_seeds(1, 50)
        assert len(set(seeds)) == 50
        assert seeds == derive_seeds(1, 50)


class TestParse:
    def test_basic(self):
        inst = parse_instance("3\n10\n4\n5\n6\n", "")
        assert inst.n_items == 3 and inst.capacity == 10
        assert inst.weights == (4, 5, 6)
        assert inst.conflicts.edge_count == 0

    def test_oversized_item(self):
        with pytest.raises(InfeasibleItemError) as err:
            parse_instance("2\n10\n4\n11\n")
        assert err.value.item == 1

    def test_edge_symmetry(self):
        inst = parse_instance("3\n10\n4\n5\n6\n", "0 1")
        assert inst.conflicts.adjacency[0] == (1,)
        assert inst.conflicts.adjacency[1] == (0,)
        assert inst.conflicts.adjacency[2] == ()

    @pytest.mark.parametrize(
        "text, line",
        [("3\n10\n4\nx\n6\n", 4), ("3\n10\n4\n5\n", 4), ("2\n10\n4 5\n6\n", 3)],
    )
    def test_malformed_reports_line(self, text, line):
        with pytest.raises(ParseError) as err:
            parse_instance(text)
        assert err.value.line == line

    def test_edge_out_of_range(self):
        with pytest.raises(ParseError) as err:
            parse_instance("3\n10\n4\n5\n6\n", "0 1\n1 3\n")
        assert err.value.line == 2

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 12), st.integers(0, 2**32), st.floats(0, 1))
    def test_round_trip(self, n, seed, density):
        inst = generate_instance(n, 50, (1, 50), GenConfig(density, seed))
        again = parse_instance(serialize_instance(inst), serialize_conflicts(inst.conflicts), name=inst.name)
        assert again == inst

    def test_file_round_trip(self, tmp_path):
        inst = generate_instance(20, 150, (20, 100), GenConfig(0.5, 9))
        write_instance(inst, tmp_path / "a.txt", tmp_path / "a.conflicts")
        got = read_instance(tmp_path / "a.txt", tmp_path / "a.conflicts")
        assert got.weights == inst.weights and got.conflicts == inst.conflicts


class TestGenerators:
    def test_density_extremes(self):
        base = make_instance([1] * 5, 10)
        assert generate_conflicts(base, GenConfig(0.0, 1)).conflicts.edge_count == 0
        assert generate_conflicts(base, GenConfig(1.0, 1)).conflicts.edge_count == 10

    def test_edge_count_statistics(self):
        base = make_instance([1] * 200, 10)
        sigma = math.sqrt(19900 * 0.25)
        for seed in derive_seeds(99, 20):
            m = generate_conflicts(base, GenConfig(0.5, seed)).conflicts.edge_count
            assert abs(m - 9950) <= 3 * sigma

    def test_deterministic(self):
        base = make_instance([1] * 30, 10)
        a = generate_conflicts(base, GenConfig(0.5, 42))
        b = generate_conflicts(base, GenConfig(0.5, 42))
        assert serialize_conflicts(a.conflicts) == serialize_conflicts(b.conflicts)

    def test_graph_invariants(self):
        g = generate_conflicts(make_instance([1] * 40, 10), GenConfig(0.3, 5)).conflicts
        for i, nbrs in enumerate(g.adjacency):
            assert list(nbrs) == sorted(set(nbrs)) and i not in nbrs
            assert all(i in g.adjacency[j] for j in nbrs)

    @pytest.mark.parametrize("m, cap", [(1, 1000), (5, 5000), (15, 15000)])
    def test_capacity_multiplier(self, m, cap):
        inst = make_instance([400, 600], 1000, [(0, 1)])
        scaled = apply_capacity_multiplier(inst, m)
        assert scaled.capacity == cap
        assert scaled.weights == inst.weights and scaled.conflicts == inst.conflicts

    def test_multiplier_rejects_zero(self):
        with pytest.raises(ValueError):
            apply_capacity_multiplier(make_instance([1], 1), 0)


class TestValidatePattern:
    def test_examples(self):
        inst = make_instance([4, 5, 6], 10)
        assert validate_pattern(inst, {0, 1}).feasible
        bad = validate_pattern(inst, {0, 1, 2})
        assert not bad.feasible and bad.capacity_violation == (15, 10)
        conf = validate_pattern(make_instance([4, 5, 6], 10, [(0, 1)]), {0, 1})
        assert not conf.feasible and conf.conflict_violations == [(0, 1)]

    def test_out_of_range(self):
        with pytest.raises(ParseError):
            validate_pattern(make_instance([1, 1], 5), {2})

    def test_agrees_with_direct_evaluation(self):
        rng = np.random.default_rng(0)
        for _ in range(5):
            n = 10
            w = rng.integers(1, 8, n)
            edges = [(i, j) for i, j in itertools.combinations(range(n), 2) if rng.random() < 0.3]
            inst = make_instance(w, 15, edges)
            for mask in range(1 << n):
                items = [i for i in range(n) if mask >> i & 1]
                direct = w[items].sum() <= 15 and not any(i in items and j in items for i, j in edges)
                assert validate_pattern(inst, items).feasible == direct
