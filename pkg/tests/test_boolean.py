from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maxcon import (
    FeasibilityOracle,
    IdealMBF,
    IdealSpec,
    InfluenceVector,
    SubsetMask,
    Tolerance,
    as_mbf,
    generate_line2d,
    ideal_mbf,
    influence_exact,
    influence_mse,
    influence_sampled,
    is_upper_zero,
    max_upper_zero_exhaustive,
    separation,
    tabulate_mbf,
    theorem1_influence,
    theorem2_influence,
)
from maxcon.boolean import influence_flip_counts


# -- independent oracles, written first and kept dumb -----------------------


def flip_pair_counts_by_enumeration(f, n: int) -> list[int]:
    """#{x : x_i = 0 and f(x) != f(x + e_i)} per coordinate, by looping
    over every vertex of the cube."""
    counts = [0] * n
    for x in range(1 << n):
        fx = f(x)
        for i in range(n):
            if not x >> i & 1 and fx != f(x | 1 << i):
                counts[i] += 1
    return counts


def influence_by_enumeration(f, n: int) -> list[Fraction]:
    return [Fraction(c, 1 << n) for c in flip_pair_counts_by_enumeration(f, n)]


def ideal_by_set_inclusion(spec: IdealSpec):
    """Membership semantics spelled out with Python sets."""
    structures = [set(s) for s in spec.structures]

    def f(bits: int) -> int:
        members = {i for i in range(spec.n) if bits >> i & 1}
        if len(members) <= spec.p:
            return 0
        if any(members <= s for s in structures):
            return 0
        return 1

    return f

def upper_zeros_by_enumeration(f, n: int) -> set[int]:
    out = set()
    for x in range(1 << n):
        if f(x) != 0:
            continue
        if all(f(x | 1 << i) == 1 for i in range(n) if not x >> i & 1):
            out.add(x)
    return out


def max_upper_zero_by_enumeration(f, n: int) -> tuple[int, int]:
    """(best popcount, smallest-encoding argmax) over all zeros of f."""
    best_pop, best_bits = -1, -1
    for x in range(1 << n):
        if f(x) == 0:
            pop = bin(x).count("1")
            if pop > best_pop:
                best_pop, best_bits = pop, x
    return best_pop, best_bits


def binom(n: int, k: int) -> int:
    import math

    return math.comb(n, k) if 0 <= k <= n else 0


# -- ideal specs and their Boolean functions --------------------------------


class TestIdealSpec:
    def test_basic_fields(self):
        spec = IdealSpec(5, 2, ((0, 1, 2, 3),))
        assert spec.k_sizes == (4,)

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(n=5, p=0, structures=((0, 1),)),
            dict(n=5, p=5, structures=((0, 1),)),
            dict(n=5, p=2, structures=()),
            dict(n=5, p=2, structures=((0, 1),)),
            dict(n=5, p=2, structures=((0, 1, 5, 6),)),
            dict(n=5, p=2, structures=((0, 1, 1, 2),)),
            dict(n=8, p=2, structures=((0, 1, 2, 3), (1, 2, 3, 4))),
            dict(n=6, p=1, structures=((0, 1, 2), (3, 4))),
        ],
    )
    def test_invalid_specs_rejected(self, kwargs):
        with pytest.raises(ValueError):
            IdealSpec(**kwargs)

    def test_overlap_up_to_p_allowed(self):
        spec = IdealSpec(8, 2, ((0, 1, 2, 3), (2, 3, 4, 5)))
        assert spec.k_sizes == (4, 4)

    def test_membership_patterns(self):
        spec = IdealSpec(8, 2, ((0, 1, 2, 3), (4, 5, 6, 7)))
        assert spec.membership(0) == (1, 0)
        assert spec.membership(5) == (0, 1)
        with pytest.raises(ValueError):
            spec.membership(9)


class TestIdealMbf:
    def test_single_structure_vertices(self):
        f = ideal_mbf(IdealSpec(5, 2, ((0, 1, 2, 3),)))
        assert f(SubsetMask.from_string("11110").bits) == 0
        assert f(SubsetMask.from_string("11111").bits) == 1
        assert f(SubsetMask.from_string("11001").bits) == 1

    def test_low_levels_always_feasible(self):
        f = ideal_mbf(IdealSpec(5, 2, ((0, 1, 2, 3),)))
        for bits in range(1 << 5):
            if bin(bits).count("1") <= 2:
                assert f(bits) == 0

    def test_two_disjoint_structures(self):
        f = ideal_mbf(IdealSpec(8, 2, ((0, 1, 2, 3), (4, 5, 6, 7))))
        assert f(SubsetMask.from_string("11110000").bits) == 0
        assert f(SubsetMask.from_string("11111000").bits) == 1
        assert f(SubsetMask.from_string("00001111").bits) == 0

    @pytest.mark.parametrize(
        "spec",
        [
            IdealSpec(5, 2, ((0, 1, 2, 3),)),
            IdealSpec(8, 2, ((0, 1, 2, 3), (4, 5, 6, 7))),
            IdealSpec(8, 2, ((0, 1, 2, 3), (2, 3, 4, 5))),
            IdealSpec(7, 1, ((1, 3), (0, 2, 4, 6))),
            IdealSpec(6, 3, ((0, 1, 2, 3, 4),)),
        ],
    )
    def test_matches_set_inclusion_oracle(self, spec):
        f = ideal_mbf(spec)
        oracle = ideal_by_set_inclusion(spec)
        for bits in range(1 << spec.n):
            assert f(bits) == oracle(bits)

    def test_is_monotone(self):
        f = ideal_mbf(IdealSpec(8, 2, ((0, 1, 2, 3), (2, 3, 4, 5))))
        rng = np.random.default_rng(1)
        for _ in range(2000):
            sup = int(rng.integers(0, 1 << 8))
            sub = sup & int(rng.integers(0, 1 << 8))
            assert f(sub) <= f(sup)


class TestTabulation:
    def test_table_matches_function(self):
        spec = IdealSpec(8, 2, ((0, 1, 2, 3), (4, 5, 6, 7)))
        f = ideal_mbf(spec)
        table = tabulate_mbf(f, n=8)
        for bits in range(1 << 8):
            assert table(bits) == f(bits)

    def test_monotone_and_plain_modes_agree(self):
        f = ideal_mbf(IdealSpec(7, 2, ((0, 1, 2, 3),)))
        fast = tabulate_mbf(f, n=7, monotone=True)
        plain = tabulate_mbf(f, n=7, monotone=False)
        assert np.array_equal(fast.truth_table(), plain.truth_table())

    def test_monotone_mode_saves_oracle_calls(self, axis_dataset, axis_tol):
        oracle = FeasibilityOracle(axis_dataset, axis_tol)
        tabulate_mbf(oracle)
        assert oracle.calls < 1 << 5

    def test_dimension_guard(self):
        with pytest.raises(ValueError):
            tabulate_mbf(lambda bits: 0, n=25)


# -- exact influence ---------------------------------------------------------


class TestInfluenceExact:
    def test_constant_functions(self):
        zero = influence_exact(as_mbf(lambda bits: 0, 4), n=4)
        assert np.all(zero.values == 0.0)
        one = influence_exact(as_mbf(lambda bits: 1, 4), n=4)
        assert np.all(one.values == 0.0)

    def test_dictator_gets_half_under_pair_counting(self):
        f = as_mbf(lambda bits: bits & 1, 3)
        vec = influence_exact(f, n=3)
        assert vec.values == pytest.approx([0.5, 0.0, 0.0])

    def test_frozen_ideal_values(self):
        vec = influence_exact(ideal_mbf(IdealSpec(5, 2, ((0, 1, 2, 3),))))
        assert vec.values[:4] == pytest.approx([3 / 32] * 4)
        assert vec.values[4] == pytest.approx(11 / 32)

    @pytest.mark.parametrize(
        "spec",
        [
            IdealSpec(5, 2, ((0, 1, 2, 3),)),
            IdealSpec(8, 2, ((0, 1, 2, 3), (4, 5, 6, 7))),
            IdealSpec(8, 2, ((0, 1, 2, 3), (2, 3, 4, 5))),
            IdealSpec(7, 1, ((1, 3), (0, 2, 4, 6))),
        ],
    )
    def test_matches_enumeration_on_ideal_functions(self, spec):
        f = ideal_mbf(spec)
        vec = influence_exact(f)
        want = influence_by_enumeration(f, spec.n)
        for i in range(spec.n):
            assert Fraction(vec.values[i]) == want[i]

    def test_matches_enumeration_on_a_real_oracle(self, axis_dataset, axis_tol):
        oracle = FeasibilityOracle(axis_dataset, axis_tol)
        table = tabulate_mbf(oracle)
        vec = influence_exact(table)
        want = influence_by_enumeration(table, 5)
        for i in range(5):
            assert Fraction(vec.values[i]) == want[i]

    def test_counts_attached(self):
        f = ideal_mbf(IdealSpec(5, 2, ((0, 1, 2, 3),)))
        vec = influence_exact(f)
        assert vec.counts is not None
        assert list(vec.counts) == flip_pair_counts_by_enumeration(f, 5)

    def test_dimension_guard(self):
        with pytest.raises(ValueError):
            influence_exact(lambda bits: 0, n=25)


# -- sampled influence -------------------------------------------------------


class TestInfluenceSampled:
    def test_constant_one_estimates_zero(self):
        f = as_mbf(lambda bits: 1, 6)
        vec = influence_sampled(f, SubsetMask.all_ones(6), m=64, q=0.5, seed=0)
        assert np.all(vec.values == 0.0)

    def test_dictator_concentrates_near_half(self):
        f = as_mbf(lambda bits: bits & 1, 3)
        vec = influence_sampled(f, SubsetMask.all_ones(3), m=4096, q=0.5, seed=1)
        assert vec.values[0] == pytest.approx(0.5, abs=0.05)
        assert vec.values[1] == pytest.approx(0.0, abs=0.05)

    def test_deterministic_given_seed(self):
        f = ideal_mbf(IdealSpec(8, 2, ((0, 1, 2, 3), (4, 5, 6, 7))))
        scope = SubsetMask.all_ones(8)
        a = influence_sampled(f, scope, m=256, q=0.3, seed=9)
        b = influence_sampled(f, scope, m=256, q=0.3, seed=9)
        c = influence_sampled(f, scope, m=256, q=0.3, seed=10)
        assert np.array_equal(a.values, b.values)
        assert not np.array_equal(a.values, c.values)

    def test_shortcut_never_changes_estimates(self):
        ds = generate_line2d(10, 0.3, seed=4)
        oracle = FeasibilityOracle(ds, Tolerance(0.1))
        scope = SubsetMask.all_ones(10)
        fast = influence_sampled(oracle, scope, m=200, q=0.4, seed=5, shortcut=True)
        slow = influence_sampled(oracle, scope, m=200, q=0.4, seed=5, shortcut=False)
        assert np.array_equal(fast.values, slow.values)

    def test_scope_restriction_pins_outside_bits(self):
        seen = []
        n = 6

        def probe(bits: int) -> int:
            seen.append(bits)
            return 1 if bin(bits).count("1") > 2 else 0

        scope = SubsetMask.from_indices(n, [0, 2, 4])
        vec = influence_sampled(as_mbf(probe, n), scope, m=64, q=0.5, seed=0)
        outside = 0b101010
        assert all(bits & outside == 0 for bits in seen)
        assert np.isnan(vec.values[1]) and np.isnan(vec.values[5])
        assert np.isfinite(vec.values[0])

    def test_targets_subset_of_scope(self):
        f = ideal_mbf(IdealSpec(6, 2, ((0, 1, 2),)))
        scope = SubsetMask.all_ones(6)
        vec = influence_sampled(f, scope, targets=[1, 4], m=128, q=0.5, seed=2)
        assert vec.defined_indices() == (1, 4)
        assert np.isnan(vec.values[0])
        with pytest.raises(ValueError):
            influence_sampled(f, SubsetMask.from_indices(6, [0, 1]), targets=[4], m=8, q=0.5, seed=0)

    def test_unbiased_at_even_bias(self):
        f = ideal_mbf(IdealSpec(5, 2, ((0, 1, 2, 3),)))
        exact = influence_exact(f)
        runs = np.stack([
            influence_sampled(f, SubsetMask.all_ones(5), m=400, q=0.5, seed=s).values
            for s in range(120)
        ])
        mean = runs.mean(axis=0)
        stderr = runs.std(axis=0, ddof=1) / np.sqrt(len(runs))
        assert np.all(np.abs(mean - exact.values) <= 3 * stderr + 1e-12)

    def test_parameter_validation(self):
        f = ideal_mbf(IdealSpec(5, 2, ((0, 1, 2, 3),)))
        scope = SubsetMask.all_ones(5)
        with pytest.raises(ValueError):
            influence_sampled(f, scope, m=0, q=0.5, seed=0)
        with pytest.raises(ValueError):
            influence_sampled(f, scope, m=8, q=1.0, seed=0)
        with pytest.raises(ValueError):
            influence_sampled(f, scope, m=8, q=0.5, seed=-1)


class TestInfluenceVector:
    def test_json_round_trip(self):
        f = ideal_mbf(IdealSpec(5, 2, ((0, 1, 2, 3),)))
        vec = influence_sampled(f, SubsetMask.all_ones(5), m=64, q=0.25, seed=3)
        back = InfluenceVector.from_json_dict(vec.to_json_dict())
        assert np.array_equal(back.values, vec.values, equal_nan=True)
        assert (back.m, back.q, back.seed) == (64, 0.25, (3,))
        assert back.scope == vec.scope

    def test_csv_output(self, tmp_path):
        vec = influence_exact(ideal_mbf(IdealSpec(5, 2, ((0, 1, 2, 3),))))
        path = tmp_path / "influence.csv"
        vec.to_csv(path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "index,value"
        assert len(lines) == 6
        assert float(lines[5].split(",")[1]) == pytest.approx(11 / 32)

    def test_value_range_enforced(self):
        with pytest.raises(ValueError):
            InfluenceVector(np.array([1.5, 0.0]), SubsetMask.all_ones(2))
        with pytest.raises(ValueError):
            InfluenceVector(np.array([-0.1, 0.0]), SubsetMask.all_ones(2))


class TestInfluenceMse:
    def test_identical_vectors(self):
        vec = influence_exact(ideal_mbf(IdealSpec(5, 2, ((0, 1, 2, 3),))))
        assert influence_mse(vec, vec) == 0.0

    def test_hand_arithmetic(self):
        scope = SubsetMask.all_ones(2)
        est = InfluenceVector(np.array([0.5, 0.5]), scope)
        ref = InfluenceVector(np.array([0.0, 0.0]), scope)
        assert influence_mse(est, ref) == pytest.approx(0.25)

    def test_targeted_estimate_against_full_exact(self):
        f = ideal_mbf(IdealSpec(6, 2, ((0, 1, 2),)))
        exact = influence_exact(f)
        est = influence_sampled(f, SubsetMask.all_ones(6), targets=[0, 5], m=64, q=0.5, seed=0)
        assert influence_mse(est, exact) >= 0.0

    def test_scope_mismatch_rejected(self):
        f = ideal_mbf(IdealSpec(6, 2, ((0, 1, 2),)))
        narrow = influence_sampled(f, SubsetMask.from_indices(6, [0, 1, 2]), m=32, q=0.5, seed=0)
        wide = influence_sampled(f, SubsetMask.all_ones(6), targets=[3], m=32, q=0.5, seed=0)
        with pytest.raises(ValueError):
            influence_mse(wide, narrow)


class TestSeparation:
    def test_hand_arithmetic(self):
        scope = SubsetMask.all_ones(4)
        vec = InfluenceVector(np.array([0.1, 0.2, 0.4, 0.5]), scope)
        labels = np.array([1, 1, 0, 0])
        assert separation(vec, labels) == pytest.approx(0.3)

    def test_all_equal_gives_zero(self):
        scope = SubsetMask.all_ones(3)
        vec = InfluenceVector(np.array([0.2, 0.2, 0.2]), scope)
        assert separation(vec, np.array([1, 0, 1])) == 0.0

    def test_frozen_ideal_value(self):
        vec = influence_exact(ideal_mbf(IdealSpec(5, 2, ((0, 1, 2, 3),))))
        labels = np.array([1, 1, 1, 1, 0])
        assert separation(vec, labels) == pytest.approx(8 / 32)

    def test_empty_class_rejected(self):
        scope = SubsetMask.all_ones(2)
        vec = InfluenceVector(np.array([0.1, 0.2]), scope)
        with pytest.raises(ValueError):
            separation(vec, np.array([1, 1]))
        with pytest.raises(ValueError):
            separation(vec, np.array([0, 0]))


# -- closed forms ------------------------------------------------------------


class TestTheorem1:
    def test_frozen_values(self):
        assert theorem1_influence(5, 2, 4, inlier=True) == Fraction(3, 32)
        assert theorem1_influence(5, 2, 4, inlier=False) == Fraction(11, 32)

    def test_full_structure_inlier_collapses_to_zero(self):
        assert theorem1_influence(6, 2, 6, inlier=True) == 0

    def test_full_structure_has_no_outliers(self):
        with pytest.raises(ValueError):
            theorem1_influence(6, 2, 6, inlier=False)

    def test_matches_enumeration_across_sweep(self):
        for n in range(3, 9):
            for p in (1, 2):
                for k in range(p + 1, n):
                    spec = IdealSpec(n, p, (tuple(range(k)),))
                    want = influence_by_enumeration(ideal_mbf(spec), n)
                    assert theorem1_influence(n, p, k, inlier=True) == want[0]
                    assert theorem1_influence(n, p, k, inlier=False) == want[k]

    def test_validation(self):
        with pytest.raises(ValueError):
            theorem1_influence(5, 2, 2, inlier=True)
        with pytest.raises(ValueError):
            theorem1_influence(5, 2, 6, inlier=True)


class TestTheorem2:
    def test_reduces_to_theorem1_for_single_structure(self):
        for n, p, k in [(5, 2, 4), (7, 1, 3), (9, 3, 6)]:
            spec = IdealSpec(n, p, (tuple(range(k)),))
            assert theorem2_influence(spec, "1") == theorem1_influence(n, p, k, inlier=True)
            assert theorem2_influence(spec, "0") == theorem1_influence(n, p, k, inlier=False)

    @pytest.mark.parametrize(
        "spec",
        [
            IdealSpec(8, 2, ((0, 1, 2, 3), (4, 5, 6, 7))),
            IdealSpec(8, 2, ((0, 1, 2, 3), (2, 3, 4, 5))),
            IdealSpec(10, 2, ((0, 1, 2, 3), (4, 5, 6, 7))),
            IdealSpec(9, 1, ((0, 1), (2, 3, 4), (5, 6, 7, 8))),
        ],
    )
    def test_matches_enumeration_per_class(self, spec):
        want = influence_by_enumeration(ideal_mbf(spec), spec.n)
        for i in range(spec.n):
            pattern = spec.membership(i)
            assert theorem2_influence(spec, pattern) == want[i]

    def test_empty_class_rejected(self):
        spec = IdealSpec(8, 2, ((0, 1, 2, 3), (4, 5, 6, 7)))
        with pytest.raises(ValueError):
            theorem2_influence(spec, "11")

    def test_dominating_membership_has_strictly_smaller_influence(self):
        spec = IdealSpec(10, 2, ((0, 1, 2, 3), (4, 5, 6, 7)))
        inside_first = theorem2_influence(spec, "10")
        inside_second = theorem2_influence(spec, "01")
        outside = theorem2_influence(spec, "00")
        assert inside_first < outside
        assert inside_second < outside


# -- upper zeros -------------------------------------------------------------


class TestUpperZeros:
    def test_figure_instance(self):
        f = ideal_mbf(IdealSpec(5, 2, ((0, 1, 2, 3),)))
        best = max_upper_zero_exhaustive(f, n=5)
        assert best == SubsetMask.from_string("11110")
        assert is_upper_zero(f, best)
        assert is_upper_zero(f, SubsetMask.from_string("10001"))
        assert not is_upper_zero(f, SubsetMask.from_string("11000"))
        assert not is_upper_zero(f, SubsetMask.from_string("11001"))

    def test_constant_zero_returns_all_ones(self):
        f = as_mbf(lambda bits: 0, 6)
        assert max_upper_zero_exhaustive(f, n=6) == SubsetMask.all_ones(6)
        assert is_upper_zero(f, SubsetMask.all_ones(6))

    def test_no_zero_anywhere_rejected(self):
        with pytest.raises(ValueError):
            max_upper_zero_exhaustive(as_mbf(lambda bits: 1, 4), n=4)

    def test_dimension_guard(self):
        with pytest.raises(ValueError):
            max_upper_zero_exhaustive(lambda bits: 0, n=21)

    def test_tie_breaks_to_smallest_encoding(self):
        f = ideal_mbf(IdealSpec(6, 1, ((0, 2), (1, 3))))
        assert max_upper_zero_exhaustive(f, n=6).bits == 0b0101

    @pytest.mark.parametrize(
        "spec",
        [
            IdealSpec(6, 2, ((0, 1, 2, 3), (2, 3, 4, 5))),
            IdealSpec(7, 1, ((1, 3), (0, 2, 4, 6))),
            IdealSpec(8, 2, ((5, 6, 7), (0, 1, 2, 3, 4))),
        ],
    )
    def test_matches_enumeration(self, spec):
        f = ideal_mbf(spec)
        best = max_upper_zero_exhaustive(f, n=spec.n)
        want_pop, want_bits = max_upper_zero_by_enumeration(f, spec.n)
        assert best.popcount == want_pop
        assert best.bits == want_bits
        assert best.bits in upper_zeros_by_enumeration(f, spec.n)

    def test_real_oracle_beats_planted_inliers(self):
        ds = generate_line2d(15, 0.25, seed=0)
        oracle = FeasibilityOracle(ds, Tolerance(0.1))
        best = max_upper_zero_exhaustive(oracle)
        assert best.popcount >= len(ds.inlier_indices())

    def test_is_upper_zero_on_real_oracle(self, axis_dataset, axis_tol):
        oracle = FeasibilityOracle(axis_dataset, axis_tol)
        zeros = upper_zeros_by_enumeration(oracle, 5)
        for bits in range(1 << 5):
            assert is_upper_zero(oracle, SubsetMask(5, bits)) == (bits in zeros)


@settings(max_examples=40, deadline=None)
@given(
    n=st.integers(min_value=3, max_value=9),
    p=st.integers(min_value=1, max_value=3),
    data=st.data(),
)
def test_influence_exact_equals_enumeration_on_random_ideals(n, p, data):
    if p >= n - 1:
        p = n - 2
    k = data.draw(st.integers(min_value=p + 1, max_value=n))
    members = data.draw(
        st.permutations(range(n)).map(lambda perm: tuple(sorted(perm[:k])))
    )
    spec = IdealSpec(n, p, (members,))
    f = ideal_mbf(spec)
    counts = influence_flip_counts(f, n)
    assert list(counts) == flip_pair_counts_by_enumeration(f, n)
