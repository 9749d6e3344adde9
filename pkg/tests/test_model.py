"""Designs, defective sets, outcomes, and per-item counts."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from grouptest import (
    DefectiveSet,
    DesignParams,
    OutcomeVector,
    TestDesign,
    compute_item_stats,
    design_from_json,
    design_to_json,
    distinct_coupon_pmf,
    expected_distinct,
    gen_bernoulli,
    gen_exact_constant,
    gen_near_constant,
    params_from_nu,
    regenerate_design,
    run_tests,
    sample_defective_set,
)

LN2 = math.log(2)


class TestSampleDefectiveSet:
    def test_k_zero_is_empty(self):
        for seed in (0, 1, 99):
            assert sample_defective_set(5, 0, seed).items == ()

    def test_k_equals_n_is_everything(self):
        for seed in (0, 7):
            assert sample_defective_set(3, 3, seed).items == (0, 1, 2)

    def test_rejects_k_above_n(self):
        with pytest.raises(ValueError):
            sample_defective_set(4, 5, 0)

    def test_deterministic(self):
        assert sample_defective_set(100, 10, 42) == sample_defective_set(100, 10, 42)

    def test_singleton_uniformity(self):
        """N=4, K=1 over 10^5 seeds: each singleton frequency 0.25 +/- 0.01."""
        counts = [0, 0, 0, 0]
        n_draws = 100_000
        for seed in range(n_draws):
            counts[sample_defective_set(4, 1, seed).items[0]] += 1
        for c in counts:
            assert abs(c / n_draws - 0.25) < 0.01

    def test_pair_uniformity(self):
        """All C(5,2)=10 pairs equally likely across 50k seeds."""
        from collections import Counter

        freq = Counter(sample_defective_set(5, 2, seed).items for seed in range(50_000))
        assert len(freq) == 10
        for pair, c in freq.items():
            assert abs(c / 50_000 - 0.1) < 0.01, pair


class TestGenBernoulli:
    def test_near_one_probability_fills_column(self):
        d = gen_bernoulli(1, 10, 1 - 1e-12, seed=3)
        assert d.columns[0] == tuple(range(10))

    def test_cell_density(self):
        """N=T=100, p=0.5: mean density 0.5 +/- 0.02 over the 10^4 cells."""
        d = gen_bernoulli(100, 100, 0.5, seed=11)
        density = sum(len(c) for c in d.columns) / 10_000
        assert abs(density - 0.5) < 0.02

    def test_determinism(self):
        assert gen_bernoulli(2, 3, 0.5, seed=9) == gen_bernoulli(2, 3, 0.5, seed=9)

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5])
    def test_rejects_degenerate_p(self, p):
        with pytest.raises(ValueError):
            gen_bernoulli(3, 3, p, seed=0)


class TestGenNearConstant:
    def test_single_test_collapses(self):
        d = gen_near_constant(3, 1, 5, seed=4)
        assert d.columns == ((0,), (0,), (0,))

    def test_weight_bounds(self):
        d = gen_near_constant(500, 20, 5, seed=2)
        assert all(1 <= len(c) <= 5 for c in d.columns)

    def test_full_weight_fraction_matches_birthday_product(self):
        """P(all 5 draws distinct among 20) = 20*19*18*17*16 / 20^5 = 0.5814."""
        d = gen_near_constant(10_000, 20, 5, seed=8)
        frac = sum(1 for c in d.columns if len(c) == 5) / 10_000
        want = 20 * 19 * 18 * 17 * 16 / 20**5
        assert abs(frac - want) < 0.015

    def test_mean_distinct_weight(self):
        """E[distinct] = 100 (1 - (1 - 1/100)^3) = 2.9701."""
        d = gen_near_constant(10_000, 100, 3, seed=13)
        mean = sum(len(c) for c in d.columns) / 10_000
        assert abs(mean - 2.9701) < 0.01

    def test_weight_pmf_total_variation(self):
        """Empirical column-weight pmf vs the exact distinct-coupon law, TV <= 0.01."""
        n_cols, n_tests, draws = 100_000, 12, 6
        d = gen_near_constant(n_cols, n_tests, draws, seed=21)
        counts = np.bincount([len(c) for c in d.columns], minlength=draws + 1)
        probs = np.array(
            [distinct_coupon_pmf(draws, n_tests, w) for w in range(draws + 1)]
        )
        tv = 0.5 * float(np.abs(counts / n_cols - probs).sum())
        assert tv <= 0.01, tv

    def test_rejects_zero_draws_or_tests(self):
        with pytest.raises(ValueError):
            gen_near_constant(3, 5, 0, seed=0)
        with pytest.raises(ValueError):
            gen_near_constant(3, 0, 2, seed=0)


class TestGenExactConstant:
    def test_full_column_when_draws_equal_tests(self):
        d = gen_exact_constant(5, 4, 4, seed=5)
        assert all(c == (0, 1, 2, 3) for c in d.columns)

    def test_every_column_weighs_exactly_l(self):
        d = gen_exact_constant(200, 9, 4, seed=6)
        assert all(len(c) == 4 for c in d.columns)

    def test_pair_uniformity_chi_square(self):
        """T=6, L=2: each of the C(6,2)=15 pairs has frequency 1/15 +/- 0.01."""
        from collections import Counter

        d = gen_exact_constant(10_000, 6, 2, seed=14)
        freq = Counter(d.columns)
        assert len(freq) == 15
        for pair, c in freq.items():
            assert abs(c / 10_000 - 1 / 15) < 0.01, pair

    def test_rejects_draws_above_tests(self):
        with pytest.raises(ValueError):
            gen_exact_constant(3, 4, 5, seed=0)


class TestParamsFromNu:
    def test_ln2_example(self):
        params = params_from_nu(LN2, 100, 10)
        assert params.draws == 7
        assert abs(params.draws_exact - 6.931471805599453) < 1e-12

    def test_nu_one_t_equals_k(self):
        assert params_from_nu(1.0, 10, 10).draws == 1

    def test_p_value(self):
        assert abs(params_from_nu(LN2, 100, 10).p - 0.06931471805599453) < 1e-15

    def test_p_clamped_below_one(self):
        assert params_from_nu(50.0, 10, 2).p == 1 - 1e-12

    def test_rejects_bad_args(self):
        with pytest.raises(ValueError):
            params_from_nu(0.0, 10, 2)
        with pytest.raises(ValueError):
            params_from_nu(1.0, 10, 0)


def _design_from_columns(n_tests, columns):
    return TestDesign(
        "near_constant",
        len(columns),
        n_tests,
        DesignParams(draws=max((len(c) for c in columns), default=1) or 1),
        0,
        tuple(tuple(c) for c in columns),
    )


class TestRunTests:
    def test_no_defectives_all_negative(self):
        d = _design_from_columns(3, [[0], [1, 2], [2]])
        y = run_tests(d, DefectiveSet(()))
        assert y.bits == (False, False, False)

    def test_hand_example(self):
        # item0={0}, item1={0,1}; truth={1} -> y=(1,1); truth={0} -> y=(1,0)
        d = _design_from_columns(2, [[0], [0, 1]])
        assert run_tests(d, DefectiveSet((1,))).bits == (True, True)
        assert run_tests(d, DefectiveSet((0,))).bits == (True, False)

    def test_rejects_out_of_range(self):
        d = _design_from_columns(2, [[0], [1]])
        with pytest.raises(ValueError):
            run_tests(d, DefectiveSet((5,)))

    @given(st.data())
    def test_monotone_in_truth(self, data):
        """Adding a defective can only flip tests negative -> positive."""
        n = data.draw(st.integers(2, 10))
        t = data.draw(st.integers(1, 8))
        seed = data.draw(st.integers(0, 2**32))
        d = gen_near_constant(n, t, 3, seed=seed)
        items = sorted(data.draw(st.sets(st.integers(0, n - 1), min_size=1, max_size=n)))
        smaller = DefectiveSet(tuple(items[:-1]))
        larger = DefectiveSet(tuple(items))
        y_small = run_tests(d, smaller)
        y_large = run_tests(d, larger)
        assert all(not a or b for a, b in zip(y_small.bits, y_large.bits))


class TestComputeItemStats:
    def test_disjoint_singletons(self):
        # item0={0}, item1={1}, truth={0,1}: M=1 each, W=2, G=0, L=1 each
        d = _design_from_columns(2, [[0], [1]])
        truth = DefectiveSet((0, 1))
        st_ = compute_item_stats(d, truth, run_tests(d, truth))
        assert st_.covered_tests == 2
        assert st_.solo_defective_tests == (1, 1)
        assert st_.masked_nondefectives == 0
        assert st_.solo_pd_tests == (1, 1)

    def test_shared_single_test(self):
        # both defectives share the only test: no solo tests
        d = _design_from_columns(1, [[0], [0]])
        truth = DefectiveSet((0, 1))
        st_ = compute_item_stats(d, truth, run_tests(d, truth))
        assert st_.solo_defective_tests == (0, 0)

    def test_empty_truth_counts_empty_columns(self):
        d = TestDesign(
            "bernoulli", 4, 3, DesignParams(p=0.5), 0, ((0,), (), (1,), ())
        )
        truth = DefectiveSet(())
        st_ = compute_item_stats(d, truth, run_tests(d, truth))
        assert st_.masked_nondefectives == 2
        assert st_.pd_set == (1, 3)

    def test_rejects_inconsistent_outcome(self):
        d = _design_from_columns(2, [[0], [1]])
        with pytest.raises(ValueError):
            compute_item_stats(d, DefectiveSet((0,)), OutcomeVector((True, True)))

    @given(st.integers(0, 2**32), st.integers(2, 25), st.integers(1, 12), st.integers(0, 5))
    def test_identities_on_fuzzed_instances(self, seed, n, t, k):
        k = min(k, n)
        d = gen_near_constant(n, t, 4, seed=seed)
        truth = sample_defective_set(n, k, seed)
        stats = compute_item_stats(d, truth, run_tests(d, truth))
        for w_i, m_i, l_i in zip(
            stats.covered_without, stats.solo_defective_tests, stats.solo_pd_tests
        ):
            assert w_i + m_i == stats.covered_tests
            assert 0 <= l_i <= m_i
        assert 0 <= stats.masked_nondefectives <= n - k


class TestSerialization:
    @pytest.mark.parametrize(
        "factory",
        [
            lambda: gen_bernoulli(7, 9, 0.25, seed=1, nu=0.5),
            lambda: gen_near_constant(7, 9, 3, seed=2, nu=LN2),
            lambda: gen_exact_constant(7, 9, 3, seed=3),
        ],
    )
    def test_json_round_trip(self, factory):
        d = factory()
        assert design_from_json(design_to_json(d)) == d

    @pytest.mark.parametrize(
        "factory",
        [
            lambda: gen_bernoulli(20, 15, 0.3, seed=5),
            lambda: gen_near_constant(20, 15, 4, seed=5),
            lambda: gen_exact_constant(20, 15, 4, seed=5),
        ],
    )
    def test_regeneration_from_metadata(self, factory):
        d = factory()
        assert regenerate_design(d) == d

    def test_columns_validated_on_load(self):
        with pytest.raises(ValueError):
            design_from_json(
                '{"kind": "near_constant", "N": 1, "T": 2,'
                ' "params": {"L": 1, "nu": null}, "seed": 0, "columns": [[3]]}'
            )


def test_mean_distinct_matches_closed_form_expectation():
    n_draws, n_tests = 3, 100
    assert abs(expected_distinct(n_draws, n_tests) - 2.9701) < 1e-10
