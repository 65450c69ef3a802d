import math
from fractions import Fraction

import numpy as np
import pandas as pd
import pytest
from scipy import stats

from config import REPLICATION_BLOCK
from core.exceptions import SamplerError
from core.graph_families import Graph, complete_bipartite, fan, generate, hypercube, two_hub
from core.margins import margin_bernoulli_half, margin_uniform01
from core.sampler import (SequenceSample, benchmark_bipartite_fast_path, block_rng, build_x_sequence, draw_labels,
                          edge_indicators, has_fast_path, representation_pmf, sample_sequence, simulate,
                          simulate_to_frame, standardize_xi, xi_by_direction, xi_fast_bipartite, xi_fast_fan,
                          xi_fast_two_hub)
from core.stats_tests import exact_xi_pmf


class TestLabels:
    def test_uniform_frequencies(self, rng):
        labels = draw_labels(Graph(10 ** 6, np.empty((0, 2))), 2, rng)
        share = np.mean(labels == 1)
        assert 0.498 <= share <= 0.502
        assert set(np.unique(labels)) == {1, 2}

    def test_single_label_rejected(self, rng, k22):
        with pytest.raises(SamplerError):
            draw_labels(k22, 1, rng)

    def test_fixed_seed_repeats(self, k33):
        assert np.array_equal(draw_labels(k33, 3, block_rng(7, 0)), draw_labels(k33, 3, block_rng(7, 0)))
        assert not np.array_equal(draw_labels(hypercube(6), 3, block_rng(7, 0)),
                                  draw_labels(hypercube(6), 3, block_rng(7, 1)))


class TestIndicators:
    def test_all_labels_equal(self, k22):
        d, xi_count, xi_std = edge_indicators(k22, np.array([1, 1, 1, 1]), 2)
        assert d.tolist() == [1, 1, 1, 1]
        assert xi_count == 4
        assert xi_std == pytest.approx(2.0)

    def test_alternating_labels(self, k22):
        d, xi_count, xi_std = edge_indicators(k22, np.array([1, 2, 1, 2]), 2)
        assert d.tolist() == [1, 0, 0, 1]
        assert xi_count == 2
        assert xi_std == 0.0

    def test_label_length_checked(self, k22):
        with pytest.raises(SamplerError):
            edge_indicators(k22, np.array([1, 2, 1]), 2)

    def test_standardization(self):
        assert standardize_xi(15.5, 31, 2) == pytest.approx((15.5 - 15.5) / math.sqrt(31 / 4))
        assert standardize_xi(10, 30, 3) == pytest.approx(0.0)

    def test_direction_sums(self, rng):
        g = hypercube(5)
        labels = draw_labels(g, 2, rng)
        _, xi_count, _ = edge_indicators(g, labels, 2)
        per_direction = xi_by_direction(g, labels)
        assert per_direction.shape == (5,)
        assert per_direction.sum() == 2 * xi_count - g.edge_count


class TestRepresentations:
    @pytest.mark.parametrize(
        ("family", "m"),
        (("bipartite", 2), ("two_hub", 1), ("two_hub", 2), ("two_hub", 3), ("two_hub", 4),
         ("fan", 1), ("fan", 2), ("fan", 3)),
    )
    def test_matches_exhaustive_enumeration(self, family, m):
        assert representation_pmf(family, m, 2) == exact_xi_pmf(generate(family, m), 2)

    def test_bipartite_three_labels(self):
        assert representation_pmf("bipartite", 2, 3) == exact_xi_pmf(complete_bipartite(2), 3)

    def test_two_hub_three_middle_vertices(self):
        assert representation_pmf("two_hub", 3) == {
            0: Fraction(1, 16), 2: Fraction(3, 16), 3: Fraction(1, 2), 4: Fraction(3, 16), 6: Fraction(1, 16)}

    def test_fan_exact_moments(self):
        pmf = representation_pmf("fan", 3)
        mean = sum(k * p for k, p in pmf.items())
        variance = sum((k - mean) ** 2 * p for k, p in pmf.items())
        assert mean == Fraction(3 * 3, 2) + Fraction(1, 2)
        assert variance == Fraction(3 * 3, 4) + Fraction(1, 4)

    def test_no_representation(self):
        with pytest.raises(SamplerError):
            representation_pmf("hypercube", 3)
        with pytest.raises(SamplerError):
            representation_pmf("two_hub", 3, ell=3)

    def test_fast_path_registry(self):
        assert has_fast_path("bipartite", 5)
        assert has_fast_path("fan", 2) and not has_fast_path("fan", 3)
        assert not has_fast_path("cage", 2)


class TestFastPaths:
    def test_bipartite_mean(self, rng):
        m, ell = 20, 3
        xi_count, _ = xi_fast_bipartite(m, ell, rng, 100000)
        se = xi_count.std(ddof=1) / math.sqrt(xi_count.size)
        assert abs(xi_count.mean() - m * m / ell) < 4 * se

    def test_bipartite_range(self, rng):
        xi_count, _ = xi_fast_bipartite(6, 2, rng, 20000)
        assert xi_count.min() >= 0 and xi_count.max() == 36

    def test_two_hub_centered(self, rng):
        _, xi_std = xi_fast_two_hub(50, rng, 100000)
        assert abs(xi_std.mean()) < 4 * xi_std.std(ddof=1) / math.sqrt(xi_std.size)

    def test_two_hub_odd_values_only_when_hubs_differ(self, rng):
        xi_count, _ = xi_fast_two_hub(5, rng, 10000)
        assert set(xi_count[xi_count % 2 == 1].tolist()) == {5}

    def test_fan_mean(self, rng):
        xi_count, _ = xi_fast_fan(10, rng, 100000)
        se = xi_count.std(ddof=1) / math.sqrt(xi_count.size)
        assert abs(xi_count.mean() - 15.5) < 4 * se

    def test_fan_smallest_matching_value(self, rng):
        xi_count, _ = xi_fast_fan(4, rng, 20000)
        assert xi_count.min() == 0
        assert 1 + 4 in set(xi_count.tolist())


class TestValueLayer:
    def test_bernoulli_margin_reproduces_xi(self, rng):
        spec = margin_bernoulli_half()
        for _ in range(20):
            sample = sample_sequence(fan(6), 2, rng, spec)
            assert np.array_equal(sample.x_values, sample.d_values.astype(float))
            assert sample.s_n == pytest.approx(sample.xi_std, abs=1e-12)

    def test_all_zero_indicators_draw_the_lower_part(self, rng):
        spec = margin_uniform01(2)
        sample = SequenceSample(np.ones(4), np.zeros(50, dtype=np.uint8), 0, 0.0, 2)
        x_values, s_n = build_x_sequence(sample, spec, rng)
        assert x_values.max() <= 0.5
        assert s_n < 0

    def test_ell_mismatch(self, rng):
        sample = SequenceSample(np.ones(4), np.zeros(4, dtype=np.uint8), 0, 0.0, 3)
        with pytest.raises(SamplerError):
            build_x_sequence(sample, margin_uniform01(2), rng)

    def test_pooled_values_follow_margin(self, rng):
        spec = margin_uniform01(2)
        g = complete_bipartite(100)
        pooled = np.concatenate([sample_sequence(g, 2, rng, spec).x_values for _ in range(10)])
        assert pooled.size == 100000
        assert stats.kstest(pooled, spec.cdf_F).statistic < 0.01

    def test_no_margin_leaves_values_unset(self, rng, k22):
        sample = sample_sequence(k22, 2, rng)
        assert sample.x_values is None and sample.s_n is None
        assert sample.n == 4


class TestSimulate:
    def test_rejects_zero_replications(self):
        with pytest.raises(SamplerError):
            simulate(("bipartite", 3), None, 0, seed=1, ell=2)

    def test_rejects_missing_fast_path(self):
        with pytest.raises(SamplerError, match="No fast path"):
            simulate(("hypercube", 3), None, 10, seed=1, fast_path=True, ell=2)
        with pytest.raises(SamplerError, match="requires ell=2"):
            simulate(("two_hub", 3), None, 10, seed=1, fast_path=True, ell=3)

    def test_rejects_ell_conflict(self):
        with pytest.raises(SamplerError):
            simulate(("fan", 3), margin_uniform01(2), 10, seed=1, ell=3)

    def test_frame_layout(self):
        frame = simulate_to_frame(("two_hub", 6), None, 50, seed=3, ell=2)
        assert list(frame.columns) == ["rep_index", "xi_count", "xi_std", "s_n"]
        assert frame["rep_index"].tolist() == list(range(50))
        assert frame["s_n"].isna().all()

    @pytest.mark.parametrize(
        ("family", "param", "fast", "margin"),
        (
            ("bipartite", 40, True, None),
            ("two_hub", 30, True, margin_uniform01(2)),
            ("fan", 8, False, margin_uniform01(2)),
        ),
    )
    def test_independent_of_worker_count(self, family, param, fast, margin):
        reps = REPLICATION_BLOCK + 500 if fast else 1200
        single = simulate_to_frame((family, param), margin, reps, 11, fast, 2, workers=1)
        pooled = simulate_to_frame((family, param), margin, reps, 11, fast, 2, workers=8)
        pd.testing.assert_frame_equal(single, pooled)

    def test_blocks_arrive_in_order(self):
        blocks = list(simulate(("bipartite", 5), None, 2 * REPLICATION_BLOCK + 3, 5, True, 2, workers=4))
        assert [b.start for b in blocks] == [0, REPLICATION_BLOCK, 2 * REPLICATION_BLOCK]
        assert len(blocks[-1]) == 3

    def test_graph_argument(self):
        g = two_hub(4)
        frame = simulate_to_frame(g, None, 20, seed=2, ell=2)
        assert frame["xi_count"].between(0, g.edge_count).all()

    def test_fast_and_edge_paths_agree_small(self):
        fast = simulate_to_frame(("bipartite", 10), None, 4000, 21, True, 2)
        slow = simulate_to_frame(("bipartite", 10), None, 4000, 22, False, 2)
        assert stats.ks_2samp(fast["xi_std"], slow["xi_std"]).pvalue > 0.001

    @pytest.mark.slow
    @pytest.mark.parametrize("family", ("bipartite", "two_hub", "fan"))
    @pytest.mark.parametrize("m", (10, 100))
    def test_fast_and_edge_paths_agree(self, family, m):
        reps = 10000
        fast = simulate_to_frame((family, m), None, reps, 31, True, 2)
        slow = simulate_to_frame((family, m), None, reps, 32, False, 2)
        assert stats.ks_2samp(fast["xi_std"], slow["xi_std"]).pvalue > 0.001


def test_benchmark_reports_a_speedup():
    assert benchmark_bipartite_fast_path(m=60, replications=3) > 0
