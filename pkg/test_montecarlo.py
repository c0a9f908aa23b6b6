"""montecarlo: 추정 요약, 검증 판정, 배치 오라클 테스트."""

import math
from fractions import Fraction

import pytest
from scipy import stats

from escapeEngine.analytics import expected_brfs_tree, expected_rrw_tree
from escapeEngine.errors import InvalidInput
from escapeEngine.montecarlo import (
    EstimateSummary,
    coverage_rate,
    enumerate_brfs_placements,
    equidistribution_counts,
    estimate_brfs,
    estimate_rrw,
    run_stats_violation,
    validate,
    validate_against,
)
from escapeEngine.search import RrwConfig, run_rrw
from escapeEngine.search.brfs import TIE_RANDOM
from escapeEngine.seeding import mix
from escapeEngine.task_model import TreeTaskSpec, make_tree_task


def test_summary_from_sums():
    # 표본 {2, 3, 3, 4}
    summary = EstimateSummary.from_sums(4, 12, 38, base_seed=0, confidence=0.99)
    assert summary.mean == 3
    assert summary.variance == Fraction(2, 3)
    assert summary.ci_low < 3 < summary.ci_high
    assert summary.covers(3)
    assert not summary.covers(10)


def test_summary_rejects_too_few_trials():
    with pytest.raises(InvalidInput):
        EstimateSummary.from_sums(1, 5, 25, base_seed=0)


def test_saturated_brfs_is_exact():
    summary = estimate_brfs(4, 6, 4096, trials=50, base_seed=1)
    assert summary.mean == 1366
    assert summary.variance == 0
    assert summary.std_error == 0
    assert summary.accounting_violations == 0


def test_saturated_rrw_is_exact():
    summary = estimate_rrw(4, 6, 4096, 1, trials=50, base_seed=1)
    assert summary.mean == 7
    assert summary.variance == 0
    report = validate("rrw", 4, 6, 4096, 100, 1, depth_error=1)
    assert report.passed
    assert report.z_score == 0


def test_estimates_are_reproducible_across_workers():
    a = estimate_rrw(2, 3, 1, 1, trials=3000, base_seed=9, workers=1)
    b = estimate_rrw(2, 3, 1, 1, trials=3000, base_seed=9, workers=4)
    c = estimate_rrw(2, 3, 1, 1, trials=3000, base_seed=9)
    assert a == b == c

    d = estimate_brfs(3, 3, 2, trials=2500, base_seed=5, tie=TIE_RANDOM, workers=3)
    e = estimate_brfs(3, 3, 2, trials=2500, base_seed=5, tie=TIE_RANDOM, workers=1)
    assert d == e


def test_two_goal_tree_brfs_validates():
    report = validate("brfs", 2, 1, 1, 20000, 7)
    assert report.analytic.value == Fraction(5, 2)
    assert report.passed
    assert abs(report.estimate.variance - Fraction(1, 4)) < Fraction(1, 100)


def test_small_rrw_validates():
    report = validate("rrw", 2, 2, 3, 20000, 3, depth_error=1)
    assert report.analytic.value == Fraction(11, 3)
    assert report.passed
    assert report.estimate.accounting_violations == 0


def test_random_ties_match_lexicographic_expectation():
    report = validate("brfs", 3, 3, 2, 20000, 21, tie=TIE_RANDOM)
    assert report.passed


def test_wrong_analytic_value_fails():
    estimate = estimate_brfs(2, 2, 1, trials=4000, base_seed=2)
    offset = Fraction(estimate.std_error) * 10
    report = validate_against(estimate.mean + offset, estimate, formula="cor1")
    assert not report.passed
    assert report.z_score < -9
    assert report.analytic.formula == "cor1"


def test_raw_analytic_value_needs_formula_tag():
    estimate = estimate_rrw(2, 1, 1, 1, trials=500, base_seed=4)
    with pytest.raises(InvalidInput):
        validate_against(3, estimate)
    report = validate_against(3, estimate, formula="cor2")
    assert report.analytic.formula == "cor2"
    with pytest.raises(InvalidInput):
        validate_against(expected_rrw_tree(2, 1, 1, 1), estimate, formula="thm1")


def test_validate_requires_error_for_rrw():
    with pytest.raises(InvalidInput):
        validate("rrw", 2, 2, 1, 10, 0)
    with pytest.raises(InvalidInput):
        validate("dfs", 2, 2, 1, 10, 0)


def test_trials_precondition():
    with pytest.raises(InvalidInput):
        estimate_brfs(2, 2, 1, trials=1, base_seed=0)


def test_rrw_larger_depth_error_has_clean_accounting():
    # 재시작한 워크는 깊이 t = e*d* = 4까지 검사
    summary = estimate_rrw(2, 2, 1, 2, trials=2000, base_seed=3)
    assert summary.accounting_violations == 0
    assert summary.budget_failures == 0
    report = validate("rrw", 2, 2, 1, 2000, 3, depth_error=2)
    assert report.analytic.value == 15
    assert report.passed


def test_run_stats_level_limit():
    task = make_tree_task(TreeTaskSpec(2, 2, 1, placement_seed=1))
    runs = [run_rrw(task, RrwConfig(Fraction(2), walk_seed=s)) for s in range(30)]
    restarted = [r for r in runs if r.walks > 1]
    assert restarted
    for run in restarted:
        assert run.max_tested_level == 4
        assert not run_stats_violation(run, 4)
        assert run_stats_violation(run, 2)


def test_rrw_budget_failures_are_reported():
    summary = estimate_rrw(4, 4, 1, 1, trials=200, base_seed=4, max_walks=200)
    assert summary.budget_failures > 0
    assert summary.trials + summary.budget_failures == 200


@pytest.mark.parametrize("b, d, g", [(2, 1, 1), (2, 3, 2), (3, 2, 5), (4, 2, 16), (2, 4, 8)])
def test_oracle_exhaustive_matches_formula(b, d, g):
    oracle = enumerate_brfs_placements(b, d, g)
    assert oracle.exhaustive
    assert oracle.placements == math.comb(b ** d, g)
    assert oracle.mean == expected_brfs_tree(b, d, g).value


def test_oracle_engine_mode_agrees():
    for b, d, g in [(2, 3, 2), (3, 2, 3)]:
        formula = enumerate_brfs_placements(b, d, g)
        engine = enumerate_brfs_placements(b, d, g, use_engine=True)
        assert formula.mean == engine.mean


def test_oracle_subsample():
    oracle = enumerate_brfs_placements(4, 3, 32, cap=5000, seed=3)
    assert not oracle.exhaustive
    assert oracle.placements == 5000
    expected = expected_brfs_tree(4, 3, 32).value
    assert abs(oracle.mean - expected) <= 4 * Fraction(oracle.std_error)


def test_stream_equidistribution():
    for i in range(5):
        counts = equidistribution_counts(4, 40000, mix(123, i))
        assert stats.chisquare(counts).pvalue > 1e-4


@pytest.mark.slow
def test_oracle_acceptance_grid():
    for b in range(2, 9):
        for d in range(1, 10):
            size = b ** d
            if size > 512:
                break
            for g in sorted({1, 2, math.ceil(size / 2), size} & set(range(1, size + 1))):
                oracle = enumerate_brfs_placements(b, d, g, seed=17)
                assert oracle.exhaustive == (math.comb(size, g) <= 10 ** 6)
                expected = expected_brfs_tree(b, d, g).value
                if oracle.exhaustive:
                    assert oracle.mean == expected
                else:
                    assert abs(oracle.mean - expected) <= 4 * Fraction(oracle.std_error)


@pytest.mark.slow
def test_confidence_interval_coverage():
    rate = coverage_rate("rrw", 2, 2, 3, trials=2000, repetitions=100, base_seed=77,
                         depth_error=1, confidence=0.99)
    assert rate >= Fraction(95, 100)


@pytest.mark.slow
def test_brfs_reference_points():
    for g in (1, 16, 256):
        report = validate("brfs", 4, 6, g, 100000, 1000 + g)
        assert report.passed
        assert report.estimate.accounting_violations == 0
    assert expected_rrw_tree(4, 6, 16, 1).value == 1537
