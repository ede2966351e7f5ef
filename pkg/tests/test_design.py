"""Tests for profile generation, cell assignment, and campaign scheduling."""

import numpy as np
import pandas as pd
import pytest
from scipy import stats

from vcaudit.catalog import default_catalog
from vcaudit.design import (
    DesignError,
    approx_age,
    assign_cells,
    build_email_campaign,
    check_schedule,
    generate_profile,
    generate_session,
    generate_survey_design,
    make_investor_pool,
    schedule_campaign,
)
from vcaudit.names import NameSampler, synthetic_name_pool

CATALOG = default_catalog()
SAMPLER = NameSampler.from_pool(synthetic_name_pool())


def investor_frame(n, funds=None):
    funds = funds if funds is not None else [f"f{i}" for i in range(n)]
    return pd.DataFrame(
        {"investor_id": [f"i{i}" for i in range(n)], "fund_id": funds}
    )


class TestApproxAge:
    def test_examples(self):
        assert approx_age(2005) == 38
        assert approx_age(2019) == 24
        assert approx_age(1980) == 63

    def test_fresh_graduate(self):
        assert approx_age(2020, benchmark_year=2020) == 23

    def test_future_year_rejected(self):
        with pytest.raises(DesignError):
            approx_age(2021, benchmark_year=2020)


class TestGenerateProfile:
    def test_age_matches_formula(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            p = generate_profile(rng, CATALOG, order_index=1, sampler=SAMPLER)
            assert p.age == 2020 - p.graduation_year + 23

    def test_second_half_definition(self):
        rng = np.random.default_rng(1)
        p9 = generate_profile(rng, CATALOG, order_index=9, sampler=SAMPLER)
        assert p9.second_half
        p8 = generate_profile(rng, CATALOG, order_index=8, sampler=SAMPLER)
        assert not p8.second_half

    def test_order_index_bounds(self):
        rng = np.random.default_rng(2)
        with pytest.raises(DesignError):
            generate_profile(rng, CATALOG, order_index=0, sampler=SAMPLER)
        with pytest.raises(DesignError):
            generate_profile(rng, CATALOG, order_index=17, sampler=SAMPLER)

    def test_cofounders_share_gender_and_race(self):
        rng = np.random.default_rng(3)
        pairs = 0
        for _ in range(200):
            used = set()
            p = generate_profile(rng, CATALOG, 1, sampler=SAMPLER, used_names=used)
            if len(p.founders) == 2:
                pairs += 1
                drawn = {name for name in p.founders}
                assert len(drawn) == 2  # distinct people
        assert pairs > 40  # both team sizes occur

    def test_traction_fields_consistent(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            p = generate_profile(rng, CATALOG, 1, sampler=SAMPLER)
            if p.traction_positive:
                assert 5_000 <= p.monthly_revenue <= 80_000
                assert 0.05 <= p.growth_rate <= 0.60
            else:
                assert p.monthly_revenue is None and p.growth_rate is None

    def test_single_founder_share_binomial_band(self):
        rng = np.random.default_rng(5)
        n = 10_000
        singles = sum(
            len(generate_profile(rng, CATALOG, 1, sampler=SAMPLER).founders) == 1
            for _ in range(n)
        )
        # weight 8/16 -> 3 sigma band for the share
        band = 3 * np.sqrt(0.25 / n)
        assert abs(singles / n - 0.5) < band

    def test_marginals_chi_square(self):
        rng = np.random.default_rng(6)
        n = 10_000
        draws = [generate_profile(rng, CATALOG, 1, sampler=SAMPLER) for _ in range(n)]
        frame = pd.DataFrame([p.to_row() for p in draws])
        checks = {
            "mission": CATALOG.mission,
            "employees_bucket": CATALOG.employees_bucket,
            "location": CATALOG.location,
            "n_existing_investors": CATALOG.n_existing_investors,
        }
        for column, spec in checks.items():
            observed = frame[column].value_counts()
            obs = np.array([observed.get(level, 0) for level in spec.levels])
            expected = np.array(spec.weights) * n
            _, p_value = stats.chisquare(obs, expected)
            assert p_value > 0.001, column


class TestGenerateSession:
    def test_sixteen_profiles_half_flagged(self):
        rng = np.random.default_rng(7)
        session = generate_session(rng, CATALOG, 16, sampler=SAMPLER)
        assert len(session) == 16
        assert sum(p.second_half for p in session) == 8
        assert [p.order_index for p in session] == list(range(1, 17))

    def test_thirty_two_profile_variant(self):
        rng = np.random.default_rng(8)
        session = generate_session(rng, CATALOG, 32, sampler=SAMPLER)
        assert len(session) == 32
        assert sum(p.second_half for p in session) == 16

    def test_invalid_lengths(self):
        rng = np.random.default_rng(9)
        with pytest.raises(DesignError):
            generate_session(rng, CATALOG, 0, sampler=SAMPLER)
        with pytest.raises(DesignError):
            generate_session(rng, CATALOG, 15, sampler=SAMPLER)

    def test_deterministic_under_seed(self):
        s1 = generate_session(np.random.default_rng(10), CATALOG, 16, sampler=SAMPLER)
        s2 = generate_session(np.random.default_rng(10), CATALOG, 16, sampler=SAMPLER)
        assert [p.to_row() for p in s1] == [p.to_row() for p in s2]

    def test_survey_design_table(self):
        rng = np.random.default_rng(11)
        frame = generate_survey_design(rng, ["a", "b"], CATALOG, n_profiles=4, sampler=SAMPLER)
        assert len(frame) == 8
        assert set(frame["investor_id"]) == {"a", "b"}


class TestAssignCells:
    def test_exact_balance(self):
        rng = np.random.default_rng(12)
        treatments = assign_cells(rng, investor_frame(1600), "idea", sampler=SAMPLER)
        counts = pd.Series([t.cell_index for t in treatments]).value_counts()
        assert len(treatments) == 1600
        assert set(counts) == {100}

    def test_same_fund_at_most_once(self):
        funds = [f"f{i % 20}" for i in range(40)]  # 2 investors per fund
        rng = np.random.default_rng(13)
        treatments = assign_cells(rng, investor_frame(40, funds), "idea", sampler=SAMPLER)
        assert len(treatments) == 20
        assert len({t.fund_id for t in treatments}) == 20

    def test_pigeonhole_remainder(self):
        rng = np.random.default_rng(14)
        treatments = assign_cells(rng, investor_frame(17), "idea", sampler=SAMPLER)
        counts = pd.Series([t.cell_index for t in treatments]).value_counts()
        counts = counts.reindex(range(16), fill_value=0)
        assert sorted(counts) == [1] * 15 + [2]

    def test_too_few_funds(self):
        with pytest.raises(DesignError, match="insufficient funds"):
            assign_cells(
                np.random.default_rng(15), investor_frame(15), "idea", sampler=SAMPLER
            )

    def test_count_vector_invariant_to_input_order(self):
        base = investor_frame(37)
        shuffled = base.sample(frac=1.0, random_state=99).reset_index(drop=True)

        def counts(frame, seed):
            rng = np.random.default_rng(seed)
            ts = assign_cells(rng, frame, "idea", sampler=SAMPLER)
            return (
                pd.Series([t.cell_index for t in ts])
                .value_counts()
                .reindex(range(16), fill_value=0)
                .tolist()
            )

        assert counts(base, 21) == counts(shuffled, 21)

    def test_sender_matches_cell(self):
        rng = np.random.default_rng(16)
        treatments = assign_cells(rng, investor_frame(64), "idea", sampler=SAMPLER)
        by_cell = {}
        for t in treatments:
            by_cell.setdefault((t.female, t.asian), set()).add(
                (t.sender_first, t.sender_last)
            )
        for senders in by_cell.values():
            assert len(senders) == 1  # one co-founder per gender x race cell


class TestSchedule:
    def _assignments(self, n_investors, n_ideas, seed=17):
        rng = np.random.default_rng(seed)
        out = []
        investors = investor_frame(n_investors)
        for k in range(n_ideas):
            out.extend(assign_cells(rng, investors, f"idea{k}", sampler=SAMPLER))
        return out

    def test_gap_rule_two_ideas(self):
        assignments = self._assignments(16, 2)
        schedule = schedule_campaign(assignments, min_gap_days=14)
        days = {}
        for t in schedule.treatments:
            days.setdefault(t.investor_id, []).append(t.send_day)
        for d in days.values():
            d = sorted(d)
            assert d[0] == 0
            if len(d) > 1:
                assert d[1] >= 14

    def test_five_ideas_sixty_day_window(self):
        assignments = self._assignments(16, 5)
        schedule = schedule_campaign(assignments, min_gap_days=14, window_days=60)
        investor = schedule.treatments[0].investor_id
        days = sorted(t.send_day for t in schedule.treatments if t.investor_id == investor)
        assert days == [0, 14, 28, 42, 56]

    def test_empty_schedule(self):
        schedule = schedule_campaign([])
        assert schedule.treatments == []
        assert check_schedule(schedule).ok

    def test_infeasible_window_lists_investors(self):
        assignments = self._assignments(16, 5)
        with pytest.raises(DesignError, match="i0"):
            schedule_campaign(assignments, min_gap_days=14, window_days=30)

    def test_checker_catches_gap_violation(self):
        assignments = self._assignments(16, 2)
        schedule = schedule_campaign(assignments, min_gap_days=14)
        schedule.treatments[-1].send_day = 1  # corrupt
        report = check_schedule(schedule)
        assert not report.ok

    def test_checker_catches_duplicate_fund_idea(self):
        assignments = self._assignments(16, 1)
        dup = assignments + [assignments[0]]
        schedule = schedule_campaign(dup, min_gap_days=14)
        report = check_schedule(schedule)
        assert any("twice" in v for v in report.violations)

    def test_sends_per_investor_target_warning(self):
        assignments = self._assignments(16, 1)  # one email each: below 3..5
        schedule = schedule_campaign(assignments)
        report = check_schedule(schedule)
        assert report.ok  # soft target -> warnings only
        assert report.warnings

    def test_campaign_builder_within_target(self):
        rng = np.random.default_rng(18)
        investors = make_investor_pool(rng, 32)
        schedule = build_email_campaign(
            rng, investors, [f"idea{k}" for k in range(4)], sampler=SAMPLER
        )
        report = check_schedule(schedule)
        assert report.ok
        assert not report.warnings  # everyone gets exactly 4


class TestInvestorPool:
    def test_fund_count(self):
        rng = np.random.default_rng(19)
        pool = make_investor_pool(rng, 50, n_funds=20)
        assert pool["fund_id"].nunique() == 20
        assert len(pool) == 50

    def test_invalid_sizes(self):
        rng = np.random.default_rng(20)
        with pytest.raises(DesignError):
            make_investor_pool(rng, 0)
        with pytest.raises(DesignError):
            make_investor_pool(rng, 5, n_funds=9)
