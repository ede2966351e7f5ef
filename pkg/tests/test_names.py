"""Tests for name pools, indicativeness indices, and name drawing."""

import numpy as np
import pytest

from vcaudit.names import (
    NameEntry,
    NamePool,
    NamePoolError,
    NameSampler,
    filter_first_names,
    gender_index,
    load_name_pool,
    race_index,
    save_name_pool,
    select_last_names,
    synthetic_name_pool,
)


def entry(text, f=0, m=0, kind="first", **races):
    return NameEntry(text, kind, count_female=f, count_male=m, count_by_race=races)


class TestGenderIndex:
    def test_female_only_name(self):
        assert gender_index(100, 0, 10**6, 10**6) == 100.0

    def test_symmetric_case(self):
        assert gender_index(500, 500, 10**6, 10**6) == 50.0

    def test_arithmetic(self):
        # 990/(990+10) * 100 with equal totals
        assert gender_index(990, 10, 10**6, 10**6) == pytest.approx(99.0)

    def test_unequal_totals(self):
        # p_f = 50/1e5, p_m = 50/1e6 -> 100 * p_f/(p_f+p_m)
        expected = 100.0 * (50 / 1e5) / (50 / 1e5 + 50 / 1e6)
        assert gender_index(50, 50, 10**5, 10**6) == pytest.approx(expected)

    def test_both_zero_raises(self):
        with pytest.raises(NamePoolError, match="unobserved"):
            gender_index(0, 0, 10**6, 10**6)

    def test_zero_totals_raise(self):
        with pytest.raises(NamePoolError):
            gender_index(10, 10, 0, 10**6)

    def test_complementarity(self):
        # Swapping roles must give exactly 100 - index.
        rng = np.random.default_rng(0)
        for _ in range(50):
            f, m = rng.integers(0, 10**6, 2)
            if f == 0 and m == 0:
                continue
            tf, tm = rng.integers(1, 10**7, 2)
            assert gender_index(f, m, tf, tm) + gender_index(m, f, tm, tf) == pytest.approx(
                100.0, abs=1e-9
            )


class TestRaceIndex:
    def test_race_only(self):
        assert race_index(50, 0, 10**5, 10**6) == 100.0

    def test_arithmetic(self):
        assert race_index(85, 15, 10**6, 10**6) == pytest.approx(85.0)

    def test_zero_target(self):
        assert race_index(0, 40, 10**5, 10**6) == 0.0


class TestFilterFirstNames:
    def test_large_gap_accepted_female(self):
        pool = NamePool(entries=[entry("A", f=1_000_000, m=50_000)])
        out = filter_first_names(pool)
        assert out.female_names == ["A"]
        assert out.rejected == []

    def test_small_gap_rejected(self):
        pool = NamePool(entries=[entry("B", f=300_000, m=250_000)])
        out = filter_first_names(pool)
        assert out.female == [] and out.male == []
        assert [e.text for e in out.rejected] == ["B"]

    def test_male_only_name(self):
        pool = NamePool(entries=[entry("C", m=10_000)])
        out = filter_first_names(pool)
        assert out.female_names == []
        assert out.male_names == ["C"]
        assert out.rejected == []

    def test_partition_disjoint_and_rejects_violate_rule(self):
        rng = np.random.default_rng(3)
        entries = [
            entry(f"n{i}", f=int(rng.integers(0, 10**6)), m=int(rng.integers(0, 10**6)))
            for i in range(200)
        ]
        entries = [e for e in entries if e.total_gender_count > 0]
        pool = NamePool(entries=entries)
        out = filter_first_names(pool)
        female = set(out.female_names)
        male = set(out.male_names)
        rejected = {e.text for e in out.rejected}
        assert not female & male
        assert not (female | male) & rejected
        for e in out.rejected:
            assert e.count_female > 0 and e.count_male > 0
            assert abs(e.count_female - e.count_male) < pool.ambiguity_count_threshold

    def test_truncation_to_pool_size(self):
        entries = [entry(f"f{i}", f=500_000 + i) for i in range(150)]
        pool = NamePool(entries=entries, max_names_per_group=100)
        out = filter_first_names(pool)
        assert len(out.female) == 100
        assert len(out.truncated) == 50
        # kept names are the most frequent ones
        assert out.female_names[0] == "f149"

    def test_index_cutoffs(self):
        # index 98 < 99 cutoff -> rejected under the index screen
        pool = NamePool(entries=[entry("D", f=980_000, m=20_000)])
        out = filter_first_names(
            pool, use_index_cutoffs=True,
            total_female_births=10**7, total_male_births=10**7,
        )
        assert out.female_names == []
        assert [e.text for e in out.rejected] == ["D"]

    def test_empty_pool_raises(self):
        pool = NamePool(entries=[entry("L", kind="last", white=10)])
        with pytest.raises(NamePoolError, match="no first names"):
            filter_first_names(pool)


class TestLastNames:
    def test_share_cutoff(self):
        pool = NamePool(
            entries=[
                entry("Hi", kind="last", asian=900, white=50, other=50),
                entry("Lo", kind="last", asian=500, white=400, other=100),
            ]
        )
        assert select_last_names(pool, "asian") == ["Hi"]

    def test_ranked_by_frequency(self):
        pool = NamePool(
            entries=[
                entry("Small", kind="last", white=900, other=10),
                entry("Big", kind="last", white=9000, other=100),
            ]
        )
        assert select_last_names(pool, "white") == ["Big", "Small"]


class TestNameSampler:
    def test_forced_single_combination(self):
        sampler = NameSampler(
            female_first=["Ann"], male_first=["Bob"],
            white_last=["Lee"], asian_last=["Kim"],
        )
        rng = np.random.default_rng(0)
        assert sampler.draw(rng, "F", "Asian", set()) == ("Ann", "Kim")

    def test_without_replacement(self):
        sampler = NameSampler(
            female_first=["Ann", "Eve"], male_first=["Bob"],
            white_last=["Lee"], asian_last=["Kim"],
        )
        rng = np.random.default_rng(1)
        used = set()
        first = sampler.draw(rng, "F", "Asian", used)
        second = sampler.draw(rng, "F", "Asian", used)
        assert first != second

    def test_exhaustion_raises(self):
        sampler = NameSampler(
            female_first=["Ann"], male_first=["Bob"],
            white_last=["Lee"], asian_last=["Kim"],
        )
        rng = np.random.default_rng(2)
        used = set()
        sampler.draw(rng, "F", "Asian", used)
        with pytest.raises(NamePoolError, match="exhausted"):
            sampler.draw(rng, "F", "Asian", used)

    def test_deterministic_under_seed(self):
        sampler = synthetic_sampler = NameSampler.from_pool(synthetic_name_pool())
        a = sampler.draw(np.random.default_rng(42), "M", "White", set())
        b = synthetic_sampler.draw(np.random.default_rng(42), "M", "White", set())
        assert a == b

    def test_campaign_never_repeats(self):
        sampler = NameSampler.from_pool(synthetic_name_pool())
        rng = np.random.default_rng(5)
        used = set()
        drawn = [sampler.draw(rng, "F", "White", used) for _ in range(200)]
        assert len(set(drawn)) == len(drawn)


class TestCsvRoundTrip:
    def test_round_trip(self, tmp_path):
        pool = synthetic_name_pool()
        path = tmp_path / "names.csv"
        save_name_pool(pool, path)
        loaded = load_name_pool(path)
        assert len(loaded.entries) == len(pool.entries)
        assert {e.text for e in loaded.entries} == {e.text for e in pool.entries}
        pair = next(e for e in loaded.entries if e.kind == "last")
        orig = next(e for e in pool.entries if e.text == pair.text)
        assert pair.count_by_race == orig.count_by_race

    def test_missing_columns(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("name,kind\nA,first\n", encoding="utf-8")
        with pytest.raises(NamePoolError, match="missing columns"):
            load_name_pool(path)


class TestValidation:
    def test_negative_count_rejected(self):
        with pytest.raises(NamePoolError):
            NameEntry("X", "first", count_female=-1, count_male=5)

    def test_all_zero_rejected(self):
        with pytest.raises(NamePoolError):
            NameEntry("X", "first")

    def test_cutoff_ordering_enforced(self):
        with pytest.raises(NamePoolError):
            NamePool(entries=[entry("A", f=10)], gender_cutoff_low=99, gender_cutoff_high=3)
