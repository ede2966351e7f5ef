"""Tests for the component catalog and its config round-trip."""

import numpy as np
import pytest

from vcaudit.catalog import (
    CatalogError,
    CategoricalSpec,
    ComponentCatalog,
    UniformIntSpec,
    UniformSpec,
    default_catalog,
    load_catalog,
    save_catalog,
)


class TestSpecs:
    def test_weights_must_sum_to_one(self):
        with pytest.raises(CatalogError, match="sum to 1"):
            CategoricalSpec(("a", "b"), (0.5, 0.6))

    def test_negative_weight_rejected(self):
        with pytest.raises(CatalogError):
            CategoricalSpec(("a", "b"), (-0.5, 1.5))

    def test_length_mismatch(self):
        with pytest.raises(CatalogError):
            CategoricalSpec(("a", "b", "c"), (0.5, 0.5))

    def test_degenerate_ranges(self):
        with pytest.raises(CatalogError):
            UniformIntSpec(2005, 2005)
        with pytest.raises(CatalogError):
            UniformSpec(5000.0, 5000.0)

    def test_categorical_draw_respects_weights(self):
        spec = CategoricalSpec(("x", "y"), (0.9, 0.1))
        rng = np.random.default_rng(0)
        draws = [spec.draw(rng) for _ in range(2000)]
        share = draws.count("x") / len(draws)
        assert abs(share - 0.9) < 0.03


class TestDefaultCatalog:
    def test_all_weights_valid(self):
        cat = default_catalog()
        for name, spec in cat.categorical_components():
            assert abs(sum(spec.weights) - 1.0) < 1e-9, name

    def test_expected_weights(self):
        cat = default_catalog()
        assert cat.n_founders.weights == (0.5, 0.5)
        assert cat.mission.weights == (0.5, 0.25, 0.25)
        assert cat.location.weights == (0.70, 0.30)
        assert cat.n_advantages.levels == (1, 2, 3, 4)
        assert cat.graduation_year_young.low == 2005
        assert cat.graduation_year_old.high == 2004
        assert cat.monthly_revenue.low == 5_000.0
        assert cat.monthly_revenue.high == 80_000.0
        assert cat.growth_rate.high == 0.60

    def test_advantage_pool_large_enough(self):
        with pytest.raises(CatalogError):
            ComponentCatalog(advantages=("only", "two", "ads"))


class TestConfigRoundTrip:
    def test_round_trip(self, tmp_path):
        cat = default_catalog()
        path = tmp_path / "catalog.cfg"
        save_catalog(cat, path)
        loaded = load_catalog(path)
        assert loaded.mission.weights == cat.mission.weights
        assert loaded.n_founders.levels == cat.n_founders.levels
        assert loaded.graduation_year_old.low == cat.graduation_year_old.low
        assert loaded.top_schools == cat.top_schools
        assert loaded.advantages == cat.advantages

    def test_partial_override(self, tmp_path):
        path = tmp_path / "partial.cfg"
        path.write_text(
            "[component.location]\nlevels = US, non-US\nweights = 0.5, 0.5\n",
            encoding="utf-8",
        )
        loaded = load_catalog(path)
        assert loaded.location.weights == (0.5, 0.5)
        assert loaded.mission.weights == default_catalog().mission.weights

    def test_missing_file(self, tmp_path):
        with pytest.raises(CatalogError):
            load_catalog(tmp_path / "nope.cfg")

    def test_bad_weights_rejected_on_load(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text(
            "[component.location]\nlevels = US, non-US\nweights = 0.5, 0.6\n",
            encoding="utf-8",
        )
        with pytest.raises(CatalogError):
            load_catalog(path)
