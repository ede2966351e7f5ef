"""Catalog of startup-profile components and their sampling weights.

Each profile component is drawn independently: categorical components carry
explicit weights, numeric components carry uniform ranges, and list
components carry pools to sample from.  The shipped defaults mirror the
survey experiment's randomization plan; everything is overridable through a
key-value config file.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, fields


class CatalogError(ValueError):
    """Raised when a component spec is inconsistent."""


@dataclass(frozen=True)
class CategoricalSpec:
    """Weighted draw over a fixed set of levels."""

    levels: tuple
    weights: tuple

    def __post_init__(self):
        if len(self.levels) != len(self.weights):
            raise CatalogError("levels and weights must have equal length")
        if len(self.levels) < 2:
            raise CatalogError("categorical component needs at least two levels")
        if any(w < 0 for w in self.weights):
            raise CatalogError("weights must be non-negative")
        if not math.isclose(math.fsum(self.weights), 1.0, abs_tol=1e-9):
            raise CatalogError(f"weights must sum to 1, got {math.fsum(self.weights)}")

    def draw(self, rng):
        return self.levels[rng.choice(len(self.levels), p=self.weights)]


@dataclass(frozen=True)
class UniformIntSpec:
    """Uniform draw over the inclusive integer range [low, high]."""

    low: int
    high: int

    def __post_init__(self):
        if self.high <= self.low:
            raise CatalogError(f"degenerate integer range [{self.low}, {self.high}]")

    def draw(self, rng):
        return int(rng.integers(self.low, self.high + 1))


@dataclass(frozen=True)
class UniformSpec:
    """Uniform draw over the continuous range [low, high]."""

    low: float
    high: float

    def __post_init__(self):
        if not self.high > self.low:
            raise CatalogError(f"degenerate range [{self.low}, {self.high}]")

    def draw(self, rng):
        return float(rng.uniform(self.low, self.high))


def _even(levels):
    n = len(levels)
    return CategoricalSpec(tuple(levels), tuple(1.0 / n for _ in levels))


DEFAULT_TOP_SCHOOLS = (
    "Harvard University", "Stanford University", "MIT", "Princeton University",
    "Yale University", "Columbia University", "University of Pennsylvania",
    "Cornell University", "Brown University", "Dartmouth College",
)
DEFAULT_COMMON_SCHOOLS = (
    "University of Illinois", "Ohio State University", "University of Florida",
    "Arizona State University", "Penn State University", "University of Georgia",
    "Michigan State University", "University of Arizona", "Rutgers University",
    "Indiana University",
)
DEFAULT_ADVANTAGES = (
    "22% month-over-month growth rate", "Patent registered",
    "Exclusive supplier agreement", "Proprietary data set",
    "Experienced advisory board", "Letter of intent from a national retailer",
    "Recurring revenue contracts", "Award-winning product prototype",
)


@dataclass
class ComponentCatalog:
    """Sampling specification for every randomized profile component."""

    gender: CategoricalSpec = field(default_factory=lambda: _even(("F", "M")))
    race: CategoricalSpec = field(default_factory=lambda: _even(("Asian", "White")))
    n_founders: CategoricalSpec = field(
        default_factory=lambda: CategoricalSpec((1, 2), (0.5, 0.5))
    )
    age_group: CategoricalSpec = field(default_factory=lambda: _even(("young", "old")))
    graduation_year_young: UniformIntSpec = field(
        default_factory=lambda: UniformIntSpec(2005, 2019)
    )
    graduation_year_old: UniformIntSpec = field(
        default_factory=lambda: UniformIntSpec(1980, 2004)
    )
    education_tier: CategoricalSpec = field(default_factory=lambda: _even(("top", "common")))
    serial_founder: CategoricalSpec = field(
        default_factory=lambda: CategoricalSpec((True, False), (0.5, 0.5))
    )
    company_founding_year: CategoricalSpec = field(
        default_factory=lambda: _even((2016, 2017, 2018, 2019))
    )
    n_advantages: CategoricalSpec = field(default_factory=lambda: _even((1, 2, 3, 4)))
    traction_positive: CategoricalSpec = field(
        default_factory=lambda: CategoricalSpec((True, False), (0.5, 0.5))
    )
    monthly_revenue: UniformSpec = field(default_factory=lambda: UniformSpec(5_000.0, 80_000.0))
    growth_rate: UniformSpec = field(default_factory=lambda: UniformSpec(0.05, 0.60))
    category: CategoricalSpec = field(default_factory=lambda: _even(("B2B", "B2C")))
    employees_bucket: CategoricalSpec = field(
        default_factory=lambda: _even(("0-10", "10-20", "20-50", "50+"))
    )
    market: CategoricalSpec = field(default_factory=lambda: _even(("domestic", "international")))
    mission: CategoricalSpec = field(
        default_factory=lambda: CategoricalSpec(
            ("profit", "profit_ipo", "profit_esg"), (0.5, 0.25, 0.25)
        )
    )
    location: CategoricalSpec = field(
        default_factory=lambda: CategoricalSpec(("US", "non-US"), (0.70, 0.30))
    )
    n_existing_investors: CategoricalSpec = field(
        default_factory=lambda: _even(("0", "1", "2", "3+"))
    )
    top_schools: tuple = DEFAULT_TOP_SCHOOLS
    common_schools: tuple = DEFAULT_COMMON_SCHOOLS
    advantages: tuple = DEFAULT_ADVANTAGES

    def __post_init__(self):
        if not self.top_schools or not self.common_schools:
            raise CatalogError("school pools must be non-empty")
        if len(self.advantages) < max(self.n_advantages.levels):
            raise CatalogError(
                "advantage pool smaller than the maximum number of advantages"
            )

    def categorical_components(self):
        """(name, spec) pairs for every categorical component."""
        out = []
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, CategoricalSpec):
                out.append((f.name, value))
        return out


def default_catalog() -> ComponentCatalog:
    return ComponentCatalog()


_LIST_FIELDS = ("top_schools", "common_schools", "advantages")


def save_catalog(catalog: ComponentCatalog, path) -> None:
    """Write a catalog as an INI-style key-value config."""
    parser = configparser.ConfigParser(interpolation=None)
    for f in fields(catalog):
        value = getattr(catalog, f.name)
        section = f"component.{f.name}"
        if isinstance(value, CategoricalSpec):
            parser[section] = {
                "levels": ", ".join(str(v) for v in value.levels),
                "weights": ", ".join(repr(w) for w in value.weights),
            }
        elif isinstance(value, (UniformIntSpec, UniformSpec)):
            parser[section] = {"low": str(value.low), "high": str(value.high)}
        elif f.name in _LIST_FIELDS:
            parser[f"pool.{f.name}"] = {"items": "; ".join(value)}
    with open(path, "w", encoding="utf-8") as fh:
        parser.write(fh)


def _parse_level(text, reference_levels):
    # Interpret levels using the default catalog's types for that component.
    sample = reference_levels[0]
    if isinstance(sample, bool):
        return text.strip().lower() in ("true", "1", "yes")
    if isinstance(sample, int):
        return int(text)
    return text.strip()


def load_catalog(path) -> ComponentCatalog:
    """Read a catalog config written by :func:`save_catalog` (partial files
    fall back to defaults per component)."""
    parser = configparser.ConfigParser(interpolation=None)
    read = parser.read(path, encoding="utf-8")
    if not read:
        raise CatalogError(f"cannot read catalog config {path}")
    base = default_catalog()
    overrides = {}
    for f in fields(base):
        default_value = getattr(base, f.name)
        section = f"component.{f.name}"
        if isinstance(default_value, CategoricalSpec) and parser.has_section(section):
            levels = tuple(
                _parse_level(t, default_value.levels)
                for t in parser.get(section, "levels").split(",")
            )
            weights = tuple(float(w) for w in parser.get(section, "weights").split(","))
            overrides[f.name] = CategoricalSpec(levels, weights)
        elif isinstance(default_value, UniformIntSpec) and parser.has_section(section):
            overrides[f.name] = UniformIntSpec(
                int(parser.get(section, "low")), int(parser.get(section, "high"))
            )
        elif isinstance(default_value, UniformSpec) and parser.has_section(section):
            overrides[f.name] = UniformSpec(
                float(parser.get(section, "low")), float(parser.get(section, "high"))
            )
        elif f.name in _LIST_FIELDS and parser.has_section(f"pool.{f.name}"):
            items = parser.get(f"pool.{f.name}", "items").split(";")
            overrides[f.name] = tuple(s.strip() for s in items if s.strip())
    return ComponentCatalog(**overrides)
