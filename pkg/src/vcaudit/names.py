"""Name pools with gender/race indicativeness indices.

First names are screened for gender ambiguity with a frequency-difference
rule (and, optionally, index cutoffs); last names are screened by the share
of a target race among bearers.  Accepted names feed the profile and email
generators, which draw full names uniformly without replacement per
gender x race cell.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Mapping

RACES = ("asian", "white", "other")


class NamePoolError(ValueError):
    """Raised for invalid or exhausted name pools."""


@dataclass(frozen=True)
class NameEntry:
    """One observed name with gender and race frequency counts."""

    text: str
    kind: str  # "first" or "last"
    count_female: int = 0
    count_male: int = 0
    count_by_race: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("first", "last"):
            raise NamePoolError(f"kind must be 'first' or 'last', got {self.kind!r}")
        counts = [self.count_female, self.count_male, *self.count_by_race.values()]
        if any(c < 0 for c in counts):
            raise NamePoolError(f"negative count for name {self.text!r}")
        if not any(c > 0 for c in counts):
            raise NamePoolError(f"name {self.text!r} has no positive count")

    @property
    def total_gender_count(self) -> int:
        return self.count_female + self.count_male

    @property
    def total_race_count(self) -> int:
        return sum(self.count_by_race.values())


@dataclass
class NamePool:
    """Candidate names plus the screening thresholds applied to them."""

    entries: list[NameEntry]
    gender_cutoff_high: float = 99.0
    gender_cutoff_low: float = 3.0
    race_share_cutoff: float = 0.85
    ambiguity_count_threshold: int = 200_000
    max_names_per_group: int = 100

    def __post_init__(self):
        if not (0.0 <= self.gender_cutoff_low < self.gender_cutoff_high <= 100.0):
            raise NamePoolError(
                "gender cutoffs must satisfy 0 <= low < high <= 100, got "
                f"low={self.gender_cutoff_low}, high={self.gender_cutoff_high}"
            )
        if not 0.0 <= self.race_share_cutoff <= 1.0:
            raise NamePoolError("race_share_cutoff must lie in [0, 1]")
        if self.ambiguity_count_threshold < 0:
            raise NamePoolError("ambiguity_count_threshold must be non-negative")

    def first_names(self) -> list[NameEntry]:
        return [e for e in self.entries if e.kind == "first"]

    def last_names(self) -> list[NameEntry]:
        return [e for e in self.entries if e.kind == "last"]


def gender_index(count_female, count_male, total_female_births, total_male_births):
    """Femaleness score of a first name on a 0..100 scale.

    Computes 100 * p_f / (p_f + p_m) where p_g is the name's frequency
    among births of gender g.  100 means exclusively female, 0 exclusively
    male, 50 perfectly ambiguous.
    """
    if total_female_births <= 0 or total_male_births <= 0:
        raise NamePoolError("birth totals must be positive")
    if count_female < 0 or count_male < 0:
        raise NamePoolError("counts must be non-negative")
    if count_female == 0 and count_male == 0:
        raise NamePoolError("name unobserved: both gender counts are zero")
    p_f = count_female / total_female_births
    p_m = count_male / total_male_births
    return 100.0 * p_f / (p_f + p_m)


def race_index(count_race, count_other, total_race, total_other):
    """Race-indicativeness score of a surname on a 0..100 scale.

    Same functional form as :func:`gender_index`, applied to a two-way
    split between the target race and everyone else.
    """
    if total_race <= 0 or total_other <= 0:
        raise NamePoolError("population totals must be positive")
    if count_race < 0 or count_other < 0:
        raise NamePoolError("counts must be non-negative")
    if count_race == 0 and count_other == 0:
        raise NamePoolError("name unobserved: both race counts are zero")
    p_r = count_race / total_race
    p_o = count_other / total_other
    return 100.0 * p_r / (p_r + p_o)


@dataclass
class FirstNameSelection:
    """Accepted first names partitioned by gender, plus the rejects.

    ``rejected`` holds only screening failures; names that merely fell past
    the per-group frequency truncation land in ``truncated``.
    """

    female: list[NameEntry]
    male: list[NameEntry]
    rejected: list[NameEntry]
    truncated: list[NameEntry] = field(default_factory=list)

    @property
    def female_names(self) -> list[str]:
        return [e.text for e in self.female]

    @property
    def male_names(self) -> list[str]:
        return [e.text for e in self.male]


def filter_first_names(
    pool: NamePool,
    *,
    use_index_cutoffs: bool = False,
    total_female_births: int | None = None,
    total_male_births: int | None = None,
    order: str = "filter_then_cutoff",
) -> FirstNameSelection:
    """Partition first names into unambiguous female/male sets.

    A name is rejected as gender-ambiguous when it is observed for both
    genders and the absolute count difference falls below the pool's
    ambiguity threshold.  Survivors are assigned to the gender with the
    larger count, ranked by total frequency and truncated to
    ``max_names_per_group``.

    When ``use_index_cutoffs`` is set, names must additionally clear the
    index cutoffs (female: index > gender_cutoff_high; male:
    index < gender_cutoff_low); ``order`` controls whether the ambiguity
    filter runs before ("filter_then_cutoff") or after ("cutoff_then_filter")
    the index screen.  Birth totals are required for the index screen.
    """
    firsts = pool.first_names()
    if not firsts:
        raise NamePoolError("name pool contains no first names")
    if order not in ("filter_then_cutoff", "cutoff_then_filter"):
        raise NamePoolError(f"unknown order {order!r}")
    if use_index_cutoffs and (total_female_births is None or total_male_births is None):
        raise NamePoolError("index cutoffs require birth totals")

    def ambiguous(e: NameEntry) -> bool:
        return (
            e.count_female > 0
            and e.count_male > 0
            and abs(e.count_female - e.count_male) < pool.ambiguity_count_threshold
        )

    def fails_cutoff(e: NameEntry) -> bool:
        idx = gender_index(e.count_female, e.count_male, total_female_births, total_male_births)
        if e.count_female >= e.count_male:
            return not idx > pool.gender_cutoff_high
        return not idx < pool.gender_cutoff_low

    screens = [ambiguous]
    if use_index_cutoffs:
        if order == "filter_then_cutoff":
            screens = [ambiguous, fails_cutoff]
        else:
            screens = [fails_cutoff, ambiguous]

    rejected: list[NameEntry] = []
    kept: list[NameEntry] = []
    for entry in firsts:
        for screen in screens:
            if screen(entry):
                rejected.append(entry)
                break
        else:
            kept.append(entry)

    def by_frequency(e):
        return (-e.total_gender_count, e.text)

    female = sorted((e for e in kept if e.count_female >= e.count_male), key=by_frequency)
    male = sorted((e for e in kept if e.count_female < e.count_male), key=by_frequency)
    cap = pool.max_names_per_group
    truncated = female[cap:] + male[cap:]
    return FirstNameSelection(
        female=female[:cap], male=male[:cap], rejected=rejected, truncated=truncated
    )


def select_last_names(pool: NamePool, race: str) -> list[str]:
    """Last names whose share of the target race clears the pool cutoff."""
    race = race.lower()
    lasts = pool.last_names()
    if not lasts:
        raise NamePoolError("name pool contains no last names")
    selected = []
    for e in lasts:
        total = e.total_race_count
        if total == 0:
            continue
        share = e.count_by_race.get(race, 0) / total
        if share >= pool.race_share_cutoff:
            selected.append(e)
    selected.sort(key=lambda e: (-e.total_race_count, e.text))
    return [e.text for e in selected[: pool.max_names_per_group]]


class NameSampler:
    """Draws unused (first, last) combinations per gender x race cell.

    The sampler is stateless; the caller owns the ``used`` set so one
    campaign can share it across cells and sessions (single writer).
    """

    def __init__(self, female_first, male_first, white_last, asian_last):
        self._first = {"F": list(female_first), "M": list(male_first)}
        self._last = {"White": list(white_last), "Asian": list(asian_last)}
        for gender, pool in self._first.items():
            if not pool:
                raise NamePoolError(f"no first names for gender {gender!r}")
        for race, pool in self._last.items():
            if not pool:
                raise NamePoolError(f"no last names for race {race!r}")

    @classmethod
    def from_pool(cls, pool: NamePool) -> "NameSampler":
        sel = filter_first_names(pool)
        return cls(
            female_first=sel.female_names,
            male_first=sel.male_names,
            white_last=select_last_names(pool, "white"),
            asian_last=select_last_names(pool, "asian"),
        )

    def cell_size(self, gender: str, race: str) -> int:
        return len(self._first[gender]) * len(self._last[race])

    def draw(self, rng, gender: str, race: str, used: set) -> tuple[str, str]:
        """Uniform draw of an unused (first, last) pair; records it in ``used``."""
        if gender not in self._first:
            raise NamePoolError(f"unknown gender {gender!r}")
        if race not in self._last:
            raise NamePoolError(f"unknown race {race!r}")
        free = [
            (f, l)
            for f in self._first[gender]
            for l in self._last[race]
            if (f, l) not in used
        ]
        if not free:
            raise NamePoolError(f"name pool exhausted for cell ({gender}, {race})")
        pair = free[rng.integers(len(free))]
        used.add(pair)
        return pair


NAME_CSV_HEADER = [
    "name", "kind", "count_female", "count_male",
    "count_asian", "count_white", "count_other",
]


def load_name_pool(path, **pool_options) -> NamePool:
    """Read a name-frequency CSV (see ``NAME_CSV_HEADER``) into a NamePool."""
    entries = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(NAME_CSV_HEADER) - set(reader.fieldnames or ())
        if missing:
            raise NamePoolError(f"name CSV missing columns: {sorted(missing)}")
        for row in reader:
            entries.append(
                NameEntry(
                    text=row["name"],
                    kind=row["kind"],
                    count_female=int(row["count_female"] or 0),
                    count_male=int(row["count_male"] or 0),
                    count_by_race={
                        "asian": int(row["count_asian"] or 0),
                        "white": int(row["count_white"] or 0),
                        "other": int(row["count_other"] or 0),
                    },
                )
            )
    if not entries:
        raise NamePoolError(f"name CSV {path} is empty")
    return NamePool(entries=entries, **pool_options)


def save_name_pool(pool: NamePool, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(NAME_CSV_HEADER)
        for e in pool.entries:
            writer.writerow([
                e.text, e.kind, e.count_female, e.count_male,
                e.count_by_race.get("asian", 0),
                e.count_by_race.get("white", 0),
                e.count_by_race.get("other", 0),
            ])


# Synthetic default pool: plausible common names with made-up counts, large
# enough that every gender x race cell supports a full campaign without
# shipping restricted registry data.
_SYNTH_FEMALE = [
    "Emily", "Sarah", "Jessica", "Ashley", "Amanda", "Jennifer", "Stephanie",
    "Nicole", "Elizabeth", "Megan", "Lauren", "Rachel", "Samantha", "Katherine",
    "Hannah", "Alyssa", "Victoria", "Olivia", "Emma", "Grace", "Natalie",
    "Michelle", "Christina", "Rebecca", "Laura", "Allison", "Julia", "Anna",
    "Melissa", "Heather",
]
_SYNTH_MALE = [
    "Michael", "Christopher", "Matthew", "Joshua", "David", "James", "Daniel",
    "Robert", "John", "Joseph", "Andrew", "Ryan", "Brandon", "Jason", "Justin",
    "William", "Jonathan", "Brian", "Nicholas", "Anthony", "Eric", "Adam",
    "Kevin", "Thomas", "Steven", "Timothy", "Richard", "Jeremy", "Jeffrey",
    "Benjamin",
]
_SYNTH_WHITE_LAST = [
    "Miller", "Anderson", "Clark", "Wright", "Mitchell", "Johnson", "Baker",
    "Nelson", "Carter", "Phillips", "Evans", "Collins", "Stewart", "Morris",
    "Murphy", "Cook", "Rogers", "Peterson", "Cooper", "Reed",
]
_SYNTH_ASIAN_LAST = [
    "Nguyen", "Kim", "Patel", "Tran", "Chen", "Wong", "Le", "Yang", "Wang",
    "Chang", "Shah", "Huang", "Lin", "Liu", "Park", "Cho", "Ngo", "Xu",
    "Zhang", "Chung",
]


def synthetic_name_pool() -> NamePool:
    """Built-in demo pool with synthetic counts; not registry data."""
    entries = []
    for i, name in enumerate(_SYNTH_FEMALE):
        entries.append(NameEntry(name, "first", count_female=900_000 - 5_000 * i, count_male=0))
    for i, name in enumerate(_SYNTH_MALE):
        entries.append(NameEntry(name, "first", count_female=0, count_male=950_000 - 5_000 * i))
    for i, name in enumerate(_SYNTH_WHITE_LAST):
        entries.append(
            NameEntry(name, "last", count_by_race={"white": 400_000 - 2_000 * i, "asian": 0, "other": 30_000})
        )
    for i, name in enumerate(_SYNTH_ASIAN_LAST):
        entries.append(
            NameEntry(name, "last", count_by_race={"asian": 300_000 - 2_000 * i, "white": 0, "other": 15_000})
        )
    return NamePool(entries=entries)


def default_sampler() -> NameSampler:
    return NameSampler.from_pool(synthetic_name_pool())
