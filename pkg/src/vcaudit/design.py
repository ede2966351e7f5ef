"""Factorial randomization: startup profiles, email cells, and send schedules.

Profiles are drawn component-by-component from a :class:`ComponentCatalog`;
email treatments assign investors to one of the 16 factorial cells
(female x asian x ivy x advantage) with at most one investor per fund per
startup idea and cell counts balanced within +-1; schedules space sends to
the same investor by a minimum gap, greedily at the earliest feasible day.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, asdict
from typing import Iterable, Sequence

import numpy as np
import pandas as pd

from .catalog import ComponentCatalog, default_catalog
from .names import NameSampler, default_sampler

N_CELLS = 16
CELL_BITS = ("female", "asian", "ivy", "advantage")


class DesignError(ValueError):
    """Raised for infeasible or invalid design requests."""


def approx_age(graduation_year: int, benchmark_year: int = 2020) -> int:
    """Approximate founder age from the college graduation year.

    Assumes graduation at age 23, so age = benchmark_year - graduation_year + 23.
    """
    if graduation_year > benchmark_year:
        raise DesignError(
            f"graduation year {graduation_year} is after benchmark {benchmark_year}"
        )
    return benchmark_year - graduation_year + 23


@dataclass
class StartupProfile:
    """One realized startup profile shown to a survey respondent."""

    profile_id: str
    founders: tuple  # 1 or 2 (first, last) name pairs, same gender and race
    gender: str  # "F" | "M"
    race: str  # "Asian" | "White"
    graduation_year: int
    age: int
    education_tier: str  # "top" | "common"
    school: str
    serial_founder: bool
    company_founding_year: int
    advantages: tuple
    traction_positive: bool
    monthly_revenue: float | None
    growth_rate: float | None
    category: str
    employees_bucket: str
    market: str
    mission: str
    location: str
    n_existing_investors: str
    order_index: int
    second_half: bool

    @property
    def n_advantages(self) -> int:
        return len(self.advantages)

    def to_row(self) -> dict:
        row = asdict(self)
        row["founders"] = "; ".join(f"{f} {l}" for f, l in self.founders)
        row["advantages"] = "; ".join(self.advantages)
        row["n_founders"] = len(self.founders)
        row["n_advantages"] = self.n_advantages
        row["female"] = int(self.gender == "F")
        row["asian"] = int(self.race == "Asian")
        row["ivy"] = int(self.education_tier == "top")
        return row


def generate_profile(
    rng: np.random.Generator,
    catalog: ComponentCatalog,
    order_index: int,
    *,
    sampler: NameSampler | None = None,
    used_names: set | None = None,
    session_length: int = 16,
    benchmark_year: int = 2020,
    profile_id: str = "",
) -> StartupProfile:
    """Draw one profile with every component sampled independently."""
    if not 1 <= order_index <= session_length:
        raise DesignError(
            f"order_index {order_index} outside 1..{session_length}"
        )
    sampler = sampler or default_sampler()
    used_names = set() if used_names is None else used_names

    gender = catalog.gender.draw(rng)
    race = catalog.race.draw(rng)
    n_founders = catalog.n_founders.draw(rng)
    # Co-founders share gender, race, and age group by design.
    founders = tuple(sampler.draw(rng, gender, race, used_names) for _ in range(n_founders))
    age_group = catalog.age_group.draw(rng)
    grad_spec = (
        catalog.graduation_year_young if age_group == "young" else catalog.graduation_year_old
    )
    graduation_year = grad_spec.draw(rng)
    education_tier = catalog.education_tier.draw(rng)
    school_pool = catalog.top_schools if education_tier == "top" else catalog.common_schools
    school = school_pool[rng.integers(len(school_pool))]
    n_adv = catalog.n_advantages.draw(rng)
    advantages = tuple(
        catalog.advantages[i]
        for i in sorted(rng.choice(len(catalog.advantages), size=n_adv, replace=False))
    )
    traction_positive = catalog.traction_positive.draw(rng)
    return StartupProfile(
        profile_id=profile_id or f"profile-{order_index:03d}",
        founders=founders,
        gender=gender,
        race=race,
        graduation_year=graduation_year,
        age=approx_age(graduation_year, benchmark_year),
        education_tier=education_tier,
        school=school,
        serial_founder=catalog.serial_founder.draw(rng),
        company_founding_year=catalog.company_founding_year.draw(rng),
        advantages=advantages,
        traction_positive=traction_positive,
        monthly_revenue=catalog.monthly_revenue.draw(rng) if traction_positive else None,
        growth_rate=catalog.growth_rate.draw(rng) if traction_positive else None,
        category=catalog.category.draw(rng),
        employees_bucket=catalog.employees_bucket.draw(rng),
        market=catalog.market.draw(rng),
        mission=catalog.mission.draw(rng),
        location=catalog.location.draw(rng),
        n_existing_investors=catalog.n_existing_investors.draw(rng),
        order_index=order_index,
        second_half=order_index > session_length // 2,
    )


def generate_session(
    rng: np.random.Generator,
    catalog: ComponentCatalog,
    n_profiles: int = 16,
    *,
    sampler: NameSampler | None = None,
    used_names: set | None = None,
    benchmark_year: int = 2020,
    session_id: str = "s",
) -> list[StartupProfile]:
    """One evaluation session: ``n_profiles`` profiles with a half-way break."""
    if n_profiles <= 0:
        raise DesignError("session length must be positive")
    if n_profiles % 2:
        raise DesignError("session length must be even (break splits it in half)")
    sampler = sampler or default_sampler()
    used_names = set() if used_names is None else used_names
    return [
        generate_profile(
            rng,
            catalog,
            order_index=j,
            sampler=sampler,
            used_names=used_names,
            session_length=n_profiles,
            benchmark_year=benchmark_year,
            profile_id=f"{session_id}-p{j:03d}",
        )
        for j in range(1, n_profiles + 1)
    ]


def generate_survey_design(
    rng: np.random.Generator,
    investor_ids: Sequence,
    catalog: ComponentCatalog | None = None,
    *,
    n_profiles: int = 16,
    sampler: NameSampler | None = None,
    benchmark_year: int = 2020,
) -> pd.DataFrame:
    """One session per investor, returned as a flat profile table."""
    catalog = catalog or default_catalog()
    sampler = sampler or default_sampler()
    rows = []
    for investor_id in investor_ids:
        session = generate_session(
            rng,
            catalog,
            n_profiles,
            sampler=sampler,
            used_names=set(),  # names unique within a session, reusable across
            benchmark_year=benchmark_year,
            session_id=str(investor_id),
        )
        for profile in session:
            row = profile.to_row()
            row["investor_id"] = investor_id
            rows.append(row)
    return pd.DataFrame(rows)


@dataclass
class EmailTreatment:
    """One pitch email: who receives it and which factorial cell it is in."""

    email_id: str
    startup_idea_id: str
    investor_id: str
    fund_id: str
    female: bool
    asian: bool
    ivy: bool
    advantage: bool
    ivy_variant: str  # "pure" | "mixed"; analysis metadata for ivy cells
    sender_first: str
    sender_last: str
    send_day: int | None = None

    @property
    def cell_index(self) -> int:
        return (
            int(self.female) * 8 + int(self.asian) * 4 + int(self.ivy) * 2 + int(self.advantage)
        )

    def to_row(self) -> dict:
        row = asdict(self)
        for bit in CELL_BITS:
            row[bit] = int(row[bit])
        row["cell"] = self.cell_index
        row["sender"] = f"{self.sender_first} {self.sender_last}"
        return row


def cell_from_index(index: int) -> dict:
    if not 0 <= index < N_CELLS:
        raise DesignError(f"cell index {index} outside 0..{N_CELLS - 1}")
    return {
        "female": bool(index // 8 % 2),
        "asian": bool(index // 4 % 2),
        "ivy": bool(index // 2 % 2),
        "advantage": bool(index % 2),
    }


def _one_per_fund(rng, investors: pd.DataFrame) -> pd.DataFrame:
    """Keep at most one investor per fund, chosen uniformly."""
    picked = []
    for _, block in investors.groupby("fund_id", sort=True):
        block = block.sort_values("investor_id").reset_index(drop=True)
        picked.append(block.iloc[int(rng.integers(len(block)))])
    return pd.DataFrame(picked).reset_index(drop=True)


def assign_cells(
    rng: np.random.Generator,
    investors: pd.DataFrame,
    startup_idea_id: str,
    *,
    sampler: NameSampler | None = None,
    used_names: set | None = None,
    mixed_ivy_share: float = 0.0,
) -> list[EmailTreatment]:
    """Assign eligible investors to the 16 factorial cells for one idea.

    ``investors`` needs ``investor_id`` and ``fund_id`` columns.  At most one
    investor per fund is used; cell counts are balanced within +-1 and the
    assignment is uniform given that balance.  The realized cell-count vector
    depends only on (number of eligible investors, rng state), never on the
    input ordering.
    """
    required = {"investor_id", "fund_id"}
    if not required <= set(investors.columns):
        raise DesignError(f"investors table must have columns {sorted(required)}")
    n_funds = investors["fund_id"].nunique()
    if n_funds < N_CELLS:
        raise DesignError(
            f"insufficient funds for factorial balance: {n_funds} < {N_CELLS}"
        )
    sampler = sampler or default_sampler()
    used_names = set() if used_names is None else used_names

    eligible = _one_per_fund(rng, investors)
    n = len(eligible)
    base, remainder = divmod(n, N_CELLS)
    counts = np.full(N_CELLS, base, dtype=int)
    if remainder:
        counts[rng.choice(N_CELLS, size=remainder, replace=False)] += 1
    cell_sequence = np.repeat(np.arange(N_CELLS), counts)
    rng.shuffle(cell_sequence)

    order = np.argsort(eligible["investor_id"].astype(str).to_numpy(), kind="stable")
    eligible = eligible.iloc[order].reset_index(drop=True)

    # One fictitious co-founder per gender x race combination for this idea;
    # the email sender is the co-founder matching the cell.
    founder_by_cell = {
        (female, asian): sampler.draw(
            rng, "F" if female else "M", "Asian" if asian else "White", used_names
        )
        for female, asian in itertools.product((False, True), repeat=2)
    }

    treatments = []
    for k, (_, inv) in enumerate(eligible.iterrows()):
        bits = cell_from_index(int(cell_sequence[k]))
        first, last = founder_by_cell[(bits["female"], bits["asian"])]
        if bits["ivy"] and mixed_ivy_share > 0:
            variant = "mixed" if rng.random() < mixed_ivy_share else "pure"
        else:
            variant = "pure"
        treatments.append(
            EmailTreatment(
                email_id=f"{startup_idea_id}-e{k:05d}",
                startup_idea_id=startup_idea_id,
                investor_id=str(inv["investor_id"]),
                fund_id=str(inv["fund_id"]),
                ivy_variant=variant,
                sender_first=first,
                sender_last=last,
                **bits,
            )
        )
    return treatments


@dataclass
class CampaignSchedule:
    """Scheduled email treatments with the gap constraint they satisfy."""

    treatments: list[EmailTreatment]
    min_gap_days: int = 14

    def to_frame(self) -> pd.DataFrame:
        if not self.treatments:
            return pd.DataFrame(
                columns=["email_id", "startup_idea_id", "investor_id", "fund_id",
                         *CELL_BITS, "cell", "ivy_variant", "sender_first",
                         "sender_last", "sender", "send_day"]
            )
        return pd.DataFrame([t.to_row() for t in self.treatments])


def schedule_campaign(
    assignments: Iterable[EmailTreatment],
    *,
    start_day: int = 0,
    min_gap_days: int = 14,
    window_days: int | None = None,
) -> CampaignSchedule:
    """Greedy earliest-feasible send days, one lane per investor.

    Each investor's emails go out ``min_gap_days`` apart starting at
    ``start_day``.  If a calendar window is given and some investor cannot
    fit, the error lists every violating investor.
    """
    assignments = list(assignments)
    if min_gap_days < 0:
        raise DesignError("min_gap_days must be non-negative")
    by_investor: dict[str, list[EmailTreatment]] = {}
    for t in assignments:
        by_investor.setdefault(t.investor_id, []).append(t)

    infeasible = []
    scheduled: list[EmailTreatment] = []
    for investor_id in sorted(by_investor):
        emails = sorted(by_investor[investor_id], key=lambda t: t.email_id)
        last_day = start_day + (len(emails) - 1) * min_gap_days
        if window_days is not None and last_day > start_day + window_days:
            infeasible.append((investor_id, len(emails)))
            continue
        for k, t in enumerate(emails):
            t.send_day = start_day + k * min_gap_days
            scheduled.append(t)
    if infeasible:
        detail = ", ".join(f"{inv} ({n} emails)" for inv, n in infeasible)
        raise DesignError(f"schedule infeasible within {window_days} days for: {detail}")
    scheduled.sort(key=lambda t: (t.send_day, t.email_id))
    return CampaignSchedule(treatments=scheduled, min_gap_days=min_gap_days)


@dataclass
class ScheduleReport:
    """Outcome of the independent schedule re-verification."""

    violations: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def check_schedule(
    schedule: CampaignSchedule,
    *,
    sends_per_investor: tuple[int, int] = (3, 5),
) -> ScheduleReport:
    """Re-verify schedule constraints from scratch (no construction trust).

    Hard constraints: no (idea, fund) pair is used twice, and consecutive
    sends to an investor are at least ``min_gap_days`` apart.  The 3..5
    sends-per-investor target is soft and lands in ``warnings``.
    """
    report = ScheduleReport()
    seen_pairs = set()
    for t in schedule.treatments:
        key = (t.startup_idea_id, t.fund_id)
        if key in seen_pairs:
            report.violations.append(
                f"idea {t.startup_idea_id} sent twice to fund {t.fund_id}"
            )
        seen_pairs.add(key)
        if t.send_day is None:
            report.violations.append(f"email {t.email_id} has no send day")

    by_investor: dict[str, list[int]] = {}
    for t in schedule.treatments:
        if t.send_day is not None:
            by_investor.setdefault(t.investor_id, []).append(t.send_day)
    lo, hi = sends_per_investor
    for investor_id, days in sorted(by_investor.items()):
        days = sorted(days)
        for a, b in zip(days, days[1:]):
            if b - a < schedule.min_gap_days:
                report.violations.append(
                    f"investor {investor_id}: sends {a} and {b} closer than "
                    f"{schedule.min_gap_days} days"
                )
        if not lo <= len(days) <= hi:
            report.warnings.append(
                f"investor {investor_id} receives {len(days)} emails "
                f"(target {lo}..{hi})"
            )
    return report


def build_email_campaign(
    rng: np.random.Generator,
    investors: pd.DataFrame,
    idea_ids: Sequence[str],
    *,
    sampler: NameSampler | None = None,
    start_day: int = 0,
    min_gap_days: int = 14,
    window_days: int | None = None,
    mixed_ivy_share: float = 0.0,
) -> CampaignSchedule:
    """Assign every idea across the investor pool and schedule the sends."""
    sampler = sampler or default_sampler()
    used_names: set = set()
    assignments: list[EmailTreatment] = []
    for idea_id in idea_ids:
        assignments.extend(
            assign_cells(
                rng,
                investors,
                idea_id,
                sampler=sampler,
                used_names=used_names,
                mixed_ivy_share=mixed_ivy_share,
            )
        )
    return schedule_campaign(
        assignments,
        start_day=start_day,
        min_gap_days=min_gap_days,
        window_days=window_days,
    )


def make_investor_pool(
    rng: np.random.Generator,
    n_investors: int,
    *,
    n_funds: int | None = None,
    female_share: float = 0.24,
    asian_share: float = 0.20,
    us_share: float = 0.85,
) -> pd.DataFrame:
    """Synthetic investor roster with fund ids and demographic covariates."""
    if n_investors <= 0:
        raise DesignError("n_investors must be positive")
    n_funds = n_investors if n_funds is None else n_funds
    if n_funds <= 0 or n_funds > n_investors:
        raise DesignError("n_funds must be in 1..n_investors")
    fund_of = np.concatenate([
        np.arange(n_funds),  # every fund gets one investor
        rng.integers(0, n_funds, size=n_investors - n_funds),
    ])
    return pd.DataFrame(
        {
            "investor_id": [f"inv{i:05d}" for i in range(n_investors)],
            "fund_id": [f"fund{int(f):05d}" for f in fund_of],
            "female_investor": (rng.random(n_investors) < female_share).astype(int),
            "asian_investor": (rng.random(n_investors) < asian_share).astype(int),
            "us_investor": (rng.random(n_investors) < us_share).astype(int),
        }
    )
