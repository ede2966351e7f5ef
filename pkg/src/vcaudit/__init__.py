"""vcaudit: factorial audit-study treatments, simulated respondents with
known ground truth, and the estimators that recover it.

The package covers the full loop of a correspondence-style discrimination
study: generate randomized startup profiles and pitch-email cells, simulate
survey evaluations / email opens / tracking events from latent-index models,
assemble analysis panels, and fit fixed-effects OLS, heteroskedastic and
two-threshold probits, decision-based split effects with leave-one-out
classification, and distributional crossing curves.
"""

from .catalog import CatalogError, ComponentCatalog, default_catalog, load_catalog, save_catalog
from .design import (
    CampaignSchedule,
    DesignError,
    EmailTreatment,
    ScheduleReport,
    StartupProfile,
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
from .estimators import (
    CdfDifferenceCurve,
    ConvergenceError,
    FitResult,
    FixedEffectsOLS,
    HeteroskedasticProbit,
    IdentificationError,
    LeaveOneOutEffects,
    LooResult,
    RankDeficiencyError,
    TwoThresholdProbit,
    cluster_vcov,
    decision_slopes,
    het_probit_loglik,
    het_probit_score,
    ivy_scaled_ratio,
    marginal_decomposition,
    robust_vcov,
    two_threshold_loglik,
)
from .events import (
    DOWNLOAD_RATE_BYTES_PER_S,
    EmailEvent,
    MalformedLogError,
    parse_events,
    read_event_log,
    write_event_log,
)
from .names import (
    NameEntry,
    NamePool,
    NamePoolError,
    NameSampler,
    filter_first_names,
    gender_index,
    load_name_pool,
    race_index,
    select_last_names,
    synthetic_name_pool,
)
from .panel import Panel, PanelError, PanelSpec, build_panel, winsorize
from .simulate import (
    CallbackDgpParams,
    DgpError,
    DonationDgpParams,
    EvalDgpParams,
    EventTimingParams,
    TreatmentEffect,
    emit_event_log,
    interval_open_probability,
    open_probability,
    simulate_callbacks,
    simulate_donations,
    simulate_evaluations,
    simulate_two_threshold_callbacks,
)

__version__ = "0.1.0"
