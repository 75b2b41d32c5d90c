"""Round-by-round ballot-polling risk-limiting audits.

Stopping rules (round-adaptive, predetermined-schedule, end-of-round,
and selection-ordered per-ballot), round-size planning under stopping
probability and misleading-sample constraints, Monte Carlo simulation
with workload and real-time models, election-data handling, a JSON/HTTP
service, and a CLI.
"""

from ._kernels import BACKEND as kernel_backend
from .binom import (
    BinomialSpec,
    TailDistribution,
    log_binom_pmf,
    log_binom_sf,
    sigma,
    tau1,
    truncate_and_convolve,
)
from .contest import AuditVerdict, Decision, PairwiseContest, RiskLimit, RoundHistory
from .errors import (
    CapacityError,
    DomainError,
    IntegrityError,
    ParseError,
    PollAuditError,
    ScheduleViolationError,
    VersionConflictError,
)
from .planner import (
    PlannerConfig,
    RoundPlan,
    StopProbs,
    first_round_stop_probs_at,
    minerva_schedule,
    misleading_min_round_size,
    misleading_sample_prob,
    multi_candidate_round_size,
    next_round_size,
    round_stop_prob,
    so_crossing_curve,
    so_crossing_prob,
)
from .rules import (
    PredeterminedChain,
    eor_bravo_kmin,
    eor_bravo_verdict,
    minerva_verdict,
    misleading_sequence_check,
    providence_kmin,
    providence_log_omega,
    providence_verdict,
    so_bravo_verdict,
)
from .simulate import (
    AuditKind,
    Hypothesis,
    SimulationReport,
    TrialPolicy,
    adversarial_policy_trials,
    precinct_touch_trials,
    run_trials,
    sweep_p,
)
from .workload import (
    CostModel,
    RealTimeParams,
    WorkloadParams,
    expected_real_time,
    expected_workload,
    expected_workload_precinct,
    optimal_p,
)

__version__ = "0.1.0"

__all__ = [
    "kernel_backend",
    "BinomialSpec",
    "TailDistribution",
    "log_binom_pmf",
    "log_binom_sf",
    "sigma",
    "tau1",
    "truncate_and_convolve",
    "AuditVerdict",
    "Decision",
    "PairwiseContest",
    "RiskLimit",
    "RoundHistory",
    "PollAuditError",
    "DomainError",
    "CapacityError",
    "ParseError",
    "IntegrityError",
    "ScheduleViolationError",
    "VersionConflictError",
    "PlannerConfig",
    "RoundPlan",
    "StopProbs",
    "first_round_stop_probs_at",
    "minerva_schedule",
    "misleading_min_round_size",
    "misleading_sample_prob",
    "multi_candidate_round_size",
    "next_round_size",
    "round_stop_prob",
    "so_crossing_curve",
    "so_crossing_prob",
    "PredeterminedChain",
    "eor_bravo_kmin",
    "eor_bravo_verdict",
    "minerva_verdict",
    "misleading_sequence_check",
    "providence_kmin",
    "providence_log_omega",
    "providence_verdict",
    "so_bravo_verdict",
    "AuditKind",
    "Hypothesis",
    "SimulationReport",
    "TrialPolicy",
    "adversarial_policy_trials",
    "precinct_touch_trials",
    "run_trials",
    "sweep_p",
    "CostModel",
    "RealTimeParams",
    "WorkloadParams",
    "expected_real_time",
    "expected_workload",
    "expected_workload_precinct",
    "optimal_p",
]
