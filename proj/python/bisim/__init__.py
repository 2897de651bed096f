"""Bisimulation metrics, epsilon-quotients and planning bounds for finite MDPs."""

from ._bisim import (
    ConfigError,
    ConvergenceError,
    Mdp,
    PreconditionError,
    StructuralError,
    apply_operator,
    check_pseudometric,
    completeness_probe,
    eval_formula,
    greedy_policy,
    idempotence_check,
    policy_value,
    quotient,
    random_formula,
    run_suite,
    solve_metric,
    soundness_probe,
    spectral_report,
    summary_stats,
    value_iteration,
    value_loss,
    w1,
)

__all__ = [
    "ConfigError",
    "ConvergenceError",
    "Mdp",
    "PreconditionError",
    "StructuralError",
    "apply_operator",
    "check_pseudometric",
    "completeness_probe",
    "eval_formula",
    "greedy_policy",
    "idempotence_check",
    "policy_value",
    "quotient",
    "random_formula",
    "run_suite",
    "solve_metric",
    "soundness_probe",
    "spectral_report",
    "summary_stats",
    "value_iteration",
    "value_loss",
    "w1",
]
