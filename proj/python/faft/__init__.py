"""Sieve maximum likelihood for the functional accelerated failure time model."""

from ._core import (
    ArchiveError,
    ConfigError,
    ConvergenceError,
    DataError,
    DomainError,
    FaftError,
    SingularInformation,
    StructureError,
    SupportViolation,
    UnsupportedOperation,
    fit,
    q_n_rule,
    run_cli,
    simulate,
    true_beta,
    true_loghazard,
)

__all__ = [
    "ArchiveError",
    "ConfigError",
    "ConvergenceError",
    "DataError",
    "DomainError",
    "FaftError",
    "SingularInformation",
    "StructureError",
    "SupportViolation",
    "UnsupportedOperation",
    "fit",
    "q_n_rule",
    "run_cli",
    "simulate",
    "true_beta",
    "true_loghazard",
]
