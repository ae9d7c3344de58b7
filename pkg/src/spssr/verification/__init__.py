from .audits import (
    ENUMERATION_BUDGET,
    audit_correctness,
    audit_privacy_exact,
    audit_privacy_statistical,
    audit_security_algebraic,
    audit_security_exact,
    query_distributions,
    verify_metrics,
)
from .comparison import CSV_HEADER, ComparisonRow, comparison_csv, comparison_table
from .mutants import KEYS_ZEROED, UNSIGNED_DECODER, biased_query
from .report import AuditReport, merge_reports

__all__ = [
    "ENUMERATION_BUDGET", "audit_correctness", "audit_privacy_exact", "audit_privacy_statistical",
    "audit_security_algebraic", "audit_security_exact", "query_distributions", "verify_metrics",
    "CSV_HEADER", "ComparisonRow", "comparison_csv", "comparison_table",
    "KEYS_ZEROED", "UNSIGNED_DECODER", "biased_query", "AuditReport", "merge_reports",
]
