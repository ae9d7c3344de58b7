from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from ..model import DemandFamily, SchemeParams

AUDIT_KINDS = ("correctness", "privacy_exact", "privacy_statistical",
               "security_exact", "security_algebraic", "metrics")


def instance_descriptor(params: SchemeParams, family: DemandFamily | None = None) -> dict:
    doc = {"N": params.N, "K": params.K, "D": params.D, "E": params.E, "q": params.q.q}
    if family is not None:
        doc["family"] = [list(s) for s in family.sets]
    return doc


def _jsonable(value):
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


@dataclass
class AuditReport:
    audit_kind: str
    instance: dict
    passed: bool
    evidence: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.audit_kind not in AUDIT_KINDS:
            raise ValueError(f"unknown audit kind {self.audit_kind!r}")

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def to_json(self) -> dict:
        return {"audit": self.audit_kind, "instance": self.instance,
                "verdict": self.verdict, "evidence": _jsonable(self.evidence)}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps() + "\n", encoding="utf-8")


def merge_reports(kind: str, instance: dict, reports: list[AuditReport]) -> AuditReport:
    """Combine per-demand (or per-shard) reports; passes iff all of them pass."""
    return AuditReport(kind, instance, all(r.passed for r in reports),
                       {"parts": [r.to_json() for r in reports]})
