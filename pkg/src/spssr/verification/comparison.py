"""Subpacketization / randomness / rate comparison against baseline schemes.

Baselines are not simulated. Applying a single-message symmetric PIR
scheme D times needs L = N - 1; the symmetric multi-message scheme of
[WBU2022] is only known through a cited lower bound N^(K-D+1)/D, and
through the exact figure 36 at N=3, K=6, D=4.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction

from ..model import SchemeParams

CSV_HEADER = ("scheme", "subpacketization", "randomness_ratio", "rate")
CITED_SMPIR_L = {(3, 6, 4): 36}


@dataclass(frozen=True)
class ComparisonRow:
    scheme: str
    subpacketization: str
    randomness_ratio: Fraction
    rate: Fraction
    note: str = ""


def comparison_table(params: SchemeParams) -> list[ComparisonRow]:
    N, K, D = params.N, params.K, params.D
    rate = 1 - Fraction(1, N)
    ratio = Fraction(D, N - 1)
    cited = CITED_SMPIR_L.get((N, K, D))
    if cited is not None:
        smpir_l, note = str(cited), "cited constant"
    else:
        smpir_l, note = f">={Fraction(N ** (K - D + 1), D)}", "cited lower bound"
    return [
        ComparisonRow("spssr", str(params.L), params.randomness_ratio, params.rate, "this scheme"),
        ComparisonRow("spir-x-d", str(N - 1), ratio, rate, "single-message SPIR run D times"),
        ComparisonRow("smpir-wbu2022", smpir_l, ratio, rate, note),
    ]


def comparison_csv(rows: list[ComparisonRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([r.scheme, r.subpacketization, str(r.randomness_ratio), str(r.rate)])
    return buf.getvalue()
