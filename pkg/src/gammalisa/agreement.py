"""Agreement between two significance labelings: MCC and Rand index."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class AgreementTable:
    """2x2 counts; ``first`` is treated as the reference labeling."""

    TP: int
    FP: int
    FN: int
    TN: int

    @property
    def n(self) -> int:
        return self.TP + self.FP + self.FN + self.TN

    @classmethod
    def from_labels(cls, first, second) -> "AgreementTable":
        a = np.asarray(first, dtype=bool)
        b = np.asarray(second, dtype=bool)
        if a.shape != b.shape:
            raise ValueError(f"labelings differ in length: {a.shape} vs {b.shape}")
        return cls(
            TP=int(np.sum(a & b)),
            FP=int(np.sum(~a & b)),
            FN=int(np.sum(a & ~b)),
            TN=int(np.sum(~a & ~b)),
        )

    def transpose(self) -> "AgreementTable":
        return AgreementTable(self.TP, self.FN, self.FP, self.TN)


def mcc(t: AgreementTable) -> float:
    """Matthews correlation; 0 when any marginal is empty."""
    denom = (t.TP + t.FP) * (t.TP + t.FN) * (t.TN + t.FP) * (t.TN + t.FN)
    if denom == 0:
        return 0.0
    # integer numerator/denominator keep large counts exact until the sqrt
    return (t.TP * t.TN - t.FP * t.FN) / math.sqrt(denom)


def rand_index(t: AgreementTable) -> float:
    if t.n == 0:
        raise ValueError("Rand index of an empty table is undefined")
    return (t.TP + t.TN) / t.n
