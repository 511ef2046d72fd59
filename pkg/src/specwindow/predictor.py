"""Direct-indexed table of 2-bit saturating counters."""
from __future__ import annotations

STRONG_NT, WEAK_NT, WEAK_T, STRONG_T = 0, 1, 2, 3
ENTRIES = 256

COUNTER_NAMES = ("strong-NT", "weak-NT", "weak-T", "strong-T")


class PredictorState:
    __slots__ = ("table",)

    def __init__(self, table=None):
        if table is None:
            self.table = bytearray([WEAK_NT]) * ENTRIES
        else:
            self.table = bytearray(table)
            if len(self.table) != ENTRIES or max(self.table) > STRONG_T:
                raise ValueError("predictor table must hold 256 counters in 0..3")

    def copy(self):
        return PredictorState(self.table)

    def counter(self, branch_id: int) -> int:
        return self.table[branch_id % ENTRIES]

    def __eq__(self, other):
        if not isinstance(other, PredictorState):
            return NotImplemented
        return self.table == other.table

    def __repr__(self):
        trained = sum(1 for c in self.table if c != WEAK_NT)
        return f"PredictorState({trained} entries off initial)"


def predict(p: PredictorState, branch_id: int) -> bool:
    """True means taken."""
    return p.table[branch_id % ENTRIES] >= WEAK_T


def update_predictor(p: PredictorState, branch_id: int, taken: bool) -> PredictorState:
    p = p.copy()
    i = branch_id % ENTRIES
    c = p.table[i]
    p.table[i] = min(c + 1, STRONG_T) if taken else max(c - 1, STRONG_NT)
    return p
