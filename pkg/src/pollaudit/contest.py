"""Domain types for a winner-vs-loser audited contest and its history."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .errors import DomainError


@dataclass(frozen=True)
class PairwiseContest:
    """One reported winner against one reported loser.

    ``p_a`` is the winner's share among ballots relevant to the pair and
    equals (1 + margin) / 2 exactly; ``relevant_fraction`` is the share
    of all cast ballots that belong to the pair, used to scale pairwise
    round sizes up to full-sample draws.
    """

    margin: float
    relevant_fraction: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.margin < 1.0:
            raise DomainError(f"margin must be in (0,1), got {self.margin}")
        if not 0.0 < self.relevant_fraction <= 1.0:
            raise DomainError(
                f"relevant_fraction must be in (0,1], got {self.relevant_fraction}"
            )

    @property
    def p_a(self) -> float:
        return (1.0 + self.margin) / 2.0

    @property
    def p_0(self) -> float:
        return 0.5

    @staticmethod
    def from_winner_share(p_a: float, relevant_fraction: float = 1.0) -> "PairwiseContest":
        if not 0.5 < p_a < 1.0:
            raise DomainError(f"winner share must be in (1/2, 1), got {p_a}")
        return PairwiseContest(2.0 * p_a - 1.0, relevant_fraction)

    @staticmethod
    def from_tallies(winner: int, loser: int, total_ballots: int | None = None) -> "PairwiseContest":
        if winner <= loser:
            raise DomainError(f"winner tally {winner} must exceed loser tally {loser}")
        pair = winner + loser
        frac = 1.0 if total_ballots is None else pair / total_ballots
        return PairwiseContest((winner - loser) / pair, frac)


@dataclass(frozen=True)
class RiskLimit:
    alpha: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"risk limit must be in (0,1), got {self.alpha}")


def check_alpha(alpha: float) -> float:
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"risk limit must be in (0,1), got {alpha}")
    return alpha


class Decision(str, enum.Enum):
    CORRECT = "Correct"
    UNDETERMINED = "Undetermined"


@dataclass(frozen=True)
class RoundHistory:
    """Cumulative round sizes and winner tallies, optionally with the
    per-ballot selection order (1 = ballot for the reported winner)."""

    cumulative_n: tuple[int, ...]
    cumulative_k: tuple[int, ...]
    selection_order: tuple[tuple[int, ...], ...] | None = None

    def __post_init__(self):
        ns, ks = self.cumulative_n, self.cumulative_k
        if len(ns) != len(ks):
            raise DomainError("cumulative_n and cumulative_k lengths differ")
        prev_n, prev_k = 0, 0
        for i, (n, k) in enumerate(zip(ns, ks)):
            if n <= prev_n:
                raise DomainError(f"round {i + 1}: cumulative n must be strictly increasing")
            if k < prev_k or k > n:
                raise DomainError(f"round {i + 1}: cumulative k={k} outside [{prev_k}, {n}]")
            if k - prev_k > n - prev_n:
                raise DomainError(f"round {i + 1}: marginal k exceeds marginal round size")
            prev_n, prev_k = n, k
        if self.selection_order is not None:
            if len(self.selection_order) != len(ns):
                raise DomainError("selection_order must cover every round")
            prev_n, prev_k = 0, 0
            for i, bits in enumerate(self.selection_order):
                if any(b not in (0, 1) for b in bits):
                    raise DomainError(f"round {i + 1}: selection order entries must be 0/1")
                if len(bits) != ns[i] - prev_n:
                    raise DomainError(f"round {i + 1}: selection order length != marginal size")
                if sum(bits) != ks[i] - prev_k:
                    raise DomainError(f"round {i + 1}: selection order sum != marginal tally")
                prev_n, prev_k = ns[i], ks[i]

    @staticmethod
    def from_rounds(pairs: list[tuple[int, int]], selection_order=None) -> "RoundHistory":
        ns = tuple(n for n, _ in pairs)
        ks = tuple(k for _, k in pairs)
        order = None if selection_order is None else tuple(tuple(r) for r in selection_order)
        return RoundHistory(ns, ks, order)

    @property
    def rounds(self) -> int:
        return len(self.cumulative_n)

    def marginal_n(self, j: int) -> int:
        """Ballots drawn in round j (1-based)."""
        return self.cumulative_n[j - 1] - (self.cumulative_n[j - 2] if j >= 2 else 0)

    def marginal_k(self, j: int) -> int:
        return self.cumulative_k[j - 1] - (self.cumulative_k[j - 2] if j >= 2 else 0)

    def prefix(self, j: int) -> "RoundHistory":
        order = None if self.selection_order is None else self.selection_order[:j]
        return RoundHistory(self.cumulative_n[:j], self.cumulative_k[:j], order)

    def with_round(self, n: int, k: int, order=None) -> "RoundHistory":
        new_order = None
        if self.selection_order is not None or order is not None:
            if self.selection_order is None and self.rounds > 0:
                raise DomainError("selection order missing for earlier rounds")
            new_order = (self.selection_order or ()) + ((tuple(order),) if order is not None else ())
            if order is None:
                raise DomainError("selection order required for every round once used")
        return RoundHistory(self.cumulative_n + (n,), self.cumulative_k + (k,), new_order)

    def concatenated_order(self) -> tuple[int, ...]:
        if self.selection_order is None:
            raise DomainError("history has no selection order")
        out: tuple[int, ...] = ()
        for bits in self.selection_order:
            out += tuple(bits)
        return out


@dataclass(frozen=True)
class AuditVerdict:
    """Stop/continue decision for the latest round."""

    decision: Decision
    measured_risk: float
    kmin: int
    misleading_now: bool

    @property
    def stopped(self) -> bool:
        return self.decision is Decision.CORRECT

    def to_dict(self) -> dict:
        return {
            "decision": self.decision.value,
            "measured_risk": self.measured_risk,
            "kmin": self.kmin,
            "misleading_now": self.misleading_now,
        }


empty_history = RoundHistory((), ())
