"""Contest results, ballot manifests, pairwise derivation, and
reproducible ballot sampling.

CSV schemas:

results:   header ``candidate,votes``; one row per candidate; one
           ``_total_ballots_cast,<N>`` row for all cast ballots
           (the excess over the tally sum is irrelevant ballots).
manifest:  header ``county,container,ballots``; one row per storage
           container (precinct granularity in practice).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

from .contest import PairwiseContest
from .errors import DomainError, ParseError
from .rng import sample_position

TOTAL_ROW = "_total_ballots_cast"


@dataclass(frozen=True)
class ContestResults:
    contest_id: str
    tallies: dict[str, int]
    total_ballots_cast: int
    reported_winner: str

    def __post_init__(self):
        if len(self.tallies) < 1:
            raise DomainError("contest needs at least one candidate")
        if any(v < 0 for v in self.tallies.values()):
            raise DomainError("negative tally")
        if sum(self.tallies.values()) > self.total_ballots_cast:
            raise DomainError("tallies exceed total ballots cast")
        if self.reported_winner not in self.tallies:
            raise DomainError(f"winner {self.reported_winner!r} not among candidates")
        top = self.tallies[self.reported_winner]
        others = [v for c, v in self.tallies.items() if c != self.reported_winner]
        if others and max(others) >= top:
            raise DomainError("reported winner must have the strict maximum tally")

    def losers(self) -> list[str]:
        """Losing candidates, largest tally first (ties by name)."""
        return sorted(
            (c for c in self.tallies if c != self.reported_winner),
            key=lambda c: (-self.tallies[c], c),
        )


def parse_results(text: str, contest_id: str = "contest") -> ContestResults:
    """Parse the results CSV; errors carry the 1-based line number."""
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows or [c.strip() for c in rows[0][:2]] != ["candidate", "votes"]:
        raise ParseError("expected header 'candidate,votes'", line=1)
    tallies: dict[str, int] = {}
    total: int | None = None
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) < 2:
            raise ParseError("expected 'candidate,votes'", line=lineno)
        name = row[0].strip()
        try:
            votes = int(row[1])
        except ValueError:
            raise ParseError(f"votes must be an integer, got {row[1]!r}", line=lineno) from None
        if votes < 0:
            raise ParseError("negative vote count", line=lineno)
        if name == TOTAL_ROW:
            if total is not None:
                raise ParseError("duplicate total row", line=lineno)
            total = votes
            continue
        if name in tallies:
            raise ParseError(f"duplicate candidate {name!r}", line=lineno)
        tallies[name] = votes
    if total is None:
        raise ParseError(f"missing {TOTAL_ROW!r} row")
    if not tallies:
        raise ParseError("no candidate rows")
    ranked = sorted(tallies, key=lambda c: (-tallies[c], c))
    if len(ranked) >= 2 and tallies[ranked[0]] == tallies[ranked[1]]:
        raise ParseError("reported winner is tied")
    try:
        return ContestResults(contest_id, tallies, total, ranked[0])
    except DomainError as exc:
        raise ParseError(str(exc)) from exc


def serialize_results(results: ContestResults) -> str:
    """Canonical CSV: candidates by descending tally, total row last."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["candidate", "votes"])
    for c in sorted(results.tallies, key=lambda c: (-results.tallies[c], c)):
        writer.writerow([c, results.tallies[c]])
    writer.writerow([TOTAL_ROW, results.total_ballots_cast])
    return buf.getvalue()


def derive_pairwise(results: ContestResults) -> list[PairwiseContest]:
    """One winner-vs-loser reduction per losing candidate."""
    if len(results.tallies) < 2:
        raise DomainError("pairwise derivation needs at least two candidates")
    w = results.tallies[results.reported_winner]
    out = []
    for loser in results.losers():
        l = results.tallies[loser]
        pair = w + l
        out.append(
            PairwiseContest(
                margin=(w - l) / pair,
                relevant_fraction=pair / results.total_ballots_cast,
            )
        )
    return out


@dataclass(frozen=True)
class ManifestEntry:
    county: str
    container: str
    ballot_count: int

    def __post_init__(self):
        if self.ballot_count <= 0:
            raise DomainError("container ballot count must be positive")


@dataclass(frozen=True)
class BallotManifest:
    entries: tuple[ManifestEntry, ...]

    def __post_init__(self):
        if not self.entries:
            raise DomainError("manifest is empty")

    def total(self) -> int:
        return sum(e.ballot_count for e in self.entries)

    def locate(self, position: int) -> tuple[str, str, int]:
        """Map a 1-based ballot position to (county, container,
        position-within-container)."""
        if not 1 <= position <= self.total():
            raise DomainError(f"position {position} outside [1, {self.total()}]")
        offset = 0
        for e in self.entries:
            if position <= offset + e.ballot_count:
                return (e.county, e.container, position - offset)
            offset += e.ballot_count
        raise AssertionError("unreachable")


def parse_manifest(text: str) -> BallotManifest:
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows or [c.strip() for c in rows[0][:3]] != ["county", "container", "ballots"]:
        raise ParseError("expected header 'county,container,ballots'", line=1)
    entries = []
    seen = set()
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) < 3:
            raise ParseError("expected 'county,container,ballots'", line=lineno)
        county, container = row[0].strip(), row[1].strip()
        try:
            count = int(row[2])
        except ValueError:
            raise ParseError(f"ballots must be an integer, got {row[2]!r}", line=lineno) from None
        if count <= 0:
            raise ParseError("container ballot count must be positive", line=lineno)
        if (county, container) in seen:
            raise ParseError(f"duplicate container {county!r}/{container!r}", line=lineno)
        seen.add((county, container))
        entries.append(ManifestEntry(county, container, count))
    if not entries:
        raise ParseError("no container rows")
    return BallotManifest(tuple(entries))


def serialize_manifest(manifest: BallotManifest) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["county", "container", "ballots"])
    for e in manifest.entries:
        writer.writerow([e.county, e.container, e.ballot_count])
    return buf.getvalue()


def draw_sample(
    manifest: BallotManifest,
    count: int,
    seed: int,
    already_drawn_count: int = 0,
) -> list[tuple[str, str, int]]:
    """Uniform with-replacement draws at indices already_drawn_count+1
    onward, mapped through the manifest.

    Draw i is keyed by (seed, i) alone, so any partition of the index
    range reproduces the same positions.
    """
    if count < 1:
        raise DomainError("count must be >= 1")
    total = manifest.total()
    draws = []
    for i in range(already_drawn_count + 1, already_drawn_count + count + 1):
        draws.append(manifest.locate(sample_position(seed, i, total)))
    return draws
