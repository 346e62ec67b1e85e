"""Passive location recovery from the matching party's own transcript.

The matching step hands the service provider a signed, weight-scaled block
difference for every (coordinate, block) position and every responding
driver. Dividing out the public weight gives the raw difference
``driver_block - rider_block``. Collected across drivers, each position's
differences confine the rider's block to an integer interval; once the
interval collapses to a point the block is known, and every driver's block
follows by adding its difference back. No extra protocol messages are
needed; the input here is exactly the output of honest matching.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .codec import BlockParams, decompose, recompose
from .errors import LedgerFault
from .roadnet import RneVector, rne_distance


def recover_block(diffs: Iterable[int], block_bits: int) -> tuple[int, int]:
    """Interval of block values consistent with the observed differences.

    A block ``x`` is feasible iff ``x + d`` stays inside ``[0, 2**bits - 1]``
    for every observed difference ``d``, so the interval is
    ``[max(0, -min(diffs)), min(top, top - max(diffs))]``. It collapses to a
    point in particular when all ``2**bits`` shifted values were observed
    (then the point is ``-min(diffs)``), and more generally whenever the
    difference spread reaches ``2**bits - 1``.
    """
    diffs = list(diffs)
    if not diffs:
        raise ValueError("need at least one difference")
    top = (1 << block_bits) - 1
    smallest = min(diffs)
    largest = max(diffs)
    if smallest < -top or largest > top:
        raise ValueError(f"difference out of range for {block_bits}-bit blocks")
    lo = max(0, -smallest)
    hi = min(top, top - largest)
    if lo > hi:
        raise LedgerFault(f"no block value is consistent with differences {diffs}")
    return lo, hi


def has_full_coverage(diffs: Iterable[int], block_bits: int) -> bool:
    """Whether differences to all ``2**bits`` distinct block values were seen."""
    return len(set(diffs)) == 1 << block_bits


class _Cell:
    """Per-position difference list plus O(1) uniqueness bookkeeping."""

    __slots__ = ("entries", "dmin", "dmax", "distinct")

    def __init__(self) -> None:
        self.entries: list[tuple[int, int]] = []  # (driver_id, difference)
        self.dmin = 0
        self.dmax = 0
        self.distinct: set[int] = set()

    def add(self, driver_id: int, d: int) -> None:
        if not self.entries:
            self.dmin = self.dmax = d
        else:
            self.dmin = min(self.dmin, d)
            self.dmax = max(self.dmax, d)
        self.entries.append((driver_id, d))
        self.distinct.add(d)


class DifferenceLedger:
    """The service provider's per-position collection of signed block
    differences across responding drivers. Single writer per session;
    recovery functions only read it."""

    def __init__(self, params: BlockParams, dim: int) -> None:
        if dim < 1:
            raise ValueError("dimension must be >= 1")
        self.params = params
        self.dim = dim
        self._cells: dict[tuple[int, int], _Cell] = {}

    def positions(self) -> list[tuple[int, int]]:
        return [
            (i, j) for i in range(self.dim) for j in range(self.params.num_blocks)
        ]

    def record(self, coord: int, block_index: int, driver_id: int, payload: int) -> None:
        """File one matched payload. The payload must be an exact multiple
        of the position weight and normalize to an in-range difference."""
        if not 0 <= coord < self.dim:
            raise ValueError(f"coordinate {coord} out of range")
        weight = self.params.weight(block_index)
        if payload % weight != 0:
            raise LedgerFault(
                f"payload {payload} at ({coord}, {block_index}) is not a "
                f"multiple of weight {weight}"
            )
        d = payload // weight
        top = self.params.base - 1
        if abs(d) > top:
            raise LedgerFault(
                f"difference {d} at ({coord}, {block_index}) exceeds block range"
            )
        cell = self._cells.get((coord, block_index))
        if cell is None:
            cell = self._cells[(coord, block_index)] = _Cell()
        cell.add(driver_id, d)

    def record_matches(
        self, driver_id: int, matches: Mapping[tuple[int, int], int]
    ) -> None:
        """File a whole matched response (the output of ``sp_match_all``)."""
        for (coord, block_index), payload in matches.items():
            self.record(coord, block_index, driver_id, payload)

    def merge(self, other: "DifferenceLedger") -> None:
        """Fold another ledger for the same rider and parameters into this
        one (multi-request accumulation; off by default in the harness)."""
        if other.params != self.params or other.dim != self.dim:
            raise ValueError("cannot merge ledgers with different parameters")
        for pos, cell in other._cells.items():
            for driver_id, d in cell.entries:
                self.record(pos[0], pos[1], driver_id, d * self.params.weight(pos[1]))

    def diffs(self, coord: int, block_index: int) -> list[int]:
        cell = self._cells.get((coord, block_index))
        return [d for _, d in cell.entries] if cell else []

    def drivers(self) -> list[int]:
        ids = {driver_id for cell in self._cells.values() for driver_id, _ in cell.entries}
        return sorted(ids)

    def driver_diffs(self, driver_id: int) -> dict[tuple[int, int], int]:
        """This driver's difference per position (latest entry if repeated)."""
        out: dict[tuple[int, int], int] = {}
        for pos, cell in self._cells.items():
            for did, d in cell.entries:
                if did == driver_id:
                    out[pos] = d
        return out

    def interval(self, coord: int, block_index: int) -> tuple[int, int]:
        """Current candidate interval; the full range if nothing was seen."""
        cell = self._cells.get((coord, block_index))
        if cell is None or not cell.entries:
            return 0, self.params.base - 1
        top = self.params.base - 1
        lo = max(0, -cell.dmin)
        hi = min(top, top - cell.dmax)
        if lo > hi:
            raise LedgerFault(
                f"no block value is consistent at ({coord}, {block_index})"
            )
        return lo, hi

    def is_unique(self, coord: int, block_index: int, strict: bool = False) -> bool:
        """Whether this position's rider block is pinned down.

        Strict mode requires differences to all ``2**bits`` values, the
        criterion under which the expected-responder counts are computed;
        the default accepts any interval that closed to a point.
        """
        cell = self._cells.get((coord, block_index))
        if cell is None or not cell.entries:
            return False
        if strict:
            return len(cell.distinct) == self.params.base
        lo, hi = self.interval(coord, block_index)
        return lo == hi


def recover_rider_vector(
    ledger: DifferenceLedger, strict: bool = False
) -> tuple[RneVector | None, dict[tuple[int, int], tuple[int, int]]]:
    """Recover the rider's embedding vector if every position is unique.

    Returns ``(vector, candidates)``; the vector is ``None`` while any
    position is still ambiguous, the candidate intervals are always
    reported.
    """
    candidates: dict[tuple[int, int], tuple[int, int]] = {}
    blocks: dict[tuple[int, int], int] = {}
    complete = True
    for pos in ledger.positions():
        interval = ledger.interval(*pos)
        candidates[pos] = interval
        if ledger.is_unique(*pos, strict=strict):
            blocks[pos] = interval[0]
        else:
            complete = False
    if not complete:
        return None, candidates
    vector = tuple(
        recompose(
            [blocks[(i, j)] for j in range(ledger.params.num_blocks)], ledger.params
        )
        for i in range(ledger.dim)
    )
    return vector, candidates


def recover_driver_vectors(
    ledger: DifferenceLedger, rider_vector: Sequence[int]
) -> dict[int, RneVector]:
    """Given the recovered rider vector, rebuild every responding driver's
    vector by adding its recorded differences back onto the rider blocks."""
    if len(rider_vector) != ledger.dim:
        raise ValueError("rider vector dimension does not match ledger")
    params = ledger.params
    rider_blocks = {
        (i, j): block
        for i, coordinate in enumerate(rider_vector)
        for j, block in enumerate(decompose(coordinate, params))
    }
    vectors: dict[int, RneVector] = {}
    for driver_id in ledger.drivers():
        dmap = ledger.driver_diffs(driver_id)
        if set(dmap.keys()) != set(ledger.positions()):
            raise LedgerFault(f"driver {driver_id} has an incomplete difference set")
        coords = []
        for i in range(ledger.dim):
            blocks = []
            for j in range(params.num_blocks):
                block = rider_blocks[(i, j)] + dmap[(i, j)]
                if not 0 <= block < params.base:
                    raise LedgerFault(
                        f"driver {driver_id} block {block} at ({i}, {j}) "
                        f"is out of range"
                    )
                blocks.append(block)
            coords.append(recompose(blocks, params))
        vectors[driver_id] = tuple(coords)
    return vectors


def deanonymize(
    vector: Sequence[int], table: Sequence[RneVector]
) -> tuple[int, int]:
    """Map a recovered vector back to a node of the embedded network.

    Returns ``(node, ambiguity)`` where the node's embedding is at minimal
    Chebyshev distance from ``vector`` (distance zero for an exact match),
    the lowest such node id wins, and ``ambiguity`` counts how many nodes
    tie at that distance.
    """
    if not table:
        raise ValueError("embedding table is empty")
    best_node = 0
    best_dist = rne_distance(vector, table[0])
    count = 1
    for node in range(1, len(table)):
        d = rne_distance(vector, table[node])
        if d < best_dist:
            best_node, best_dist, count = node, d, 1
        elif d == best_dist:
            count += 1
    return best_node, count


@dataclass
class RecoveryReport:
    """Outcome of one attack run over a session's matched responses."""

    strict: bool
    blocks_total: int
    blocks_recovered: int
    candidates: dict[tuple[int, int], tuple[int, int]]
    unique_at: dict[tuple[int, int], int | None]
    rider_vector: RneVector | None
    driver_vectors: dict[int, RneVector] = field(default_factory=dict)
    rider_node: int | None = None
    rider_ambiguity: int | None = None
    driver_nodes: dict[int, tuple[int, int]] = field(default_factory=dict)

    @property
    def complete(self) -> bool:
        return self.rider_vector is not None


def run_attack(
    params: BlockParams,
    dim: int,
    matched_responses: Sequence[tuple[int, Mapping[tuple[int, int], int]]],
    strict: bool = False,
    embedding_table: Sequence[RneVector] | None = None,
) -> RecoveryReport:
    """Run the full recovery over matched responses, in arrival order.

    ``matched_responses`` holds ``(driver_id, sp_match_all output)`` pairs,
    i.e. precisely the data the matching party produces while doing its
    legitimate job. ``unique_at`` records, per position, after how many
    responses the rider block became unique under the chosen mode.
    """
    ledger = DifferenceLedger(params, dim)
    unique_at: dict[tuple[int, int], int | None] = {
        pos: None for pos in ledger.positions()
    }
    for count, (driver_id, matches) in enumerate(matched_responses, start=1):
        ledger.record_matches(driver_id, matches)
        for pos, at in unique_at.items():
            if at is None and ledger.is_unique(*pos, strict=strict):
                unique_at[pos] = count

    rider_vector, candidates = recover_rider_vector(ledger, strict=strict)
    report = RecoveryReport(
        strict=strict,
        blocks_total=len(unique_at),
        blocks_recovered=sum(1 for at in unique_at.values() if at is not None),
        candidates=candidates,
        unique_at=unique_at,
        rider_vector=rider_vector,
    )
    if rider_vector is not None:
        report.driver_vectors = recover_driver_vectors(ledger, rider_vector)
        if embedding_table is not None:
            report.rider_node, report.rider_ambiguity = deanonymize(
                rider_vector, embedding_table
            )
            report.driver_nodes = {
                driver_id: deanonymize(vec, embedding_table)
                for driver_id, vec in report.driver_vectors.items()
            }
    return report
