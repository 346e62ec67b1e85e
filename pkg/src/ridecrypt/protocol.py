"""The honest matching protocol.

A rider encrypts, for every (coordinate, block) position and every possible
block value, the weighted difference between that value and its own block;
a responding driver encrypts only its actual block. The matching party can
test equality of a driver block against each rider candidate through the
PRF chain and, on the unique hit, unmask the signed difference. Summing
those per coordinate and taking the maximum magnitude reproduces the
embedding distance without either party revealing its vector.

Everything the matching party receives lives in the request/response types
below: ciphertext bytes, group nonces, and clear (coordinate, block index)
labels. No plaintext block or coordinate value ever appears in them.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Mapping, NamedTuple, Sequence

from .codec import (
    PAYLOAD_BYTES,
    BlockParams,
    decode_signed,
    decompose,
    encode_signed,
    weighted_difference,
)
from .crypto import (
    PRF_OUTPUT_BYTES,
    SystemKeys,
    encode_message,
    generate_nonce,
    prf_f,
    prf_h,
    xor_bytes,
)
from .errors import ProtocolFault, PrfCollisionError

# The payload pad is a slice of a PRF output.
assert PRF_OUTPUT_BYTES >= PAYLOAD_BYTES


@dataclass(frozen=True)
class RideContext:
    """Session scope shared by all parties of one matching round."""

    zone_id: int
    time_slot: int
    params: BlockParams
    dim: int

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError("embedding dimension must be >= 1")
        if not 0 <= self.zone_id < 2**32:
            raise ValueError("zone_id must fit 32 bits")
        if not 0 <= self.time_slot < 2**32:
            raise ValueError("time_slot must fit 32 bits")

    @property
    def total_blocks(self) -> int:
        return self.dim * self.params.num_blocks


class RiderEntry(NamedTuple):
    """One candidate ciphertext: identifying tag, equality token, masked
    signed difference. The tag is realized as the equality token itself."""

    tag: bytes
    c1: bytes
    c2: bytes


@dataclass(frozen=True)
class RiderBlockGroup:
    """All candidate ciphertexts for one (coordinate, block) position,
    in hidden order, under one shared nonce."""

    coord: int
    block_index: int
    nonce: bytes
    entries: tuple[RiderEntry, ...]


@dataclass(frozen=True)
class RiderRequest:
    context: RideContext
    groups: tuple[RiderBlockGroup, ...]


class DriverEntry(NamedTuple):
    """One driver ciphertext: PRF keys from which the rider's equality token
    and payload pad re-derive under the group nonce."""

    coord: int
    block_index: int
    c1: bytes
    c2: bytes


@dataclass(frozen=True)
class DriverResponse:
    driver_id: int
    context: RideContext
    entries: tuple[DriverEntry, ...]


def _check_location(location: Sequence[int], ctx: RideContext) -> None:
    if len(location) != ctx.dim:
        raise ValueError(
            f"location has dimension {len(location)}, context expects {ctx.dim}"
        )


def rider_encrypt(
    location: Sequence[int],
    keys: SystemKeys,
    ctx: RideContext,
    rng: random.Random,
) -> RiderRequest:
    """Build the rider's request for ``location``.

    Per (coordinate, block) position: a fresh nonce and one entry per
    possible block value, in rng-permuted order. Group order is permuted
    too. Raises :class:`CapacityError` if a coordinate does not fit the
    block parameters.
    """
    _check_location(location, ctx)
    params = ctx.params
    groups = []
    for i, coordinate in enumerate(location):
        blocks = decompose(coordinate, params)
        for j, block in enumerate(blocks):
            nonce = generate_nonce(rng)
            entries = []
            for q in range(params.base):
                message = encode_message(q, i, j, ctx.zone_id, ctx.time_slot)
                token = prf_f(prf_h(keys.match_key, message), nonce)
                pad = prf_f(prf_h(keys.mask_key, message), nonce)[:PAYLOAD_BYTES]
                payload = weighted_difference(q, block, j, params)
                masked = xor_bytes(pad, encode_signed(payload))
                entries.append(RiderEntry(tag=token, c1=token, c2=masked))
            rng.shuffle(entries)
            groups.append(
                RiderBlockGroup(coord=i, block_index=j, nonce=nonce, entries=tuple(entries))
            )
    rng.shuffle(groups)
    return RiderRequest(context=ctx, groups=tuple(groups))


def driver_encrypt(
    driver_id: int,
    location: Sequence[int],
    keys: SystemKeys,
    ctx: RideContext,
    rng: random.Random,
) -> DriverResponse:
    """Build a driver's response: a single ciphertext pair per
    (coordinate, block) position, entry order permuted."""
    _check_location(location, ctx)
    params = ctx.params
    entries = []
    for i, coordinate in enumerate(location):
        for j, block in enumerate(decompose(coordinate, params)):
            message = encode_message(block, i, j, ctx.zone_id, ctx.time_slot)
            entries.append(
                DriverEntry(
                    coord=i,
                    block_index=j,
                    c1=prf_h(keys.match_key, message),
                    c2=prf_h(keys.mask_key, message),
                )
            )
    rng.shuffle(entries)
    return DriverResponse(driver_id=driver_id, context=ctx, entries=tuple(entries))


def sp_match_block(group: RiderBlockGroup, entry: DriverEntry) -> int | None:
    """Try a driver pair against one rider group.

    Returns the unmasked signed payload on the unique equality-token hit,
    ``None`` if nothing matches (the pair belongs to another position), and
    raises :class:`PrfCollisionError` on more than one hit.
    """
    token = prf_f(entry.c1, group.nonce)
    hits = [e for e in group.entries if e.c1 == token]
    if not hits:
        return None
    if len(hits) > 1:
        raise PrfCollisionError(
            f"{len(hits)} rider entries matched one driver ciphertext at "
            f"position ({group.coord}, {group.block_index})"
        )
    pad = prf_f(entry.c2, group.nonce)[:PAYLOAD_BYTES]
    return decode_signed(xor_bytes(hits[0].c2, pad))


def sp_match_all(
    request: RiderRequest, response: DriverResponse
) -> dict[tuple[int, int], int]:
    """Match every driver pair to its rider group and unmask all payloads.

    Returns the complete map (coordinate, block index) -> signed payload;
    an unmatched or duplicated pair is a protocol fault.
    """
    if request.context != response.context:
        raise ProtocolFault("request and response belong to different sessions")
    groups = {(g.coord, g.block_index): g for g in request.groups}
    if len(groups) != len(request.groups):
        raise ProtocolFault("rider request repeats a (coord, block) group")
    diffs: dict[tuple[int, int], int] = {}
    for entry in response.entries:
        label = (entry.coord, entry.block_index)
        group = groups.get(label)
        if group is None:
            raise ProtocolFault(f"driver ciphertext at {label} has no rider group")
        if label in diffs:
            raise ProtocolFault(f"duplicate driver ciphertext at {label}")
        payload = sp_match_block(group, entry)
        if payload is None:
            raise ProtocolFault(f"driver ciphertext at {label} matched no rider entry")
        diffs[label] = payload
    if len(diffs) != request.context.total_blocks:
        raise ProtocolFault(
            f"matched {len(diffs)} of {request.context.total_blocks} positions"
        )
    return diffs


def sp_compute_distance(
    diffs: Mapping[tuple[int, int], int], ctx: RideContext
) -> int:
    """Aggregate matched payloads into the embedding distance: sum the
    signed payloads per coordinate, take the maximum magnitude."""
    expected = {
        (i, j) for i in range(ctx.dim) for j in range(ctx.params.num_blocks)
    }
    if set(diffs.keys()) != expected:
        raise ValueError("difference map does not cover every (coord, block) position")
    best = 0
    for i in range(ctx.dim):
        total = sum(diffs[(i, j)] for j in range(ctx.params.num_blocks))
        best = max(best, abs(total))
    return best


def sp_select_driver(
    request: RiderRequest, responses: Sequence[DriverResponse]
) -> int:
    """Pick the responding driver with minimum distance, lowest id on ties."""
    if not responses:
        raise ValueError("no drivers responded")
    best_id = None
    best_key = None
    for response in responses:
        distance = sp_compute_distance(sp_match_all(request, response), request.context)
        key = (distance, response.driver_id)
        if best_key is None or key < best_key:
            best_key = key
            best_id = response.driver_id
    return best_id


class ServiceProvider:
    """The matching party. Holds session context and nothing else; the
    slots declaration makes it impossible to hand it key material."""

    __slots__ = ("context",)

    def __init__(self, context: RideContext) -> None:
        self.context = context

    def _check(self, request: RiderRequest) -> None:
        if request.context != self.context:
            raise ProtocolFault("request belongs to a different session")

    def match_response(
        self, request: RiderRequest, response: DriverResponse
    ) -> dict[tuple[int, int], int]:
        self._check(request)
        return sp_match_all(request, response)

    def distance_to(self, request: RiderRequest, response: DriverResponse) -> int:
        self._check(request)
        return sp_compute_distance(sp_match_all(request, response), self.context)

    def select_driver(
        self, request: RiderRequest, responses: Sequence[DriverResponse]
    ) -> int:
        self._check(request)
        return sp_select_driver(request, responses)


# Re-exported so protocol users can catch the crypto-layer fault directly.
__all__ = [
    "RideContext",
    "RiderEntry",
    "RiderBlockGroup",
    "RiderRequest",
    "DriverEntry",
    "DriverResponse",
    "rider_encrypt",
    "driver_encrypt",
    "sp_match_block",
    "sp_match_all",
    "sp_compute_distance",
    "sp_select_driver",
    "ServiceProvider",
    "PrfCollisionError",
]
