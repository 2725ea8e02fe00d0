"""Match records, plies, rank groups, and per-player data points."""

import datetime
from dataclasses import dataclass, field

from ..errors import DataError

BLACK = "black"
WHITE = "white"


class Termination:
    PASS_PASS = "pass_pass"
    RESIGN = "resign"
    CHECKMATE = "checkmate"
    DRAW = "draw"
    TIMEOUT = "timeout"
    DISCONNECT = "disconnect"
    OTHER = "other"

    ALL = (PASS_PASS, RESIGN, CHECKMATE, DRAW, TIMEOUT, DISCONNECT, OTHER)


@dataclass(frozen=True)
class Ply:
    index: int  # 1-based, match-global
    mover: str  # black | white
    move: str  # go: board coordinate or "pass"; chess: from-to(-promotion)
    state_before: str  # canonical position encoding


@dataclass(frozen=True)
class RankGroup:
    game: str
    index: int
    label: str


@dataclass
class MatchRecord:
    game: str
    plies: list
    black_label: str
    white_label: str
    termination: str
    black_player: str = ""
    white_player: str = ""
    date: datetime.date | None = None
    time_control: str | None = None
    result: str = ""  # raw RE / Result text, kept for round-trips
    setup: bool = False  # handicap stones, FEN start, or broken alternation

    def __post_init__(self):
        if self.termination not in Termination.ALL:
            raise DataError(f"unknown termination {self.termination!r}")
        for i, ply in enumerate(self.plies):
            if ply.index != i + 1:
                raise DataError(f"ply index {ply.index} at position {i}")


@dataclass(frozen=True)
class DataPoint:
    """One player's side of one match: their moves with original ply indices."""

    match_id: str
    player_id: str
    side: str
    group: RankGroup
    moves: tuple  # of (ply_index, state_before, move)

    @property
    def k(self) -> int:
        return len(self.moves)

    def __post_init__(self):
        if len(self.moves) < 1:
            raise DataError("data point needs at least one move")
        indices = [m[0] for m in self.moves]
        if any(b <= a for a, b in zip(indices, indices[1:])):
            raise DataError("ply indices must be strictly increasing")


def split_sides(record: MatchRecord, match_id: str, group: RankGroup):
    """Partition an accepted record's plies into the two players' data points."""
    moves = {BLACK: [], WHITE: []}
    for ply in record.plies:
        moves[ply.mover].append((ply.index, ply.state_before, ply.move))
    players = {BLACK: record.black_player, WHITE: record.white_player}
    out = []
    for side in (BLACK, WHITE):
        out.append(
            DataPoint(
                match_id=match_id,
                player_id=players[side] or f"{match_id}:{side}",
                side=side,
                group=group,
                moves=tuple(moves[side]),
            )
        )
    return tuple(out)
