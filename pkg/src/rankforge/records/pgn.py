"""PGN parsing and serialization.

SAN movetext is resolved against the legal-move generator; each ply
records the FEN before the move and the move in from-to(-promotion) form.
Comments, variations, and numeric annotation glyphs are skipped.
"""

import datetime
import re

from ..errors import ParseError
from .chess_rules import Move, Position, parse_san, to_san
from .types import BLACK, WHITE, MatchRecord, Ply, Termination

RESULTS = ("1-0", "0-1", "1/2-1/2", "*")

_TAG_RE = re.compile(r'\[\s*(\w+)\s+"((?:[^"\\]|\\.)*)"\s*\]')
_MOVE_NUMBER_RE = re.compile(r"^\d+\.*$")


def _skip_comment(text: str, pos: int) -> int:
    end = text.find("}", pos)
    if end < 0:
        raise ParseError("unterminated comment", offset=pos)
    return end + 1


def _skip_variation(text: str, pos: int) -> int:
    depth = 1
    while pos < len(text):
        ch = text[pos]
        pos += 1
        if ch == "{":
            pos = _skip_comment(text, pos)
        elif ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth == 0:
                return pos
    raise ParseError("unterminated variation", offset=pos)


def _scan_game(text: str, pos: int):
    """Scan one game starting at pos; returns (tags, san_tokens, result, end)."""
    tags: dict[str, str] = {}
    length = len(text)
    while pos < length:
        while pos < length and text[pos] in " \t\r\n":
            pos += 1
        if pos >= length or text[pos] != "[":
            break
        match = _TAG_RE.match(text, pos)
        if not match:
            raise ParseError("malformed tag pair", offset=pos)
        tags[match.group(1)] = match.group(2).replace('\\"', '"').replace("\\\\", "\\")
        pos = match.end()
    tokens: list[str] = []
    result = None
    while pos < length:
        ch = text[pos]
        if ch in " \t\r\n":
            pos += 1
        elif ch == "{":
            pos = _skip_comment(text, pos + 1)
        elif ch == ";":
            nl = text.find("\n", pos)
            pos = length if nl < 0 else nl + 1
        elif ch == "(":
            pos = _skip_variation(text, pos + 1)
        elif ch == "[":
            break  # next game's tag section
        elif ch == "$":
            pos += 1
            while pos < length and text[pos].isdigit():
                pos += 1
        else:
            start = pos
            while pos < length and text[pos] not in " \t\r\n{();":
                pos += 1
            token = text[start:pos]
            if token in RESULTS:
                result = token
                break
            if not _MOVE_NUMBER_RE.match(token):
                tokens.append(token)
    return tags, tokens, result, pos


def iter_pgn_games(text: str):
    """Yield (tags, san_tokens, result) for each game in the text."""
    pos = 0
    while True:
        while pos < len(text) and text[pos] in " \t\r\n":
            pos += 1
        if pos >= len(text):
            return
        tags, tokens, result, pos = _scan_game(text, pos)
        if not tags and not tokens:
            return
        yield tags, tokens, result


def _parse_date(value: str | None) -> datetime.date | None:
    if not value or "?" in value:
        return None
    for fmt in ("%Y.%m.%d", "%Y-%m-%d"):
        try:
            return datetime.datetime.strptime(value, fmt).date()
        except ValueError:
            continue
    return None


def _termination_of(tags: dict, result: str, final: Position) -> str:
    label = tags.get("Termination", "").strip().lower()
    if label.startswith("time"):
        return Termination.TIMEOUT
    if label.startswith(("abandon", "disconn")):
        return Termination.DISCONNECT
    if label.startswith(("rules", "cheat", "unterminated")):
        return Termination.OTHER
    if result == "1/2-1/2":
        return Termination.DRAW
    if result in ("1-0", "0-1"):
        return Termination.CHECKMATE if final.is_checkmate() else Termination.RESIGN
    return Termination.OTHER


def _record_from_game(tags: dict, tokens: list, result: str | None) -> MatchRecord:
    setup = False
    if tags.get("SetUp") == "1" or "FEN" in tags:
        setup = True
        position = Position.from_fen(tags["FEN"])
    else:
        position = Position.initial()
    plies = []
    for token in tokens:
        move_number = len(plies) // 2 + 1
        try:
            move = parse_san(position, token)
        except ParseError as exc:
            raise ParseError(f"move {move_number} ({token!r}): {exc}") from None
        plies.append(
            Ply(
                index=len(plies) + 1,
                mover=WHITE if position.white_to_move else BLACK,
                move=move.uci(),
                state_before=position.to_fen(),
            )
        )
        position = position.make(move)
    result = result or tags.get("Result", "*")
    return MatchRecord(
        game="chess",
        plies=plies,
        black_label=tags.get("BlackElo", "?") or "?",
        white_label=tags.get("WhiteElo", "?") or "?",
        termination=_termination_of(tags, result, position),
        black_player=tags.get("Black", ""),
        white_player=tags.get("White", ""),
        date=_parse_date(tags.get("UTCDate") or tags.get("Date")),
        time_control=tags.get("TimeControl"),
        result=result,
        setup=setup,
    )


def parse_pgn(text: str) -> MatchRecord:
    """Parse a single PGN game into a match record."""
    games = list(iter_pgn_games(text))
    if not games:
        raise ParseError("no PGN game found", offset=0)
    if len(games) > 1:
        raise ParseError("more than one game in text; use iter_pgn_games")
    return _record_from_game(*games[0])


def parse_pgn_collection(text: str):
    """Parse every game of a concatenated PGN text."""
    return [_record_from_game(*game) for game in iter_pgn_games(text)]


_TERMINATION_TAGS = {
    Termination.TIMEOUT: "Time forfeit",
    Termination.DISCONNECT: "Abandoned",
    Termination.OTHER: "Unterminated",
}


def serialize_pgn(record: MatchRecord) -> str:
    """Serialize a chess record back to PGN; parse(serialize(r)) == r for
    records parse_pgn produced."""
    result = record.result or ("1/2-1/2" if record.termination == Termination.DRAW else "*")
    tags = [
        ("Event", "?"),
        ("Site", "?"),
        ("Date", record.date.strftime("%Y.%m.%d") if record.date else "????.??.??"),
        ("Round", "?"),
        ("White", record.white_player or "?"),
        ("Black", record.black_player or "?"),
        ("Result", result),
    ]
    if record.white_label and record.white_label != "?":
        tags.append(("WhiteElo", record.white_label))
    if record.black_label and record.black_label != "?":
        tags.append(("BlackElo", record.black_label))
    if record.time_control:
        tags.append(("TimeControl", record.time_control))
    if record.termination in _TERMINATION_TAGS:
        tags.append(("Termination", _TERMINATION_TAGS[record.termination]))
    if record.setup and record.plies:
        tags.append(("SetUp", "1"))
        tags.append(("FEN", record.plies[0].state_before))
    lines = [f'[{name} "{value}"]' for name, value in tags]
    lines.append("")
    tokens = []
    for ply in record.plies:
        position = Position.from_fen(ply.state_before)
        if position.white_to_move:
            tokens.append(f"{position.fullmove}.")
        tokens.append(to_san(position, Move.from_uci(ply.move)))
    tokens.append(result)
    movetext, line = [], ""
    for token in tokens:
        if line and len(line) + 1 + len(token) > 80:
            movetext.append(line)
            line = token
        else:
            line = f"{line} {token}" if line else token
    if line:
        movetext.append(line)
    return "\n".join(lines + movetext) + "\n"
