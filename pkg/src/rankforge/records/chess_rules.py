"""Chess rules: position state, legal move generation, FEN, and SAN.

Positions are FEN-equivalent and immutable from the caller's view (making
a move returns a new position).  Moves use from-square, to-square, and an
optional promotion piece; their text form is UCI-style ("e2e4", "e7e8q"),
with castling encoded as the king's two-square move.
"""

import re
from dataclasses import dataclass

from ..errors import DataError, ParseError

FILES = "abcdefgh"
WHITE_PIECES = "PNBRQK"
PROMOTIONS = "qrbn"

_KNIGHT = ((1, 2), (2, 1), (2, -1), (1, -2), (-1, -2), (-2, -1), (-2, 1), (-1, 2))
_KING = ((1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1))
_BISHOP = ((1, 1), (1, -1), (-1, 1), (-1, -1))
_ROOK = ((1, 0), (-1, 0), (0, 1), (0, -1))

INITIAL_FEN = "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1"


def square(file: int, rank: int) -> int:
    return rank * 8 + file


def square_name(sq: int) -> str:
    return FILES[sq % 8] + str(sq // 8 + 1)


def parse_square(name: str) -> int:
    if len(name) != 2 or name[0] not in FILES or name[1] not in "12345678":
        raise DataError(f"bad square {name!r}")
    return square(FILES.index(name[0]), int(name[1]) - 1)


@dataclass(frozen=True)
class Move:
    from_sq: int
    to_sq: int
    promo: str | None = None  # one of "qrbn"

    def uci(self) -> str:
        return square_name(self.from_sq) + square_name(self.to_sq) + (self.promo or "")

    @classmethod
    def from_uci(cls, text: str) -> "Move":
        if len(text) not in (4, 5):
            raise DataError(f"bad move encoding {text!r}")
        promo = text[4].lower() if len(text) == 5 else None
        if promo is not None and promo not in PROMOTIONS:
            raise DataError(f"bad promotion in {text!r}")
        return cls(parse_square(text[:2]), parse_square(text[2:4]), promo)


class Position:
    __slots__ = ("board", "white_to_move", "castling", "ep", "halfmove", "fullmove")

    def __init__(self, board, white_to_move, castling, ep, halfmove, fullmove):
        self.board = board  # list of 64 one-char strings, "." empty, a1 = 0
        self.white_to_move = white_to_move
        self.castling = castling  # subset of "KQkq"
        self.ep = ep  # en-passant target square or None
        self.halfmove = halfmove
        self.fullmove = fullmove

    @classmethod
    def initial(cls) -> "Position":
        return cls.from_fen(INITIAL_FEN)

    @classmethod
    def from_fen(cls, fen: str) -> "Position":
        parts = fen.split()
        if len(parts) != 6:
            raise DataError(f"FEN needs 6 fields: {fen!r}")
        rows = parts[0].split("/")
        if len(rows) != 8:
            raise DataError(f"FEN board needs 8 ranks: {fen!r}")
        board = ["."] * 64
        for r, row in enumerate(rows):
            rank = 7 - r
            file = 0
            for ch in row:
                if ch.isdigit():
                    file += int(ch)
                elif ch in WHITE_PIECES or ch in WHITE_PIECES.lower():
                    if file > 7:
                        raise DataError(f"FEN rank overflow: {row!r}")
                    board[square(file, rank)] = ch
                    file += 1
                else:
                    raise DataError(f"bad FEN piece {ch!r}")
            if file != 8:
                raise DataError(f"FEN rank underflow: {row!r}")
        castling = "" if parts[2] == "-" else parts[2]
        ep = None if parts[3] == "-" else parse_square(parts[3])
        return cls(board, parts[1] == "w", castling, ep, int(parts[4]), int(parts[5]))

    def to_fen(self) -> str:
        rows = []
        for rank in range(7, -1, -1):
            row = ""
            empty = 0
            for file in range(8):
                piece = self.board[square(file, rank)]
                if piece == ".":
                    empty += 1
                else:
                    if empty:
                        row += str(empty)
                        empty = 0
                    row += piece
            if empty:
                row += str(empty)
            rows.append(row)
        return " ".join(
            [
                "/".join(rows),
                "w" if self.white_to_move else "b",
                self.castling or "-",
                square_name(self.ep) if self.ep is not None else "-",
                str(self.halfmove),
                str(self.fullmove),
            ]
        )

    def _own(self, piece: str) -> bool:
        return piece != "." and (piece.isupper() == self.white_to_move)

    def _enemy(self, piece: str) -> bool:
        return piece != "." and (piece.isupper() != self.white_to_move)

    def king_square(self, white: bool) -> int:
        king = "K" if white else "k"
        return self.board.index(king)

    def is_attacked(self, sq: int, by_white: bool) -> bool:
        file, rank = sq % 8, sq // 8
        pawn = "P" if by_white else "p"
        pawn_rank = rank - 1 if by_white else rank + 1
        if 0 <= pawn_rank < 8:
            for df in (-1, 1):
                f = file + df
                if 0 <= f < 8 and self.board[square(f, pawn_rank)] == pawn:
                    return True
        knight = "N" if by_white else "n"
        for df, dr in _KNIGHT:
            f, r = file + df, rank + dr
            if 0 <= f < 8 and 0 <= r < 8 and self.board[square(f, r)] == knight:
                return True
        king = "K" if by_white else "k"
        for df, dr in _KING:
            f, r = file + df, rank + dr
            if 0 <= f < 8 and 0 <= r < 8 and self.board[square(f, r)] == king:
                return True
        for dirs, sliders in ((_BISHOP, "BQ"), (_ROOK, "RQ")):
            wanted = sliders if by_white else sliders.lower()
            for df, dr in dirs:
                f, r = file + df, rank + dr
                while 0 <= f < 8 and 0 <= r < 8:
                    piece = self.board[square(f, r)]
                    if piece != ".":
                        if piece in wanted:
                            return True
                        break
                    f += df
                    r += dr
        return False

    def in_check(self) -> bool:
        return self.is_attacked(self.king_square(self.white_to_move), not self.white_to_move)

    def pseudo_moves(self):
        moves = []
        up = 1 if self.white_to_move else -1
        start_rank = 1 if self.white_to_move else 6
        last_rank = 7 if self.white_to_move else 0
        for sq in range(64):
            piece = self.board[sq]
            if not self._own(piece):
                continue
            file, rank = sq % 8, sq // 8
            kind = piece.upper()
            if kind == "P":
                one = square(file, rank + up)
                if self.board[one] == ".":
                    if rank + up == last_rank:
                        moves.extend(Move(sq, one, p) for p in PROMOTIONS)
                    else:
                        moves.append(Move(sq, one))
                        if rank == start_rank:
                            two = square(file, rank + 2 * up)
                            if self.board[two] == ".":
                                moves.append(Move(sq, two))
                for df in (-1, 1):
                    f = file + df
                    if not 0 <= f < 8:
                        continue
                    target = square(f, rank + up)
                    if self._enemy(self.board[target]):
                        if rank + up == last_rank:
                            moves.extend(Move(sq, target, p) for p in PROMOTIONS)
                        else:
                            moves.append(Move(sq, target))
                    elif self.ep is not None and target == self.ep:
                        moves.append(Move(sq, target))
            elif kind == "N":
                for df, dr in _KNIGHT:
                    f, r = file + df, rank + dr
                    if 0 <= f < 8 and 0 <= r < 8 and not self._own(self.board[square(f, r)]):
                        moves.append(Move(sq, square(f, r)))
            elif kind == "K":
                for df, dr in _KING:
                    f, r = file + df, rank + dr
                    if 0 <= f < 8 and 0 <= r < 8 and not self._own(self.board[square(f, r)]):
                        moves.append(Move(sq, square(f, r)))
                moves.extend(self._castling_moves(sq))
            else:
                dirs = _BISHOP if kind == "B" else _ROOK if kind == "R" else _BISHOP + _ROOK
                for df, dr in dirs:
                    f, r = file + df, rank + dr
                    while 0 <= f < 8 and 0 <= r < 8:
                        target = self.board[square(f, r)]
                        if self._own(target):
                            break
                        moves.append(Move(sq, square(f, r)))
                        if target != ".":
                            break
                        f += df
                        r += dr
        return moves

    def _castling_moves(self, king_sq: int):
        moves = []
        rank = 0 if self.white_to_move else 7
        if king_sq != square(4, rank):
            return moves
        rights = self.castling
        kingside = ("K" if self.white_to_move else "k") in rights
        queenside = ("Q" if self.white_to_move else "q") in rights
        enemy = not self.white_to_move
        if self.is_attacked(king_sq, enemy):
            return moves
        if kingside:
            f1, g1 = square(5, rank), square(6, rank)
            rook = square(7, rank)
            if (
                self.board[f1] == self.board[g1] == "."
                and self.board[rook] == ("R" if self.white_to_move else "r")
                and not self.is_attacked(f1, enemy)
                and not self.is_attacked(g1, enemy)
            ):
                moves.append(Move(king_sq, g1))
        if queenside:
            d1, c1, b1 = square(3, rank), square(2, rank), square(1, rank)
            rook = square(0, rank)
            if (
                self.board[d1] == self.board[c1] == self.board[b1] == "."
                and self.board[rook] == ("R" if self.white_to_move else "r")
                and not self.is_attacked(d1, enemy)
                and not self.is_attacked(c1, enemy)
            ):
                moves.append(Move(king_sq, c1))
        return moves

    def make(self, move: Move) -> "Position":
        board = self.board.copy()
        piece = board[move.from_sq]
        if piece == "." or not self._own(piece):
            raise DataError(f"no own piece on {square_name(move.from_sq)}")
        target = board[move.to_sq]
        captured = target != "."
        kind = piece.upper()
        ep = None
        if kind == "P" and self.ep is not None and move.to_sq == self.ep and target == ".":
            behind = square(move.to_sq % 8, move.from_sq // 8)
            board[behind] = "."
            captured = True
        board[move.from_sq] = "."
        if move.promo:
            board[move.to_sq] = move.promo.upper() if self.white_to_move else move.promo
        else:
            board[move.to_sq] = piece
        castling = self.castling
        if kind == "K":
            castling = castling.replace("K", "").replace("Q", "") if self.white_to_move \
                else castling.replace("k", "").replace("q", "")
            if move.to_sq - move.from_sq == 2:  # kingside
                rank = move.from_sq // 8
                board[square(5, rank)] = board[square(7, rank)]
                board[square(7, rank)] = "."
            elif move.from_sq - move.to_sq == 2:  # queenside
                rank = move.from_sq // 8
                board[square(3, rank)] = board[square(0, rank)]
                board[square(0, rank)] = "."
        for sq, flag in ((0, "Q"), (7, "K"), (56, "q"), (63, "k")):
            if move.from_sq == sq or move.to_sq == sq:
                castling = castling.replace(flag, "")
        if kind == "P" and abs(move.to_sq // 8 - move.from_sq // 8) == 2:
            ep = square(move.from_sq % 8, (move.from_sq // 8 + move.to_sq // 8) // 2)
        return Position(
            board,
            not self.white_to_move,
            castling,
            ep,
            0 if kind == "P" or captured else self.halfmove + 1,
            self.fullmove + (0 if self.white_to_move else 1),
        )

    def is_legal(self, move: Move) -> bool:
        after = self.make(move)
        return not after.is_attacked(after.king_square(self.white_to_move), after.white_to_move)

    def legal_moves(self):
        return [m for m in self.pseudo_moves() if self.is_legal(m)]

    def is_checkmate(self) -> bool:
        return self.in_check() and not self.legal_moves()


def perft(pos: Position, depth: int) -> int:
    if depth == 0:
        return 1
    total = 0
    for move in pos.legal_moves():
        total += perft(pos.make(move), depth - 1)
    return total


# ---------------------------------------------------------------------------
# SAN

_SAN_RE = re.compile(
    r"^(?P<piece>[NBRQK])?(?P<file>[a-h])?(?P<rank>[1-8])?(?P<capture>x)?"
    r"(?P<target>[a-h][1-8])(=?(?P<promo>[NBRQ]))?$"
)


def parse_san(pos: Position, text: str) -> Move:
    """Resolve a SAN token against the position's legal moves."""
    clean = text.strip().rstrip("+#!?")
    if clean.endswith("e.p."):
        clean = clean[:-4].strip()
    if clean in ("O-O", "0-0"):
        candidates = [
            m for m in pos.legal_moves()
            if pos.board[m.from_sq].upper() == "K" and m.to_sq - m.from_sq == 2
        ]
    elif clean in ("O-O-O", "0-0-0"):
        candidates = [
            m for m in pos.legal_moves()
            if pos.board[m.from_sq].upper() == "K" and m.from_sq - m.to_sq == 2
        ]
    else:
        match = _SAN_RE.match(clean)
        if not match:
            raise ParseError(f"unreadable move {text!r}")
        piece = match.group("piece") or "P"
        target = parse_square(match.group("target"))
        promo = match.group("promo")
        promo = promo.lower() if promo else None
        from_file = FILES.index(match.group("file")) if match.group("file") else None
        from_rank = int(match.group("rank")) - 1 if match.group("rank") else None
        candidates = []
        for m in pos.legal_moves():
            if m.to_sq != target or pos.board[m.from_sq].upper() != piece:
                continue
            if m.promo != promo:
                continue
            if from_file is not None and m.from_sq % 8 != from_file:
                continue
            if from_rank is not None and m.from_sq // 8 != from_rank:
                continue
            candidates.append(m)
    if len(candidates) == 1:
        return candidates[0]
    if not candidates:
        raise ParseError(f"illegal move {text!r}")
    raise ParseError(f"ambiguous move {text!r}")


def to_san(pos: Position, move: Move) -> str:
    """Minimal SAN for a legal move, with +/# suffix."""
    piece = pos.board[move.from_sq]
    if piece == ".":
        raise DataError(f"no piece on {square_name(move.from_sq)}")
    kind = piece.upper()
    target = pos.board[move.to_sq]
    is_ep = kind == "P" and pos.ep is not None and move.to_sq == pos.ep and target == "."
    capture = target != "." or is_ep
    if kind == "K" and abs(move.to_sq - move.from_sq) == 2:
        core = "O-O" if move.to_sq > move.from_sq else "O-O-O"
    elif kind == "P":
        core = square_name(move.to_sq)
        if capture:
            core = FILES[move.from_sq % 8] + "x" + core
        if move.promo:
            core += "=" + move.promo.upper()
    else:
        others = [
            m for m in pos.legal_moves()
            if m.to_sq == move.to_sq
            and m.from_sq != move.from_sq
            and pos.board[m.from_sq].upper() == kind
        ]
        disambig = ""
        if others:
            same_file = any(m.from_sq % 8 == move.from_sq % 8 for m in others)
            same_rank = any(m.from_sq // 8 == move.from_sq // 8 for m in others)
            if not same_file:
                disambig = FILES[move.from_sq % 8]
            elif not same_rank:
                disambig = str(move.from_sq // 8 + 1)
            else:
                disambig = square_name(move.from_sq)
        core = kind + disambig + ("x" if capture else "") + square_name(move.to_sq)
    after = pos.make(move)
    if after.in_check():
        core += "#" if not after.legal_moves() else "+"
    return core
