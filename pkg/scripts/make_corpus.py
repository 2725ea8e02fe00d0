"""Generate the committed test corpus: random legal SGF and PGN games.

Run once; the files under tests/fixtures/corpus/ are static test inputs.
"""

import random
import sys
from pathlib import Path

from rankforge.records.chess_rules import Position
from rankforge.records.go_board import SIZE, GoBoard, xy_to_coord
from rankforge.records.pgn import serialize_pgn
from rankforge.records.sgf import serialize_sgf
from rankforge.records.types import BLACK, WHITE, MatchRecord, Ply, Termination

CORPUS = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "corpus"

GO_RANKS = ["3k", "1k", "1d", "3d", "5d", "7d", "9d"]


def random_go_record(rng: random.Random, plies: int, result: str) -> MatchRecord:
    board = GoBoard()
    moves = []
    colour = "b"
    empties = [(x, y) for x in range(SIZE) for y in range(SIZE)]
    while len(moves) < plies:
        rng.shuffle(empties)
        played = None
        for x, y in empties:
            if board._at(x, y) != ".":
                continue
            coord = xy_to_coord(x, y)
            if board.ko == coord:
                continue
            probe = GoBoard()
            probe.grid = board.grid.copy()
            probe.ko = board.ko
            probe.play(colour, coord)
            if probe._at(x, y) == ".":
                continue  # suicide
            board.grid = probe.grid
            board.ko = probe.ko
            played = coord
            break
        if played is None:
            break
        moves.append(played)
        colour = "w" if colour == "b" else "b"
    rank = rng.choice(GO_RANKS)
    plies_list = []
    replay = GoBoard()
    for i, move in enumerate(moves):
        mover = "b" if i % 2 == 0 else "w"
        plies_list.append(Ply(index=i + 1, mover=BLACK if mover == "b" else WHITE,
                              move=move, state_before=replay.encode()))
        replay.play(mover, move)
    record = MatchRecord(
        game="go",
        plies=plies_list,
        black_label=rank,
        white_label=rank,
        termination=Termination.RESIGN if "Resign" in result else Termination.PASS_PASS,
        black_player=f"go_player_{rng.randrange(1000):03d}",
        white_player=f"go_player_{rng.randrange(1000):03d}",
        result=result,
        date=None,
    )
    return record


def random_chess_record(rng: random.Random, max_plies: int, pawn_bias: float = 0.0):
    position = Position.initial()
    plies = []
    while len(plies) < max_plies:
        legal = position.legal_moves()
        if not legal:
            break
        if pawn_bias and rng.random() < pawn_bias:
            pawn_moves = [m for m in legal if position.board[m.from_sq].upper() == "P"]
            move = rng.choice(pawn_moves or legal)
        else:
            move = rng.choice(legal)
        plies.append(Ply(index=len(plies) + 1,
                         mover=WHITE if position.white_to_move else BLACK,
                         move=move.uci(), state_before=position.to_fen()))
        position = position.make(move)
    if position.is_checkmate():
        result = "0-1" if position.white_to_move else "1-0"
        termination = Termination.CHECKMATE
    elif not position.legal_moves():
        result = "1/2-1/2"
        termination = Termination.DRAW
    else:
        result = rng.choice(["1-0", "0-1"])
        termination = Termination.RESIGN
    rating = rng.randrange(1000, 2600)
    band = (rating - 1000) // 200
    other = rng.randrange(1000 + 200 * band, 1200 + 200 * band)
    record = MatchRecord(
        game="chess",
        plies=plies,
        black_label=str(other),
        white_label=str(rating),
        termination=termination,
        black_player=f"chess_player_{rng.randrange(1000):03d}",
        white_player=f"chess_player_{rng.randrange(1000):03d}",
        time_control=rng.choice(["180+0", "180+2", "300+0", "300+3"]),
        result=result,
        date=None,
    )
    return record, plies


def find_promo_ep_game():
    """A game of <= 40 plies containing both a promotion and an en passant
    capture, found by seeded search over pawn-biased playouts."""
    for seed in range(100000):
        rng = random.Random(seed)
        record, plies = random_chess_record(rng, 40, pawn_bias=0.75)
        has_promo = any(len(p.move) == 5 for p in plies)
        has_ep = False
        for ply in plies:
            pos = Position.from_fen(ply.state_before)
            from rankforge.records.chess_rules import Move
            move = Move.from_uci(ply.move)
            if (pos.board[move.from_sq].upper() == "P" and pos.ep == move.to_sq
                    and pos.board[move.to_sq] == "."
                    and move.from_sq % 8 != move.to_sq % 8):
                has_ep = True
        if has_promo and has_ep and len(plies) == 40:
            print(f"promo+ep game at seed {seed}")
            return record
    raise SystemExit("no promo+ep game found")


def main():
    CORPUS.mkdir(parents=True, exist_ok=True)
    rng = random.Random(990011)
    # 26 Go games, lengths >= 50 so the corpus is filter-acceptable
    for i in range(26):
        plies = 211 if i == 0 else rng.randrange(60, 180)
        result = rng.choice(["B+Resign", "W+Resign", "B+3.5", "W+0.5", "B+12.5"])
        record = random_go_record(random.Random(7000 + i), plies, result)
        name = f"go_{i:02d}_{len(record.plies)}ply.sgf"
        (CORPUS / name).write_text(serialize_sgf(record))
    # 26 chess games, lengths >= 20
    for i in range(25):
        rng_i = random.Random(8000 + i)
        record, _ = random_chess_record(rng_i, rng_i.randrange(30, 90))
        name = f"chess_{i:02d}_{len(record.plies)}ply.pgn"
        (CORPUS / name).write_text(serialize_pgn(record))
    special = find_promo_ep_game()
    (CORPUS / "chess_promo_ep_40ply.pgn").write_text(serialize_pgn(special))
    print(f"corpus written to {CORPUS}")


if __name__ == "__main__":
    sys.exit(main())
