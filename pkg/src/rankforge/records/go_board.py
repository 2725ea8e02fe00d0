"""19x19 Go board replay: captures, simple ko, and position encoding.

Positions are encoded as the 19 board rows ('.', 'x', 'o') joined by '/',
plus the ko point and the side to move, so a backend can evaluate a state
without any history.
"""

from ..errors import DataError

SIZE = 19
EMPTY, BLACK_STONE, WHITE_STONE = ".", "x", "o"
_LETTERS = "abcdefghijklmnopqrs"


def coord_to_xy(coord: str) -> tuple[int, int]:
    if len(coord) != 2 or coord[0] not in _LETTERS or coord[1] not in _LETTERS:
        raise DataError(f"bad Go coordinate {coord!r}")
    return _LETTERS.index(coord[0]), _LETTERS.index(coord[1])


def xy_to_coord(x: int, y: int) -> str:
    return _LETTERS[x] + _LETTERS[y]


class GoBoard:
    def __init__(self):
        self.grid = [EMPTY] * (SIZE * SIZE)
        self.ko: str | None = None
        self.to_move = "b"

    def _at(self, x: int, y: int) -> str:
        return self.grid[y * SIZE + x]

    def _set(self, x: int, y: int, stone: str) -> None:
        self.grid[y * SIZE + x] = stone

    @staticmethod
    def _neighbours(x: int, y: int):
        if x > 0:
            yield x - 1, y
        if x < SIZE - 1:
            yield x + 1, y
        if y > 0:
            yield x, y - 1
        if y < SIZE - 1:
            yield x, y + 1

    def _group(self, x: int, y: int):
        colour = self._at(x, y)
        seen = {(x, y)}
        stack = [(x, y)]
        liberties = 0
        while stack:
            cx, cy = stack.pop()
            for nx, ny in self._neighbours(cx, cy):
                stone = self._at(nx, ny)
                if stone == EMPTY:
                    liberties += 1
                elif stone == colour and (nx, ny) not in seen:
                    seen.add((nx, ny))
                    stack.append((nx, ny))
        return seen, liberties

    def play(self, colour: str, move: str) -> None:
        """Play 'pass' or a coordinate for colour 'b'/'w'; updates ko state."""
        opponent_next = "w" if colour == "b" else "b"
        if move == "pass":
            self.ko = None
            self.to_move = opponent_next
            return
        x, y = coord_to_xy(move)
        if self._at(x, y) != EMPTY:
            raise DataError(f"point {move} already occupied")
        stone = BLACK_STONE if colour == "b" else WHITE_STONE
        enemy = WHITE_STONE if colour == "b" else BLACK_STONE
        self._set(x, y, stone)
        captured = []
        for nx, ny in self._neighbours(x, y):
            if self._at(nx, ny) == enemy:
                group, liberties = self._group(nx, ny)
                if liberties == 0:
                    captured.extend(group)
        for cx, cy in set(captured):
            self._set(cx, cy, EMPTY)
        own_group, own_liberties = self._group(x, y)
        if own_liberties == 0:
            # suicide: tolerated in replay by removing the group, but real
            # records never contain it
            for cx, cy in own_group:
                self._set(cx, cy, EMPTY)
        # simple ko: single capture by a lone stone with one liberty
        self.ko = None
        captured = set(captured)
        if len(captured) == 1 and len(own_group) == 1 and own_liberties == 1:
            self.ko = xy_to_coord(*next(iter(captured)))
        self.to_move = opponent_next

    def encode(self) -> str:
        rows = [
            "".join(self.grid[y * SIZE : (y + 1) * SIZE]) for y in range(SIZE)
        ]
        ko = self.ko or "-"
        return f"{'/'.join(rows)}|ko={ko}|to={self.to_move}"
