"""Data point JSONL: one player's side of one match per line."""

import json
from pathlib import Path

from ..errors import DataError
from .ranks import chess_group_label, go_group_label
from .types import DataPoint, RankGroup


def _group_label(game: str, index: int) -> str:
    if game == "go":
        return go_group_label(index)
    if game == "chess":
        return chess_group_label(index)
    return f"g{index}"


def write_datapoints(path, datapoints) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = sorted(datapoints, key=lambda dp: (dp.match_id, dp.side))
    with path.open("w") as fh:
        for dp in rows:
            fh.write(
                json.dumps(
                    {
                        "match_id": dp.match_id,
                        "player_id": dp.player_id,
                        "side": dp.side,
                        "game": dp.group.game,
                        "group_index": dp.group.index,
                        "moves": [
                            {"ply": p, "state": s, "move": m} for p, s, m in dp.moves
                        ],
                    },
                    sort_keys=True,
                )
                + "\n"
            )


def read_datapoints(path) -> list[DataPoint]:
    path = Path(path)
    out = []
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                game = rec["game"]
                index = int(rec["group_index"])
                out.append(
                    DataPoint(
                        match_id=rec["match_id"],
                        player_id=rec["player_id"],
                        side=rec["side"],
                        group=RankGroup(game=game, index=index,
                                        label=_group_label(game, index)),
                        moves=tuple(
                            (int(m["ply"]), m["state"], m["move"]) for m in rec["moves"]
                        ),
                    )
                )
            except (KeyError, ValueError, json.JSONDecodeError) as exc:
                raise DataError(f"{path}:{lineno}: bad data point ({exc})") from None
    return out
