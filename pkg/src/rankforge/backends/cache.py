"""Persistent response cache for external backends.

JSONL, one line per cached response, keyed by the backend identity plus
the full request.  Reruns against the same engines become cheap and
bit-deterministic.
"""

import json
import os
from pathlib import Path

import numpy as np

from .base import Backend

CACHE_ENV = "RANKFORGE_CACHE"


def default_cache_path() -> Path | None:
    path = os.environ.get(CACHE_ENV)
    return Path(path) if path else None


class ResponseCache:
    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._data: dict[tuple, float] = {}
        self._fh = None
        if self.path.exists():
            with self.path.open() as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    rec = json.loads(line)
                    self._data[self._key_of(rec)] = float(rec["v"])

    @staticmethod
    def _key_of(rec: dict) -> tuple:
        return (rec["b"], rec["k"], rec["s"], rec.get("m"), rec.get("l"))

    def get(self, key: tuple) -> float | None:
        return self._data.get(key)

    def put(self, key: tuple, value: float) -> None:
        self._data[key] = value
        if self._fh is None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._fh = self.path.open("a")
        backend, kind, state, move, level = key
        self._fh.write(
            json.dumps({"b": backend, "k": kind, "s": state, "m": move, "l": level, "v": value})
            + "\n"
        )

    def flush(self) -> None:
        if self._fh is not None:
            self._fh.flush()

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def __len__(self) -> int:
        return len(self._data)


class CachedBackend(Backend):
    """Wraps a backend with a read-through response cache."""

    def __init__(self, inner: Backend, cache: ResponseCache):
        self.inner = inner
        self.cache = cache
        self.descriptor = inner.descriptor
        self._identity = inner.descriptor.identity()

    def _through(self, kind, states, moves, level, fetch) -> np.ndarray:
        if moves is None:
            moves = [None] * len(states)
        keys = [(self._identity, kind, s, m, level) for s, m in zip(states, moves)]
        out = np.empty(len(states))
        missing = []
        for i, key in enumerate(keys):
            hit = self.cache.get(key)
            if hit is None:
                missing.append(i)
            else:
                out[i] = hit
        if missing:
            fetched = fetch(
                [states[i] for i in missing],
                [moves[i] for i in missing],
            )
            for j, i in enumerate(missing):
                out[i] = fetched[j]
                self.cache.put(keys[i], float(fetched[j]))
            self.cache.flush()
        return out

    def score_strength_many(self, states, moves) -> np.ndarray:
        return self._through(
            "strength", states, moves, None, self.inner.score_strength_many
        )

    def policy_prior_many(self, states, moves, level: str) -> np.ndarray:
        return self._through(
            "policy", states, moves, level,
            lambda s, m: self.inner.policy_prior_many(s, m, level),
        )

    def evaluate_state_many(self, states, moves=None) -> np.ndarray:
        return self._through(
            "value", states, moves, None,
            lambda s, m: self.inner.evaluate_state_many(s, None if all(x is None for x in m) else m),
        )

    def close(self) -> None:
        self.cache.close()
        self.inner.close()
