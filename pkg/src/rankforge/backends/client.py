"""Line-delimited JSON subprocess backend client.

Wire format, one UTF-8 JSON object per line:
  request:  {"id": <int>, "kind": "strength"|"policy"|"value",
             "state": <string>, "move": <string|null>, "level": <string|null>}
  response: {"id": <int>, "value": <number>}  or  {"id": <int>, "error": <string>}

Requests may be answered out of order; responses are matched by id.  A
reader thread feeds a queue so batch calls can keep several requests in
flight and still enforce a per-request deadline.
"""

import json
import queue
import shlex
import subprocess
import threading
import time

import numpy as np

from ..errors import BackendError, BackendTimeoutError
from .base import Backend, BackendDescriptor, floor_priors


class SubprocessBackend(Backend):
    def __init__(self, descriptor: BackendDescriptor, timeout: float = 30.0):
        self.descriptor = descriptor
        self.timeout = timeout
        self._proc = subprocess.Popen(
            shlex.split(descriptor.launch),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL,
            text=True,
            bufsize=1,
        )
        self._next_id = 0
        self._messages: queue.Queue = queue.Queue()
        self._stray: dict[int, dict] = {}
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()

    def _read_loop(self) -> None:
        assert self._proc.stdout is not None
        for line in self._proc.stdout:
            line = line.strip()
            if not line:
                continue
            try:
                self._messages.put(json.loads(line))
            except json.JSONDecodeError:
                self._messages.put({"malformed": line})
        self._messages.put(None)

    def _call_batch(self, requests: list[dict]) -> list[float]:
        """Send all requests, then collect the matching responses."""
        if self._proc.poll() is not None:
            raise BackendError(f"backend process exited with code {self._proc.returncode}")
        ids = []
        assert self._proc.stdin is not None
        for req in requests:
            self._next_id += 1
            req = {"id": self._next_id, **req}
            ids.append(self._next_id)
            self._proc.stdin.write(json.dumps(req) + "\n")
        self._proc.stdin.flush()

        wanted = set(ids)
        results: dict[int, float] = {}
        for rid in list(wanted):
            if rid in self._stray:
                results[rid] = self._take(self._stray.pop(rid))
                wanted.discard(rid)
        deadline = time.monotonic() + self.timeout
        while wanted:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise BackendTimeoutError(
                    f"backend did not answer within {self.timeout:.1f}s", min(wanted)
                )
            try:
                msg = self._messages.get(timeout=min(remaining, 0.2))
            except queue.Empty:
                continue
            if msg is None:
                raise BackendError("backend closed its output stream", min(wanted))
            if "malformed" in msg:
                raise BackendError(f"malformed backend response: {msg['malformed']!r}")
            rid = msg.get("id")
            if rid in wanted:
                results[rid] = self._take(msg)
                wanted.discard(rid)
            elif isinstance(rid, int):
                self._stray[rid] = msg
        return [results[rid] for rid in ids]

    @staticmethod
    def _take(msg: dict) -> float:
        if "error" in msg:
            raise BackendError(str(msg["error"]), msg.get("id"))
        if "value" not in msg or not isinstance(msg["value"], (int, float)):
            raise BackendError(f"response without numeric value: {msg!r}", msg.get("id"))
        return float(msg["value"])

    def _requests(self, kind, states, moves, level=None) -> list[dict]:
        if moves is None:
            moves = [None] * len(states)
        return [
            {"kind": kind, "state": s, "move": m, "level": level}
            for s, m in zip(states, moves)
        ]

    def score_strength_many(self, states, moves) -> np.ndarray:
        return np.array(self._call_batch(self._requests("strength", states, moves)))

    def policy_prior_many(self, states, moves, level: str) -> np.ndarray:
        values = np.array(self._call_batch(self._requests("policy", states, moves, level)))
        if ((values < 0) | (values > 1)).any():
            raise BackendError("policy prior outside [0, 1]")
        return floor_priors(values)

    def evaluate_state_many(self, states, moves=None) -> np.ndarray:
        return np.array(self._call_batch(self._requests("value", states, moves)))

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                if self._proc.stdin is not None:
                    self._proc.stdin.close()
            except OSError:
                pass
            self._proc.terminate()
            try:
                self._proc.wait(timeout=3)
            except subprocess.TimeoutExpired:
                self._proc.kill()
