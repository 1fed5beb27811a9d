"""External classifier adapters over a newline-delimited JSON protocol.

Wire format, one JSON object per line, UTF-8:

    request:  {"id": "<cell id>", "text": "<serialized cell>"}
    response: {"id": "<cell id>", "label": "<label>", "scores": {...}?}

Responses may arrive out of order; they are matched by id.  The
``scores`` member is optional; a missing one is treated as uniform.
Two transports are supported: a spawned subprocess speaking the
protocol on stdin/stdout, and a TCP connection to ``host:port``.

Failure handling is deliberately forgiving at the item level: an item
whose response does not arrive within the timeout falls back to the
Data label with uniform scores (and a warning).  Only a transport
that cannot be established at all, or a line that is not valid
protocol, is an error.
"""
from __future__ import annotations

import json
import logging
import queue
import shlex
import socket
import subprocess
import threading
import time
from dataclasses import dataclass
from typing import Sequence

from .classify import Prediction, uniform_scores
from .labels import CellLabel

logger = logging.getLogger(__name__)

FALLBACK_LABEL = CellLabel.DATA

_EOF = object()


class AdapterUnavailable(ConnectionError):
    """The adapter process or endpoint could not be reached at all."""


class ProtocolViolation(RuntimeError):
    """The adapter sent a line that is not valid protocol."""


@dataclass(frozen=True)
class AdapterSpec:
    transport: str  # "subprocess-stdio" or "tcp"
    target: str     # command line, or host:port
    timeout_ms: int = 10000
    batch_size: int = 32

    def __post_init__(self) -> None:
        if self.transport not in ("subprocess-stdio", "tcp"):
            raise ValueError(f"unknown transport: {self.transport!r}")
        if self.timeout_ms <= 0:
            raise ValueError("timeout_ms must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


class AdapterClient:
    """Session against one adapter.  Usable as a context manager."""

    def __init__(self, spec: AdapterSpec) -> None:
        self.spec = spec
        self._proc: subprocess.Popen | None = None
        self._sock: socket.socket | None = None
        self._writer = None
        self._lines: queue.Queue = queue.Queue()
        self._alive = False
        self._delivered = 0

    def __enter__(self) -> "AdapterClient":
        self.start()
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def start(self) -> None:
        if self.spec.transport == "subprocess-stdio":
            try:
                self._proc = subprocess.Popen(
                    shlex.split(self.spec.target),
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                )
            except OSError as exc:
                raise AdapterUnavailable(
                    f"cannot spawn adapter: {self.spec.target}: {exc}"
                ) from exc
            self._writer = self._proc.stdin
            reader = self._proc.stdout
        else:
            host, _, port = self.spec.target.rpartition(":")
            try:
                self._sock = socket.create_connection(
                    (host, int(port)), timeout=self.spec.timeout_ms / 1000
                )
            except (OSError, ValueError) as exc:
                raise AdapterUnavailable(
                    f"cannot connect to adapter: {self.spec.target}: {exc}"
                ) from exc
            self._writer = self._sock.makefile("wb")
            reader = self._sock.makefile("rb")
        thread = threading.Thread(
            target=self._pump, args=(reader,), daemon=True
        )
        thread.start()
        self._alive = True

    def _pump(self, reader) -> None:
        try:
            for line in reader:
                self._lines.put(line)
        except (OSError, ValueError):
            pass
        self._lines.put(_EOF)

    def close(self) -> None:
        self._alive = False
        for closer in (self._writer, self._sock):
            try:
                if closer is not None:
                    closer.close()
            except OSError:
                pass
        if self._proc is not None:
            try:
                self._proc.terminate()
                self._proc.wait(timeout=5)
            except (OSError, subprocess.TimeoutExpired):
                self._proc.kill()

    # -- classification ------------------------------------------------------

    def classify(self, examples: Sequence) -> list[Prediction]:
        """Send examples in batches and collect matched responses."""
        if self._writer is None:
            raise AdapterUnavailable("adapter client is not started")
        results: dict[int, Prediction] = {}
        for start in range(0, len(examples), self.spec.batch_size):
            chunk = examples[start:start + self.spec.batch_size]
            self._classify_chunk(chunk, start, results)
        return [results[i] for i in range(len(examples))]

    def _classify_chunk(self, chunk, offset: int, results: dict) -> None:
        pending: dict[str, list[int]] = {}
        for i, example in enumerate(chunk):
            pending.setdefault(example.cell_id, []).append(offset + i)

        if self._alive:
            payload = b"".join(
                json.dumps(
                    {"id": ex.cell_id, "text": ex.text}, ensure_ascii=False
                ).encode("utf-8") + b"\n"
                for ex in chunk
            )
            try:
                self._writer.write(payload)
                self._writer.flush()
            except (OSError, ValueError) as exc:
                if self._delivered == 0:
                    raise AdapterUnavailable(
                        f"adapter rejected input before any result: {exc}"
                    ) from exc
                self._alive = False

        deadline = time.monotonic() + self.spec.timeout_ms / 1000
        while pending and self._alive:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                break
            try:
                line = self._lines.get(timeout=remaining)
            except queue.Empty:
                break
            if line is _EOF:
                self._alive = False
                break
            prediction = self._parse_response(line)
            slots = pending.pop(prediction.cell_id, None)
            if slots is None:
                continue  # late or unknown id; ignore
            for slot in slots:
                results[slot] = prediction
                self._delivered += 1

        for cell_id, slots in pending.items():
            logger.warning("adapter returned no result for %s; using fallback", cell_id)
            for slot in slots:
                results[slot] = Prediction(
                    cell_id, FALLBACK_LABEL, uniform_scores()
                )

    @staticmethod
    def _parse_response(line: bytes) -> Prediction:
        try:
            obj = json.loads(line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ProtocolViolation(f"undecodable response line: {line!r}") from exc
        if not isinstance(obj, dict) or "id" not in obj or "label" not in obj:
            raise ProtocolViolation(f"response missing id/label: {line!r}")
        try:
            label = CellLabel.from_str(str(obj["label"]))
        except ValueError as exc:
            raise ProtocolViolation(str(exc)) from exc
        scores = obj.get("scores")
        if scores is None:
            scores = uniform_scores()
        elif not isinstance(scores, dict):
            raise ProtocolViolation(f"scores must be an object: {line!r}")
        else:
            scores = {str(k): float(v) for k, v in scores.items()}
        return Prediction(str(obj["id"]), label, scores)
