"""Tiny external classifier speaking the line-JSON adapter protocol.

Used by the adapter tests as a stand-in for a real model server.  One
process, one session.  Modes:

    echo       answer every request with a fixed label and scores
    noscores   like echo but omit the scores member
    badlabel   answer with a label outside the label set
    malformed  emit one line that is not JSON, then behave like echo
    extra      prepend a response with an unknown id to every answer
    reverse    buffer pairs of requests and answer them in reverse
    drop       never answer requests whose text contains "DROP"
    model      load a baseline model JSON and classify for real

With --tcp the stub listens on 127.0.0.1 (port 0 picks a free port,
announced as "PORT <n>" on stdout) and serves a single connection.
"""
from __future__ import annotations

import argparse
import json
import socket
import sys


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser()
    parser.add_argument("--mode", default="echo")
    parser.add_argument("--label", default="header")
    parser.add_argument("--model", help="model JSON for --mode model")
    parser.add_argument("--tcp", type=int, default=None, metavar="PORT",
                        help="serve one TCP connection instead of stdio")
    return parser


class Responder:
    def __init__(self, ns) -> None:
        self.ns = ns
        self.sent_garbage = False
        self.held: list[dict] = []
        self.model = None
        if ns.mode == "model":
            from tablink import NaiveBayesCellClassifier

            self.model = NaiveBayesCellClassifier.load(ns.model)

    def _answer(self, request: dict) -> dict:
        ns = self.ns
        rid = request.get("id", "")
        if ns.mode == "model":
            label, scores = self.model.predict_one(request.get("text", ""))
            return {"id": rid, "label": label.value, "scores": scores}
        if ns.mode == "noscores":
            return {"id": rid, "label": ns.label}
        if ns.mode == "badlabel":
            return {"id": rid, "label": "banana"}
        scores = {
            name: (0.7 if name == ns.label else 0.1)
            for name in ("metadata", "header", "attribute", "data")
        }
        return {"id": rid, "label": ns.label, "scores": scores}

    def handle(self, line: bytes) -> list[bytes]:
        request = json.loads(line.decode("utf-8"))
        ns = self.ns
        out: list[bytes] = []
        if ns.mode == "malformed" and not self.sent_garbage:
            self.sent_garbage = True
            out.append(b"this is not json\n")
        if ns.mode == "drop" and "DROP" in request.get("text", ""):
            return out
        if ns.mode == "extra":
            ghost = {"id": "no-such-id", "label": "data"}
            out.append(json.dumps(ghost).encode("utf-8") + b"\n")
        if ns.mode == "reverse":
            self.held.append(request)
            if len(self.held) < 2:
                return out
            batch, self.held = self.held[::-1], []
            for held in batch:
                out.append(self._encode(self._answer(held)))
            return out
        out.append(self._encode(self._answer(request)))
        return out

    def flush(self) -> list[bytes]:
        batch, self.held = self.held[::-1], []
        return [self._encode(self._answer(req)) for req in batch]

    @staticmethod
    def _encode(response: dict) -> bytes:
        return json.dumps(response, ensure_ascii=False).encode("utf-8") + b"\n"


def serve(reader, writer, responder: Responder) -> None:
    for line in reader:
        if not line.strip():
            continue
        for response in responder.handle(line):
            writer.write(response)
        writer.flush()
    for response in responder.flush():
        writer.write(response)
    writer.flush()


def main() -> int:
    ns = build_parser().parse_args()
    responder = Responder(ns)
    if ns.tcp is None:
        serve(sys.stdin.buffer, sys.stdout.buffer, responder)
        return 0
    server = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    server.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    server.bind(("127.0.0.1", ns.tcp))
    server.listen(1)
    print(f"PORT {server.getsockname()[1]}", flush=True)
    conn, _ = server.accept()
    with conn:
        serve(conn.makefile("rb"), conn.makefile("wb"), responder)
    server.close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
