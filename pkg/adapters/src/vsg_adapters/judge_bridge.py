"""Long-lived judge-bridge process speaking the vsgkit line protocol.

stdin:  one JSON request  {"pred": ..., "gt": ..., "kind": ...} per line
stdout: one JSON response {"tier": ...} per request, in order

Exact case/whitespace-normalized equality short-circuits to "identical"
without consulting the backend, mirroring the primary side. Responses are
cached by normalized inputs so a session is deterministic. A malformed line
produces an {"error": ...} record and the process stays alive.

Backends: `canned:<path>` replays a JSON table (the stub endpoint used in
tests), `constant:<tier>` always answers one tier. Hosted-model backends
implement the same judge(pred, gt, kind) -> tier method; their endpoint and
credentials come from environment variables only (VSG_JUDGE_ENDPOINT etc.),
never from flags or files.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Protocol, TextIO

from . import AdapterError

TIERS = ("identical", "synonym", "hypernym_hyponym", "semantic_overlap", "mismatch")
KINDS = ("object", "attribute", "relation")


def normalize(text: str) -> str:
    return " ".join(text.split()).casefold()


class JudgeBackend(Protocol):
    def judge(self, pred: str, gt: str, kind: str) -> str: ...


class CannedBackend:
    """Replays a JSON array of {"pred", "gt", "kind"?, "tier"} entries;
    unlisted pairs are mismatches. Pair lookup is symmetric."""

    def __init__(self, table: list[dict]):
        self._table: dict[tuple[str, str, str], str] = {}
        for entry in table:
            tier = entry["tier"]
            if tier not in TIERS:
                raise AdapterError(f"canned table has unknown tier {tier!r}")
            kind = entry.get("kind", "*")
            a, b = normalize(entry["pred"]), normalize(entry["gt"])
            self._table[(a, b, kind)] = tier
            self._table[(b, a, kind)] = tier

    @classmethod
    def from_file(cls, path: str) -> "CannedBackend":
        try:
            return cls(json.loads(Path(path).read_text(encoding="utf-8")))
        except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
            raise AdapterError(f"cannot load canned table {path}: {exc}") from exc

    def judge(self, pred: str, gt: str, kind: str) -> str:
        a, b = normalize(pred), normalize(gt)
        return self._table.get((a, b, kind)) or self._table.get((a, b, "*")) or "mismatch"


class ConstantBackend:
    def __init__(self, tier: str):
        if tier not in TIERS:
            raise AdapterError(f"unknown tier {tier!r}")
        self._tier = tier

    def judge(self, pred: str, gt: str, kind: str) -> str:
        return self._tier


def make_backend(selector: str) -> JudgeBackend:
    if selector.startswith("canned:"):
        return CannedBackend.from_file(selector.split(":", 1)[1])
    if selector.startswith("constant:"):
        return ConstantBackend(selector.split(":", 1)[1])
    raise AdapterError(f"backend must be canned:<path> or constant:<tier>, got {selector!r}")


def serve(backend: JudgeBackend, stdin: TextIO, stdout: TextIO) -> None:
    cache: dict[tuple[str, str, str], str] = {}
    for raw in stdin:
        line = raw.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
            pred = str(request["pred"])
            gt = str(request["gt"])
            kind = str(request.get("kind", "object"))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            stdout.write(json.dumps({"error": f"bad request: {exc}"}, separators=(",", ":")) + "\n")
            stdout.flush()
            continue
        if kind not in KINDS:
            stdout.write(json.dumps({"error": f"bad kind: {kind}"}, separators=(",", ":")) + "\n")
            stdout.flush()
            continue
        key = (normalize(pred), normalize(gt), kind)
        if key[0] == key[1]:
            tier = "identical"
        elif key in cache:
            tier = cache[key]
        else:
            try:
                tier = backend.judge(pred, gt, kind)
            except Exception as exc:
                stdout.write(
                    json.dumps({"error": f"backend failure: {exc}"}, separators=(",", ":")) + "\n"
                )
                stdout.flush()
                continue
            cache[key] = tier
        stdout.write(json.dumps({"tier": tier}, separators=(",", ":")) + "\n")
        stdout.flush()


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="Serve the vsgkit judge line protocol.")
    parser.add_argument("--backend", required=True, help="canned:<path> or constant:<tier>")
    args = parser.parse_args(argv)
    try:
        backend = make_backend(args.backend)
    except AdapterError as exc:
        print(json.dumps({"error": {"type": "AdapterError", "message": str(exc)}}), file=sys.stderr)
        return 2
    serve(backend, sys.stdin, sys.stdout)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
