"""Judge-bridge protocol conformance, incl. the 100-pair acceptance run."""

from __future__ import annotations

import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from vsg_adapters import AdapterError
from vsg_adapters.judge_bridge import CannedBackend, ConstantBackend, make_backend, serve

VOCAB = [
    ("person", "human", "object", "synonym"),
    ("dog", "animal", "object", "hypernym_hyponym"),
    ("crimson", "red", "attribute", "synonym"),
    ("holding", "carrying", "relation", "semantic_overlap"),
    ("car", "vehicle", "object", "hypernym_hyponym"),
    ("table", "rocket", "object", "mismatch"),
]


def _canned_file(tmp_path: Path) -> Path:
    table = [
        {"pred": pred, "gt": gt, "kind": kind, "tier": tier}
        for pred, gt, kind, tier in VOCAB
    ]
    # A poisoned identical pair: the bridge must short-circuit to identical
    # before ever consulting the backend.
    table.append({"pred": "cup", "gt": "cup", "kind": "object", "tier": "mismatch"})
    path = tmp_path / "canned.json"
    path.write_text(json.dumps(table))
    return path


def _spawn(backend_arg: str) -> subprocess.Popen:
    return subprocess.Popen(
        [sys.executable, "-u", "-m", "vsg_adapters.judge_bridge", "--backend", backend_arg],
        stdin=subprocess.PIPE,
        stdout=subprocess.PIPE,
        text=True,
    )


def test_protocol_conformance_100_canned_pairs_in_order(tmp_path):
    canned = _canned_file(tmp_path)
    requests = []
    expected = []
    for i in range(100):
        pred, gt, kind, tier = VOCAB[i % len(VOCAB)]
        if i % 10 == 9:
            # identical pairs must mirror the primary's short-circuit
            requests.append({"pred": "cup", "gt": "cup", "kind": "object"})
            expected.append("identical")
        elif i % 3 == 0:
            requests.append({"pred": gt, "gt": pred, "kind": kind})  # symmetric lookup
            expected.append(tier)
        else:
            requests.append({"pred": pred, "gt": gt, "kind": kind})
            expected.append(tier)
    proc = _spawn(f"canned:{canned}")
    try:
        for request in requests:
            proc.stdin.write(json.dumps(request) + "\n")
        proc.stdin.flush()
        answers = [json.loads(proc.stdout.readline())["tier"] for _ in range(100)]
    finally:
        proc.stdin.close()
        proc.wait(timeout=10)
    assert answers == expected


def test_malformed_line_keeps_process_alive(tmp_path):
    canned = _canned_file(tmp_path)
    proc = _spawn(f"canned:{canned}")
    try:
        proc.stdin.write("{this is not json}\n")
        proc.stdin.flush()
        record = json.loads(proc.stdout.readline())
        assert "error" in record
        proc.stdin.write(json.dumps({"pred": "person", "gt": "human", "kind": "object"}) + "\n")
        proc.stdin.flush()
        assert json.loads(proc.stdout.readline()) == {"tier": "synonym"}
    finally:
        proc.stdin.close()
        proc.wait(timeout=10)


def test_bad_kind_is_an_error_record(tmp_path):
    canned = _canned_file(tmp_path)
    proc = _spawn(f"canned:{canned}")
    try:
        proc.stdin.write(json.dumps({"pred": "a", "gt": "b", "kind": "verb"}) + "\n")
        proc.stdin.flush()
        assert "error" in json.loads(proc.stdout.readline())
    finally:
        proc.stdin.close()
        proc.wait(timeout=10)


def test_serve_caches_backend_answers():
    class Counting:
        def __init__(self):
            self.calls = 0

        def judge(self, pred, gt, kind):
            self.calls += 1
            return "synonym"

    backend = Counting()
    stdin = io.StringIO(
        "\n".join(
            json.dumps({"pred": "a", "gt": "b", "kind": "object"}) for _ in range(5)
        )
        + "\n"
    )
    stdout = io.StringIO()
    serve(backend, stdin, stdout)
    answers = [json.loads(line)["tier"] for line in stdout.getvalue().splitlines()]
    assert answers == ["synonym"] * 5
    assert backend.calls == 1


def test_backend_failure_is_error_record_not_crash():
    class Exploding:
        def judge(self, pred, gt, kind):
            raise RuntimeError("endpoint down")

    stdin = io.StringIO(
        json.dumps({"pred": "a", "gt": "b", "kind": "object"})
        + "\n"
        + json.dumps({"pred": "same", "gt": "same", "kind": "object"})
        + "\n"
    )
    stdout = io.StringIO()
    serve(Exploding(), stdin, stdout)
    first, second = [json.loads(line) for line in stdout.getvalue().splitlines()]
    assert "error" in first
    assert second == {"tier": "identical"}  # short-circuit never hits the backend


def test_constant_backend_and_selector_validation():
    assert ConstantBackend("mismatch").judge("a", "b", "object") == "mismatch"
    with pytest.raises(AdapterError):
        ConstantBackend("great")
    with pytest.raises(AdapterError):
        make_backend("http://example.com")
    with pytest.raises(AdapterError):
        CannedBackend([{"pred": "a", "gt": "b", "tier": "nope"}])


def test_primary_bridge_judge_interoperates(tmp_path):
    # The primary's BridgeJudge client drives this bridge end to end.
    from vsgkit.sgeval import BridgeJudge, MatchTier

    canned = _canned_file(tmp_path)
    judge = BridgeJudge(
        [sys.executable, "-u", "-m", "vsg_adapters.judge_bridge", "--backend", f"canned:{canned}"]
    )
    try:
        assert judge.judge("person", "human", "object") == MatchTier.SYNONYM
        assert judge.judge("dog", "animal", "object") == MatchTier.HYPERNYM_HYPONYM
        assert judge.judge("table", "rocket", "object") == MatchTier.MISMATCH
    finally:
        judge.close()
