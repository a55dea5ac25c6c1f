"""Open-vocabulary scene-graph evaluation: tiered semantic matching with a
pluggable judge, object/attribute/relation/triplet metrics, temporal and
spatiotemporal IoU, Hungarian trajectory matching, label verification,
average recall, and Cohen's kappa.

Exact label equality (case/whitespace-normalized) short-circuits to
Identical before any judge is consulted; a judge failure aborts the metric
run rather than silently degrading to Mismatch.
"""

from __future__ import annotations

import json
import subprocess
from dataclasses import dataclass
from enum import IntEnum
from importlib import resources
from typing import Iterable, Mapping, Protocol, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import CAMERA_ID, Relation, SceneGraph, Trajectory
from .errors import InvalidDimensions, InvalidInput, JudgeUnavailable


class MatchTier(IntEnum):
    """Semantic match fidelity, higher is stricter."""

    MISMATCH = 0
    SEMANTIC_OVERLAP = 1
    HYPERNYM_HYPONYM = 2
    SYNONYM = 3
    IDENTICAL = 4


TIER_WIRE_NAMES = {
    MatchTier.IDENTICAL: "identical",
    MatchTier.SYNONYM: "synonym",
    MatchTier.HYPERNYM_HYPONYM: "hypernym_hyponym",
    MatchTier.SEMANTIC_OVERLAP: "semantic_overlap",
    MatchTier.MISMATCH: "mismatch",
}
TIER_FROM_WIRE = {v: k for k, v in TIER_WIRE_NAMES.items()}

MATCH_KINDS = ("object", "attribute", "relation")


class JudgeInterface(Protocol):
    """Maps (predicted label, ground-truth label, kind) to a MatchTier.
    Must be deterministic for fixed inputs within a session."""

    def judge(self, pred: str, gt: str, kind: str) -> MatchTier: ...


def normalize_label(text: str) -> str:
    return " ".join(text.split()).casefold()


def match_tier(pred: str, gt: str, kind: str, judge: JudgeInterface) -> MatchTier:
    if not pred.strip() or not gt.strip():
        raise InvalidInput("match_tier needs nonempty labels")
    if kind not in MATCH_KINDS:
        raise InvalidInput(f"kind must be one of {MATCH_KINDS}, got {kind!r}")
    if normalize_label(pred) == normalize_label(gt):
        return MatchTier.IDENTICAL
    try:
        tier = judge.judge(pred, gt, kind)
    except JudgeUnavailable:
        raise
    except Exception as exc:
        raise JudgeUnavailable(f"judge failed on ({pred!r}, {gt!r}, {kind}): {exc}") from exc
    return MatchTier(tier)


class LexiconJudge:
    """Rule-based judge over a flat word-relation table.

    The table carries symmetric synonym and semantic-overlap pairs and
    directionless hypernym edges; anything else is a mismatch. Exists so the
    primary metric suite is hermetic; the bridge judge is the production path.
    """

    def __init__(self, table: Mapping[str, Iterable[Sequence[str]]]):
        self._synonyms = {
            frozenset((normalize_label(a), normalize_label(b)))
            for a, b in table.get("synonyms", [])
        }
        self._hypernyms = {
            frozenset((normalize_label(a), normalize_label(b)))
            for a, b in table.get("hypernyms", [])
        }
        self._overlaps = {
            frozenset((normalize_label(a), normalize_label(b)))
            for a, b in table.get("overlaps", [])
        }

    @classmethod
    def from_file(cls, path) -> "LexiconJudge":
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh))

    @classmethod
    def default(cls) -> "LexiconJudge":
        data = resources.files("vsgkit.data").joinpath("lexicon.json").read_text("utf-8")
        return cls(json.loads(data))

    def judge(self, pred: str, gt: str, kind: str) -> MatchTier:
        a, b = normalize_label(pred), normalize_label(gt)
        if a == b:
            return MatchTier.IDENTICAL
        pair = frozenset((a, b))
        if pair in self._synonyms:
            return MatchTier.SYNONYM
        if pair in self._hypernyms:
            return MatchTier.HYPERNYM_HYPONYM
        if pair in self._overlaps:
            return MatchTier.SEMANTIC_OVERLAP
        return MatchTier.MISMATCH


class BridgeJudge:
    """Judge backed by a long-lived subprocess speaking the line protocol:
    one JSON request {"pred","gt","kind"} per line, one JSON response
    {"tier": <name>} per request, in order. Responses are cached by
    normalized inputs so a session stays deterministic."""

    def __init__(self, argv: Sequence[str]):
        self._argv = list(argv)
        self._proc: subprocess.Popen | None = None
        self._cache: dict[tuple[str, str, str], MatchTier] = {}

    def _ensure(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            try:
                self._proc = subprocess.Popen(
                    self._argv,
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                    text=True,
                )
            except OSError as exc:
                raise JudgeUnavailable(f"cannot start judge bridge {self._argv}: {exc}") from exc
        return self._proc

    def judge(self, pred: str, gt: str, kind: str) -> MatchTier:
        key = (normalize_label(pred), normalize_label(gt), kind)
        if key in self._cache:
            return self._cache[key]
        proc = self._ensure()
        request = json.dumps({"pred": pred, "gt": gt, "kind": kind}, separators=(",", ":"))
        try:
            assert proc.stdin is not None and proc.stdout is not None
            proc.stdin.write(request + "\n")
            proc.stdin.flush()
            raw = proc.stdout.readline()
        except (OSError, ValueError, BrokenPipeError) as exc:
            raise JudgeUnavailable(f"judge bridge transport failed: {exc}") from exc
        if not raw:
            raise JudgeUnavailable("judge bridge closed the stream")
        try:
            response = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise JudgeUnavailable(f"judge bridge sent invalid JSON: {exc.msg}")
        if "error" in response:
            raise JudgeUnavailable(f"judge bridge error: {response['error']}")
        tier_name = response.get("tier")
        if tier_name not in TIER_FROM_WIRE:
            raise JudgeUnavailable(f"judge bridge sent unknown tier {tier_name!r}")
        tier = TIER_FROM_WIRE[tier_name]
        self._cache[key] = tier
        return tier

    def close(self) -> None:
        if self._proc is not None:
            if self._proc.stdin is not None:
                self._proc.stdin.close()
            self._proc.wait(timeout=10)
            self._proc = None


@dataclass(frozen=True)
class EvalConfig:
    temporal_iou_thresh: float = 0.5
    object_mode: str = "lenient"
    mask_iou_thresh: float = 0.5
    strict_includes_synonym: bool = False

    def __post_init__(self):
        if self.object_mode not in ("strict", "lenient"):
            raise InvalidInput(f"object_mode must be strict|lenient, got {self.object_mode!r}")


def _tier_counts_as_strict(tier: MatchTier, strict_includes_synonym: bool) -> bool:
    if strict_includes_synonym:
        return tier >= MatchTier.SYNONYM
    return tier == MatchTier.IDENTICAL


def _tier_counts_as_lenient(tier: MatchTier) -> bool:
    return tier > MatchTier.MISMATCH


def object_tiers(
    pred_labels: Mapping[int, str],
    gt_labels: Mapping[int, str],
    judge: JudgeInterface,
) -> dict[int, MatchTier]:
    """Tier per ground-truth id; a missing prediction counts as Mismatch."""
    tiers: dict[int, MatchTier] = {}
    for oid in sorted(gt_labels):
        pred = pred_labels.get(oid)
        if pred is None or not pred.strip():
            tiers[oid] = MatchTier.MISMATCH
        else:
            tiers[oid] = match_tier(pred, gt_labels[oid], "object", judge)
    return tiers


def object_accuracy(
    pred_labels: Mapping[int, str],
    gt_labels: Mapping[int, str],
    mode: str,
    judge: JudgeInterface,
    strict_includes_synonym: bool = False,
) -> float:
    """Strict counts Identical only; lenient counts every tier above Mismatch."""
    if mode not in ("strict", "lenient"):
        raise InvalidInput(f"mode must be strict|lenient, got {mode!r}")
    tiers = object_tiers(pred_labels, gt_labels, judge)
    if not tiers:
        return 1.0
    if mode == "strict":
        hits = sum(_tier_counts_as_strict(t, strict_includes_synonym) for t in tiers.values())
    else:
        hits = sum(_tier_counts_as_lenient(t) for t in tiers.values())
    return hits / len(tiers)


def attribute_recall(
    pred_attrs: Mapping[int, Sequence[str]],
    gt_attrs: Mapping[int, Sequence[str]],
    judge: JudgeInterface,
) -> float:
    """Fraction of ground-truth attributes with a leniently-matching
    prediction on the same object; each prediction satisfies at most one
    ground-truth attribute (greedy by tier, then input order)."""
    total = sum(len(attrs) for attrs in gt_attrs.values())
    if total == 0:
        return 1.0
    matched = 0
    for oid in sorted(gt_attrs):
        gt_list = list(gt_attrs[oid])
        pred_list = list(pred_attrs.get(oid, []))
        if not gt_list or not pred_list:
            continue
        pairs = []
        for gi, gt_attr in enumerate(gt_list):
            for pi, pred_attr in enumerate(pred_list):
                tier = match_tier(pred_attr, gt_attr, "attribute", judge)
                if _tier_counts_as_lenient(tier):
                    pairs.append((-int(tier), gi, pi))
        used_gt: set[int] = set()
        used_pred: set[int] = set()
        for _, gi, pi in sorted(pairs):
            if gi in used_gt or pi in used_pred:
                continue
            used_gt.add(gi)
            used_pred.add(pi)
            matched += 1
    return matched / total


def _merge(spans: Iterable[tuple[int, int]]) -> list[tuple[int, int]]:
    ordered = sorted((int(s), int(e)) for s, e in spans if s <= e)
    merged: list[list[int]] = []
    for s, e in ordered:
        if merged and s <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], e)
        else:
            merged.append([s, e])
    return [(s, e) for s, e in merged]


def interval_iou(
    spans_a: Sequence[tuple[int, int]], spans_b: Sequence[tuple[int, int]]
) -> float:
    """IoU of the inclusive frame sets covered by two span lists."""
    a = _merge(spans_a)
    b = _merge(spans_b)
    len_a = sum(e - s + 1 for s, e in a)
    len_b = sum(e - s + 1 for s, e in b)
    inter = 0
    for s1, e1 in a:
        for s2, e2 in b:
            inter += max(0, min(e1, e2) - max(s1, s2) + 1)
    union = len_a + len_b - inter
    return inter / union if union else 0.0


def _match_relations(
    pred_relations: Sequence[Relation],
    gt_relations: Sequence[Relation],
    judge: JudgeInterface,
    config: EvalConfig,
) -> dict[int, tuple[int, float]]:
    """One-to-one greedy matching of gt relations to predictions: same
    endpoint ids, leniently-matched predicate, and temporal IoU strictly
    above the threshold; ties resolved by descending IoU then input order.
    Returns {gt_index: (pred_index, iou)}."""
    candidates: list[tuple[float, int, int]] = []
    for gi, gt in enumerate(gt_relations):
        for pi, pred in enumerate(pred_relations):
            if (pred.subject_id, pred.object_id) != (gt.subject_id, gt.object_id):
                continue
            tiou = interval_iou(pred.spans, gt.spans)
            if not tiou > config.temporal_iou_thresh:
                continue
            tier = match_tier(pred.predicate, gt.predicate, "relation", judge)
            if not _tier_counts_as_lenient(tier):
                continue
            candidates.append((tiou, gi, pi))
    candidates.sort(key=lambda c: (-c[0], c[1], c[2]))
    matches: dict[int, tuple[int, float]] = {}
    used_pred: set[int] = set()
    for tiou, gi, pi in candidates:
        if gi in matches or pi in used_pred:
            continue
        matches[gi] = (pi, tiou)
        used_pred.add(pi)
    return matches


def relation_recall(
    pred_relations: Sequence[Relation],
    gt_relations: Sequence[Relation],
    judge: JudgeInterface,
    config: EvalConfig = EvalConfig(),
) -> float:
    if not gt_relations:
        return 1.0
    matches = _match_relations(pred_relations, gt_relations, judge, config)
    return len(matches) / len(gt_relations)


def triplet_recall(
    pred_relations: Sequence[Relation],
    gt_relations: Sequence[Relation],
    pred_labels: Mapping[int, str],
    gt_labels: Mapping[int, str],
    judge: JudgeInterface,
    config: EvalConfig = EvalConfig(),
) -> float:
    """A gt triplet is recalled iff its relation is recalled and both
    endpoint labels meet the lenient match. The camera endpoint (-1) has no
    label and matches automatically."""
    if not gt_relations:
        return 1.0
    matches = _match_relations(pred_relations, gt_relations, judge, config)
    hits = 0
    for gi in matches:
        gt = gt_relations[gi]
        ok = True
        for endpoint in (gt.subject_id, gt.object_id):
            if endpoint == CAMERA_ID:
                continue
            pred_label = pred_labels.get(endpoint)
            gt_label = gt_labels.get(endpoint)
            if pred_label is None or gt_label is None or not pred_label.strip():
                ok = False
                break
            tier = match_tier(pred_label, gt_label, "object", judge)
            if not _tier_counts_as_lenient(tier):
                ok = False
                break
        if ok:
            hits += 1
    return hits / len(gt_relations)


def spatiotemporal_iou(traj_a: Trajectory, traj_b: Trajectory) -> float:
    """Sum of per-frame intersections over sum of per-frame unions; an
    absent frame is an empty mask."""
    dims: tuple[int, int] | None = None
    for traj in (traj_a, traj_b):
        for mask in traj.masks.values():
            if dims is None:
                dims = (mask.width, mask.height)
            elif (mask.width, mask.height) != dims:
                raise InvalidDimensions("trajectories must share mask dimensions")
    inter_total = 0
    union_total = 0
    frames = set(traj_a.masks) | set(traj_b.masks)
    for frame in frames:
        ma = traj_a.masks.get(frame)
        mb = traj_b.masks.get(frame)
        area_a = ma.area if ma is not None else 0
        area_b = mb.area if mb is not None else 0
        if ma is not None and mb is not None:
            inter = int(np.count_nonzero(ma.to_array() & mb.to_array()))
        else:
            inter = 0
        inter_total += inter
        union_total += area_a + area_b - inter
    return inter_total / union_total if union_total else 0.0


def hungarian_match(scores) -> list[tuple[int, int]]:
    """One-to-one partial assignment of rows to columns maximizing the total
    score; min(n, m) pairs, rows/columns beyond that stay unmatched."""
    arr = np.asarray(scores, dtype=np.float64)
    if arr.size == 0:
        return []
    if arr.ndim != 2:
        raise InvalidInput(f"score matrix must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput("score matrix must be finite")
    rows, cols = linear_sum_assignment(arr, maximize=True)
    return sorted(zip((int(r) for r in rows), (int(c) for c in cols)))


def verify_labels(
    candidates: Sequence[Trajectory],
    verifier: Sequence[Trajectory],
    iou_floor: float = 0.3,
) -> list[int]:
    """Keep candidates whose Hungarian-matched verifier trajectory reaches
    the spatiotemporal-IoU floor. Masks are never altered; only ids of the
    survivors are returned."""
    if not candidates or not verifier:
        return []
    matrix = np.zeros((len(candidates), len(verifier)))
    for i, cand in enumerate(candidates):
        for j, ver in enumerate(verifier):
            matrix[i, j] = spatiotemporal_iou(cand, ver)
    kept = []
    for i, j in hungarian_match(matrix):
        if matrix[i, j] >= iou_floor:
            kept.append(candidates[i].object_id)
    return sorted(kept)


def average_recall(
    pred_trajectories: Sequence[Trajectory],
    gt_trajectories: Sequence[Trajectory],
    mask_iou_thresh: float = 0.5,
) -> float:
    """Fraction of ground-truth trajectories with a one-to-one Hungarian
    match at or above the spatiotemporal-IoU threshold."""
    if not gt_trajectories:
        return 1.0
    if not pred_trajectories:
        return 0.0
    matrix = np.zeros((len(gt_trajectories), len(pred_trajectories)))
    for i, gt in enumerate(gt_trajectories):
        for j, pred in enumerate(pred_trajectories):
            matrix[i, j] = spatiotemporal_iou(gt, pred)
    hits = sum(1 for i, j in hungarian_match(matrix) if matrix[i, j] >= mask_iou_thresh)
    return hits / len(gt_trajectories)


def cohens_kappa(labels_a: Sequence[str], labels_b: Sequence[str]) -> float:
    """Chance-corrected agreement between two paired categorical raters."""
    if len(labels_a) != len(labels_b):
        raise InvalidInput(
            f"paired sequences differ in length: {len(labels_a)} vs {len(labels_b)}"
        )
    n = len(labels_a)
    if n == 0:
        raise InvalidInput("kappa needs at least one pair")
    observed = sum(1 for a, b in zip(labels_a, labels_b) if a == b) / n
    categories = set(labels_a) | set(labels_b)
    chance = 0.0
    for cat in categories:
        pa = sum(1 for a in labels_a if a == cat) / n
        pb = sum(1 for b in labels_b if b == cat) / n
        chance += pa * pb
    if chance == 1.0:
        return 1.0 if observed == 1.0 else 0.0
    return (observed - chance) / (1.0 - chance)


def build_match_report(
    pred: SceneGraph,
    gt: SceneGraph,
    judge: JudgeInterface,
    config: EvalConfig = EvalConfig(),
) -> dict:
    """Full scene-graph evaluation: per-metric values, per-item tier
    assignments, and counts, as a JSON-ready dict."""
    pred_labels = pred.labels_by_id()
    gt_labels = gt.labels_by_id()
    tiers = object_tiers(pred_labels, gt_labels, judge)
    strict_hits = sum(
        _tier_counts_as_strict(t, config.strict_includes_synonym) for t in tiers.values()
    )
    lenient_hits = sum(_tier_counts_as_lenient(t) for t in tiers.values())
    n_objects = len(tiers)
    strict = strict_hits / n_objects if n_objects else 1.0
    lenient = lenient_hits / n_objects if n_objects else 1.0

    attr_recall = attribute_recall(pred.attributes_by_id(), gt.attributes_by_id(), judge)
    matches = _match_relations(pred.relations, gt.relations, judge, config)
    rel_recall = len(matches) / len(gt.relations) if gt.relations else 1.0
    trip_recall = triplet_recall(
        pred.relations, gt.relations, pred_labels, gt_labels, judge, config
    )

    object_items = [
        {
            "id": oid,
            "pred": pred_labels.get(oid),
            "gt": gt_labels[oid],
            "tier": TIER_WIRE_NAMES[tiers[oid]],
        }
        for oid in sorted(tiers)
    ]
    relation_items = []
    for gi, rel in enumerate(gt.relations):
        entry = {
            "gt_index": gi,
            "subject_id": rel.subject_id,
            "predicate": rel.predicate,
            "object_id": rel.object_id,
            "recalled": gi in matches,
        }
        if gi in matches:
            pi, tiou = matches[gi]
            entry["pred_index"] = pi
            entry["temporal_iou"] = tiou
        relation_items.append(entry)

    return {
        "metrics": {
            "object_accuracy": strict if config.object_mode == "strict" else lenient,
            "object_accuracy_strict": strict,
            "object_accuracy_lenient": lenient,
            "attribute_recall": attr_recall,
            "relation_recall": rel_recall,
            "triplet_recall": trip_recall,
        },
        "objects": object_items,
        "relations": relation_items,
        "counts": {
            "gt_objects": len(gt.objects),
            "pred_objects": len(pred.objects),
            "gt_relations": len(gt.relations),
            "pred_relations": len(pred.relations),
            "gt_attributes": sum(len(o.attributes) for o in gt.objects),
            "pred_attributes": sum(len(o.attributes) for o in pred.objects),
        },
    }
