"""Command-line front end.

Verbs: simulate, propose, track, tokens, resample-check, eval, kappa.
Every verb reads its declared inputs, writes its declared outputs, and
emits a JSON report (stdout, plus --report when given) carrying the full
resolved configuration. Reports contain no wall-clock fields, so re-running
a verb with identical inputs produces byte-identical output.

Configuration precedence: command-line flags override VSG_* environment
variables, which override config-file values, which override defaults.
"""

from __future__ import annotations

import argparse
import json
import os
import shlex
import sys
from dataclasses import asdict

import numpy as np

from . import __version__
from .core import (
    read_mask_video,
    read_scene_graph,
    trajectories_to_mask_video,
    write_mask_video,
    write_registry,
)
from .errors import ConfigError, ParseError, VsgError
from .resampler import TokenFeatures, grad_check, init_params, resample
from .sgeval import (
    BridgeJudge,
    EvalConfig,
    LexiconJudge,
    average_recall,
    build_match_report,
    cohens_kappa,
)
from .synthworld import (
    generate_scene,
    noise_spec_from_json,
    oracle_propagator,
    propose_video,
    scene_spec_from_json,
)
from .tokens import TokenGridSpec, arrange_stream, coverage_scores, partition_windows, select_tokens
from .tracker import TrackerConfig, mask_coverage, offline_track, online_track, postfilter

_TRACKER_FIELDS = (
    ("tau_detection", float),
    ("tau_match", float),
    ("check_interval", int),
    ("dedup_iou", float),
    ("dedup_covis_fraction", float),
    ("min_area", int),
    ("morph_radius", int),
    ("filter_overlap_thresh", float),
)


def _env(name: str):
    return os.environ.get(f"VSG_{name.upper()}")


def _resolve(flag_value, name: str, file_value, default, cast):
    if flag_value is not None:
        return flag_value
    env_value = _env(name)
    if env_value is not None:
        try:
            return cast(env_value)
        except ValueError as exc:
            raise ConfigError(f"bad VSG_{name.upper()}={env_value!r}: {exc}")
    if file_value is not None:
        return cast(file_value)
    return default


def _load_json_file(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc.msg}", line=exc.lineno, offset=exc.pos)
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: expected a JSON object")
    return doc


def _tracker_config(args) -> TrackerConfig:
    file_values = _load_json_file(args.config) if getattr(args, "config", None) else {}
    defaults = TrackerConfig()
    resolved = {}
    for name, cast in _TRACKER_FIELDS:
        resolved[name] = _resolve(
            getattr(args, name, None), name, file_values.get(name), getattr(defaults, name), cast
        )
    return TrackerConfig(**resolved)


def _emit_report(args, report: dict) -> None:
    text = json.dumps(report, separators=(",", ":"), sort_keys=False)
    print(text)
    if getattr(args, "report", None):
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(text)
            fh.write("\n")


def _read_text(path) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


# --- verbs ------------------------------------------------------------------


def cmd_simulate(args) -> int:
    spec = scene_spec_from_json(_read_text(args.scene))
    trajectories, video = generate_scene(spec)
    write_mask_video(args.out_video, video)
    gt_video = trajectories_to_mask_video(
        trajectories, video.fps, video.width, video.height, video.n_frames
    )
    write_mask_video(args.out_gt, gt_video)
    _emit_report(
        args,
        {
            "verb": "simulate",
            "config": json.loads(_read_text(args.scene)),
            "n_objects": len(trajectories),
            "n_frames": video.n_frames,
            "outputs": {"video": str(args.out_video), "gt": str(args.out_gt)},
        },
    )
    return 0


def cmd_propose(args) -> int:
    video = read_mask_video(args.gt_video)
    noise_doc = _load_json_file(args.noise)
    seed = _resolve(args.seed, "seed", noise_doc.get("seed"), None, int)
    if seed is None:
        raise ConfigError("propose is stochastic: a seed is mandatory (flag, VSG_SEED, or noise file)")
    noise_doc["seed"] = seed
    noise = noise_spec_from_json(json.dumps(noise_doc))
    proposals = propose_video(video, noise)
    write_mask_video(args.out, proposals)
    n_proposals = sum(len(masks) for _, masks in proposals.frames)
    _emit_report(
        args,
        {
            "verb": "propose",
            "config": {
                "drop_prob": noise.drop_prob,
                "split_prob": noise.split_prob,
                "duplicate_prob": noise.duplicate_prob,
                "jitter_px": noise.jitter_px,
                "seed": noise.seed,
            },
            "n_proposals": n_proposals,
            "outputs": {"proposals": str(args.out)},
        },
    )
    return 0


def cmd_track(args) -> int:
    proposals = read_mask_video(args.proposals)
    spec = scene_spec_from_json(_read_text(args.scene))
    config = _tracker_config(args)
    propagator = oracle_propagator(spec)
    online_video, registry = online_track(proposals, propagator, config)
    offline = offline_track(registry, propagator, proposals.n_frames, config)
    final = postfilter(offline, config)
    out_video = trajectories_to_mask_video(
        final, proposals.fps, proposals.width, proposals.height, proposals.n_frames
    )
    write_mask_video(args.out_trajectories, out_video)
    if args.out_registry:
        write_registry(args.out_registry, registry, proposals.width, proposals.height)
    if args.out_online:
        write_mask_video(args.out_online, online_video)
    coverage_online = mask_coverage(
        online_video.to_trajectories(), proposals.width, proposals.height, proposals.n_frames
    )
    coverage_offline = mask_coverage(
        offline, proposals.width, proposals.height, proposals.n_frames
    )
    _emit_report(
        args,
        {
            "verb": "track",
            "config": asdict(config),
            "n_registered": len(registry.entries),
            "entry_frames": [e.entry_frame for e in registry.entries],
            "coverage_online": coverage_online,
            "coverage_offline": coverage_offline,
            "n_trajectories": len(final),
            "outputs": {"trajectories": str(args.out_trajectories)},
        },
    )
    return 0


def cmd_tokens(args) -> int:
    video = read_mask_video(args.masks)
    grid_doc = _load_json_file(args.grid)
    tau_eff = _resolve(args.tau_eff, "tau_eff", grid_doc.get("tau_eff"), 0.5, float)
    window_seconds = _resolve(
        args.window_seconds, "window_seconds", grid_doc.get("window_seconds"), 4.0, float
    )
    try:
        spec = TokenGridSpec(
            frames_per_token=int(grid_doc["frames_per_token"]),
            patch_merge=int(grid_doc["patch_merge"]),
            patch_px=int(grid_doc["patch_px"]),
            width=video.width,
            height=video.height,
            n_frames=video.n_frames,
            fps=float(grid_doc.get("fps", video.fps)),
        )
    except KeyError as exc:
        raise ParseError(f"grid spec missing {exc}")
    selections = []
    windows_by_object = {}
    for traj in video.to_trajectories():
        scores = coverage_scores(traj, spec)
        selection = select_tokens(scores, tau_eff, traj.object_id)
        selections.append(selection)
        windows_by_object[traj.object_id] = partition_windows(selection, spec, window_seconds)
    stream = arrange_stream(selections, windows_by_object, window_seconds)
    with open(args.out, "w", encoding="utf-8") as fh:
        header = {
            "tau_eff": tau_eff,
            "window_seconds": window_seconds,
            "n_objects": len(selections),
            "n_elements": len(stream),
        }
        fh.write(json.dumps(header, separators=(",", ":")))
        fh.write("\n")
        for element in stream:
            fh.write(element.to_json())
            fh.write("\n")
    _emit_report(
        args,
        {
            "verb": "tokens",
            "config": {
                "frames_per_token": spec.frames_per_token,
                "patch_merge": spec.patch_merge,
                "patch_px": spec.patch_px,
                "tau_eff": tau_eff,
                "window_seconds": window_seconds,
            },
            "n_objects": len(selections),
            "n_selected_tokens": sum(len(s.indices) for s in selections),
            "n_elements": len(stream),
            "outputs": {"stream": str(args.out)},
        },
    )
    return 0


def cmd_resample_check(args) -> int:
    seed = _resolve(args.seed, "seed", None, None, int)
    if seed is None:
        raise ConfigError("resample-check is stochastic: a seed is mandatory")
    params = init_params(
        seed,
        d_in=args.d_in,
        d_latent=args.d_latent,
        d_out=args.d_out,
        d_hidden=args.d_hidden,
        depth=args.depth,
        n_queries=args.n_queries,
    )
    rng = np.random.default_rng(seed + 1)
    X = TokenFeatures(0, rng.normal(size=(args.n_tokens, args.d_in)))
    Z = resample(X, params)
    perm = rng.permutation(args.n_tokens)
    Z_perm = resample(TokenFeatures(0, X.vectors[perm]), params)
    permutation_delta = float(np.max(np.abs(Z - Z_perm)))
    max_grad_error = grad_check(params, X)
    report = {
        "verb": "resample-check",
        "config": {
            "seed": seed,
            "depth": args.depth,
            "n_queries": args.n_queries,
            "d_in": args.d_in,
            "d_latent": args.d_latent,
            "d_out": args.d_out,
            "d_hidden": args.d_hidden,
            "n_tokens": args.n_tokens,
        },
        "output_shape": list(Z.shape),
        "shape_ok": list(Z.shape) == [args.n_queries, args.d_out],
        "permutation_delta": permutation_delta,
        "permutation_ok": permutation_delta <= 1e-10,
        "max_grad_error": max_grad_error,
        "grad_ok": max_grad_error < 1e-4,
    }
    _emit_report(args, report)
    return 0 if report["shape_ok"] and report["permutation_ok"] and report["grad_ok"] else 1


def _make_judge(selector: str):
    if selector == "lexicon":
        return LexiconJudge.default()
    if selector.startswith("lexicon:"):
        return LexiconJudge.from_file(selector.split(":", 1)[1])
    if selector.startswith("bridge:"):
        return BridgeJudge(shlex.split(selector.split(":", 1)[1]))
    raise ConfigError(f"judge must be lexicon[:path] or bridge:<command>, got {selector!r}")


def cmd_eval(args) -> int:
    if not (args.pred and args.gt) and not (args.pred_masks and args.gt_masks):
        raise ConfigError("eval needs --pred/--gt scene graphs or --pred-masks/--gt-masks files")
    temporal_iou = _resolve(args.temporal_iou, "temporal_iou", None, 0.5, float)
    object_mode = _resolve(args.object_mode, "object_mode", None, "lenient", str)
    mask_iou = _resolve(args.mask_iou_thresh, "mask_iou_thresh", None, 0.5, float)
    config = EvalConfig(
        temporal_iou_thresh=temporal_iou,
        object_mode=object_mode,
        mask_iou_thresh=mask_iou,
        strict_includes_synonym=bool(args.strict_includes_synonym),
    )
    report: dict = {
        "verb": "eval",
        "config": {
            "temporal_iou_thresh": config.temporal_iou_thresh,
            "object_mode": config.object_mode,
            "mask_iou_thresh": config.mask_iou_thresh,
            "strict_includes_synonym": config.strict_includes_synonym,
            "judge": args.judge,
        },
    }
    if args.pred and args.gt:
        judge = _make_judge(args.judge)
        pred_graph = read_scene_graph(args.pred)
        gt_graph = read_scene_graph(args.gt)
        graph_report = build_match_report(pred_graph, gt_graph, judge, config)
        report.update(graph_report)
        if isinstance(judge, BridgeJudge):
            judge.close()
    if args.pred_masks and args.gt_masks:
        pred_trajs = read_mask_video(args.pred_masks).to_trajectories()
        gt_trajs = read_mask_video(args.gt_masks).to_trajectories()
        ar = average_recall(pred_trajs, gt_trajs, config.mask_iou_thresh)
        report.setdefault("metrics", {})["average_recall"] = ar
        report["counts_trajectories"] = {"pred": len(pred_trajs), "gt": len(gt_trajs)}
    _emit_report(args, report)
    return 0


def cmd_kappa(args) -> int:
    try:
        labels_a = json.loads(_read_text(args.a))
        labels_b = json.loads(_read_text(args.b))
    except json.JSONDecodeError as exc:
        raise ParseError(f"kappa inputs must be JSON arrays: {exc.msg}", line=exc.lineno)
    if not isinstance(labels_a, list) or not isinstance(labels_b, list):
        raise ParseError("kappa inputs must be JSON arrays of labels")
    value = cohens_kappa([str(x) for x in labels_a], [str(x) for x in labels_b])
    n = len(labels_a)
    observed = sum(1 for x, y in zip(labels_a, labels_b) if x == y) / n
    _emit_report(
        args,
        {
            "verb": "kappa",
            "config": {"a": str(args.a), "b": str(args.b)},
            "n": n,
            "observed_agreement": observed,
            "kappa": value,
        },
    )
    return 0


# --- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vsgkit",
        description="Video scene-graph toolkit: synthetic worlds, tracking, tokens, resampler checks, evaluation.",
    )
    parser.add_argument("--version", action="version", version=f"vsgkit {__version__}")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("simulate", help="rasterize a synthetic scene into mask + ground-truth files")
    p.add_argument("--scene", required=True)
    p.add_argument("--out-video", required=True)
    p.add_argument("--out-gt", required=True)
    p.add_argument("--report")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("propose", help="degrade ground-truth masks into noisy proposals")
    p.add_argument("--gt-video", required=True)
    p.add_argument("--noise", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--report")
    p.set_defaults(func=cmd_propose)

    p = sub.add_parser("track", help="run online-offline tracking over a proposal file")
    p.add_argument("--proposals", required=True)
    p.add_argument("--scene", required=True, help="scene spec backing the oracle propagator")
    p.add_argument("--config", help="tracker config JSON")
    for name, cast in _TRACKER_FIELDS:
        p.add_argument(f"--{name.replace('_', '-')}", type=cast, dest=name)
    p.add_argument("--out-trajectories", required=True)
    p.add_argument("--out-registry")
    p.add_argument("--out-online")
    p.add_argument("--report")
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("tokens", help="dump the trajectory-aligned token stream")
    p.add_argument("--masks", required=True, help="trajectory file in the mask-video format")
    p.add_argument("--grid", required=True, help="grid spec JSON (frames_per_token, patch_merge, patch_px)")
    p.add_argument("--tau-eff", type=float, dest="tau_eff")
    p.add_argument("--window-seconds", type=float, dest="window_seconds")
    p.add_argument("--out", required=True)
    p.add_argument("--report")
    p.set_defaults(func=cmd_tokens)

    p = sub.add_parser("resample-check", help="verify resampler numerics at given dims")
    p.add_argument("--seed", type=int)
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--n-queries", type=int, default=8, dest="n_queries")
    p.add_argument("--d-in", type=int, default=16, dest="d_in")
    p.add_argument("--d-latent", type=int, default=16, dest="d_latent")
    p.add_argument("--d-out", type=int, default=16, dest="d_out")
    p.add_argument("--d-hidden", type=int, default=16, dest="d_hidden")
    p.add_argument("--n-tokens", type=int, default=5, dest="n_tokens")
    p.add_argument("--report")
    p.set_defaults(func=cmd_resample_check)

    p = sub.add_parser("eval", help="score predictions against ground truth")
    p.add_argument("--pred", help="predicted scene-graph file")
    p.add_argument("--gt", help="ground-truth scene-graph file")
    p.add_argument("--pred-masks", help="predicted trajectory file (mask-video format)")
    p.add_argument("--gt-masks", help="ground-truth trajectory file")
    p.add_argument("--judge", default="lexicon", help="lexicon[:path] or bridge:<command>")
    p.add_argument("--temporal-iou", type=float, dest="temporal_iou")
    p.add_argument("--object-mode", choices=("strict", "lenient"), dest="object_mode")
    p.add_argument("--mask-iou-thresh", type=float, dest="mask_iou_thresh")
    p.add_argument("--strict-includes-synonym", action="store_true")
    p.add_argument("--report")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("kappa", help="Cohen's kappa between two paired label files")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--report")
    p.set_defaults(func=cmd_kappa)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except VsgError as exc:
        record = {
            "error": {
                "type": type(exc).__name__,
                "message": str(exc),
            }
        }
        if isinstance(exc, ParseError):
            record["error"]["line"] = exc.line
            record["error"]["offset"] = exc.offset
        print(json.dumps(record, separators=(",", ":")), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
