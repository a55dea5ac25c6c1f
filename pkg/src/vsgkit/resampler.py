"""Latent-query cross-attention resampler, desk-scale numpy numerics.

A fixed set of learnable latent queries cross-attends over a variable-length
token set and emits a fixed-size summary. Per layer:

    q  = rmsnorm(state) * g_query          (pre-attention norm, latents)
    kv = rmsnorm(tokens) * g_token         (pre-attention norm, tokens)
    state += softmax(q Wq (kv Wk)^T / sqrt(d_latent)) (kv Wv) Wo
    state  = rmsnorm(state) * g_post       (post-attention norm)
    state += silu(state W_up) W_down       (two-matrix gated MLP)

then a final linear to the output width. Single attention head; double
precision throughout. The analytic backward pass exists solely to verify
the forward math against central finite differences; there is no training.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterator, Mapping

import numpy as np

from .errors import EmptyInput, InvalidParam, ParseError

_EPS = 1e-6


@dataclass
class LayerParams:
    wq: np.ndarray
    wk: np.ndarray
    wv: np.ndarray
    wo: np.ndarray
    g_query: np.ndarray
    g_token: np.ndarray
    g_post: np.ndarray
    w_up: np.ndarray
    w_down: np.ndarray


@dataclass
class ResamplerParams:
    depth: int
    n_queries: int
    d_in: int
    d_latent: int
    d_out: int
    d_hidden: int
    latents: np.ndarray
    layers: list[LayerParams]
    w_out: np.ndarray

    def named_parameters(self) -> Iterator[tuple[str, np.ndarray]]:
        yield "latents", self.latents
        for i, layer in enumerate(self.layers):
            for name in ("wq", "wk", "wv", "wo", "g_query", "g_token", "g_post", "w_up", "w_down"):
                yield f"layers.{i}.{name}", getattr(layer, name)
        yield "w_out", self.w_out


@dataclass(frozen=True)
class TokenFeatures:
    """One object's selected-token feature vectors, in stream order."""

    object_id: int
    vectors: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.vectors, dtype=np.float64)
        if arr.ndim != 2:
            raise InvalidParam(f"token features must be 2-D, got shape {arr.shape}")
        object.__setattr__(self, "vectors", arr)


def init_params(
    seed: int,
    d_in: int,
    d_latent: int,
    d_out: int,
    d_hidden: int | None = None,
    depth: int = 3,
    n_queries: int = 32,
) -> ResamplerParams:
    """Deterministic init: uniform with element stddev 1/sqrt(fan_in)
    (bound sqrt(3/fan_in)); normalization gains start at 1."""
    if min(d_in, d_latent, d_out, depth, n_queries) < 1:
        raise InvalidParam("all dims, depth and n_queries must be >= 1")
    if d_hidden is None:
        d_hidden = 2048
    if d_hidden < 1:
        raise InvalidParam("d_hidden must be >= 1")
    rng = np.random.default_rng(seed)

    def uniform(fan_in: int, shape: tuple[int, ...]) -> np.ndarray:
        bound = np.sqrt(3.0 / fan_in)
        return rng.uniform(-bound, bound, size=shape)

    mlp_dim = 4 * d_hidden
    latents = uniform(d_latent, (n_queries, d_latent))
    layers = []
    for _ in range(depth):
        layers.append(
            LayerParams(
                wq=uniform(d_latent, (d_latent, d_latent)),
                wk=uniform(d_in, (d_in, d_latent)),
                wv=uniform(d_in, (d_in, d_latent)),
                wo=uniform(d_latent, (d_latent, d_latent)),
                g_query=np.ones(d_latent),
                g_token=np.ones(d_in),
                g_post=np.ones(d_latent),
                w_up=uniform(d_latent, (d_latent, mlp_dim)),
                w_down=uniform(mlp_dim, (mlp_dim, d_latent)),
            )
        )
    w_out = uniform(d_latent, (d_latent, d_out))
    return ResamplerParams(
        depth=depth,
        n_queries=n_queries,
        d_in=d_in,
        d_latent=d_latent,
        d_out=d_out,
        d_hidden=d_hidden,
        latents=latents,
        layers=layers,
        w_out=w_out,
    )


def _rmsnorm(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    inv = 1.0 / np.sqrt(np.mean(x * x, axis=-1, keepdims=True) + _EPS)
    return x * inv, inv


def _rmsnorm_backward(
    d_normed: np.ndarray, x: np.ndarray, inv: np.ndarray
) -> np.ndarray:
    dim = x.shape[-1]
    dot = np.sum(d_normed * x, axis=-1, keepdims=True)
    return d_normed * inv - x * (inv**3) * dot / dim


def _forward(X: np.ndarray, params: ResamplerParams) -> tuple[np.ndarray, list[dict]]:
    scale = 1.0 / np.sqrt(params.d_latent)
    state = params.latents
    caches = []
    for layer in params.layers:
        qn, q_inv = _rmsnorm(state)
        q_in = qn * layer.g_query
        kn, k_inv = _rmsnorm(X)
        kv_in = kn * layer.g_token
        Q = q_in @ layer.wq
        K = kv_in @ layer.wk
        V = kv_in @ layer.wv
        logits = (Q @ K.T) * scale
        shifted = logits - logits.max(axis=1, keepdims=True)
        weights = np.exp(shifted)
        weights /= weights.sum(axis=1, keepdims=True)
        ctx = weights @ V
        attended = state + ctx @ layer.wo
        pn, p_inv = _rmsnorm(attended)
        mlp_in = pn * layer.g_post
        u = mlp_in @ layer.w_up
        sig = 1.0 / (1.0 + np.exp(-u))
        s = u * sig
        out = mlp_in + s @ layer.w_down
        caches.append(
            dict(
                state=state, qn=qn, q_inv=q_inv, q_in=q_in,
                kn=kn, k_inv=k_inv, kv_in=kv_in,
                Q=Q, K=K, V=V, weights=weights, ctx=ctx,
                attended=attended, pn=pn, p_inv=p_inv, mlp_in=mlp_in,
                u=u, sig=sig, s=s,
            )
        )
        state = out
    Z = state @ params.w_out
    return Z, caches


def resample(X: TokenFeatures | np.ndarray, params: ResamplerParams) -> np.ndarray:
    """Summarize a variable-length token set into n_queries output vectors.

    Permutation-invariant in token order (no positional encoding inside);
    raises EmptyInput for a zero-token set, which callers use to skip
    absent windows.
    """
    vectors = X.vectors if isinstance(X, TokenFeatures) else np.asarray(X, dtype=np.float64)
    if vectors.ndim != 2 or vectors.shape[0] == 0:
        raise EmptyInput("resample needs at least one token vector")
    if vectors.shape[1] != params.d_in:
        raise InvalidParam(
            f"token width {vectors.shape[1]} != d_in {params.d_in}"
        )
    Z, _ = _forward(vectors, params)
    return Z


@dataclass(frozen=True)
class WindowBlock:
    window: int
    start_seconds: float
    matrix: np.ndarray


@dataclass(frozen=True)
class DualSummary:
    """Global summary plus per-window summaries, in temporal order."""

    object_id: int
    global_block: np.ndarray
    window_blocks: tuple[WindowBlock, ...]

    @property
    def n_blocks(self) -> int:
        return 1 + len(self.window_blocks)

    def concat(self) -> np.ndarray:
        """Stack blocks row-wise; each window block is preceded by one row
        carrying its start timestamp in every channel."""
        parts = [self.global_block]
        width = self.global_block.shape[1]
        for block in self.window_blocks:
            parts.append(np.full((1, width), block.start_seconds))
            parts.append(block.matrix)
        return np.concatenate(parts, axis=0)


def dual_resample(
    features: TokenFeatures,
    window_features: Mapping[int, TokenFeatures],
    params_global: ResamplerParams,
    params_window: ResamplerParams,
    window_seconds: float = 4.0,
) -> DualSummary:
    """Run the trajectory-level resampler over all of an object's tokens and
    the window-level resampler over each occupied window."""
    if features.vectors.shape[0] == 0:
        raise EmptyInput(f"object {features.object_id} has no tokens")
    global_block = resample(features, params_global)
    blocks = []
    for window in sorted(window_features):
        wf = window_features[window]
        if wf.vectors.shape[0] == 0:
            continue
        blocks.append(
            WindowBlock(
                window=window,
                start_seconds=window * window_seconds,
                matrix=resample(wf, params_window),
            )
        )
    return DualSummary(features.object_id, global_block, tuple(blocks))


def _loss_and_grads(
    X: np.ndarray, params: ResamplerParams
) -> tuple[float, dict[str, np.ndarray]]:
    """Loss = sum of squares of Z; analytic gradients for every parameter."""
    Z, caches = _forward(X, params)
    loss = float(np.sum(Z * Z))
    grads: dict[str, np.ndarray] = {}
    scale = 1.0 / np.sqrt(params.d_latent)

    dZ = 2.0 * Z
    final_state = caches[-1]["mlp_in"] + caches[-1]["s"] @ params.layers[-1].w_down
    grads["w_out"] = final_state.T @ dZ
    d_state = dZ @ params.w_out.T

    for i in range(params.depth - 1, -1, -1):
        layer = params.layers[i]
        c = caches[i]
        prefix = f"layers.{i}."

        # out = mlp_in + s @ w_down, s = u * sigmoid(u), u = mlp_in @ w_up
        d_mlp_in = d_state.copy()
        ds = d_state @ layer.w_down.T
        grads[prefix + "w_down"] = c["s"].T @ d_state
        du = ds * (c["sig"] * (1.0 + c["u"] * (1.0 - c["sig"])))
        grads[prefix + "w_up"] = c["mlp_in"].T @ du
        d_mlp_in += du @ layer.w_up.T

        # mlp_in = rmsnorm(attended) * g_post
        grads[prefix + "g_post"] = np.sum(d_mlp_in * c["pn"], axis=0)
        d_pn = d_mlp_in * layer.g_post
        d_attended = _rmsnorm_backward(d_pn, c["attended"], c["p_inv"])

        # attended = state + (weights @ V) @ wo
        d_state_resid = d_attended.copy()
        d_out_proj = d_attended
        grads[prefix + "wo"] = c["ctx"].T @ d_out_proj
        d_ctx = d_out_proj @ layer.wo.T
        d_weights = d_ctx @ c["V"].T
        dV = c["weights"].T @ d_ctx

        # softmax rows
        dot = np.sum(d_weights * c["weights"], axis=1, keepdims=True)
        d_logits = c["weights"] * (d_weights - dot)
        dQ = (d_logits @ c["K"]) * scale
        dK = (d_logits.T @ c["Q"]) * scale

        grads[prefix + "wq"] = c["q_in"].T @ dQ
        d_q_in = dQ @ layer.wq.T
        grads[prefix + "wk"] = c["kv_in"].T @ dK
        grads[prefix + "wv"] = c["kv_in"].T @ dV
        d_kv_in = dK @ layer.wk.T + dV @ layer.wv.T

        grads[prefix + "g_query"] = np.sum(d_q_in * c["qn"], axis=0)
        d_qn = d_q_in * layer.g_query
        d_state = d_state_resid + _rmsnorm_backward(d_qn, c["state"], c["q_inv"])

        grads[prefix + "g_token"] = np.sum(d_kv_in * c["kn"], axis=0)
        # gradients w.r.t. X itself are not collected (inputs are not parameters)

    grads["latents"] = d_state
    return loss, grads


def grad_check(
    params: ResamplerParams,
    X: TokenFeatures | np.ndarray,
    step: float = 1e-5,
) -> float:
    """Max relative error between analytic gradients and central finite
    differences of the sum-of-squares loss, over every parameter."""
    vectors = X.vectors if isinstance(X, TokenFeatures) else np.asarray(X, dtype=np.float64)
    _, grads = _loss_and_grads(vectors, params)
    worst = 0.0
    for name, array in params.named_parameters():
        analytic = grads[name]
        flat = array.reshape(-1)
        numeric = np.zeros_like(flat)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + step
            up, _ = _forward(vectors, params)
            flat[j] = orig - step
            down, _ = _forward(vectors, params)
            flat[j] = orig
            numeric[j] = (np.sum(up * up) - np.sum(down * down)) / (2.0 * step)
        numeric = numeric.reshape(array.shape)
        denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
        err = float(np.max(np.abs(analytic - numeric) / denom))
        worst = max(worst, err)
    return worst


# --- parameter manifest (reproducibility fixtures) --------------------------


def params_to_manifest(params: ResamplerParams) -> str:
    lines = [
        json.dumps(
            {
                "depth": params.depth,
                "n_queries": params.n_queries,
                "d_in": params.d_in,
                "d_latent": params.d_latent,
                "d_out": params.d_out,
                "d_hidden": params.d_hidden,
            },
            separators=(",", ":"),
        )
    ]
    for name, array in params.named_parameters():
        lines.append(
            json.dumps(
                {"name": name, "shape": list(array.shape), "values": array.reshape(-1).tolist()},
                separators=(",", ":"),
            )
        )
    return "\n".join(lines) + "\n"


def params_from_manifest(text: str) -> ResamplerParams:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ParseError("empty parameter manifest", line=1)
    try:
        header = json.loads(lines[0])
        params = init_params(
            seed=0,
            d_in=int(header["d_in"]),
            d_latent=int(header["d_latent"]),
            d_out=int(header["d_out"]),
            d_hidden=int(header["d_hidden"]),
            depth=int(header["depth"]),
            n_queries=int(header["n_queries"]),
        )
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad manifest header: {exc}", line=1)
    arrays = dict(params.named_parameters())
    for lineno, raw in enumerate(lines[1:], start=2):
        try:
            entry = json.loads(raw)
            name = entry["name"]
            shape = tuple(entry["shape"])
            values = np.asarray(entry["values"], dtype=np.float64).reshape(shape)
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad manifest entry: {exc}", line=lineno)
        if name not in arrays:
            raise ParseError(f"unknown parameter {name!r}", line=lineno)
        if arrays[name].shape != shape:
            raise ParseError(
                f"shape mismatch for {name}: {shape} != {arrays[name].shape}", line=lineno
            )
        arrays[name][...] = values
    return params
