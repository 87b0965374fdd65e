"""From-scratch transformer encoder with a token-classification head.

Post-layer-norm residual blocks, learned absolute position and segment
embeddings, tanh-approximation GELU, and hand-written reverse-mode gradients
for every parameter. Parameters live in a flat name -> float32 ndarray dict;
gradient trees share the same keys. A finite-difference gradient check (run
in float64) is the module's verification oracle.

Checkpoint format (little-endian throughout): magic ``PNCKPT``, u32 version,
u32 metadata length + UTF-8 JSON metadata block (containing the config),
u32 tensor count, then per tensor: u32 name length + name bytes, u32 rank,
u32 dims, raw float32 data. A sibling container with magic ``PNBTCH`` holds
int32 tensors and is used for caching encoded batches.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, asdict, replace
from typing import Iterator, Sequence

import numpy as np

from .errors import DataError, NumericsError
from .subword import EncodedExample

INIT_STD = 0.02
LN_EPS = 1e-12
ATTENTION_MASK_BIAS = -1e9

CHECKPOINT_MAGIC = b"PNCKPT"
BATCH_MAGIC = b"PNBTCH"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    hidden_dim: int = 64
    num_layers: int = 2
    num_heads: int = 2
    ffn_dim: int = 256
    max_seq_len: int = 128
    num_labels: int = 2
    dropout_rate: float = 0.1
    seed: int = 0

    def __post_init__(self) -> None:
        if min(self.vocab_size, self.hidden_dim, self.num_layers, self.num_heads,
               self.ffn_dim, self.max_seq_len) < 1:
            raise DataError("all model dimensions must be positive")
        if self.hidden_dim % self.num_heads != 0:
            raise DataError(f"hidden_dim {self.hidden_dim} not divisible by "
                            f"num_heads {self.num_heads}")
        if self.num_labels < 2:
            raise DataError("num_labels must be >= 2")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise DataError("dropout_rate must be in [0, 1)")


@dataclass
class Model:
    config: ModelConfig
    params: dict[str, np.ndarray]

    def copy(self) -> "Model":
        return Model(self.config, {k: v.copy() for k, v in self.params.items()})


@dataclass(frozen=True)
class Batch:
    input_ids: np.ndarray       # (B, L) int32
    segment_ids: np.ndarray     # (B, L)
    attention_mask: np.ndarray  # (B, L)
    labels: np.ndarray          # (B, L)
    loss_mask: np.ndarray       # (B, L)

    def __post_init__(self) -> None:
        shape = self.input_ids.shape
        if len(shape) != 2 or shape[0] < 1:
            raise DataError("batch arrays must be (batch, length) with batch >= 1")
        for name in ("segment_ids", "attention_mask", "labels", "loss_mask"):
            if getattr(self, name).shape != shape:
                raise DataError(f"batch field {name} has shape {getattr(self, name).shape}, "
                                f"expected {shape}")

    @property
    def size(self) -> int:
        return self.input_ids.shape[0]


def make_batch(encoded: Sequence[EncodedExample]) -> Batch:
    if not encoded:
        raise DataError("cannot build an empty batch")
    return Batch(
        input_ids=np.stack([e.input_ids for e in encoded]),
        segment_ids=np.stack([e.segment_ids for e in encoded]).astype(np.int32),
        attention_mask=np.stack([e.attention_mask for e in encoded]).astype(np.int32),
        labels=np.stack([e.labels for e in encoded]),
        loss_mask=np.stack([e.loss_mask for e in encoded]).astype(np.int32),
    )


# ---------------------------------------------------------------------------
# Parameter tree
# ---------------------------------------------------------------------------


def _param_spec(config: ModelConfig) -> list[tuple[str, tuple[int, ...], str]]:
    """(name, shape, kind) in canonical order; kind in {normal, zeros, ones}."""
    h, f = config.hidden_dim, config.ffn_dim
    spec: list[tuple[str, tuple[int, ...], str]] = [
        ("embeddings.token", (config.vocab_size, h), "normal"),
        ("embeddings.position", (config.max_seq_len, h), "normal"),
        ("embeddings.segment", (2, h), "normal"),
        ("embeddings.ln.scale", (h,), "ones"),
        ("embeddings.ln.bias", (h,), "zeros"),
    ]
    for i in range(config.num_layers):
        p = f"layers.{i}"
        spec += [
            (f"{p}.attn.wq", (h, h), "normal"), (f"{p}.attn.bq", (h,), "zeros"),
            (f"{p}.attn.wk", (h, h), "normal"), (f"{p}.attn.bk", (h,), "zeros"),
            (f"{p}.attn.wv", (h, h), "normal"), (f"{p}.attn.bv", (h,), "zeros"),
            (f"{p}.attn.wo", (h, h), "normal"), (f"{p}.attn.bo", (h,), "zeros"),
            (f"{p}.ln_attn.scale", (h,), "ones"), (f"{p}.ln_attn.bias", (h,), "zeros"),
            (f"{p}.ffn.w1", (h, f), "normal"), (f"{p}.ffn.b1", (f,), "zeros"),
            (f"{p}.ffn.w2", (f, h), "normal"), (f"{p}.ffn.b2", (h,), "zeros"),
            (f"{p}.ln_ffn.scale", (h,), "ones"), (f"{p}.ln_ffn.bias", (h,), "zeros"),
        ]
    spec += [
        ("head.weight", (h, config.num_labels), "normal"),
        ("head.bias", (config.num_labels,), "zeros"),
    ]
    return spec


def parameter_count(config: ModelConfig) -> int:
    """Closed form: see README (embeddings + per-layer blocks + head)."""
    h, f, v = config.hidden_dim, config.ffn_dim, config.vocab_size
    embeddings = v * h + config.max_seq_len * h + 2 * h + 2 * h
    per_layer = 4 * (h * h + h) + 2 * h * f + f + h + 4 * h
    head = h * config.num_labels + config.num_labels
    return embeddings + config.num_layers * per_layer + head


def init_model(config: ModelConfig) -> Model:
    """Deterministic random init: scaled normal (std 0.02) weights, unit LN scales."""
    rng = np.random.default_rng(config.seed)
    params: dict[str, np.ndarray] = {}
    for name, shape, kind in _param_spec(config):
        if kind == "normal":
            params[name] = rng.normal(0.0, INIT_STD, shape).astype(np.float32)
        elif kind == "ones":
            params[name] = np.ones(shape, dtype=np.float32)
        else:
            params[name] = np.zeros(shape, dtype=np.float32)
    return Model(config, params)


# ---------------------------------------------------------------------------
# Primitives
# ---------------------------------------------------------------------------


def _layer_norm_forward(x: np.ndarray, scale: np.ndarray, bias: np.ndarray):
    mean = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + LN_EPS)
    xhat = (x - mean) * inv_std
    return xhat * scale + bias, (xhat, inv_std)


def _layer_norm_backward(dy: np.ndarray, scale: np.ndarray, cache):
    xhat, inv_std = cache
    dscale = (dy * xhat).sum(axis=(0, 1))
    dbias = dy.sum(axis=(0, 1))
    dxhat = dy * scale
    dx = inv_std * (dxhat - dxhat.mean(axis=-1, keepdims=True)
                    - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True))
    return dx, dscale, dbias


_GELU_C = math.sqrt(2.0 / math.pi)


def _gelu(x: np.ndarray) -> np.ndarray:
    return 0.5 * x * (1.0 + np.tanh(_GELU_C * (x + 0.044715 * x ** 3)))


def _gelu_grad(x: np.ndarray) -> np.ndarray:
    t = np.tanh(_GELU_C * (x + 0.044715 * x ** 3))
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t ** 2) * _GELU_C * (1.0 + 3 * 0.044715 * x ** 2)


def _softmax(x: np.ndarray) -> np.ndarray:
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _dropout_mask(shape, rate: float, rng: np.random.Generator, dtype) -> np.ndarray:
    return (rng.random(shape) >= rate).astype(dtype) / dtype.type(1.0 - rate)


# ---------------------------------------------------------------------------
# Forward / backward
# ---------------------------------------------------------------------------


def _check_batch(config: ModelConfig, batch: Batch) -> None:
    if batch.input_ids.shape[1] > config.max_seq_len:
        raise DataError(f"sequence length {batch.input_ids.shape[1]} exceeds "
                        f"max_seq_len {config.max_seq_len}")
    if batch.input_ids.min() < 0 or batch.input_ids.max() >= config.vocab_size:
        raise DataError("input ids outside [0, vocab_size)")
    if batch.segment_ids.min() < 0 or batch.segment_ids.max() > 1:
        raise DataError("segment ids must be 0 or 1")


def _forward_cached(model: Model, batch: Batch, train_mode: bool,
                    rng: np.random.Generator | None):
    config = model.config
    _check_batch(config, batch)
    if train_mode and config.dropout_rate > 0 and rng is None:
        raise DataError("train_mode forward needs an RNG for dropout")
    p = model.params
    dtype = p["embeddings.token"].dtype
    ids = batch.input_ids
    segs = batch.segment_ids
    B, L = ids.shape
    nh = config.num_heads
    dh = config.hidden_dim // nh
    drop = config.dropout_rate if train_mode else 0.0

    cache: dict = {"dropout": {}, "layers": []}

    def dropout(x: np.ndarray, tag: str) -> np.ndarray:
        if drop <= 0:
            return x
        mask = _dropout_mask(x.shape, drop, rng, dtype)
        cache["dropout"][tag] = mask
        return x * mask

    emb = p["embeddings.token"][ids] + p["embeddings.position"][:L] + p["embeddings.segment"][segs]
    h0, ln_cache = _layer_norm_forward(emb, p["embeddings.ln.scale"], p["embeddings.ln.bias"])
    cache["emb_ln"] = ln_cache
    h = dropout(h0, "emb")

    key_bias = ((1 - batch.attention_mask)[:, None, None, :] * ATTENTION_MASK_BIAS).astype(dtype)
    scale = dtype.type(1.0 / math.sqrt(dh))

    for i in range(config.num_layers):
        lp = f"layers.{i}"
        lc: dict = {"x_in": h}
        q = h @ p[f"{lp}.attn.wq"] + p[f"{lp}.attn.bq"]
        k = h @ p[f"{lp}.attn.wk"] + p[f"{lp}.attn.bk"]
        v = h @ p[f"{lp}.attn.wv"] + p[f"{lp}.attn.bv"]
        qh = q.reshape(B, L, nh, dh).transpose(0, 2, 1, 3)
        kh = k.reshape(B, L, nh, dh).transpose(0, 2, 1, 3)
        vh = v.reshape(B, L, nh, dh).transpose(0, 2, 1, 3)
        scores = (qh @ kh.transpose(0, 1, 3, 2)) * scale + key_bias
        att = _softmax(scores)
        ctx = (att @ vh).transpose(0, 2, 1, 3).reshape(B, L, config.hidden_dim)
        out = ctx @ p[f"{lp}.attn.wo"] + p[f"{lp}.attn.bo"]
        out = dropout(out, f"attn.{i}")
        h1, ln1_cache = _layer_norm_forward(h + out, p[f"{lp}.ln_attn.scale"],
                                            p[f"{lp}.ln_attn.bias"])
        lc.update(qh=qh, kh=kh, vh=vh, att=att, ctx=ctx, ln1=ln1_cache, x_mid=h1)

        u = h1 @ p[f"{lp}.ffn.w1"] + p[f"{lp}.ffn.b1"]
        g = _gelu(u)
        f_out = g @ p[f"{lp}.ffn.w2"] + p[f"{lp}.ffn.b2"]
        f_out = dropout(f_out, f"ffn.{i}")
        h2, ln2_cache = _layer_norm_forward(h1 + f_out, p[f"{lp}.ln_ffn.scale"],
                                            p[f"{lp}.ln_ffn.bias"])
        lc.update(u=u, g=g, ln2=ln2_cache)
        cache["layers"].append(lc)
        h = h2

    h_final = dropout(h, "head")
    logits = h_final @ p["head.weight"] + p["head.bias"]
    probs = _softmax(logits)
    cache.update(h_last=h, h_final=h_final, probs=probs)
    return probs, cache


def forward(model: Model, batch: Batch, train_mode: bool = False,
            rng: np.random.Generator | None = None) -> np.ndarray:
    """Per-position probabilities over num_labels, shape (B, L, num_labels).

    PAD positions neither attend nor are attended to; dropout is active only
    in train mode, so eval-mode outputs are deterministic.
    """
    probs, _ = _forward_cached(model, batch, train_mode, rng)
    return probs


def loss(probabilities: np.ndarray, batch: Batch) -> float:
    """Mean negative log-likelihood over positions where loss_mask = 1."""
    mask = batch.loss_mask.astype(bool)
    if not mask.any():
        raise DataError("loss_mask selects no positions")
    num_labels = probabilities.shape[-1]
    masked_gold = batch.labels[mask]
    if masked_gold.min() < 0 or masked_gold.max() >= num_labels:
        raise DataError(f"gold labels outside [0, {num_labels}) at loss positions")
    gold = np.clip(batch.labels, 0, num_labels - 1)  # out-of-mask values are ignored
    picked = np.take_along_axis(probabilities, gold[..., None], axis=-1)[..., 0]
    return float(-np.log(picked[mask]).mean())


def backward(model: Model, batch: Batch, train_mode: bool = False,
             rng: np.random.Generator | None = None) -> tuple[float, dict[str, np.ndarray]]:
    """Loss and exact gradients of the loss for every parameter."""
    config = model.config
    p = model.params
    probs, cache = _forward_cached(model, batch, train_mode, rng)
    loss_value = loss(probs, batch)

    dtype = p["embeddings.token"].dtype
    grads = {name: np.zeros_like(arr) for name, arr in p.items()}
    B, L = batch.input_ids.shape
    nh = config.num_heads
    dh = config.hidden_dim // nh

    mask = batch.loss_mask.astype(dtype)
    n_masked = mask.sum()
    onehot = np.zeros_like(probs)
    gold = np.clip(batch.labels, 0, probs.shape[-1] - 1)
    np.put_along_axis(onehot, gold[..., None], dtype.type(1.0), axis=-1)
    dlogits = (probs - onehot) * (mask / n_masked)[..., None]

    h_final = cache["h_final"]
    grads["head.weight"] = h_final.reshape(-1, config.hidden_dim).T @ dlogits.reshape(-1, config.num_labels)
    grads["head.bias"] = dlogits.sum(axis=(0, 1))
    dh_out = dlogits @ p["head.weight"].T
    if "head" in cache["dropout"]:
        dh_out = dh_out * cache["dropout"]["head"]

    scale = dtype.type(1.0 / math.sqrt(dh))
    for i in reversed(range(config.num_layers)):
        lp = f"layers.{i}"
        lc = cache["layers"][i]
        # ffn block
        dsum2, dg2_scale, dg2_bias = _layer_norm_backward(dh_out, p[f"{lp}.ln_ffn.scale"], lc["ln2"])
        grads[f"{lp}.ln_ffn.scale"] = dg2_scale
        grads[f"{lp}.ln_ffn.bias"] = dg2_bias
        df = dsum2
        if f"ffn.{i}" in cache["dropout"]:
            df = df * cache["dropout"][f"ffn.{i}"]
        grads[f"{lp}.ffn.w2"] = lc["g"].reshape(-1, config.ffn_dim).T @ df.reshape(-1, config.hidden_dim)
        grads[f"{lp}.ffn.b2"] = df.sum(axis=(0, 1))
        dg = df @ p[f"{lp}.ffn.w2"].T
        du = dg * _gelu_grad(lc["u"])
        grads[f"{lp}.ffn.w1"] = lc["x_mid"].reshape(-1, config.hidden_dim).T @ du.reshape(-1, config.ffn_dim)
        grads[f"{lp}.ffn.b1"] = du.sum(axis=(0, 1))
        dh_mid = dsum2 + du @ p[f"{lp}.ffn.w1"].T

        # attention block
        dsum1, dg1_scale, dg1_bias = _layer_norm_backward(dh_mid, p[f"{lp}.ln_attn.scale"], lc["ln1"])
        grads[f"{lp}.ln_attn.scale"] = dg1_scale
        grads[f"{lp}.ln_attn.bias"] = dg1_bias
        dout = dsum1
        if f"attn.{i}" in cache["dropout"]:
            dout = dout * cache["dropout"][f"attn.{i}"]
        grads[f"{lp}.attn.wo"] = lc["ctx"].reshape(-1, config.hidden_dim).T @ dout.reshape(-1, config.hidden_dim)
        grads[f"{lp}.attn.bo"] = dout.sum(axis=(0, 1))
        dctx = (dout @ p[f"{lp}.attn.wo"].T).reshape(B, L, nh, dh).transpose(0, 2, 1, 3)
        datt = dctx @ lc["vh"].transpose(0, 1, 3, 2)
        dvh = lc["att"].transpose(0, 1, 3, 2) @ dctx
        att = lc["att"]
        dscores = att * (datt - (datt * att).sum(axis=-1, keepdims=True))
        dqh = (dscores @ lc["kh"]) * scale
        dkh = (dscores.transpose(0, 1, 3, 2) @ lc["qh"]) * scale
        dq = dqh.transpose(0, 2, 1, 3).reshape(B, L, config.hidden_dim)
        dk = dkh.transpose(0, 2, 1, 3).reshape(B, L, config.hidden_dim)
        dv = dvh.transpose(0, 2, 1, 3).reshape(B, L, config.hidden_dim)
        x_in = lc["x_in"]
        x_flat = x_in.reshape(-1, config.hidden_dim)
        grads[f"{lp}.attn.wq"] = x_flat.T @ dq.reshape(-1, config.hidden_dim)
        grads[f"{lp}.attn.bq"] = dq.sum(axis=(0, 1))
        grads[f"{lp}.attn.wk"] = x_flat.T @ dk.reshape(-1, config.hidden_dim)
        grads[f"{lp}.attn.bk"] = dk.sum(axis=(0, 1))
        grads[f"{lp}.attn.wv"] = x_flat.T @ dv.reshape(-1, config.hidden_dim)
        grads[f"{lp}.attn.bv"] = dv.sum(axis=(0, 1))
        dh_out = (dsum1 + dq @ p[f"{lp}.attn.wq"].T + dk @ p[f"{lp}.attn.wk"].T
                  + dv @ p[f"{lp}.attn.wv"].T)

    if "emb" in cache["dropout"]:
        dh_out = dh_out * cache["dropout"]["emb"]
    demb, de_scale, de_bias = _layer_norm_backward(dh_out, p["embeddings.ln.scale"],
                                                   cache["emb_ln"])
    grads["embeddings.ln.scale"] = de_scale
    grads["embeddings.ln.bias"] = de_bias
    np.add.at(grads["embeddings.token"], batch.input_ids, demb)
    grads["embeddings.position"][:L] = demb.sum(axis=0)
    np.add.at(grads["embeddings.segment"], batch.segment_ids, demb)
    return loss_value, grads


# ---------------------------------------------------------------------------
# Gradient check
# ---------------------------------------------------------------------------


def gradient_check(model: Model, batch: Batch, epsilon: float = 1e-3, *,
                   samples_per_tensor: int = 200, seed: int = 0) -> float:
    """Max relative error between analytic and central-difference gradients.

    Runs on a float64 copy of the model with dropout off, sampling up to
    ``samples_per_tensor`` coordinates per parameter tensor. The relative
    error uses |analytic| + |numeric| + 1e-12 as denominator.
    """
    if epsilon <= 0:
        raise DataError("epsilon must be positive")
    wide = Model(model.config, {k: v.astype(np.float64) for k, v in model.params.items()})
    loss_value, grads = backward(wide, batch, train_mode=False)
    if not math.isfinite(loss_value):
        raise NumericsError(f"non-finite loss {loss_value} during gradient check")

    rng = np.random.default_rng(seed)
    worst = 0.0
    for name, tensor in wide.params.items():
        size = tensor.size
        if size <= samples_per_tensor:
            coords = np.arange(size)
        else:
            coords = rng.choice(size, size=samples_per_tensor, replace=False)
        flat = tensor.reshape(-1)
        analytic_flat = grads[name].reshape(-1)
        for index in coords:
            original = flat[index]
            flat[index] = original + epsilon
            plus = loss(forward(wide, batch), batch)
            flat[index] = original - epsilon
            minus = loss(forward(wide, batch), batch)
            flat[index] = original
            numeric = (plus - minus) / (2.0 * epsilon)
            analytic = analytic_flat[index]
            rel = abs(numeric - analytic) / (abs(numeric) + abs(analytic) + 1e-12)
            worst = max(worst, rel)
    return worst


# ---------------------------------------------------------------------------
# Checkpoint / tensor-container I/O
# ---------------------------------------------------------------------------


def _write_tensors(magic: bytes, meta: dict, tensors: dict[str, np.ndarray],
                   np_dtype: str) -> bytes:
    out = bytearray()
    out += magic
    out += struct.pack("<I", FORMAT_VERSION)
    meta_bytes = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    out += struct.pack("<I", len(meta_bytes))
    out += meta_bytes
    out += struct.pack("<I", len(tensors))
    for name, tensor in tensors.items():
        name_bytes = name.encode("utf-8")
        out += struct.pack("<I", len(name_bytes))
        out += name_bytes
        out += struct.pack("<I", tensor.ndim)
        out += struct.pack(f"<{tensor.ndim}I", *tensor.shape)
        out += np.ascontiguousarray(tensor, dtype=np_dtype).tobytes()
    return bytes(out)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise DataError(f"truncated stream: needed {n} bytes at offset {self.pos}, "
                            f"have {len(self.data) - self.pos}")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]


def _read_tensors(data: bytes, magic: bytes, np_dtype: str) -> tuple[dict, dict[str, np.ndarray]]:
    reader = _Reader(data)
    got = reader.take(len(magic))
    if got != magic:
        raise DataError(f"bad magic bytes {got!r}, expected {magic!r}")
    version = reader.u32()
    if version != FORMAT_VERSION:
        raise DataError(f"unsupported format version {version}, expected {FORMAT_VERSION}")
    meta_len = reader.u32()
    try:
        meta = json.loads(reader.take(meta_len).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataError(f"corrupt metadata block: {exc}") from exc
    item_size = np.dtype(np_dtype).itemsize
    tensors: dict[str, np.ndarray] = {}
    for _ in range(reader.u32()):
        name = reader.take(reader.u32()).decode("utf-8")
        rank = reader.u32()
        if rank > 8:
            raise DataError(f"tensor {name!r}: implausible rank {rank}")
        shape = struct.unpack(f"<{rank}I", reader.take(4 * rank))
        count = int(np.prod(shape, dtype=np.int64)) if rank else 1
        raw = reader.take(count * item_size)
        tensors[name] = np.frombuffer(raw, dtype=np_dtype).reshape(shape).copy()
    if reader.pos != len(data):
        raise DataError(f"{len(data) - reader.pos} trailing bytes after last tensor")
    return meta, tensors


def save_checkpoint(model: Model, metadata: dict | None = None) -> bytes:
    meta = {"config": asdict(model.config), "metadata": metadata or {}}
    return _write_tensors(CHECKPOINT_MAGIC, meta, model.params, "<f4")


def load_checkpoint(data: bytes) -> tuple[Model, ModelConfig, dict]:
    meta, tensors = _read_tensors(data, CHECKPOINT_MAGIC, "<f4")
    try:
        config = ModelConfig(**meta["config"])
    except (KeyError, TypeError) as exc:
        raise DataError(f"checkpoint metadata missing config: {exc}") from exc
    expected = {name: shape for name, shape, _ in _param_spec(config)}
    if set(tensors) != set(expected):
        missing = sorted(set(expected) - set(tensors))
        extra = sorted(set(tensors) - set(expected))
        raise DataError(f"checkpoint tensor set mismatch (missing {missing}, extra {extra})")
    params: dict[str, np.ndarray] = {}
    for name, shape, _ in _param_spec(config):
        tensor = tensors[name]
        if tensor.shape != shape:
            raise DataError(f"tensor {name!r} has shape {tensor.shape}, "
                            f"config implies {shape}")
        params[name] = tensor.astype(np.float32)
    return Model(config, params), config, meta["metadata"]


def require_num_labels(model: Model, num_labels: int) -> None:
    """Reject a checkpoint whose classification head has the wrong width."""
    actual = model.params["head.weight"].shape[1]
    if actual != num_labels:
        raise DataError(f"tensor 'head.weight' has {actual} output labels, "
                        f"but {num_labels} are required")


def save_batches(batches: Sequence[Batch], metadata: dict | None = None) -> bytes:
    """Cache encoded batches in the checkpoint-adjacent int32 container."""
    tensors: dict[str, np.ndarray] = {}
    for i, batch in enumerate(batches):
        for field in ("input_ids", "segment_ids", "attention_mask", "labels", "loss_mask"):
            tensors[f"batch.{i}.{field}"] = np.asarray(getattr(batch, field), dtype=np.int32)
    meta = {"count": len(batches), "metadata": metadata or {}}
    return _write_tensors(BATCH_MAGIC, meta, tensors, "<i4")


def load_batches(data: bytes) -> tuple[list[Batch], dict]:
    meta, tensors = _read_tensors(data, BATCH_MAGIC, "<i4")
    batches = []
    for i in range(meta["count"]):
        batches.append(Batch(*(tensors[f"batch.{i}.{field}"] for field in
                               ("input_ids", "segment_ids", "attention_mask",
                                "labels", "loss_mask"))))
    return batches, meta["metadata"]
