"""Dual-decoder GRU sentence-embedding model.

One encoder (three selectable structures) maps a token sequence to a
fixed-width sentence vector of 2*hidden_dim: the concatenation of two
final GRU states. Two decoders are teacher-forced from that single
vector: the auto decoder regenerates the input sentence and the
paraphrase decoder generates its paraphrase. The training objective is

    loss = nll_auto + alpha * nll_para

with alpha weighting the paraphrase decoder (alpha > 1 recommended,
since copying the input is the much easier task).

All math runs through :mod:`pthought.numkit`, so the loss is
differentiable end to end. Per-sentence entry points (``encode``,
``decoder_nll``, ``dual_loss``) are the readable reference path; the
``batched_*`` variants compute the same quantities over padded batches
using carry masking and are cross-checked against the reference in tests.
"""

from __future__ import annotations

import io
import json
import logging
import warnings
import zipfile
from dataclasses import dataclass, field

import numpy as np

from . import numkit as nk
from .corpus import EOS, PAD, SOS, EmbeddingTable
from .errors import DataError, ShapeError
from .numkit import Tensor

logger = logging.getLogger(__name__)

ONE_LAYER_BI = "one-bi"
TWO_LAYER_FORWARD = "two-forward"
TWO_LAYER_BI = "two-bi"
VARIANTS = (ONE_LAYER_BI, TWO_LAYER_FORWARD, TWO_LAYER_BI)

# encoder GRU chains per variant, in parameter order
_CHAIN_KEYS = {
    ONE_LAYER_BI: ("fwd", "bwd"),
    TWO_LAYER_FORWARD: ("l1", "l2"),
    TWO_LAYER_BI: ("l1f", "l1b", "l2f", "l2b"),
}

_GRU_FIELDS = ("W_z", "W_r", "W_h", "U_z", "U_r", "U_h", "b_z", "b_r", "b_h")

CHECKPOINT_FORMAT = "pthought-checkpoint"
CHECKPOINT_VERSION = 1


@dataclass
class GRUParams:
    """Gate weights of one GRU cell: input maps W_*, recurrent maps U_*, biases b_*."""

    input_dim: int
    hidden_dim: int
    W_z: Tensor
    W_r: Tensor
    W_h: Tensor
    U_z: Tensor
    U_r: Tensor
    U_h: Tensor
    b_z: Tensor
    b_r: Tensor
    b_h: Tensor


@dataclass
class DecoderParams:
    """One decoder: GRU cell, sentence-vector bridge, optional own output projection."""

    gru: GRUParams
    bridge_w: Tensor
    bridge_b: Tensor
    proj_w: Tensor | None
    proj_b: Tensor | None


@dataclass
class ModelConfig:
    variant: str
    hidden_dim: int
    embed_dim: int
    vocab_size: int
    share_projection: bool = False

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown encoder variant {self.variant!r}, expected one of {VARIANTS}")
        if min(self.hidden_dim, self.embed_dim, self.vocab_size) < 1:
            raise ValueError("hidden_dim, embed_dim and vocab_size must be positive")

    @property
    def sentence_dim(self) -> int:
        return 2 * self.hidden_dim


@dataclass
class ModelParams:
    """All trainable weights plus the (default-frozen) token embedding table."""

    config: ModelConfig
    embedding: Tensor
    encoder: dict[str, GRUParams]
    auto_decoder: DecoderParams
    para_decoder: DecoderParams
    shared_proj_w: Tensor | None = None
    shared_proj_b: Tensor | None = None
    embedding_trainable: bool = False


def xavier_init(shape: tuple[int, int], seed: int) -> np.ndarray:
    """Uniform(-a, a) weights with a = sqrt(6 / (fan_in + fan_out))."""
    if len(shape) != 2:
        raise ShapeError(f"xavier_init: expected a 2-D shape, got {shape}")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    return _xavier(shape, rng)


def _xavier(shape: tuple[int, int], rng: np.random.Generator) -> np.ndarray:
    a = np.sqrt(6.0 / (shape[0] + shape[1]))
    return rng.uniform(-a, a, size=shape)


def _init_gru(input_dim: int, hidden_dim: int, rng: np.random.Generator) -> GRUParams:
    return GRUParams(
        input_dim=input_dim,
        hidden_dim=hidden_dim,
        W_z=Tensor(_xavier((input_dim, hidden_dim), rng)),
        W_r=Tensor(_xavier((input_dim, hidden_dim), rng)),
        W_h=Tensor(_xavier((input_dim, hidden_dim), rng)),
        U_z=Tensor(_xavier((hidden_dim, hidden_dim), rng)),
        U_r=Tensor(_xavier((hidden_dim, hidden_dim), rng)),
        U_h=Tensor(_xavier((hidden_dim, hidden_dim), rng)),
        b_z=nk.zeros((1, hidden_dim)),
        b_r=nk.zeros((1, hidden_dim)),
        b_h=nk.zeros((1, hidden_dim)),
    )


def _chain_input_dims(config: ModelConfig) -> dict[str, int]:
    e, h = config.embed_dim, config.hidden_dim
    if config.variant == ONE_LAYER_BI:
        return {"fwd": e, "bwd": e}
    if config.variant == TWO_LAYER_FORWARD:
        return {"l1": e, "l2": h}
    return {"l1f": e, "l1b": e, "l2f": 2 * h, "l2b": 2 * h}


def _init_decoder(config: ModelConfig, rng: np.random.Generator) -> DecoderParams:
    h, v = config.hidden_dim, config.vocab_size
    return DecoderParams(
        gru=_init_gru(config.embed_dim, h, rng),
        bridge_w=Tensor(_xavier((2 * h, h), rng)),
        bridge_b=nk.zeros((1, h)),
        proj_w=None if config.share_projection else Tensor(_xavier((h, v), rng)),
        proj_b=None if config.share_projection else nk.zeros((1, v)),
    )


def init_model(config: ModelConfig, seed: int, embedding: EmbeddingTable) -> ModelParams:
    """Fresh model with Xavier weights and zero biases, deterministic under seed."""
    if embedding.rows.shape != (config.vocab_size, config.embed_dim):
        raise ShapeError(
            f"init_model: embedding shape {embedding.rows.shape} does not match "
            f"config ({config.vocab_size}, {config.embed_dim})"
        )
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    encoder = {
        key: _init_gru(dim, config.hidden_dim, rng)
        for key, dim in _chain_input_dims(config).items()
    }
    auto_dec = _init_decoder(config, rng)
    para_dec = _init_decoder(config, rng)
    shared_w = shared_b = None
    if config.share_projection:
        shared_w = Tensor(_xavier((config.hidden_dim, config.vocab_size), rng))
        shared_b = nk.zeros((1, config.vocab_size))
    return ModelParams(
        config=config,
        embedding=Tensor(embedding.rows),
        encoder=encoder,
        auto_decoder=auto_dec,
        para_decoder=para_dec,
        shared_proj_w=shared_w,
        shared_proj_b=shared_b,
    )


def named_parameters(
    params: ModelParams, include_embedding: bool | None = None
) -> list[tuple[str, Tensor]]:
    """Trainable tensors in a fixed, deterministic order."""
    if include_embedding is None:
        include_embedding = params.embedding_trainable
    out: list[tuple[str, Tensor]] = []
    if include_embedding:
        out.append(("embedding", params.embedding))
    for key in _CHAIN_KEYS[params.config.variant]:
        gp = params.encoder[key]
        for f in _GRU_FIELDS:
            out.append((f"enc.{key}.{f}", getattr(gp, f)))
    for dec_name, dec in (("auto", params.auto_decoder), ("para", params.para_decoder)):
        for f in _GRU_FIELDS:
            out.append((f"{dec_name}.gru.{f}", getattr(dec.gru, f)))
        out.append((f"{dec_name}.bridge_w", dec.bridge_w))
        out.append((f"{dec_name}.bridge_b", dec.bridge_b))
        if dec.proj_w is not None:
            out.append((f"{dec_name}.proj_w", dec.proj_w))
            out.append((f"{dec_name}.proj_b", dec.proj_b))
    if params.shared_proj_w is not None:
        out.append(("shared.proj_w", params.shared_proj_w))
        out.append(("shared.proj_b", params.shared_proj_b))
    return out


# ---------------------------------------------------------------------------
# forward computation
# ---------------------------------------------------------------------------


def _one_minus(t: Tensor) -> Tensor:
    shape = t.data.shape
    return nk.add(nk.ones(shape), nk.mul(t, nk.full(shape, -1.0)))


def _cell(x: Tensor, h: Tensor, p: GRUParams, b_z: Tensor, b_r: Tensor, b_h: Tensor) -> Tensor:
    z = nk.sigmoid(nk.add(nk.add(nk.matmul(x, p.W_z), nk.matmul(h, p.U_z)), b_z))
    r = nk.sigmoid(nk.add(nk.add(nk.matmul(x, p.W_r), nk.matmul(h, p.U_r)), b_r))
    cand = nk.tanh(nk.add(nk.add(nk.matmul(x, p.W_h), nk.matmul(nk.mul(r, h), p.U_h)), b_h))
    return nk.add(nk.mul(_one_minus(z), h), nk.mul(z, cand))


def _tiled(bias: Tensor, batch: int) -> Tensor:
    if batch == 1:
        return bias
    return nk.concat([bias] * batch, axis=0)


def gru_step(x: Tensor, h: Tensor, params: GRUParams) -> Tensor:
    """One GRU update h -> h' for a (batch, input_dim) input."""
    if x.data.ndim != 2 or x.data.shape[1] != params.input_dim:
        raise ShapeError(
            f"gru_step: input shape {x.data.shape} does not match input_dim {params.input_dim}"
        )
    if h.data.shape != (x.data.shape[0], params.hidden_dim):
        raise ShapeError(
            f"gru_step: hidden shape {h.data.shape} does not match "
            f"({x.data.shape[0]}, {params.hidden_dim})"
        )
    batch = x.data.shape[0]
    return _cell(
        x, h, params,
        _tiled(params.b_z, batch), _tiled(params.b_r, batch), _tiled(params.b_h, batch),
    )


def _embed_rows(params: ModelParams, ids: list[int]) -> Tensor:
    """Embedding rows for a list of token ids, shape (len(ids), embed_dim).

    With a frozen table the rows are plain constants; with a trainable
    table the lookup is routed through slice/concat so gradients reach it.
    """
    if params.embedding_trainable:
        rows = [nk.slice(params.embedding, 0, i, i + 1) for i in ids]
        return rows[0] if len(rows) == 1 else nk.concat(rows, axis=0)
    return Tensor(params.embedding.data[ids])


def _run_chain(xs: list[Tensor], gp: GRUParams, masks: list[np.ndarray] | None = None) -> list[Tensor]:
    """Run one GRU chain over per-step inputs, returning all hidden states.

    ``masks[t]`` is a (batch, hidden) 0/1 array; rows masked 0 carry the
    previous state through, so each row's state freezes once its sentence
    has ended (or, for reversed padded input, stays zero until it starts).
    """
    batch = xs[0].data.shape[0]
    b_z, b_r, b_h = (_tiled(gp.b_z, batch), _tiled(gp.b_r, batch), _tiled(gp.b_h, batch))
    h = nk.zeros((batch, gp.hidden_dim))
    states: list[Tensor] = []
    for t, x in enumerate(xs):
        h_new = _cell(x, h, gp, b_z, b_r, b_h)
        if masks is not None and not masks[t].all():
            m = masks[t]
            h = nk.add(nk.mul(Tensor(m), h_new), nk.mul(Tensor(1.0 - m), h))
        else:
            h = h_new
        states.append(h)
    return states


def _encode_steps(
    xs: list[Tensor],
    params: ModelParams,
    masks: list[np.ndarray] | None = None,
) -> Tensor:
    """Shared encoder body over per-step (batch, embed_dim) inputs."""
    enc = params.encoder
    variant = params.config.variant
    xs_rev = xs[::-1]
    masks_rev = masks[::-1] if masks is not None else None
    if variant == ONE_LAYER_BI:
        f = _run_chain(xs, enc["fwd"], masks)[-1]
        b = _run_chain(xs_rev, enc["bwd"], masks_rev)[-1]
        return nk.concat([f, b], axis=1)
    if variant == TWO_LAYER_FORWARD:
        s1 = _run_chain(xs, enc["l1"], masks)
        s2 = _run_chain(s1, enc["l2"], masks)
        return nk.concat([s1[-1], s2[-1]], axis=1)
    f1 = _run_chain(xs, enc["l1f"], masks)
    b1_rev = _run_chain(xs_rev, enc["l1b"], masks_rev)
    b1 = b1_rev[::-1]  # align backward states to positions
    l1_out = [nk.concat([f1[t], b1[t]], axis=1) for t in range(len(xs))]
    f2 = _run_chain(l1_out, enc["l2f"], masks)[-1]
    b2 = _run_chain(l1_out[::-1], enc["l2b"], masks_rev)[-1]
    return nk.concat([f2, b2], axis=1)


def encode(tokens: list[int], params: ModelParams) -> Tensor:
    """Sentence vector (1, 2*hidden_dim) for one id sequence."""
    if not tokens:
        raise DataError("encode: empty token sequence")
    xs = [_embed_rows(params, [i]) for i in tokens]
    return _encode_steps(xs, params)


def batched_encode(sequences: list[list[int]], params: ModelParams) -> Tensor:
    """Sentence vectors (batch, 2*hidden_dim) for a ragged batch of id sequences."""
    if not sequences:
        raise DataError("batched_encode: empty batch")
    if any(not s for s in sequences):
        raise DataError("batched_encode: empty token sequence in batch")
    batch = len(sequences)
    lens = [len(s) for s in sequences]
    t_max = max(lens)
    padded = np.full((batch, t_max), PAD, dtype=np.int64)
    for i, s in enumerate(sequences):
        padded[i, : len(s)] = s
    h = params.config.hidden_dim
    xs = [_embed_rows(params, list(padded[:, t])) for t in range(t_max)]
    masks = [
        np.repeat((np.array(lens) > t).astype(np.float64)[:, None], h, axis=1)
        for t in range(t_max)
    ]
    return _encode_steps(xs, params, masks)


def sentence_vector(tokens: list[int], params: ModelParams) -> np.ndarray:
    """Plain float64 sentence vector, for metric and embedding-file use."""
    return encode(tokens, params).data[0].copy()


def _projection(dec: DecoderParams, params: ModelParams) -> tuple[Tensor, Tensor]:
    if dec.proj_w is not None:
        return dec.proj_w, dec.proj_b
    return params.shared_proj_w, params.shared_proj_b


def decoder_nll(
    sv: Tensor, target: list[int], decoder: DecoderParams, params: ModelParams
) -> Tensor:
    """Teacher-forced mean negative log likelihood of one target sequence.

    The decoder's initial state is a learned linear map of the sentence
    vector; at step t the input is the embedding of the gold token t-1
    (SOS at the first step).
    """
    if not target:
        raise DataError("decoder_nll: empty target")
    if target[-1] != EOS:
        raise DataError("decoder_nll: target must end with EOS")
    proj_w, proj_b = _projection(decoder, params)
    h = nk.add(nk.matmul(sv, decoder.bridge_w), decoder.bridge_b)
    prev = [SOS] + list(target[:-1])
    vocab_size = params.config.vocab_size
    acc: Tensor | None = None
    for t, gold in enumerate(target):
        x = _embed_rows(params, [prev[t]])
        h = _cell(x, h, decoder.gru, decoder.gru.b_z, decoder.gru.b_r, decoder.gru.b_h)
        logp = nk.log(nk.softmax(nk.add(nk.matmul(h, proj_w), proj_b), axis=1))
        pick = np.zeros((1, vocab_size))
        pick[0, gold] = 1.0
        term = nk.sum(nk.mul(logp, Tensor(pick)))
        acc = term if acc is None else nk.add(acc, term)
    return nk.mul(acc, nk.full((), -1.0 / len(target)))


def _batched_decoder_nll(
    sv: Tensor, targets: list[list[int]], decoder: DecoderParams, params: ModelParams
) -> Tensor:
    """Batch mean of per-sentence mean NLLs over a padded target batch.

    Each step's gold log-probabilities are picked and weighted by one
    constant matrix carrying mask / (sentence_len * batch), so padded
    steps drop out of the loss exactly.
    """
    batch = len(targets)
    lens = [len(t) for t in targets]
    if min(lens) == 0:
        raise DataError("decoder_nll: empty target")
    t_max = max(lens)
    prev = np.full((batch, t_max), PAD, dtype=np.int64)
    gold = np.full((batch, t_max), PAD, dtype=np.int64)
    for i, t in enumerate(targets):
        if t[-1] != EOS:
            raise DataError("decoder_nll: target must end with EOS")
        gold[i, : len(t)] = t
        prev[i, 0] = SOS
        prev[i, 1 : len(t)] = t[:-1]
    proj_w, proj_b = _projection(decoder, params)
    vocab_size = params.config.vocab_size
    h = nk.add(nk.matmul(sv, decoder.bridge_w), _tiled(decoder.bridge_b, batch))
    proj_b_t = _tiled(proj_b, batch)
    acc: Tensor | None = None
    for t in range(t_max):
        x = _embed_rows(params, list(prev[:, t]))
        h = _cell(x, h, decoder.gru, decoder.gru.b_z, decoder.gru.b_r, decoder.gru.b_h)
        logp = nk.log(nk.softmax(nk.add(nk.matmul(h, proj_w), proj_b_t), axis=1))
        weights = np.zeros((batch, vocab_size))
        for i in range(batch):
            if t < lens[i]:
                weights[i, gold[i, t]] = 1.0 / (lens[i] * batch)
        term = nk.sum(nk.mul(logp, Tensor(weights)))
        acc = term if acc is None else nk.add(acc, term)
    return nk.mul(acc, nk.full((), -1.0))


def _check_alpha(alpha: float) -> None:
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if alpha <= 1:
        warnings.warn(
            f"alpha={alpha} <= 1 under-weights the paraphrase decoder; "
            "values greater than 1 are the recommended regime",
            stacklevel=3,
        )


def dual_loss(
    source: list[int], target: list[int], params: ModelParams, alpha: float
) -> tuple[Tensor, Tensor, Tensor]:
    """(total, nll_auto, nll_para) for one pair, from a single encoding of the source."""
    _check_alpha(alpha)
    sv = encode(source, params)
    l_auto = decoder_nll(sv, source, params.auto_decoder, params)
    l_para = decoder_nll(sv, target, params.para_decoder, params)
    total = nk.add(l_auto, nk.mul(l_para, nk.full((), alpha)))
    return total, l_auto, l_para


def loss(source: list[int], target: list[int], params: ModelParams, alpha: float) -> Tensor:
    """Composite training loss nll_auto + alpha * nll_para for one pair."""
    return dual_loss(source, target, params, alpha)[0]


def batched_dual_loss(
    pairs: list, params: ModelParams, alpha: float
) -> tuple[Tensor, Tensor, Tensor]:
    """(total, nll_auto, nll_para) means over a batch of SentencePairs."""
    _check_alpha(alpha)
    sources = [p.source for p in pairs]
    sv = batched_encode(sources, params)
    l_auto = _batched_decoder_nll(sv, sources, params.auto_decoder, params)
    l_para = _batched_decoder_nll(sv, [p.target for p in pairs], params.para_decoder, params)
    total = nk.add(l_auto, nk.mul(l_para, nk.full((), alpha)))
    return total, l_auto, l_para


def greedy_decode(
    sv: Tensor, decoder: DecoderParams, params: ModelParams, max_len: int = 30
) -> list[int]:
    """Greedy argmax decoding from a sentence vector; for inspection only."""
    proj_w, proj_b = _projection(decoder, params)
    h = nk.add(nk.matmul(sv, decoder.bridge_w), decoder.bridge_b)
    out: list[int] = []
    prev = SOS
    for _ in range(max_len):
        x = _embed_rows(params, [prev])
        h = _cell(x, h, decoder.gru, decoder.gru.b_z, decoder.gru.b_r, decoder.gru.b_h)
        logits = nk.add(nk.matmul(h, proj_w), proj_b)
        prev = int(np.argmax(logits.data[0]))
        out.append(prev)
        if prev == EOS:
            break
    return out


# ---------------------------------------------------------------------------
# checkpointing
# ---------------------------------------------------------------------------


def _write_zip_deterministic(path: str, members: dict[str, bytes]) -> None:
    # fixed timestamps keep byte-identical files across reruns
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_STORED) as zf:
        for name, payload in members.items():
            info = zipfile.ZipInfo(name, date_time=(1980, 1, 1, 0, 0, 0))
            info.external_attr = 0o600 << 16
            zf.writestr(info, payload)


def _npy_bytes(arr: np.ndarray) -> bytes:
    buf = io.BytesIO()
    np.lib.format.write_array(buf, np.ascontiguousarray(arr))
    return buf.getvalue()


def save_checkpoint(
    path: str,
    params: ModelParams,
    *,
    alpha: float,
    seed: int,
    vocab_tokens: list[str] | tuple[str, ...],
    vocab_sha256: str,
    optimizer: dict | None = None,
    extra: dict | None = None,
) -> None:
    """Write a self-describing single-file checkpoint (npz layout).

    ``optimizer``, when given, is {"t": int, "m": {name: arr}, "v": {name: arr}}
    so a resumed trainer continues bit-exactly.
    """
    cfg = params.config
    named = named_parameters(params, include_embedding=False)
    meta = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "variant": cfg.variant,
        "hidden_dim": cfg.hidden_dim,
        "embed_dim": cfg.embed_dim,
        "vocab_size": cfg.vocab_size,
        "share_projection": cfg.share_projection,
        "embedding_trainable": params.embedding_trainable,
        "alpha": alpha,
        "seed": seed,
        "vocab": list(vocab_tokens),
        "vocab_sha256": vocab_sha256,
        "param_names": ["embedding"] + [name for name, _ in named],
        "optimizer_t": None if optimizer is None else optimizer["t"],
        "extra": extra or {},
    }
    members: dict[str, bytes] = {
        "__meta__.npy": _npy_bytes(
            np.frombuffer(json.dumps(meta, sort_keys=True).encode("utf-8"), dtype=np.uint8)
        ),
        "param/embedding.npy": _npy_bytes(params.embedding.data),
    }
    for name, tensor in named:
        members[f"param/{name}.npy"] = _npy_bytes(tensor.data)
    if optimizer is not None:
        for name, arr in optimizer["m"].items():
            members[f"adam_m/{name}.npy"] = _npy_bytes(arr)
        for name, arr in optimizer["v"].items():
            members[f"adam_v/{name}.npy"] = _npy_bytes(arr)
    _write_zip_deterministic(path, members)


def load_checkpoint(path: str) -> tuple[ModelParams, dict]:
    """Read a checkpoint back into a ModelParams plus its metadata dict.

    The returned metadata carries the vocab token list, alpha, seed and,
    when present, optimizer state under "optimizer".
    """
    with np.load(path) as archive:
        raw = {name: archive[name] for name in archive.files}
    if "__meta__" not in raw:
        raise DataError(f"{path}: not a model checkpoint (missing metadata)")
    meta = json.loads(bytes(raw["__meta__"].tobytes()).decode("utf-8"))
    if meta.get("format") != CHECKPOINT_FORMAT:
        raise DataError(f"{path}: unexpected checkpoint format {meta.get('format')!r}")
    cfg = ModelConfig(
        variant=meta["variant"],
        hidden_dim=meta["hidden_dim"],
        embed_dim=meta["embed_dim"],
        vocab_size=meta["vocab_size"],
        share_projection=meta["share_projection"],
    )
    table = EmbeddingTable(dim=cfg.embed_dim, rows=raw["param/embedding"])
    params = init_model(cfg, seed=0, embedding=table)
    params.embedding_trainable = meta["embedding_trainable"]
    for name, tensor in named_parameters(params, include_embedding=False):
        key = f"param/{name}"
        if key not in raw:
            raise DataError(f"{path}: missing parameter {name!r}")
        if raw[key].shape != tensor.data.shape:
            raise DataError(
                f"{path}: parameter {name!r} has shape {raw[key].shape}, "
                f"expected {tensor.data.shape}"
            )
        tensor.data = np.ascontiguousarray(raw[key], dtype=np.float64)
    if meta.get("optimizer_t") is not None:
        meta["optimizer"] = {
            "t": meta["optimizer_t"],
            "m": {
                name[len("adam_m/"):]: np.ascontiguousarray(arr, dtype=np.float64)
                for name, arr in raw.items()
                if name.startswith("adam_m/")
            },
            "v": {
                name[len("adam_v/"):]: np.ascontiguousarray(arr, dtype=np.float64)
                for name, arr in raw.items()
                if name.startswith("adam_v/")
            },
        }
    return params, meta
