"""Encoder-decoder transformer pairs, the per-language registry, and generation.

One :class:`EncDecPair` is a full encoder-decoder with either a token-logit
head (gloss stage) or a 151-wide pose-regression head (150 pose values plus
the progress counter). The switching framework keeps an independent pair per
language in a :class:`LanguageRegistry`; the prompt mode instead shares one
pair across languages and carries the language inside the token prefixes.

Pose generation is greedy and autoregressive, starting from an all-zero frame
and stopping as soon as the predicted counter channel reaches 1.0 (or at the
length cap). Gloss decoding is greedy argmax from <bos> until <eos>, ties
resolved to the lowest token id.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, asdict

import numpy as np

from . import tensor as tz
from .langgloss import (
    BOS_ID,
    EOS_ID,
    PAD_ID,
    Vocab,
    detect_violation,
    encode as encode_tokens,
    split_language_prefix,
    DEFAULT_LANGUAGES,
)
from .storage import read_archive, write_archive

POSE_WIDTH = 150
FRAME_WIDTH = POSE_WIDTH + 1  # pose values plus the progress counter

SIZE_CLASSES = {
    "Tiny": (32, 32, 128),
    "Base": (512, 512, 2048),
    "Large": (1024, 1024, 4096),
    "Super": (2048, 2048, 8192),
}


class ModelError(Exception):
    pass


class BadConfig(ModelError):
    pass


class TooLong(ModelError):
    pass


class UnknownLanguage(ModelError):
    pass


class DuplicateTag(ModelError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    embed_dim: int = 512
    hidden_dim: int = 512
    ffn_dim: int = 2048
    layers: int = 2
    heads: int = 4
    max_sent_length: int = 300
    dropout: float = 0.0
    size_class: str = "Base"

    def __post_init__(self):
        if self.ffn_dim != 4 * self.hidden_dim:
            raise BadConfig(f"ffn_dim must equal 4*hidden_dim, got {self.ffn_dim} vs 4*{self.hidden_dim}")
        if self.embed_dim != self.hidden_dim:
            raise BadConfig("embed_dim and hidden_dim must match in this architecture")
        if self.embed_dim % self.heads != 0:
            raise BadConfig(f"embed_dim {self.embed_dim} not divisible by {self.heads} heads")
        if not 0.0 <= self.dropout < 1.0:
            raise BadConfig("dropout must be in [0, 1)")

    @classmethod
    def for_size(cls, size_class: str, **overrides) -> "ModelConfig":
        if size_class not in SIZE_CLASSES:
            raise BadConfig(f"unknown size class {size_class!r}")
        embed, hidden, ffn = SIZE_CLASSES[size_class]
        kwargs = dict(embed_dim=embed, hidden_dim=hidden, ffn_dim=ffn, size_class=size_class)
        kwargs.update(overrides)
        return cls(**kwargs)


def sinusoidal_table(max_len: int, dim: int) -> np.ndarray:
    position = np.arange(max_len, dtype=np.float64)[:, None]
    div = np.exp(np.arange(0, dim, 2, dtype=np.float64) * (-math.log(10000.0) / dim))
    table = np.zeros((max_len, dim), dtype=np.float64)
    table[:, 0::2] = np.sin(position * div)
    table[:, 1::2] = np.cos(position * div[: table[:, 1::2].shape[1]])
    return table.astype(np.float32)


def _glorot(rng, fan_in, fan_out):
    s = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-s, s, size=(fan_in, fan_out)).astype(np.float32)


class EncDecPair:
    """Parameters plus metadata for one encoder-decoder.

    output_kind is ``"pose"`` (regression head, decoder input is a frame) or
    ``"tokens"`` (logit head, decoder input is an embedded token).
    """

    def __init__(self, config: ModelConfig, src_vocab: Vocab, output_kind: str,
                 tgt_vocab: Vocab | None = None, seed: int = 0):
        if output_kind not in ("pose", "tokens"):
            raise BadConfig(f"unknown output kind {output_kind!r}")
        if output_kind == "tokens" and tgt_vocab is None:
            raise BadConfig("token output head needs a target vocabulary")
        self.config = config
        self.src_vocab = src_vocab
        self.tgt_vocab = tgt_vocab
        self.output_kind = output_kind
        self.seed = seed
        self.params: dict[str, tz.Tensor] = {}
        self._init_params(np.random.default_rng(seed))
        self.pos_table = sinusoidal_table(config.max_sent_length + 1, config.embed_dim)

    # parameter construction -------------------------------------------------

    def _add(self, name, values):
        self.params[name] = tz.parameter(values)

    def _init_attention(self, rng, prefix, d):
        for piece in ("q", "k", "v", "o"):
            self._add(f"{prefix}.w{piece}", _glorot(rng, d, d))
            self._add(f"{prefix}.b{piece}", np.zeros(d, dtype=np.float32))

    def _init_layernorm(self, prefix, d):
        self._add(f"{prefix}.g", np.ones(d, dtype=np.float32))
        self._add(f"{prefix}.b", np.zeros(d, dtype=np.float32))

    def _init_ffn(self, rng, prefix, d, f):
        self._add(f"{prefix}.w1", _glorot(rng, d, f))
        self._add(f"{prefix}.b1", np.zeros(f, dtype=np.float32))
        self._add(f"{prefix}.w2", _glorot(rng, f, d))
        self._add(f"{prefix}.b2", np.zeros(d, dtype=np.float32))

    def _init_params(self, rng):
        cfg = self.config
        d, f = cfg.embed_dim, cfg.ffn_dim
        self._add("enc.embed", _glorot(rng, len(self.src_vocab), d))
        for i in range(cfg.layers):
            self._init_attention(rng, f"enc.{i}.attn", d)
            self._init_layernorm(f"enc.{i}.ln1", d)
            self._init_ffn(rng, f"enc.{i}.ffn", d, f)
            self._init_layernorm(f"enc.{i}.ln2", d)
        self._init_layernorm("enc.ln_out", d)
        if self.output_kind == "pose":
            self._add("dec.in_w", _glorot(rng, FRAME_WIDTH, d))
            self._add("dec.in_b", np.zeros(d, dtype=np.float32))
            out_dim = FRAME_WIDTH
        else:
            self._add("dec.embed", _glorot(rng, len(self.tgt_vocab), d))
            out_dim = len(self.tgt_vocab)
        for i in range(cfg.layers):
            self._init_attention(rng, f"dec.{i}.self", d)
            self._init_layernorm(f"dec.{i}.ln1", d)
            self._init_attention(rng, f"dec.{i}.cross", d)
            self._init_layernorm(f"dec.{i}.ln2", d)
            self._init_ffn(rng, f"dec.{i}.ffn", d, f)
            self._init_layernorm(f"dec.{i}.ln3", d)
        self._init_layernorm("dec.ln_out", d)
        self._add("dec.out_w", _glorot(rng, d, out_dim))
        self._add("dec.out_b", np.zeros(out_dim, dtype=np.float32))

    # forward pieces ----------------------------------------------------------

    def _maybe_dropout(self, x, drop):
        if drop is None:
            return x
        rate, rng = drop
        if rate <= 0.0:
            return x
        mask = (rng.random(x.shape) >= rate).astype(np.float32)
        return tz.scale(tz.multiply(x, tz.constant(mask)), 1.0 / (1.0 - rate))

    def _attention(self, prefix, q_in, kv_in, mask=None, drop=None):
        P = self.params
        heads = self.config.heads
        dk = self.config.embed_dim // heads
        q = tz.add(tz.matmul(q_in, P[f"{prefix}.wq"]), P[f"{prefix}.bq"])
        k = tz.add(tz.matmul(kv_in, P[f"{prefix}.wk"]), P[f"{prefix}.bk"])
        v = tz.add(tz.matmul(kv_in, P[f"{prefix}.wv"]), P[f"{prefix}.bv"])
        contexts = []
        for h in range(heads):
            cols = (slice(None), slice(h * dk, (h + 1) * dk))
            qh, kh, vh = tz.slice_(q, cols), tz.slice_(k, cols), tz.slice_(v, cols)
            scores = tz.scale(tz.matmul(qh, kh, transpose_b=True), 1.0 / math.sqrt(dk))
            if mask is not None:
                scores = tz.add(scores, mask)
            att = tz.softmax(scores)
            contexts.append(tz.matmul(att, vh))
        ctx = tz.concat(contexts, axis=1)
        out = tz.add(tz.matmul(ctx, P[f"{prefix}.wo"]), P[f"{prefix}.bo"])
        return self._maybe_dropout(out, drop)

    def _ffn(self, prefix, x, drop=None):
        P = self.params
        h = tz.relu(tz.add(tz.matmul(x, P[f"{prefix}.w1"]), P[f"{prefix}.b1"]))
        out = tz.add(tz.matmul(h, P[f"{prefix}.w2"]), P[f"{prefix}.b2"])
        return self._maybe_dropout(out, drop)

    def _ln(self, prefix, x):
        P = self.params
        return tz.layer_norm(x, P[f"{prefix}.g"], P[f"{prefix}.b"])

    def _positional(self, length):
        return tz.constant(self.pos_table[:length])

    def encode_source(self, token_ids, drop=None) -> tz.Tensor:
        """Memory matrix (U, D) for a source id sequence; full bidirectional context."""
        ids = np.asarray(token_ids, dtype=np.int64)
        if ids.ndim != 1 or ids.shape[0] < 1:
            raise ModelError("source must be a non-empty 1-D id sequence")
        if ids.shape[0] > self.config.max_sent_length:
            raise TooLong(f"source length {ids.shape[0]} exceeds {self.config.max_sent_length}")
        d = self.config.embed_dim
        x = tz.scale(tz.embedding_lookup(self.params["enc.embed"], ids), math.sqrt(d))
        x = tz.add(x, self._positional(ids.shape[0]))
        x = self._maybe_dropout(x, drop)
        # Pre-LN arrangement: normalized sublayer inputs, plain residual adds.
        for i in range(self.config.layers):
            normed = self._ln(f"enc.{i}.ln1", x)
            x = tz.add(x, self._attention(f"enc.{i}.attn", normed, normed, drop=drop))
            x = tz.add(x, self._ffn(f"enc.{i}.ffn", self._ln(f"enc.{i}.ln2", x), drop=drop))
        return self._ln("enc.ln_out", x)

    def _causal_mask(self, w):
        mask = np.triu(np.full((w, w), -1e9, dtype=np.float32), k=1)
        return tz.constant(mask)

    def _decoder_stack(self, x, memory, drop=None):
        w = x.shape[0]
        mask = self._causal_mask(w)
        for i in range(self.config.layers):
            normed = self._ln(f"dec.{i}.ln1", x)
            x = tz.add(x, self._attention(f"dec.{i}.self", normed, normed, mask=mask, drop=drop))
            x = tz.add(x, self._attention(f"dec.{i}.cross", self._ln(f"dec.{i}.ln2", x), memory, drop=drop))
            x = tz.add(x, self._ffn(f"dec.{i}.ffn", self._ln(f"dec.{i}.ln3", x), drop=drop))
        return self._ln("dec.ln_out", x)

    def _head(self, x):
        return tz.add(tz.matmul(x, self.params["dec.out_w"]), self.params["dec.out_b"])

    def decode_pose_sequence(self, frames, memory, drop=None) -> tz.Tensor:
        """Teacher-forced decoder pass: (W, 151) input frames to (W, 151) predictions."""
        if self.output_kind != "pose":
            raise ModelError("pair has a token head, not a pose head")
        frames = np.asarray(frames, dtype=np.float32)
        if frames.ndim != 2 or frames.shape[1] != FRAME_WIDTH:
            raise ModelError(f"expected (W, {FRAME_WIDTH}) frames, got {frames.shape}")
        if memory.shape[0] < 1:
            raise ModelError("memory must have at least one row")
        if frames.shape[0] > self.config.max_sent_length:
            raise TooLong(f"decoder length {frames.shape[0]} exceeds {self.config.max_sent_length}")
        x = tz.add(tz.matmul(tz.constant(frames), self.params["dec.in_w"]), self.params["dec.in_b"])
        x = tz.add(x, self._positional(frames.shape[0]))
        x = self._maybe_dropout(x, drop)
        x = self._decoder_stack(x, memory, drop=drop)
        return self._head(x)

    def decode_token_logits(self, token_ids, memory, drop=None) -> tz.Tensor:
        """Teacher-forced decoder pass over target ids: (W,) ids to (W, V) logits."""
        if self.output_kind != "tokens":
            raise ModelError("pair has a pose head, not a token head")
        ids = np.asarray(token_ids, dtype=np.int64)
        if ids.ndim != 1 or ids.shape[0] < 1:
            raise ModelError("decoder input must be a non-empty id sequence")
        if memory.shape[0] < 1:
            raise ModelError("memory must have at least one row")
        if ids.shape[0] > self.config.max_sent_length:
            raise TooLong(f"decoder length {ids.shape[0]} exceeds {self.config.max_sent_length}")
        d = self.config.embed_dim
        x = tz.scale(tz.embedding_lookup(self.params["dec.embed"], ids), math.sqrt(d))
        x = tz.add(x, self._positional(ids.shape[0]))
        x = self._maybe_dropout(x, drop)
        x = self._decoder_stack(x, memory, drop=drop)
        return self._head(x)


def build(config: ModelConfig, src_vocab: Vocab, output_kind: str = "pose",
          tgt_vocab: Vocab | None = None, seed: int = 0) -> EncDecPair:
    return EncDecPair(config, src_vocab, output_kind, tgt_vocab=tgt_vocab, seed=seed)


def encode(pair: EncDecPair, token_ids) -> tz.Tensor:
    return pair.encode_source(token_ids)


def decode_pose_step(pair: EncDecPair, prev_frames, memory) -> np.ndarray:
    """Next 151-dim frame from the frames decoded so far (prev_frames[0] is the zero frame)."""
    out = pair.decode_pose_sequence(prev_frames, memory)
    return out.values[-1].copy()


def generate_pose(registry, language: str, token_ids, max_frames: int | None = None) -> np.ndarray:
    """Greedy pose rollout with the selected language's parameters; (T', 150)."""
    pair = registry.get(language)
    return rollout_pose(pair, token_ids, max_frames=max_frames)


def rollout_pose(pair: EncDecPair, token_ids, max_frames: int | None = None) -> np.ndarray:
    cap = max_frames if max_frames is not None else pair.config.max_sent_length
    memory = pair.encode_source(token_ids)
    frames = [np.zeros(FRAME_WIDTH, dtype=np.float32)]
    produced = []
    while len(produced) < cap:
        nxt = decode_pose_step(pair, np.stack(frames), memory)
        produced.append(nxt)
        frames.append(nxt)
        if nxt[POSE_WIDTH] >= 1.0:
            break
    return np.stack(produced)[:, :POSE_WIDTH]


def decode_gloss(pair: EncDecPair, memory) -> list[str]:
    """Greedy argmax token decoding from <bos> until <eos>; never emits <pad>/<bos>."""
    ids = decode_gloss_ids(pair, memory)
    return [pair.tgt_vocab.token_of(i) for i in ids]


def decode_gloss_ids(pair: EncDecPair, memory) -> list[int]:
    if pair.output_kind != "tokens":
        raise ModelError("pair has no token head")
    history = [BOS_ID]
    out: list[int] = []
    for _ in range(pair.config.max_sent_length):
        logits = pair.decode_token_logits(np.array(history), memory).values[-1].copy()
        logits[PAD_ID] = -np.inf
        logits[BOS_ID] = -np.inf
        token_id = int(np.argmax(logits))  # argmax takes the lowest id on ties
        if token_id == EOS_ID:
            break
        out.append(token_id)
        history.append(token_id)
    return out


class LanguageRegistry:
    """Language tag to independent encoder-decoder pair; no fallback on lookup."""

    def __init__(self):
        self._pairs: dict[str, EncDecPair] = {}

    def register(self, tag: str, pair: EncDecPair) -> None:
        if not tag or not all(c.isalnum() or c == "-" for c in tag) or not tag[0].isalpha():
            raise ModelError(f"malformed language tag {tag!r}")
        if tag in self._pairs:
            raise DuplicateTag(tag)
        self._pairs[tag] = pair

    def remove(self, tag: str) -> None:
        if tag not in self._pairs:
            raise UnknownLanguage(tag)
        del self._pairs[tag]

    def get(self, tag: str) -> EncDecPair:
        if tag not in self._pairs:
            raise UnknownLanguage(tag)
        return self._pairs[tag]

    def tags(self) -> list[str]:
        return sorted(self._pairs)

    def __contains__(self, tag):
        return tag in self._pairs


def register_language(registry: LanguageRegistry, tag: str, pair: EncDecPair) -> None:
    registry.register(tag, pair)


def remove_language(registry: LanguageRegistry, tag: str) -> None:
    registry.remove(tag)


def parameter_checksum(pair: EncDecPair) -> str:
    digest = hashlib.sha256()
    for name in sorted(pair.params):
        digest.update(name.encode("utf-8"))
        digest.update(np.ascontiguousarray(pair.params[name].values).tobytes())
    return digest.hexdigest()


@dataclass
class P2LGModel:
    """The shared-parameter prompt mode: one gloss stage plus one pose stage for all languages."""

    gloss_stage: EncDecPair
    pose_stage: EncDecPair
    languages: frozenset = DEFAULT_LANGUAGES


@dataclass(frozen=True)
class P2LGOutput:
    gloss_tokens: list
    pose: np.ndarray
    violations: list
    expected_language: str | None


def generate_prompt2langgloss(model: P2LGModel, prompt_token_ids,
                              expected_language: str | None = None) -> P2LGOutput:
    """Prompt to LangGloss tokens to pose, with the cross-language violation report.

    When no expected language is given it is inferred from the first prefixed
    token the gloss stage produces. Violations never abort generation.
    """
    memory = model.gloss_stage.encode_source(prompt_token_ids)
    gloss_tokens = decode_gloss(model.gloss_stage, memory)
    if expected_language is None:
        for token in gloss_tokens:
            found, _ = split_language_prefix(token, model.languages)
            if found is not None:
                expected_language = found
                break
    violations = (
        detect_violation(gloss_tokens, expected_language, model.languages)
        if expected_language is not None
        else []
    )
    pose_src_ids, _ = encode_tokens(gloss_tokens, model.pose_stage.src_vocab)
    # Stage-1 output can exceed the pose encoder's window; clip so generation
    # always completes (anomalies are already reported via the violations).
    cap = model.pose_stage.config.max_sent_length
    if len(pose_src_ids) > cap:
        pose_src_ids = pose_src_ids[: cap - 1] + [pose_src_ids[-1]]
    pose = rollout_pose(model.pose_stage, pose_src_ids)
    return P2LGOutput(
        gloss_tokens=gloss_tokens,
        pose=pose,
        violations=violations,
        expected_language=expected_language,
    )


# checkpointing ----------------------------------------------------------------


def save_pair(pair: EncDecPair, directory, name: str = "pair") -> None:
    os.makedirs(directory, exist_ok=True)
    entries = []
    shapes = {}
    for param_name in sorted(pair.params):
        values = pair.params[param_name].values
        shapes[param_name] = list(values.shape)
        flat = values.reshape(values.shape[0], -1) if values.ndim > 1 else values.reshape(1, -1)
        entries.append((param_name, flat))
    with open(os.path.join(directory, f"{name}.params"), "wb") as fh:
        fh.write(write_archive(entries))
    pair.src_vocab.save(os.path.join(directory, f"{name}.src.vocab"))
    if pair.tgt_vocab is not None:
        pair.tgt_vocab.save(os.path.join(directory, f"{name}.tgt.vocab"))
    meta = {
        "config": asdict(pair.config),
        "output_kind": pair.output_kind,
        "seed": pair.seed,
        "shapes": shapes,
        "has_tgt_vocab": pair.tgt_vocab is not None,
    }
    with open(os.path.join(directory, f"{name}.json"), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_pair(directory, name: str = "pair") -> EncDecPair:
    with open(os.path.join(directory, f"{name}.json"), "r", encoding="utf-8") as fh:
        meta = json.load(fh)
    config = ModelConfig(**meta["config"])
    src_vocab = Vocab.load(os.path.join(directory, f"{name}.src.vocab"))
    tgt_vocab = None
    if meta["has_tgt_vocab"]:
        tgt_vocab = Vocab.load(os.path.join(directory, f"{name}.tgt.vocab"))
    pair = EncDecPair(config, src_vocab, meta["output_kind"], tgt_vocab=tgt_vocab, seed=meta["seed"])
    with open(os.path.join(directory, f"{name}.params"), "rb") as fh:
        entries = dict(read_archive(fh.read()))
    for param_name, shape in meta["shapes"].items():
        pair.params[param_name].values = entries[param_name].reshape(shape).astype(np.float32)
    return pair
