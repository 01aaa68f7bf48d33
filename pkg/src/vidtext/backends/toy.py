"""Seeded toy transformer backend: 4 parallel-residual blocks, dim 32, one head.

Small enough to run in tests, structured enough to exhibit the behaviors the
pipeline is built around. The hidden width is split into four channels: a
noise channel (dims 0..7) with per-token vectors, a marker channel
(dims 8..15) with independent per-token vectors, a concept channel
(dims 16..30) shared between a token and its paired partner, and a single
match accumulator (dim 31). The blocks play fixed roles:

  * block 0 stirs the noise channel with mildly random attention and MLP
    writes, so early readouts carry almost no retrieval signal;
  * block 1 is a matcher: tokens attend to same-concept-class tokens and
    subtract the attended marker-channel state, so a token whose concept
    partner appears earlier in the prompt keeps a marker residual while an
    unpartnered token cancels itself to ~zero;
  * block 2 attends uniformly and broadcasts the concept-channel mean, which
    aligns inputs whose token concepts overlap (the "good" readout layer);
    its MLP writes each position's marker-residual magnitude into the match
    accumulator;
  * block 3 aggregates the accumulator to the readout position for the
    yes/no scoring head, and floods the noise channel with a large
    content-specific average that wrecks cosine structure at the final
    layer.

Tokens are whitespace words hashed into a 257-entry vocabulary; video
locators expand into frame tokens via a seed-independent hash. Token v and
token (v + 128) % 256 share a concept class, which is what planted corpora
exploit.
"""

from __future__ import annotations

import functools

import numpy as np

from ..types import Embedding, Modality
from .base import Backend, BackendDescriptor, MediaSpec, PromptTemplate
from .hashing import combine, fnv1a64, hash_stream, mix64

VOCAB = 257
DIM = 32
N_LAYERS = 4
MAX_POS = 4096

_NOISE = slice(0, 8)   # noise channel: mixer junk and the final-layer flood
_MARK = slice(8, 15)   # marker channel: matcher cancellation target
_REF = 15              # reference dim, never written; xn[_REF] == -mu/sigma
_C = slice(16, 31)     # concept channel
_M = 31                # match accumulator
_N_NOISE = 8
_N_MARK = 7
_N_C = 15
_HIDDEN = 64
_LN_EPS = 1e-5

# planted gains; the relative sizes, not the exact values, carry the design
_POS_SCALE = 0.05
_MIX_QK_GAIN = 0.4
_MIX_ATTN_GAIN = 0.5
_MIX_MLP_GAIN = 0.3
_MATCH_SHARPNESS = 5.0   # block-1 concept-keyed attention
_CANCEL = 0.35           # block-1 marker subtraction, compensates LN's 1/sigma
_ALIGN_GAIN = 12.0       # block-2 concept broadcast
_QUANT_GAIN = 1.0        # block-2 residual-magnitude write into the accumulator
_QUANT_THRESHOLD = 0.35  # relu bias: imperfect-cancellation residue stays below it
_SCRAMBLE_GAIN = 150.0   # block-3 noise flood
_AGG_GAIN = 16.0         # block-3 accumulator aggregation
_HEAD_NOISE = 0.01
_HEAD_MATCH = 2.0


def word_token_id(word: str) -> int:
    return mix64(fnv1a64(word)) % VOCAB


def tokenize(text: str) -> list[int]:
    return [word_token_id(w) for w in text.split()]


def concept_class(token_id: int) -> int:
    return token_id % 128


def paired_token(token_id: int) -> int:
    """The partner sharing a concept class but a different identity vector."""
    return (token_id + 128) % 256


def frame_count(media: MediaSpec) -> int:
    dur_s = 2 + mix64(fnv1a64(media.locator + "\x1fdur")) % 7
    return max(1, min(media.max_frames, round(dur_s * media.fps)))


def frame_token_ids(media: MediaSpec) -> list[int]:
    """Per-frame pseudo-tokens; seed-independent so corpora can target them."""
    return [
        mix64(fnv1a64(f"{media.locator}\x1f{i}")) % 256
        for i in range(frame_count(media))
    ]


@functools.lru_cache(maxsize=1)
def _template_token_ids() -> frozenset[int]:
    """Vocabulary ids reachable from the fixed prompt wording."""
    from .base import _BODIES  # deferred: base imports nothing from here

    ids: set[int] = set()
    for body in _BODIES.values():
        literal = body
        for ph in ("{content}", "{query}", "{candidate}"):
            literal = literal.replace(ph, " ")
        ids.update(tokenize(literal))
    return frozenset(ids)


@functools.lru_cache(maxsize=1)
def template_concept_classes() -> frozenset[int]:
    """Concept classes occupied by the fixed prompt wording.

    Planted corpora keep content tokens out of these classes so the matcher
    never pairs a content token with a template word.
    """
    return frozenset(concept_class(t) for t in _template_token_ids())


def _rand(seed_parts, shape, gain=1.0):
    """Uniform[-1,1) matrix from the hash stream, scaled so a unit-norm input
    maps to roughly gain-norm output."""
    n = int(np.prod(shape))
    flat = hash_stream(combine(*seed_parts), n)
    scale = gain * np.sqrt(3.0 / shape[0]) if len(shape) == 2 else gain
    return (flat.reshape(shape) * scale).astype(np.float64)


def _layernorm(x: np.ndarray) -> np.ndarray:
    mu = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    return (x - mu) / np.sqrt(var + _LN_EPS)


def _channel_proj(channel: slice, centered: bool = False) -> np.ndarray:
    n = channel.stop - channel.start
    p = np.zeros((DIM, DIM))
    p[channel, channel] = np.eye(n) - (np.full((n, n), 1.0 / n) if centered else 0.0)
    return p


class ToyBackend(Backend):
    """Deterministic miniature transformer for tests and local pipelines."""

    def __init__(self, seed: int = 0, name: str = "toy"):
        self.seed = seed
        self._descriptor = BackendDescriptor(
            name=name, num_layers=N_LAYERS, dim=DIM,
            supports_layers=True, supports_scoring=True,
        )
        self._build_weights()
        self._hidden_memo = functools.lru_cache(maxsize=1024)(self._hidden_uncached)

    def descriptor(self) -> BackendDescriptor:
        return self._descriptor

    # weight construction

    def _build_weights(self):
        s = self.seed
        tok = np.zeros((VOCAB, DIM))
        tok[:, _NOISE] = hash_stream(combine(s, fnv1a64("tok-noise")), VOCAB * _N_NOISE).reshape(
            VOCAB, _N_NOISE
        ) * 0.5
        # markers are anti-aligned across a concept pair: the matcher's blend of
        # a token and its partner averages to zero, so the cancellation pass
        # leaves the full marker at partnered positions and ~nothing elsewhere
        mark_base = hash_stream(combine(s, fnv1a64("tok-marker")), 128 * _N_MARK).reshape(
            128, _N_MARK
        ) * 0.5
        for v in range(VOCAB):
            sign = 1.0 if v < 128 or v == 256 else -1.0
            tok[v, _MARK] = sign * mark_base[concept_class(v) % 128]
        # prompt-wording tokens carry no marker: the matcher fires only on
        # content tokens, never on template-internal class collisions
        for tid in _template_token_ids():
            tok[tid, _MARK] = 0.0
        concepts = hash_stream(combine(s, fnv1a64("concepts")), 128 * _N_C).reshape(128, _N_C) * 0.7
        concepts -= concepts.mean(axis=1, keepdims=True)  # keep clear of LN's mean shift
        for v in range(VOCAB):
            tok[v, _C] = concepts[concept_class(v) % 128]
        self._tok = tok

        pos = np.zeros((MAX_POS, DIM))
        pos[:, _NOISE] = hash_stream(combine(s, fnv1a64("pos")), MAX_POS * _N_NOISE).reshape(
            MAX_POS, _N_NOISE
        ) * _POS_SCALE
        self._pos = pos

        p_mark = _channel_proj(_MARK)
        p_c_cent = _channel_proj(_C, centered=True)
        zeros_mlp = (np.zeros((DIM, _HIDDEN)), np.zeros((_HIDDEN, DIM)))

        # block 0: noise-channel mixer
        w1 = np.zeros((DIM, _HIDDEN))
        w1[_NOISE, :] = _rand((s, fnv1a64("b0.w1")), (_N_NOISE, _HIDDEN), 1.0)
        w2 = np.zeros((_HIDDEN, DIM))
        w2[:, _NOISE] = _rand((s, fnv1a64("b0.w2")), (_HIDDEN, _N_NOISE), _MIX_MLP_GAIN)
        wv0 = np.zeros((DIM, DIM))
        wv0[_NOISE, _NOISE] = _rand((s, fnv1a64("b0.wv")), (_N_NOISE, _N_NOISE), 1.0)
        wo0 = np.zeros((DIM, DIM))
        wo0[_NOISE, _NOISE] = _rand((s, fnv1a64("b0.wo")), (_N_NOISE, _N_NOISE), _MIX_ATTN_GAIN)
        block0 = {
            "wq": _rand((s, fnv1a64("b0.wq")), (DIM, DIM), _MIX_QK_GAIN),
            "wk": _rand((s, fnv1a64("b0.wk")), (DIM, DIM), _MIX_QK_GAIN),
            "wv": wv0,
            "wo": wo0,
            "w1": w1,
            "w2": w2,
        }

        # block 1: matcher. Concept-keyed attention concentrates on same-class
        # tokens; the value/output path subtracts the attended marker state, so
        # an unpartnered token cancels its own marker vector while a partnered
        # one keeps half the difference of the two markers.
        block1 = {
            "wq": p_c_cent * _MATCH_SHARPNESS,
            "wk": p_c_cent * _MATCH_SHARPNESS,
            "wv": p_mark.copy(),
            "wo": p_mark * (-_CANCEL),
            "w1": zeros_mlp[0].copy(),
            "w2": zeros_mlp[1].copy(),
        }

        # block 2: uniform attention broadcasting the (recentered) concept mean,
        # plus an MLP quantifying each position's marker residual into the
        # match accumulator.
        quant_dirs = _rand((s, fnv1a64("quant-dirs")), (16, _N_MARK))
        quant_dirs -= quant_dirs.mean(axis=1, keepdims=True)  # immune to LN mean shift
        quant_dirs /= np.linalg.norm(quant_dirs, axis=1, keepdims=True)
        w1 = np.zeros((DIM, _HIDDEN))
        w1[_MARK, 0:16] = quant_dirs.T
        w1[_MARK, 16:32] = -quant_dirs.T
        b1 = np.zeros(_HIDDEN)
        b1[0:32] = -_QUANT_THRESHOLD
        w2 = np.zeros((_HIDDEN, DIM))
        w2[0:32, _M] = _QUANT_GAIN / 16.0
        block2 = {
            "wq": np.zeros((DIM, DIM)),
            "wk": np.zeros((DIM, DIM)),
            "wv": p_c_cent.copy(),
            "wo": _channel_proj(_C) * _ALIGN_GAIN,
            "w1": w1,
            "b1": b1,
            "w2": w2,
        }

        # block 3: uniform attention aggregating the accumulator to the readout
        # position while flooding the noise channel with the content-specific
        # noise mean. Accumulator reads are contrasted against the reference
        # dim so layernorm's mean shift drops out: xn[M] - xn[REF] = h[M]/sigma.
        wv3 = _channel_proj(_NOISE)
        wv3[_M, _M] = 1.0
        wv3[_REF, _M] = -1.0
        wo3 = np.zeros((DIM, DIM))
        wo3[_NOISE, _NOISE] = _rand((s, fnv1a64("b3.wo")), (_N_NOISE, _N_NOISE), _SCRAMBLE_GAIN)
        wo3[_M, _M] = _AGG_GAIN
        block3 = {
            "wq": np.zeros((DIM, DIM)),
            "wk": np.zeros((DIM, DIM)),
            "wv": wv3,
            "wo": wo3,
            "w1": zeros_mlp[0].copy(),
            "w2": zeros_mlp[1].copy(),
        }

        self._blocks = [block0, block1, block2, block3]

        head = _rand((s, fnv1a64("head")), (DIM, VOCAB), _HEAD_NOISE)
        head[_M, :] = 0.0
        head[_REF, :] = 0.0
        self._yes_ids = sorted({word_token_id("Yes"), word_token_id("yes")})
        for tid in self._yes_ids:
            head[_M, tid] = _HEAD_MATCH
            head[_REF, tid] = -_HEAD_MATCH
        self._head = head

    # forward pass

    def _hidden_uncached(self, ids: tuple[int, ...]) -> np.ndarray:
        """Stack of per-block hidden states, shape (N_LAYERS, len, DIM)."""
        positions = np.arange(len(ids)) % MAX_POS
        h = self._tok[list(ids)] + self._pos[positions]
        causal = np.tril(np.ones((len(ids), len(ids)), dtype=bool))
        out = np.empty((N_LAYERS, len(ids), DIM))
        for b, w in enumerate(self._blocks):
            xn = _layernorm(h)
            q = xn @ w["wq"]
            k = xn @ w["wk"]
            logits = (q @ k.T) / np.sqrt(DIM)
            logits = np.where(causal, logits, -np.inf)
            logits -= logits.max(axis=1, keepdims=True)
            probs = np.exp(logits)
            probs /= probs.sum(axis=1, keepdims=True)
            attn = (probs @ (xn @ w["wv"])) @ w["wo"]
            mlp = np.maximum(xn @ w["w1"] + w.get("b1", 0.0), 0.0) @ w["w2"]
            h = h + attn + mlp
            out[b] = h
        return out

    def _content_ids(self, content) -> list[int]:
        if isinstance(content, MediaSpec):
            return frame_token_ids(content)
        return tokenize(str(content))

    def _prompt_ids(self, template: PromptTemplate, content) -> tuple[int, ...]:
        before, after = template.body.split("{content}")
        return tuple(tokenize(before) + self._content_ids(content) + tokenize(after))

    def _pair_ids(self, template: PromptTemplate, query, candidate) -> tuple[int, ...]:
        head, rest = template.body.split("{query}")
        mid, tail = rest.split("{candidate}")
        return tuple(
            tokenize(head)
            + self._content_ids(query)
            + tokenize(mid)
            + self._content_ids(candidate)
            + tokenize(tail)
        )

    def _readout(self, ids: tuple[int, ...], layer: int) -> np.ndarray:
        # the state at the last prompt position, i.e. just before the
        # appended emb-token marker would sit
        return self._hidden_memo(ids)[layer, -1].astype(np.float32)

    # Backend API

    def embed_text(self, text, template=None, layer=None, item_id=None) -> Embedding:
        template, layer = self._check_embed_args(template, layer, video=False)
        ids = self._prompt_ids(template, str(text))
        return Embedding(
            values=self._readout(ids, layer),
            layer=layer,
            modality=Modality.TEXT,
            item_id=item_id if item_id is not None else str(text),
        )

    def embed_video(self, media, template=None, layer=None, item_id=None) -> Embedding:
        template, layer = self._check_embed_args(template, layer, video=True)
        ids = self._prompt_ids(template, media)
        return Embedding(
            values=self._readout(ids, layer),
            layer=layer,
            modality=Modality.VIDEO,
            item_id=item_id if item_id is not None else media.locator,
        )

    def score_yes(self, query, candidate, template=None) -> float:
        template = self._check_score_args(template, query, candidate)
        ids = self._pair_ids(template, query, candidate)
        final = self._hidden_memo(ids)[N_LAYERS - 1, -1]
        logits = final @ self._head
        logits -= logits.max()
        probs = np.exp(logits)
        probs /= probs.sum()
        return float(sum(probs[t] for t in self._yes_ids))
