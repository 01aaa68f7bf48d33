"""Text-only low-rank adapter training with the dual-softmax loss.

The adapter is a low-rank residual on raw readout embeddings,
A(e) = e + (alpha/r) * up @ (down @ e), trained so dense descriptions and
their short summaries align under in-batch cosine similarity. Gradients flow
analytically through the loss, the cosine normalization, and the adapter;
finite differences pin them in the tests.
"""

from __future__ import annotations

import logging
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .backends.base import Backend, text_eol
from .errors import (
    CacheChecksumError,
    CacheError,
    CacheTruncatedError,
    CacheVersionError,
    ContractViolation,
)
from .types import Embedding, SimilarityMatrix, TextPair
from .validation import check_positive, check_positive_int

logger = logging.getLogger(__name__)

DEFAULT_RANK = 64
DEFAULT_ALPHA = 128.0
DEFAULT_BATCH = 288
INIT_TEMPERATURE = 1.0 / 0.07
TEMPERATURE_BOUNDS = (1.0, 100.0)

ADAPTER_MAGIC = b"VADP"
ADAPTER_VERSION = 1


@dataclass
class AdapterParams:
    """Low-rank residual map: e + scale * up @ down @ e."""

    down: np.ndarray  # (r, d)
    up: np.ndarray    # (d, r)
    rank: int
    alpha: float

    def __post_init__(self):
        self.down = np.asarray(self.down, dtype=np.float64)
        self.up = np.asarray(self.up, dtype=np.float64)
        check_positive_int(self.rank, "rank")
        check_positive(self.alpha, "alpha")
        r, d = self.down.shape
        if r != self.rank or self.up.shape != (d, r):
            raise ContractViolation(
                f"factor shapes {self.down.shape} / {self.up.shape} do not match rank {self.rank}"
            )
        if self.rank > d:
            raise ContractViolation(f"rank {self.rank} exceeds dim {d}")
        if not (np.all(np.isfinite(self.down)) and np.all(np.isfinite(self.up))):
            raise ContractViolation("adapter factors contain non-finite entries")

    @property
    def dim(self) -> int:
        return self.down.shape[1]

    @property
    def scale(self) -> float:
        return self.alpha / self.rank


def init_adapter(dim: int, rank: int = DEFAULT_RANK, alpha: float = DEFAULT_ALPHA,
                 seed: int = 0) -> AdapterParams:
    """Fresh adapter: seeded small down factor, zero up factor.

    The residual is exactly zero at init, so step-0 metrics equal the
    no-adapter run; gradients still flow because down is nonzero.
    """
    rng = np.random.default_rng(seed)
    down = rng.standard_normal((rank, dim)) / np.sqrt(dim)
    up = np.zeros((dim, rank))
    return AdapterParams(down=down, up=up, rank=rank, alpha=alpha)


def apply_adapter(params: AdapterParams, e: Embedding) -> Embedding:
    if e.dim != params.dim:
        raise ContractViolation(f"embedding dim {e.dim} != adapter dim {params.dim}")
    values = apply_adapter_array(params, e.values.astype(np.float64))
    return Embedding(
        values=values.astype(np.float32),
        layer=e.layer,
        modality=e.modality,
        item_id=e.item_id,
    )


def apply_adapter_array(params: AdapterParams, x: np.ndarray) -> np.ndarray:
    """Vectorized residual map on rows of x (n, d) or a single vector (d,)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != params.dim:
        raise ContractViolation(f"input dim {x.shape[-1]} != adapter dim {params.dim}")
    return x + params.scale * (x @ params.down.T) @ params.up.T


def _dsl_terms(scores: np.ndarray, temperature: float):
    """loss and d(loss)/d(tau * scores) for the dual-softmax objective."""
    n = scores.shape[0]
    z = temperature * scores
    zr = z - z.max(axis=1, keepdims=True)
    er = np.exp(zr)
    rows = er / er.sum(axis=1, keepdims=True)
    zc = z - z.max(axis=0, keepdims=True)
    ec = np.exp(zc)
    cols = ec / ec.sum(axis=0, keepdims=True)
    diag = np.arange(n)
    loss = -(np.log(rows[diag, diag]) + np.log(cols[diag, diag])).sum() / n
    dz = (rows + cols) / n
    dz[diag, diag] -= 2.0 / n
    return loss, dz


def dsl_loss(m: SimilarityMatrix, temperature: float = 1.0):
    """Dual-softmax loss over a paired in-batch similarity matrix.

    The diagonal holds the positives. Returns (loss, gradient w.r.t. scores);
    the loss is the sum of the two directional InfoNCE terms, i.e. the
    both-axis softmax products on the diagonal, averaged over the batch.
    """
    check_positive(temperature, "temperature")
    scores = np.asarray(m.scores, dtype=np.float64)
    if scores.ndim != 2 or scores.shape[0] != scores.shape[1]:
        raise ContractViolation(f"dsl_loss needs a square matrix, got {scores.shape}")
    if scores.shape[0] < 2:
        raise ContractViolation("contrastive loss needs at least 2 in-batch pairs")
    loss, dz = _dsl_terms(scores, temperature)
    return float(loss), temperature * dz


@dataclass
class TrainConfig:
    batch_size: int = DEFAULT_BATCH
    epochs: int = 1
    learning_rate: float = 1e-3
    loss_temperature: float = INIT_TEMPERATURE
    seed: int = 0
    rank: int = DEFAULT_RANK
    alpha: float = DEFAULT_ALPHA
    train_temperature: bool = True

    def __post_init__(self):
        if self.batch_size < 2:
            raise ContractViolation("batch_size must be >= 2 for in-batch negatives")
        check_positive_int(self.epochs, "epochs")
        check_positive(self.learning_rate + 1e-300, "learning_rate")
        check_positive(self.loss_temperature, "loss_temperature")


@dataclass
class TrainLogRow:
    step: int
    loss: float
    temperature: float


@dataclass
class TrainResult:
    params: AdapterParams
    log: list[TrainLogRow] = field(default_factory=list)

    def write_log_csv(self, path) -> None:
        with Path(path).open("w") as fh:
            fh.write("step,loss,temperature\n")
            for row in self.log:
                fh.write(f"{row.step},{row.loss:.9g},{row.temperature:.9g}\n")


def _normalized(x: np.ndarray):
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    if np.any(norms == 0.0):
        raise ContractViolation("zero-norm vector after adapter")
    return x / norms, norms


def batch_loss_and_grads(params: AdapterParams, xb: np.ndarray, yb: np.ndarray,
                         temperature: float):
    """One batch's loss plus analytic gradients w.r.t. up, down, temperature.

    Both sides go through the adapter, then cosine, then the dual-softmax
    objective with the temperature multiplying the similarity matrix.
    """
    s = params.scale
    u = apply_adapter_array(params, xb)
    v = apply_adapter_array(params, yb)
    uh, un = _normalized(u)
    vh, vn = _normalized(v)
    m = uh @ vh.T
    loss, dz = _dsl_terms(m, temperature)
    gm = temperature * dz

    gu_hat = gm @ vh
    gv_hat = gm.T @ uh
    # through the normalization: (I - uh uh^T)/|u| applied row-wise
    gu = (gu_hat - (gu_hat * uh).sum(axis=1, keepdims=True) * uh) / un
    gv = (gv_hat - (gv_hat * vh).sum(axis=1, keepdims=True) * vh) / vn

    dx = xb @ params.down.T  # (n, r)
    dy = yb @ params.down.T
    g_up = s * (gu.T @ dx + gv.T @ dy)
    g_down = s * ((gu @ params.up).T @ xb + (gv @ params.up).T @ yb)
    g_tau = float((dz * m).sum())
    return loss, g_up, g_down, g_tau


def fit_adapter(x: np.ndarray, y: np.ndarray, cfg: TrainConfig) -> TrainResult:
    """Train the adapter on paired embedding arrays (dense rows x, summary
    rows y) for cfg.epochs single passes of plain SGD."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 2:
        raise ContractViolation(f"paired arrays must match, got {x.shape} vs {y.shape}")
    n, dim = x.shape
    if n < cfg.batch_size:
        raise ContractViolation(f"{n} pairs < batch_size {cfg.batch_size}")

    params = init_adapter(dim, rank=cfg.rank, alpha=cfg.alpha, seed=cfg.seed)
    tau = float(cfg.loss_temperature)
    rng = np.random.default_rng(cfg.seed)
    log: list[TrainLogRow] = []
    step = 0
    for _ in range(cfg.epochs):
        perm = rng.permutation(n)
        n_batches, leftover = divmod(n, cfg.batch_size)
        if leftover:
            logger.info("dropping %d pairs that do not fill a batch", leftover)
        for bi in range(n_batches):
            idx = perm[bi * cfg.batch_size : (bi + 1) * cfg.batch_size]
            loss, g_up, g_down, g_tau = batch_loss_and_grads(params, x[idx], y[idx], tau)
            params = AdapterParams(
                down=params.down - cfg.learning_rate * g_down,
                up=params.up - cfg.learning_rate * g_up,
                rank=cfg.rank,
                alpha=cfg.alpha,
            )
            if cfg.train_temperature:
                tau = float(
                    np.clip(tau - cfg.learning_rate * g_tau, *TEMPERATURE_BOUNDS)
                )
            step += 1
            log.append(TrainLogRow(step=step, loss=float(loss), temperature=tau))
    return TrainResult(params=params, log=log)


def train(pairs: list[TextPair], backend: Backend, cfg: TrainConfig,
          layer: int | None = None) -> TrainResult:
    """Embed the pair texts once (the backend is frozen), then fit.

    Dense sides are expected to be longer than summaries; the reverse is
    suspicious for this data shape, so it warns rather than fails.
    """
    if len(pairs) < cfg.batch_size:
        raise ContractViolation(f"{len(pairs)} pairs < batch_size {cfg.batch_size}")
    short = [p.pair_id for p in pairs if len(p.dense.split()) <= len(p.summary.split())]
    if short:
        logger.warning(
            "%d pairs have dense sides no longer than their summaries (e.g. %s)",
            len(short), short[0],
        )
    template = text_eol()
    x = np.stack([
        backend.embed_text(p.dense, template, layer, item_id=p.pair_id).values
        for p in pairs
    ]).astype(np.float64)
    y = np.stack([
        backend.embed_text(p.summary, template, layer, item_id=p.pair_id).values
        for p in pairs
    ]).astype(np.float64)
    return fit_adapter(x, y, cfg)


# adapter file format: magic, u16 version, u32 d, u32 r, f32 alpha,
# down then up as little-endian f32, trailing CRC32 of the matrix payload

_ADAPTER_HEADER = struct.Struct("<4sHIIf")


def write_adapter(path, params: AdapterParams) -> None:
    payload = (
        params.down.astype("<f4").tobytes() + params.up.astype("<f4").tobytes()
    )
    header = _ADAPTER_HEADER.pack(
        ADAPTER_MAGIC, ADAPTER_VERSION, params.dim, params.rank, params.alpha
    )
    crc = zlib.crc32(payload) & 0xFFFFFFFF
    Path(path).write_bytes(header + payload + struct.pack("<I", crc))


def read_adapter(path) -> AdapterParams:
    data = Path(path).read_bytes()
    if len(data) < _ADAPTER_HEADER.size + 4:
        raise CacheTruncatedError(f"{path}: adapter file shorter than header")
    magic, version, dim, rank, alpha = _ADAPTER_HEADER.unpack_from(data, 0)
    if magic != ADAPTER_MAGIC:
        raise CacheError(f"{path}: bad magic {magic!r}")
    if version != ADAPTER_VERSION:
        raise CacheVersionError(f"{path}: adapter version {version}, expected {ADAPTER_VERSION}")
    payload = data[_ADAPTER_HEADER.size : -4]
    (stored_crc,) = struct.unpack_from("<I", data, len(data) - 4)
    if zlib.crc32(payload) & 0xFFFFFFFF != stored_crc:
        raise CacheChecksumError(f"{path}: adapter payload CRC mismatch")
    expect = 4 * (rank * dim + dim * rank)
    if len(payload) != expect:
        raise CacheTruncatedError(f"{path}: adapter payload {len(payload)}B, expected {expect}B")
    down = np.frombuffer(payload[: 4 * rank * dim], dtype="<f4").reshape(rank, dim)
    up = np.frombuffer(payload[4 * rank * dim :], dtype="<f4").reshape(dim, rank)
    return AdapterParams(down=down.copy(), up=up.copy(), rank=rank, alpha=float(alpha))
