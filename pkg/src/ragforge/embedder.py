"""Deterministic text tower: hashing featurizer -> pooling -> trainable
shared linear projection -> unit-norm embedding.

One projection matrix serves both queries and documents, so the two towers
share weights by construction.  Similarity is always the cosine of the two
unit-norm embeddings.  Training regresses cos(query, doc) onto the click
ratio with a per-pair relevance weight, optionally pushing in-batch
cross-pair cosines toward zero:

    loss = sum_i w_i * (cos(eq_i, ed_i) - ratio_i)^2 / sum_i w_i
         + lam * mean_{i != j} cos(eq_i, ed_j)^2

The gradient with respect to the projection matrix is analytic and is
checked against central finite differences in the test suite.
"""

from __future__ import annotations

import hashlib
import struct
import zlib
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .click_ingest import TrainingPair
from .errors import FormatError, NumericalError, TrainingError

POOLING_MODES = ("mean", "max", "first")

PROJECTION_MAGIC = b"RFPJ"
PROJECTION_FORMAT_VERSION = 1


@dataclass(frozen=True)
class FeatureConfig:
    dim: int = 256
    hash_seed: int = 0x5EED_F00D
    pooling: str = "mean"

    def __post_init__(self):
        if self.dim < 8:
            raise ValueError(f"feature dim must be >= 8, got {self.dim}")
        if self.pooling not in POOLING_MODES:
            raise ValueError(f"pooling must be one of {POOLING_MODES}")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    epochs: int = 20
    batch_size: int = 32
    in_batch_negative_weight: float = 0.2
    rng_seed: int = 42

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.in_batch_negative_weight > 0 and self.batch_size < 2:
            raise ValueError("batch_size must be >= 2 with in-batch negatives")
        if not 0.0 <= self.in_batch_negative_weight <= 1.0:
            raise ValueError("in_batch_negative_weight must lie in [0, 1]")


@dataclass
class Projection:
    """Square linear map applied after pooling, shared by both towers."""

    matrix: np.ndarray
    version: int = 1

    @classmethod
    def initial(cls, dim: int, rng_seed: int = 0) -> "Projection":
        # Identity plus small noise: the untrained tower behaves like the
        # raw hashed features, which is the comparison baseline.
        rng = np.random.default_rng(rng_seed)
        matrix = np.eye(dim) + rng.normal(0.0, 0.01, size=(dim, dim))
        return cls(matrix=matrix, version=1)

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[0])

    def save(self, path) -> None:
        mat32 = np.ascontiguousarray(self.matrix, dtype="<f4")
        blob = (
            PROJECTION_MAGIC
            + struct.pack("<II", int(self.version), self.dim)
            + mat32.tobytes()
        )
        crc = zlib.crc32(blob) & 0xFFFFFFFF
        with open(path, "wb") as fh:
            fh.write(blob + struct.pack("<I", crc))

    @classmethod
    def load(cls, path) -> "Projection":
        with open(path, "rb") as fh:
            raw = fh.read()
        if len(raw) < 16:
            raise FormatError("projection file truncated")
        if raw[:4] != PROJECTION_MAGIC:
            raise FormatError(
                f"bad projection magic {raw[:4]!r}, expected {PROJECTION_MAGIC!r}"
            )
        version, dim = struct.unpack("<II", raw[4:12])
        expected = 12 + dim * dim * 4 + 4
        if len(raw) != expected:
            raise FormatError("projection file truncated or oversized")
        (crc_stored,) = struct.unpack("<I", raw[-4:])
        if zlib.crc32(raw[:-4]) & 0xFFFFFFFF != crc_stored:
            raise FormatError("projection file CRC mismatch")
        mat = np.frombuffer(raw[12:-4], dtype="<f4").reshape(dim, dim)
        return cls(matrix=mat.astype(np.float64), version=version)


def _hash64(feature: str, seed: int) -> int:
    key = (seed & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little")
    digest = hashlib.blake2b(feature.encode("utf-8"), digest_size=8, key=key).digest()
    return int.from_bytes(digest, "little")


def _token_features(token: str) -> list[str]:
    feats = [token]
    if len(token) >= 3:
        feats.extend(token[i : i + 3] for i in range(len(token) - 2))
    return feats


def featurize(text: str, cfg: FeatureConfig) -> np.ndarray:
    """One hashed feature vector per whitespace token.

    Each token contributes +/-1 counts into seeded hash buckets for the
    token itself plus its character trigrams.  Deterministic for a fixed
    (text, cfg); returns an (n_tokens, dim) float64 array, empty for
    empty text.
    """
    tokens = text.split()
    out = np.zeros((len(tokens), cfg.dim))
    for row, token in enumerate(tokens):
        for feat in _token_features(token):
            h = _hash64(feat, cfg.hash_seed)
            bucket = h % cfg.dim
            sign = 1.0 if (h >> 63) & 1 else -1.0
            out[row, bucket] += sign
    return out


def pool(features: np.ndarray, mode: str = "mean") -> np.ndarray:
    """Collapse token vectors to one vector; zero vector for empty input."""
    if mode not in POOLING_MODES:
        raise ValueError(f"pooling must be one of {POOLING_MODES}")
    if features.shape[0] == 0:
        return np.zeros(features.shape[1])
    if mode == "mean":
        return features.mean(axis=0)
    if mode == "max":
        return features.max(axis=0)
    return features[0].copy()


def base_vector(text: str, cfg: FeatureConfig) -> np.ndarray:
    """Pooled feature vector, with zero vectors mapped to basis e0 so the
    downstream normalization is total."""
    pooled = pool(featurize(text, cfg), cfg.pooling)
    if not np.any(pooled):
        pooled = np.zeros(cfg.dim)
        pooled[0] = 1.0
    return pooled


def embed(text: str, proj: Projection, cfg: FeatureConfig) -> np.ndarray:
    """Unit-norm float32 embedding of ``text`` under the shared projection."""
    projected = proj.matrix @ base_vector(text, cfg)
    norm = np.linalg.norm(projected)
    if norm < 1e-12:
        out = np.zeros(cfg.dim, dtype=np.float32)
        out[0] = 1.0
        return out
    return (projected / norm).astype(np.float32)


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.dot(a, b))


def _base_matrices(
    batch: Sequence[TrainingPair], cfg: FeatureConfig
) -> tuple[np.ndarray, np.ndarray]:
    bq = np.stack([base_vector(p.query, cfg) for p in batch])
    bd = np.stack([base_vector(p.doc_text, cfg) for p in batch])
    return bq, bd


def loss_and_grad(
    batch: Sequence[TrainingPair],
    proj: Projection,
    cfg: TrainConfig,
    fcfg: FeatureConfig,
    bases: tuple[np.ndarray, np.ndarray] | None = None,
) -> tuple[float, np.ndarray]:
    """Weighted cosine-regression loss and its exact gradient wrt the
    projection matrix.

    ``bases`` optionally carries precomputed (query, doc) base-vector
    matrices so the trainer can featurize once per corpus.
    """
    if not batch:
        raise ValueError("batch must be non-empty")
    bq, bd = bases if bases is not None else _base_matrices(batch, fcfg)
    n = len(batch)
    P = np.asarray(proj.matrix, dtype=np.float64)

    U = bq @ P.T
    V = bd @ P.T
    un = np.linalg.norm(U, axis=1)
    vn = np.linalg.norm(V, axis=1)
    for idx in range(n):
        if un[idx] < 1e-12 or vn[idx] < 1e-12:
            raise NumericalError(f"projected vector collapsed to zero at pair {idx}")
    Uh = U / un[:, None]
    Vh = V / vn[:, None]
    C = Uh @ Vh.T

    weights = np.array([p.weight for p in batch], dtype=np.float64)
    ratios = np.array([p.ratio for p in batch], dtype=np.float64)
    wsum = float(weights.sum())
    lam = cfg.in_batch_negative_weight

    diag = np.diag(C)
    loss = 0.0
    # dLoss/dC, assembled term by term.
    G = np.zeros((n, n))
    if wsum > 0:
        residual = diag - ratios
        loss += float(np.sum(weights * residual**2)) / wsum
        G[np.arange(n), np.arange(n)] = 2.0 * weights * residual / wsum
    if lam > 0 and n >= 2:
        off = ~np.eye(n, dtype=bool)
        n_terms = n * (n - 1)
        loss += lam * float(np.sum(C[off] ** 2)) / n_terms
        G[off] += 2.0 * lam * C[off] / n_terms

    if not np.isfinite(loss):
        bad = int(np.argmax(~np.isfinite(np.diag(C))))
        raise NumericalError(f"non-finite loss at pair {bad}")

    # dC_ij/dP = ((Vh_j - C_ij Uh_i)/|u_i|) bq_i^T + ((Uh_i - C_ij Vh_j)/|v_j|) bd_j^T
    A = G / un[:, None]
    B = G / vn[None, :]
    AC = A * C
    BC = B * C
    grad = (
        Vh.T @ A.T @ bq
        - Uh.T @ np.diag(AC.sum(axis=1)) @ bq
        + Uh.T @ B @ bd
        - Vh.T @ np.diag(BC.sum(axis=0)) @ bd
    )
    return loss, grad


@dataclass
class TrainResult:
    projection: Projection
    epoch_losses: list[float] = field(default_factory=list)


def train(
    pairs: Sequence[TrainingPair],
    cfg: TrainConfig,
    fcfg: FeatureConfig,
    initial: Projection | None = None,
) -> TrainResult:
    """Adam over seeded shuffled minibatches; bit-reproducible for a fixed
    seed on one thread.  Returns the final projection and the per-epoch
    mean batch loss trace."""
    if not pairs:
        raise ValueError("pairs must be non-empty")
    proj = initial if initial is not None else Projection.initial(fcfg.dim, cfg.rng_seed)
    P = np.array(proj.matrix, dtype=np.float64)
    bq_all, bd_all = _base_matrices(pairs, fcfg)

    rng = np.random.default_rng(cfg.rng_seed)
    m = np.zeros_like(P)
    v = np.zeros_like(P)
    step = 0
    epoch_losses: list[float] = []
    work = Projection(matrix=P, version=proj.version)

    for epoch in range(cfg.epochs):
        order = rng.permutation(len(pairs))
        batch_losses = []
        for start in range(0, len(order), cfg.batch_size):
            sel = order[start : start + cfg.batch_size]
            batch = [pairs[i] for i in sel]
            work.matrix = P
            try:
                loss, grad = loss_and_grad(
                    batch, work, cfg, fcfg, bases=(bq_all[sel], bd_all[sel])
                )
            except NumericalError as exc:
                raise TrainingError(
                    f"training diverged at epoch {epoch}, batch {start // cfg.batch_size}: {exc}"
                ) from exc
            if not np.isfinite(loss):
                raise TrainingError(
                    f"training diverged at epoch {epoch}, batch {start // cfg.batch_size}"
                )
            batch_losses.append(loss)

            step += 1
            m = cfg.adam_beta1 * m + (1 - cfg.adam_beta1) * grad
            v = cfg.adam_beta2 * v + (1 - cfg.adam_beta2) * grad**2
            m_hat = m / (1 - cfg.adam_beta1**step)
            v_hat = v / (1 - cfg.adam_beta2**step)
            P = P - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.adam_eps)
        epoch_losses.append(float(np.mean(batch_losses)))

    final_version = proj.version + 1 if cfg.epochs > 0 else proj.version
    return TrainResult(
        projection=Projection(matrix=P, version=final_version),
        epoch_losses=epoch_losses,
    )
