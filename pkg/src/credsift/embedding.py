"""Embedding providers behind one contract: texts in, 768-dim vectors out.

Two providers exist. The remote provider speaks the sidecar wire protocol
(POST /embed) and is the path to real transformer embeddings. The fallback
provider is a deterministic hashed character-n-gram projection that needs no
model weights, so every downstream stage stays testable offline.
"""

from __future__ import annotations

import hashlib
import struct
import threading
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import requests

from .errors import DomainError, ProtocolError, TransportError

DEFAULT_DIMENSION = 768
DEFAULT_BATCH_SIZE = 32

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def fnv1a64(data: bytes) -> int:
    """FNV-1a 64-bit hash; the fixed hash behind fallback buckets and cache keys."""
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h


@dataclass(frozen=True)
class ProviderSpec:
    """Which embedding provider to use and how to batch against it."""

    kind: str = "fallback"
    model_name: str = "hashed-ngram"
    dimension: int = DEFAULT_DIMENSION
    batch_size: int = DEFAULT_BATCH_SIZE
    endpoint_url: str | None = None

    def __post_init__(self):
        if self.kind not in ("remote", "fallback"):
            raise DomainError(f"unknown provider kind: {self.kind!r}")
        if self.kind == "remote" and not self.endpoint_url:
            raise DomainError("remote provider requires endpoint_url")
        if self.dimension < 1 or self.batch_size < 1:
            raise DomainError("dimension and batch_size must be positive")


def _check_vector(vec: np.ndarray, dimension: int) -> np.ndarray:
    vec = np.asarray(vec, dtype=np.float64)
    if vec.shape != (dimension,):
        raise DomainError(f"expected dimension {dimension}, got shape {vec.shape}")
    if not np.all(np.isfinite(vec)):
        raise DomainError("embedding contains non-finite values")
    return vec


def mean_pool(token_vectors: list[np.ndarray]) -> np.ndarray:
    """Component-wise arithmetic mean of same-dimension vectors."""
    if not token_vectors:
        raise DomainError("mean_pool requires a non-empty list")
    first = np.asarray(token_vectors[0], dtype=np.float64)
    stacked = []
    for vec in token_vectors:
        vec = np.asarray(vec, dtype=np.float64)
        if vec.shape != first.shape:
            raise DomainError(f"dimension mismatch: {vec.shape} vs {first.shape}")
        stacked.append(vec)
    return np.mean(stacked, axis=0)


def fallback_embed(text: str, dimension: int = DEFAULT_DIMENSION) -> np.ndarray:
    """Hash character 1/2/3-grams of the UTF-8 bytes into a signed, L2-normalized vector.

    Bucket = fnv1a64(ngram) mod dimension; sign = bit 63 of the hash. The result
    is a pure function of the byte string, identical across runs and platforms.
    """
    if not text:
        raise DomainError("cannot embed an empty text")
    data = text.encode("utf-8")
    acc = np.zeros(dimension, dtype=np.float64)
    for n in (1, 2, 3):
        for i in range(len(data) - n + 1):
            h = fnv1a64(data[i:i + n])
            sign = -1.0 if (h >> 63) & 1 else 1.0
            acc[h % dimension] += sign
    norm = float(np.linalg.norm(acc))
    if norm == 0.0:
        # Astronomically unlikely total cancellation; pin a deterministic bucket.
        acc[fnv1a64(data) % dimension] = 1.0
        norm = 1.0
    return acc / norm


def remote_embed_chunk(texts: list[str], spec: ProviderSpec, *,
                       session: requests.Session | None = None,
                       max_attempts: int = 3,
                       backoff_base: float = 0.1,
                       sleep=time.sleep,
                       timeout: float = 60.0) -> list[np.ndarray]:
    """POST one chunk to the sidecar and validate the reply against the protocol."""
    if spec.kind != "remote":
        raise DomainError("remote_embed_chunk requires a remote provider spec")
    url = spec.endpoint_url.rstrip("/") + "/embed"
    payload = {"model": spec.model_name, "texts": list(texts)}
    http = session or requests
    last_error = None
    for attempt in range(max_attempts):
        if attempt:
            sleep(backoff_base * (2 ** (attempt - 1)))
        try:
            response = http.post(url, json=payload, timeout=timeout)
        except requests.RequestException as exc:
            last_error = f"transport failure: {exc}"
            continue
        if response.status_code != 200:
            last_error = f"HTTP {response.status_code}: {response.text[:200]}"
            continue
        try:
            body = response.json()
        except ValueError as exc:
            raise ProtocolError(f"non-JSON embed response: {exc}") from exc
        vectors = body.get("vectors")
        dim = body.get("dim")
        if dim != spec.dimension:
            raise ProtocolError(f"endpoint returned dim {dim}, expected {spec.dimension}")
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            got = len(vectors) if isinstance(vectors, list) else "no"
            raise ProtocolError(f"endpoint returned {got} vectors for {len(texts)} texts")
        return [_check_vector(np.asarray(v), spec.dimension) for v in vectors]
    raise TransportError(f"embed request failed after {max_attempts} attempts: {last_error}")


def embed_batch(texts: list[str], spec: ProviderSpec, *,
                cache: "EmbeddingCache | None" = None,
                session: requests.Session | None = None,
                sleep=time.sleep) -> list[np.ndarray]:
    """Embed texts in input order, chunked by spec.batch_size.

    Transport failures carry the index of the failed chunk so callers can
    retry or tally; cached vectors skip recomputation entirely.
    """
    for text in texts:
        if not text:
            raise DomainError("cannot embed an empty text")
    out: list[np.ndarray | None] = [None] * len(texts)
    for chunk_index, start in enumerate(range(0, len(texts), spec.batch_size)):
        chunk = texts[start:start + spec.batch_size]
        misses = []
        for offset, text in enumerate(chunk):
            cached = cache.get(spec, text) if cache is not None else None
            if cached is not None:
                out[start + offset] = cached
            else:
                misses.append(offset)
        if not misses:
            continue
        miss_texts = [chunk[o] for o in misses]
        if spec.kind == "fallback":
            vectors = [fallback_embed(t, spec.dimension) for t in miss_texts]
        else:
            try:
                vectors = remote_embed_chunk(miss_texts, spec, session=session, sleep=sleep)
            except TransportError as exc:
                raise TransportError(str(exc), chunk_index=chunk_index) from exc
        for offset, vec in zip(misses, vectors):
            out[start + offset] = vec
            if cache is not None:
                cache.put(spec, chunk[offset], vec)
    return out  # type: ignore[return-value]


class EmbeddingCache:
    """Append-only on-disk vector cache.

    Record layout (little-endian): u64 key hash, u32 dim, dim float64 values.
    The key hash is fnv1a64 over "kind\\nmodel_name\\nsha256hex(text)". Reads are
    lock-free against the in-memory index; appends are serialized.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._index: dict[int, np.ndarray] = {}
        if self.path.exists():
            self._load()

    @staticmethod
    def _key(spec: ProviderSpec, text: str) -> int:
        digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
        return fnv1a64(f"{spec.kind}\n{spec.model_name}\n{digest}".encode("ascii"))

    def _load(self) -> None:
        blob = self.path.read_bytes()
        pos = 0
        while pos + 12 <= len(blob):
            key, dim = struct.unpack_from("<QI", blob, pos)
            pos += 12
            end = pos + 8 * dim
            if end > len(blob):
                break  # truncated trailing record (interrupted write); ignore
            vec = np.frombuffer(blob[pos:end], dtype="<f8").astype(np.float64)
            self._index[key] = vec
            pos = end

    def get(self, spec: ProviderSpec, text: str) -> np.ndarray | None:
        vec = self._index.get(self._key(spec, text))
        if vec is None:
            return None
        if vec.shape[0] != spec.dimension:
            return None
        return vec.copy()

    def put(self, spec: ProviderSpec, text: str, vector: np.ndarray) -> None:
        vec = _check_vector(vector, spec.dimension)
        key = self._key(spec, text)
        with self._lock:
            if key in self._index:
                return
            self._index[key] = vec.copy()
            record = struct.pack("<QI", key, vec.shape[0]) + vec.astype("<f8").tobytes()
            with self.path.open("ab") as handle:
                handle.write(record)

    def __len__(self) -> int:
        return len(self._index)
