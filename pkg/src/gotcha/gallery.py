"""The searchable face collection: ingestion, packed storage, synthesis.

A gallery is an ordered set of records, each with a unique id, a signed
binary attribute vector, and a precomputed feature embedding. Feature
extraction happens upstream; this package only ingests vectors. Features are
held at 32-bit precision (they are scanned in bulk); training converts to
64-bit at the model boundary.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, FormatError, IntegrityError
from .seeding import stream
from .validation import as_attribute_vector, as_feature_vector

_MAGIC = b"GGAL"
_VERSION = 1


@dataclass(frozen=True)
class GalleryRecord:
    """One searchable face: id, ±1 attributes, real-valued features."""

    id: str
    attributes: np.ndarray
    features: np.ndarray


@dataclass
class Gallery:
    """Immutable-by-convention record store with stable iteration order."""

    ids: list
    attributes: np.ndarray  # (N, A) int8, entries ±1
    features: np.ndarray  # (N, F) float32
    split_point: int | None = None
    _index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.attributes.ndim != 2 or self.features.ndim != 2:
            raise IntegrityError("attributes and features must be 2-d arrays")
        n = len(self.ids)
        if self.attributes.shape[0] != n or self.features.shape[0] != n:
            raise IntegrityError("ids, attributes, and features disagree on N")
        if not self._index:
            index = {}
            for i, rid in enumerate(self.ids):
                if rid in index:
                    raise IntegrityError(f"duplicate record id {rid!r}")
                index[rid] = i
            self._index.update(index)

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def n_attrs(self) -> int:
        return int(self.attributes.shape[1])

    @property
    def n_features(self) -> int:
        return int(self.features.shape[1])

    def index_of(self, record_id: str) -> int:
        try:
            return self._index[record_id]
        except KeyError:
            raise KeyError(f"unknown record id {record_id!r}") from None

    def __contains__(self, record_id: str) -> bool:
        return record_id in self._index

    def record(self, i: int) -> GalleryRecord:
        return GalleryRecord(
            id=self.ids[i], attributes=self.attributes[i], features=self.features[i]
        )

    def equals(self, other: "Gallery") -> bool:
        return (
            self.ids == other.ids
            and np.array_equal(self.attributes, other.attributes)
            and np.array_equal(self.features, other.features)
        )


def ingest_jsonl(path, normalize: bool = False) -> Gallery:
    """Load a gallery from JSON-lines records, preserving file order.

    Each line: ``{"id": str, "attributes": [±1, ...], "features": [float, ...]}``.
    ``normalize`` L2-normalizes features at ingestion (off by default; the
    upstream embeddings are compared raw).
    """
    ids, attr_rows, feat_rows = [], [], []
    n_attrs = n_features = None
    seen = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
            try:
                rid = obj["id"]
                attrs = obj["attributes"]
                feats = obj["features"]
            except (TypeError, KeyError) as exc:
                raise FormatError(
                    f"line {lineno}: record must have id, attributes, features"
                ) from exc
            if not isinstance(rid, str) or not rid:
                raise FormatError(f"line {lineno}: id must be a non-empty string")
            if rid in seen:
                raise IntegrityError(
                    f"line {lineno}: duplicate id {rid!r} (first at line {seen[rid]})"
                )
            seen[rid] = lineno
            try:
                attrs = as_attribute_vector(attrs, n_attrs)
                feats = as_feature_vector(feats, n_features)
            except Exception as exc:
                raise FormatError(f"line {lineno}: {exc}") from exc
            if n_attrs is None:
                n_attrs, n_features = attrs.shape[0], feats.shape[0]
            ids.append(rid)
            attr_rows.append(attrs)
            feat_rows.append(feats)
    if not ids:
        raise FormatError(f"{path}: no records")
    features = np.vstack(feat_rows).astype(np.float32)
    if normalize:
        norms = np.linalg.norm(features, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        features = features / norms
    return Gallery(ids=ids, attributes=np.vstack(attr_rows), features=features)


def export_jsonl(g: Gallery, path) -> None:
    """Write the gallery back out as JSON-lines (float32 values round-trip)."""
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(len(g)):
            fh.write(
                json.dumps(
                    {
                        "id": g.ids[i],
                        "attributes": [int(v) for v in g.attributes[i]],
                        "features": [float(v) for v in g.features[i]],
                    }
                )
            )
            fh.write("\n")


def save_packed(g: Gallery, path) -> None:
    """Write the packed binary format.

    Layout (all integers little-endian): magic ``GGAL``, version u32, N u64,
    A u32, F u32; then per record: id length u32 + UTF-8 bytes, A attribute
    bytes (0x00 = -1, 0x01 = +1), F float32 values.
    """
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<IQII", _VERSION, len(g), g.n_attrs, g.n_features))
        for i in range(len(g)):
            raw_id = g.ids[i].encode("utf-8")
            fh.write(struct.pack("<I", len(raw_id)))
            fh.write(raw_id)
            fh.write(((g.attributes[i] + 1) // 2).astype(np.uint8).tobytes())
            fh.write(g.features[i].astype("<f4", copy=False).tobytes())


def load_packed(path) -> Gallery:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != _MAGIC:
        raise FormatError(f"{path}: bad magic {data[:4]!r}, expected {_MAGIC!r}")
    header = struct.Struct("<IQII")
    if len(data) < 4 + header.size:
        raise FormatError(f"{path}: truncated header")
    version, n, n_attrs, n_features = header.unpack_from(data, 4)
    if version != _VERSION:
        raise FormatError(f"{path}: unsupported format version {version}")
    pos = 4 + header.size
    ids, attr_rows, feat_rows = [], [], []
    feat_bytes = 4 * n_features
    for i in range(n):
        if pos + 4 > len(data):
            raise FormatError(f"{path}: truncated at record {i}")
        (id_len,) = struct.unpack_from("<I", data, pos)
        pos += 4
        end = pos + id_len + n_attrs + feat_bytes
        if end > len(data):
            raise FormatError(f"{path}: truncated at record {i}")
        ids.append(data[pos : pos + id_len].decode("utf-8"))
        pos += id_len
        raw_attrs = np.frombuffer(data, dtype=np.uint8, count=n_attrs, offset=pos)
        if np.any(raw_attrs > 1):
            raise FormatError(f"{path}: record {i} has attribute byte > 0x01")
        attr_rows.append(raw_attrs.astype(np.int8) * 2 - 1)
        pos += n_attrs
        feats = np.frombuffer(data, dtype="<f4", count=n_features, offset=pos)
        if not np.all(np.isfinite(feats)):
            raise FormatError(f"{path}: record {i} has non-finite features")
        feat_rows.append(feats.astype(np.float32))
        pos += feat_bytes
    if pos != len(data):
        raise FormatError(f"{path}: {len(data) - pos} trailing bytes")
    if n == 0:
        return Gallery(
            ids=[],
            attributes=np.zeros((0, n_attrs), dtype=np.int8),
            features=np.zeros((0, n_features), dtype=np.float32),
        )
    return Gallery(
        ids=ids,
        attributes=np.vstack(attr_rows),
        features=np.vstack(feat_rows),
    )


def gen_synthetic(
    n: int, n_attrs: int, n_features: int, noise: float = 0.05, seed: int = 0
) -> Gallery:
    """Generate a gallery whose features genuinely encode its attributes.

    Attributes are uniform ±1. Features are ``tanh(M @ attrs + eps)`` with a
    fixed seed-derived mixing matrix M (entries N(0, 1)/sqrt(A)) and Gaussian
    noise eps, so a model can learn the attribute/feature correspondence the
    way it would on real embeddings.
    """
    if n < 1 or n_attrs < 1 or n_features < 1:
        raise ConfigError("n, n_attrs, and n_features must all be >= 1")
    if noise < 0:
        raise ConfigError("noise must be >= 0")
    attrs = (
        stream(seed, "synthetic", "attrs").integers(0, 2, size=(n, n_attrs)) * 2 - 1
    ).astype(np.int8)
    mixing = stream(seed, "synthetic", "mixing").standard_normal(
        (n_features, n_attrs)
    ) / np.sqrt(n_attrs)
    pre = attrs.astype(np.float64) @ mixing.T
    if noise > 0:
        pre = pre + noise * stream(seed, "synthetic", "noise").standard_normal(
            (n, n_features)
        )
    features = np.tanh(pre).astype(np.float32)
    ids = [f"synth-{i:06d}" for i in range(n)]
    return Gallery(ids=ids, attributes=attrs, features=features)


def synthetic_mixing_matrix(n_attrs: int, n_features: int, seed: int) -> np.ndarray:
    """The mixing matrix gen_synthetic used for this seed (for verification)."""
    return stream(seed, "synthetic", "mixing").standard_normal(
        (n_features, n_attrs)
    ) / np.sqrt(n_attrs)


def split(g: Gallery, train_fraction: float):
    """Prefix split into (train view, test view) sharing the parent's arrays."""
    if not 0.0 < train_fraction < 1.0:
        raise ConfigError(f"train_fraction must be in (0, 1), got {train_fraction}")
    cut = int(np.floor(train_fraction * len(g)))
    g.split_point = cut
    train = Gallery(
        ids=g.ids[:cut], attributes=g.attributes[:cut], features=g.features[:cut]
    )
    test = Gallery(
        ids=g.ids[cut:], attributes=g.attributes[cut:], features=g.features[cut:]
    )
    return train, test
