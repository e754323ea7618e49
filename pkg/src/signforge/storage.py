"""Keyed binary clip archive and the line-per-clip ".skels" text format.

Archive layout (little-endian throughout): magic ``SFAR``, u32 version,
u32 entry count, then per entry a u16-length UTF-8 key, u32 frame count and
u32 width, followed by all payloads as float32 arrays in manifest order.

Skels: one line per clip; each frame contributes its 150 pose values plus a
progress counter ``(t+1)/T``, space-separated, every float printed as the
shortest decimal that round-trips the 32-bit value. Clip ids live in a
parallel sidecar, one per line.
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"SFAR"
VERSION = 1
FRAME_WIDTH = 150
COUNTER_TOLERANCE = 1e-5


class StorageError(Exception):
    pass


class DuplicateKey(StorageError):
    pass


class BadMagic(StorageError):
    pass


class TruncatedPayload(StorageError):
    pass


class WidthMismatch(StorageError):
    pass


class NonFiniteValue(StorageError):
    pass


class BadArity(StorageError):
    pass


class CounterMismatch(StorageError):
    pass


class UnparsableToken(StorageError):
    pass


def write_archive(clips) -> bytes:
    """Serialize ``[(key, (T, width) array), ...]`` to archive bytes.

    Round-trips with :func:`read_archive` at 32-bit precision; manifest order
    is the input order.
    """
    entries = []
    seen = set()
    for key, values in clips:
        if key in seen:
            raise DuplicateKey(key)
        seen.add(key)
        arr = np.asarray(values, dtype=np.float32)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        if arr.ndim != 2:
            raise WidthMismatch(f"{key}: expected a 2-D array, got shape {arr.shape}")
        entries.append((key, np.ascontiguousarray(arr)))

    out = [MAGIC, struct.pack("<II", VERSION, len(entries))]
    for key, arr in entries:
        raw_key = key.encode("utf-8")
        if len(raw_key) > 0xFFFF:
            raise StorageError(f"key too long: {key[:32]}...")
        out.append(struct.pack("<H", len(raw_key)))
        out.append(raw_key)
        out.append(struct.pack("<II", arr.shape[0], arr.shape[1]))
    for _, arr in entries:
        out.append(arr.astype("<f4").tobytes())
    return b"".join(out)


def read_archive(data: bytes):
    """Inverse of :func:`write_archive`; returns ``[(key, float32 array), ...]``."""
    if data[:4] != MAGIC:
        raise BadMagic(f"bad magic {data[:4]!r}")
    offset = 4
    try:
        version, count = struct.unpack_from("<II", data, offset)
    except struct.error as exc:
        raise TruncatedPayload("truncated header") from exc
    if version != VERSION:
        raise StorageError(f"unsupported archive version {version}")
    offset += 8
    manifest = []
    for _ in range(count):
        try:
            (key_len,) = struct.unpack_from("<H", data, offset)
            offset += 2
            if len(data) < offset + key_len:
                raise TruncatedPayload(f"truncated key at offset {offset}")
            key = data[offset : offset + key_len].decode("utf-8")
            offset += key_len
            frames, width = struct.unpack_from("<II", data, offset)
            offset += 8
        except struct.error as exc:
            raise TruncatedPayload("truncated manifest") from exc
        manifest.append((key, frames, width))
    clips = []
    for key, frames, width in manifest:
        nbytes = frames * width * 4
        chunk = data[offset : offset + nbytes]
        if len(chunk) < nbytes:
            raise TruncatedPayload(f"payload for key {key!r} is truncated")
        arr = np.frombuffer(chunk, dtype="<f4").reshape(frames, width).copy()
        clips.append((key, arr))
        offset += nbytes
    return clips


def _format_f32(value) -> str:
    return str(np.float32(value))


def counters_for(frame_count: int) -> np.ndarray:
    """The per-frame progress values (t+1)/T as float32."""
    t = np.arange(1, frame_count + 1, dtype=np.float64)
    return (t / frame_count).astype(np.float32)


def pack_skels(clips) -> tuple[str, list[str]]:
    """Pack ``[(id, (T, 150) frames), ...]`` into skels text plus the id sidecar."""
    lines = []
    ids = []
    for clip_id, frames in clips:
        arr = np.asarray(frames, dtype=np.float32)
        if arr.ndim != 2 or arr.shape[1] != FRAME_WIDTH:
            raise WidthMismatch(f"{clip_id}: expected (T, {FRAME_WIDTH}), got {arr.shape}")
        if not np.isfinite(arr).all():
            raise NonFiniteValue(f"{clip_id}: non-finite pose value")
        counters = counters_for(arr.shape[0])
        tokens = []
        for t in range(arr.shape[0]):
            tokens.extend(_format_f32(v) for v in arr[t])
            tokens.append(_format_f32(counters[t]))
        lines.append(" ".join(tokens))
        ids.append(clip_id)
    return "\n".join(lines) + ("\n" if lines else ""), ids


def unpack_skels(text: str):
    """Parse skels text back into a list of (T, 150) float32 arrays.

    Validates per-line arity and the counter sequence; counters more than
    1e-5 away from (t+1)/T are rejected.
    """
    clips = []
    for line_no, line in enumerate(text.splitlines()):
        if not line.strip():
            continue
        tokens = line.split()
        if len(tokens) % (FRAME_WIDTH + 1) != 0 or not tokens:
            raise BadArity(f"line {line_no}: {len(tokens)} tokens is not a multiple of {FRAME_WIDTH + 1}")
        frame_count = len(tokens) // (FRAME_WIDTH + 1)
        try:
            values = np.array(tokens, dtype=np.float32)
        except ValueError as exc:
            raise UnparsableToken(f"line {line_no}: {exc}") from exc
        values = values.reshape(frame_count, FRAME_WIDTH + 1)
        expected = counters_for(frame_count)
        drift = np.abs(values[:, FRAME_WIDTH].astype(np.float64) - expected.astype(np.float64))
        if drift.max() > COUNTER_TOLERANCE:
            t = int(drift.argmax())
            raise CounterMismatch(
                f"line {line_no}, frame {t}: counter {values[t, FRAME_WIDTH]} != {expected[t]}"
            )
        clips.append(values[:, :FRAME_WIDTH].copy())
    return clips


def size_report(raw_bytes: int, packed_bytes: int) -> dict:
    """Byte counts plus the fractional reduction of packed over raw."""
    reduction = 0.0 if raw_bytes == 0 else 1.0 - packed_bytes / raw_bytes
    return {"raw": int(raw_bytes), "packed": int(packed_bytes), "reduction_fraction": reduction}
