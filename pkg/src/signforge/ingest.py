"""Parsing of per-frame OpenPose keypoint JSON into clips, plus the cleaning pass.

A frame document carries flat ``[x, y, confidence, ...]`` arrays for the body
and each hand under ``people[0]``. We keep the 8 upper-body joints plus both
21-point hands (legs and face are discarded) in the order defined by
:mod:`signforge.skeleton`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .skeleton import (
    JOINT_COUNT,
    Clip2D,
    Frame2D,
)

# Indices of our 8 body joints inside the detector's body array. The first
# eight joints of both the 18- and 25-point body layouts coincide.
BODY_SUBSET = [0, 1, 2, 3, 4, 5, 6, 7]
HAND_POINTS = 21


class IngestError(Exception):
    """Base class for ingest failures."""


class MalformedDocument(IngestError):
    pass


class NoPerson(IngestError):
    pass


class SchemaMismatch(IngestError):
    pass


class EmptyClip(IngestError):
    pass


class AllFramesInvalid(IngestError):
    pass


class FrameParseError(IngestError):
    def __init__(self, frame_index: int, cause: IngestError):
        super().__init__(f"frame {frame_index}: {cause}")
        self.frame_index = frame_index
        self.cause = cause


@dataclass(frozen=True)
class CleanPolicy:
    """How invalid keypoint values are repaired.

    mode:
        ``replace_median`` / ``replace_mean`` substitute each invalid value
        with the per-joint statistic over the clip's valid frames;
        ``drop_frame`` removes frames whose invalid-joint fraction exceeds
        ``invalid_frame_threshold`` (surviving stragglers are median-replaced
        so the output is always finite).
    zero_coords_invalid:
        when true, an exact (0, 0) coordinate pair also marks the joint
        invalid even under positive confidence.
    """

    mode: str = "replace_median"
    invalid_frame_threshold: float = 0.5
    zero_coords_invalid: bool = False

    def __post_init__(self):
        if self.mode not in ("replace_median", "replace_mean", "drop_frame"):
            raise ValueError(f"unknown clean mode {self.mode!r}")
        if not 0.0 <= self.invalid_frame_threshold <= 1.0:
            raise ValueError("invalid_frame_threshold must be in [0, 1]")


@dataclass(frozen=True)
class CleanReport:
    frames_in: int
    frames_dropped: int
    values_replaced: int

    @property
    def replacement_fraction(self) -> float:
        if self.frames_in == 0:
            return 0.0
        return self.values_replaced / (150 * self.frames_in)


def _keypoint_array(person: dict, key: str, expect_points: int | None):
    if key not in person:
        raise SchemaMismatch(f"missing {key}")
    raw = person[key]
    if not isinstance(raw, list) or len(raw) % 3 != 0:
        raise SchemaMismatch(f"{key} arity {len(raw) if isinstance(raw, list) else '?'} is not a multiple of 3")
    arr = np.asarray(raw, dtype=np.float64).reshape(-1, 3)
    if expect_points is not None and arr.shape[0] != expect_points:
        raise SchemaMismatch(f"{key} has {arr.shape[0]} points, expected {expect_points}")
    return arr


def parse_frame(document: bytes | str) -> Frame2D:
    """Parse one OpenPose frame document into the 50-joint subset for person 0."""
    if isinstance(document, bytes):
        document = document.decode("utf-8", errors="strict")
    try:
        data = json.loads(document)
    except (ValueError, UnicodeDecodeError) as exc:
        raise MalformedDocument(str(exc)) from exc
    people = data.get("people")
    if not isinstance(people, list) or len(people) == 0:
        raise NoPerson("document contains no people")
    person = people[0]

    body = _keypoint_array(person, "pose_keypoints_2d", None)
    if body.shape[0] < len(BODY_SUBSET):
        raise SchemaMismatch(f"body array has only {body.shape[0]} points")
    right = _keypoint_array(person, "hand_right_keypoints_2d", HAND_POINTS)
    left = _keypoint_array(person, "hand_left_keypoints_2d", HAND_POINTS)

    joints = np.concatenate([body[BODY_SUBSET], right, left], axis=0)
    return Frame2D(x=joints[:, 0], y=joints[:, 1], w=joints[:, 2])


def assemble_clip(frame_documents, clip_id: str, transcript: str = "", language: str = "ASL") -> Clip2D:
    """Build a clip from frame documents given in temporal order.

    Per-frame parse failures are surfaced as FrameParseError naming the
    0-indexed frame, never skipped.
    """
    documents = list(frame_documents)
    if not documents:
        raise EmptyClip(f"clip {clip_id!r} has no frame documents")
    frames = []
    for t, doc in enumerate(documents):
        try:
            frames.append(parse_frame(doc))
        except IngestError as exc:
            raise FrameParseError(t, exc) from exc
    return Clip2D(id=clip_id, frames=tuple(frames), transcript=transcript, language=language)


def _invalid_masks(x, y, w, policy: CleanPolicy):
    """Per-channel invalidity masks of shape (T, 50)."""
    conf_bad = ~np.isfinite(w) | (w == 0.0)
    if policy.zero_coords_invalid:
        conf_bad |= (x == 0.0) & (y == 0.0)
    bad_x = ~np.isfinite(x) | conf_bad
    bad_y = ~np.isfinite(y) | conf_bad
    bad_w = conf_bad
    return bad_x, bad_y, bad_w


def _channel_fill(values, joint_valid, mode):
    """Per-joint replacement value from valid frames; (0, ...) joints fall back to 0."""
    T, J = values.shape
    fill = np.zeros(J)
    for j in range(J):
        column = values[joint_valid[:, j], j]
        if column.size:
            fill[j] = np.median(column) if mode == "replace_median" else np.mean(column)
    return fill


def clean_clip(clip: Clip2D, policy: CleanPolicy) -> tuple[Clip2D, CleanReport]:
    """Repair or drop invalid keypoints per the policy.

    A joint observation is invalid when any of its values is non-finite or its
    confidence is exactly 0 (detectors emit zero confidence for misses).
    Output clips contain only finite values and positive confidences, which
    makes the pass idempotent. Joints with no valid observation anywhere in
    the clip are pinned at the origin with confidence 1.
    """
    x, y, w = clip.stacked()
    frames_in = len(clip.frames)
    bad_x, bad_y, bad_w = _invalid_masks(x, y, w, policy)
    joint_bad = bad_x | bad_y | bad_w

    keep = np.ones(frames_in, dtype=bool)
    if policy.mode == "drop_frame":
        frac = joint_bad.sum(axis=1) / JOINT_COUNT
        keep = frac <= policy.invalid_frame_threshold
        if not keep.any():
            raise AllFramesInvalid(f"clip {clip.id!r}: every frame exceeds the invalid threshold")
        x, y, w = x[keep], y[keep], w[keep]
        bad_x, bad_y, bad_w = bad_x[keep], bad_y[keep], bad_w[keep]
        joint_bad = joint_bad[keep]
    elif not (~joint_bad).any():
        raise AllFramesInvalid(f"clip {clip.id!r}: no valid joint observations")

    values_replaced = int(bad_x.sum() + bad_y.sum() + bad_w.sum())
    stat_mode = policy.mode if policy.mode != "drop_frame" else "replace_median"
    joint_valid = ~joint_bad
    if values_replaced:
        fx = _channel_fill(x, joint_valid, stat_mode)
        fy = _channel_fill(y, joint_valid, stat_mode)
        fw = _channel_fill(w, joint_valid, stat_mode)
        never_valid = ~joint_valid.any(axis=0)
        fw[never_valid] = 1.0
        x = np.where(bad_x, fx[None, :], x)
        y = np.where(bad_y, fy[None, :], y)
        w = np.where(bad_w, fw[None, :], w)

    frames = tuple(Frame2D(x=x[t], y=y[t], w=w[t]) for t in range(x.shape[0]))
    cleaned = Clip2D(
        id=clip.id,
        frames=frames,
        transcript=clip.transcript,
        gloss=clip.gloss,
        language=clip.language,
    )
    report = CleanReport(
        frames_in=frames_in,
        frames_dropped=int(frames_in - keep.sum()),
        values_replaced=values_replaced,
    )
    return cleaned, report


def clip_to_flat(clip: Clip2D) -> np.ndarray:
    """(T, 150) layout with per-joint (x, y, confidence) triples."""
    x, y, w = clip.stacked()
    out = np.empty((x.shape[0], 3 * JOINT_COUNT), dtype=np.float64)
    out[:, 0::3] = x
    out[:, 1::3] = y
    out[:, 2::3] = w
    return out


def clip_from_flat(clip_id: str, frames: np.ndarray, transcript: str = "", language: str = "ASL") -> Clip2D:
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 2 or frames.shape[1] != 3 * JOINT_COUNT:
        raise ValueError(f"expected (T, {3 * JOINT_COUNT}), got {frames.shape}")
    made = tuple(Frame2D(x=row[0::3], y=row[1::3], w=row[2::3]) for row in frames)
    return Clip2D(id=clip_id, frames=made, transcript=transcript, language=language)
