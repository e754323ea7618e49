"""Canonical 50-joint upper-body + hands skeleton and the shared clip value types.

Joint order: 8 body joints (nose, neck, shoulders, elbows, wrists), then the
21-point right hand, then the 21-point left hand. Each hand follows the usual
detector layout: hand root first, then four joints per finger, thumb first.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

JOINT_COUNT = 50
BODY_RANGE = (0, 8)
RIGHT_HAND_RANGE = (8, 29)
LEFT_HAND_RANGE = (29, 50)

BODY_JOINT_NAMES = [
    "nose",
    "neck",
    "right_shoulder",
    "right_elbow",
    "right_wrist",
    "left_shoulder",
    "left_elbow",
    "left_wrist",
]

_FINGERS = ["thumb", "index", "middle", "ring", "pinky"]


def _hand_joint_names(side):
    names = [f"{side}_hand_root"]
    for finger in _FINGERS:
        names.extend(f"{side}_{finger}_{i}" for i in range(1, 5))
    return names


JOINT_NAMES = BODY_JOINT_NAMES + _hand_joint_names("right") + _hand_joint_names("left")

NECK = 1
RIGHT_WRIST = 4
LEFT_WRIST = 7
RIGHT_HAND_ROOT = RIGHT_HAND_RANGE[0]
LEFT_HAND_ROOT = LEFT_HAND_RANGE[0]


@dataclass(frozen=True)
class JointLayout:
    """Index bookkeeping for the fixed 50-joint skeleton."""

    joint_count: int = JOINT_COUNT
    names: tuple = tuple(JOINT_NAMES)
    body_range: tuple = BODY_RANGE
    right_hand_range: tuple = RIGHT_HAND_RANGE
    left_hand_range: tuple = LEFT_HAND_RANGE


@dataclass(frozen=True)
class Bone:
    """One directed bone: parent joint `a`, child joint `b`, index `line` into the lines array."""

    a: int
    b: int
    line: int


@dataclass(frozen=True)
class BoneStructure:
    """A spanning tree over all 50 joints, listed parents-before-children."""

    bones: tuple
    root: int

    @property
    def bone_count(self):
        return len(self.bones)


def standard_structure() -> BoneStructure:
    """The fixed 49-bone tree rooted at the neck.

    Body: neck to nose, neck to each shoulder, shoulder to elbow and elbow to
    wrist on each arm. Each wrist connects to its hand root, and each hand
    root fans out into five 4-bone finger chains.
    """
    edges = [
        (NECK, 0),  # neck -> nose
        (NECK, 2),
        (2, 3),
        (3, RIGHT_WRIST),
        (NECK, 5),
        (5, 6),
        (6, LEFT_WRIST),
        (RIGHT_WRIST, RIGHT_HAND_ROOT),
        (LEFT_WRIST, LEFT_HAND_ROOT),
    ]
    for base in (RIGHT_HAND_ROOT, LEFT_HAND_ROOT):
        for finger in range(5):
            first = base + 1 + 4 * finger
            edges.append((base, first))
            for j in range(first, first + 3):
                edges.append((j, j + 1))
    bones = tuple(Bone(a, b, k) for k, (a, b) in enumerate(edges))
    return BoneStructure(bones=bones, root=NECK)


@dataclass(frozen=True)
class Frame2D:
    """One frame of 2D keypoints: pixel coordinates plus detector confidence."""

    x: np.ndarray
    y: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        for name in ("x", "y", "w"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


@dataclass(frozen=True)
class Clip2D:
    id: str
    frames: tuple
    transcript: str = ""
    gloss: tuple | None = None
    language: str = "ASL"

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        if self.gloss is not None:
            object.__setattr__(self, "gloss", tuple(self.gloss))

    def __len__(self):
        return len(self.frames)

    def stacked(self):
        """(x, y, w) arrays of shape (T, 50)."""
        x = np.stack([f.x for f in self.frames])
        y = np.stack([f.y for f in self.frames])
        w = np.stack([f.w for f in self.frames])
        return x, y, w


@dataclass(frozen=True)
class Pose3DClip:
    """Per-frame 3D joint positions, stored as (T, 50) arrays per axis."""

    id: str
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        for name in ("x", "y", "z"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def frame_count(self):
        return self.x.shape[0]

    def flat_frames(self):
        """(T, 150) layout with per-joint (x, y, z) triples, the storage order."""
        out = np.empty((self.frame_count, 3 * JOINT_COUNT), dtype=np.float64)
        out[:, 0::3] = self.x
        out[:, 1::3] = self.y
        out[:, 2::3] = self.z
        return out


def pose_from_flat(clip_id: str, frames: np.ndarray) -> Pose3DClip:
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 2 or frames.shape[1] != 3 * JOINT_COUNT:
        raise ValueError(f"expected (T, {3 * JOINT_COUNT}) frames, got {frames.shape}")
    return Pose3DClip(clip_id, frames[:, 0::3], frames[:, 1::3], frames[:, 2::3])


@dataclass(frozen=True)
class ClipViolation:
    kind: str
    frame: int | None
    joint: int | None
    detail: str


def validate_clip(clip: Clip2D) -> list[ClipViolation]:
    """Report structural problems, non-finite values and zero-confidence joints.

    Reporting only; the clip is never mutated.
    """
    violations = []
    for t, frame in enumerate(clip.frames):
        for name in ("x", "y", "w"):
            arr = getattr(frame, name)
            if arr.shape != (JOINT_COUNT,):
                violations.append(
                    ClipViolation(
                        "length_mismatch",
                        t,
                        None,
                        f"frame {t}: {name} has length {arr.shape}, expected {JOINT_COUNT}",
                    )
                )
    for t, frame in enumerate(clip.frames):
        if frame.x.shape != (JOINT_COUNT,) or frame.y.shape != (JOINT_COUNT,):
            continue
        bad = ~(np.isfinite(frame.x) & np.isfinite(frame.y) & np.isfinite(frame.w))
        for j in np.flatnonzero(bad):
            violations.append(
                ClipViolation("non_finite", t, int(j), f"frame {t}, joint {int(j)}: non-finite value")
            )
        if frame.w.shape == (JOINT_COUNT,):
            for j in np.flatnonzero(frame.w == 0.0):
                violations.append(
                    ClipViolation("zero_confidence", t, int(j), f"frame {t}, joint {int(j)}: confidence 0")
                )
    return violations


def check_structure(structure: BoneStructure) -> None:
    """Assert the spanning-tree invariants; raises ValueError on violation."""
    if structure.bone_count != JOINT_COUNT - 1:
        raise ValueError(f"expected {JOINT_COUNT - 1} bones, got {structure.bone_count}")
    seen_children = set()
    reached = {structure.root}
    for bone in structure.bones:
        if bone.a == bone.b:
            raise ValueError(f"degenerate bone {bone}")
        if not (0 <= bone.a < JOINT_COUNT and 0 <= bone.b < JOINT_COUNT):
            raise ValueError(f"joint index out of range in {bone}")
        if bone.b in seen_children or bone.b == structure.root:
            raise ValueError(f"joint {bone.b} has more than one parent")
        if bone.a not in reached:
            raise ValueError(f"bone {bone} listed before its parent joint is reachable")
        seen_children.add(bone.b)
        reached.add(bone.b)
    if reached != set(range(JOINT_COUNT)):
        raise ValueError("bones do not span all joints")


def structure_table() -> str:
    """Human-readable joint and bone tables (the `inspect --structure` payload)."""
    lines = ["# joints", "index\tname"]
    lines += [f"{i}\t{name}" for i, name in enumerate(JOINT_NAMES)]
    lines += ["", "# bones", "index\tparent\tchild\tline"]
    for bone in standard_structure().bones:
        lines.append(f"{bone.line}\t{JOINT_NAMES[bone.a]}\t{JOINT_NAMES[bone.b]}\t{bone.line}")
    return "\n".join(lines) + "\n"
