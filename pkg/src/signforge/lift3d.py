"""2D-to-3D pose lifting: bone lengths, canonical lengths, rotation angles, forward kinematics.

Per bone and frame the in-plane components of the direction triple come from
the 2D bone vector; the depth component is the foreshortening residual
``sqrt(max(L_canon^2 - dx^2 - dy^2, 0))``, taken camera-facing (nonnegative).
The triple is then finalized the way the conversion routine prescribes:
non-finite triples collapse to (0, 0, 0), a negative depth is negated, 0.001
is added to the depth, and the triple is normalized to unit length. Forward
kinematics then rebuilds each child joint from its parent at the canonical
bone length.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .skeleton import BoneStructure, Clip2D, Pose3DClip

Z_OFFSET = 1e-3
MIN_LENGTH = 1e-6


@dataclass(frozen=True)
class LiftParams:
    percentile: float = 95.0
    noise_sigma: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.percentile <= 100.0:
            raise ValueError("percentile must be in (0, 100]")
        if self.noise_sigma < 0.0:
            raise ValueError("noise_sigma must be >= 0")


@dataclass(frozen=True)
class LiftResult:
    """Everything the conversion emits for one clip.

    ``lines`` holds the natural log of each canonical bone length;
    ``angles_*`` are the normalized per-frame direction triples (T, 49);
    ``roots_*`` the (possibly noised) root trajectory actually used.
    """

    clip_id: str
    lines: np.ndarray
    roots_x: np.ndarray
    roots_y: np.ndarray
    roots_z: np.ndarray
    angles_x: np.ndarray
    angles_y: np.ndarray
    angles_z: np.ndarray
    lengths_2d: np.ndarray
    pose: Pose3DClip


def clip_rng(seed: int, clip_id: str) -> np.random.Generator:
    """Generator seeded from (global seed, clip id); stable under parallel scheduling."""
    digest = hashlib.sha256(f"{seed}:{clip_id}".encode("utf-8")).digest()
    words = np.frombuffer(digest[:16], dtype=np.uint32)
    return np.random.default_rng(np.random.SeedSequence(entropy=words.tolist()))


def bone_lengths(clip: Clip2D, structure: BoneStructure) -> np.ndarray:
    """2D Euclidean length of every bone at every frame, shape (T, 49)."""
    x, y, _ = clip.stacked()
    a = np.array([b.a for b in structure.bones])
    b = np.array([b.b for b in structure.bones])
    dx = x[:, b] - x[:, a]
    dy = y[:, b] - y[:, a]
    return np.sqrt(dx * dx + dy * dy)


def nearest_rank(sorted_values: np.ndarray, percentile: float) -> float:
    """Nearest-rank percentile on pre-sorted values: element ceil(p/100 * N)."""
    n = sorted_values.shape[0]
    rank = int(np.ceil(percentile / 100.0 * n))
    rank = min(max(rank, 1), n)
    return float(sorted_values[rank - 1])


def canonical_lengths(lengths: np.ndarray, percentile: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-bone canonical length (given percentile of observed lengths) and its log.

    Lengths are clamped below at 1e-6 before the log so degenerate bones stay
    finite.
    """
    ordered = np.sort(lengths, axis=0)
    canon = np.array([nearest_rank(ordered[:, k], percentile) for k in range(lengths.shape[1])])
    canon = np.maximum(canon, MIN_LENGTH)
    return canon, np.log(canon)


def finalize_angles(ax: np.ndarray, ay: np.ndarray, az: np.ndarray):
    """Apply the conversion's literal post-processing to raw direction triples.

    Element-wise over arrays of equal shape: any triple with a non-finite
    component becomes exactly (0, 0, 0); otherwise a negative z is negated,
    0.001 is added to z, and the triple is scaled to unit norm.
    """
    ax = np.array(ax, dtype=np.float64)
    ay = np.array(ay, dtype=np.float64)
    az = np.array(az, dtype=np.float64)
    bad = ~(np.isfinite(ax) & np.isfinite(ay) & np.isfinite(az))
    ax[bad] = 0.0
    ay[bad] = 0.0
    az[bad] = 0.0
    az = np.where(az < 0.0, -az, az)
    az = az + Z_OFFSET
    norm = np.sqrt(ax * ax + ay * ay + az * az)
    with np.errstate(invalid="ignore"):
        ax, ay, az = ax / norm, ay / norm, az / norm
    ax[bad] = 0.0
    ay[bad] = 0.0
    az[bad] = 0.0
    return ax, ay, az


def joint_angles(clip: Clip2D, structure: BoneStructure, canon: np.ndarray):
    """Normalized per-frame direction triples for every bone, each (T, 49)."""
    x, y, _ = clip.stacked()
    a = np.array([b.a for b in structure.bones])
    b = np.array([b.b for b in structure.bones])
    dx = x[:, b] - x[:, a]
    dy = y[:, b] - y[:, a]
    with np.errstate(invalid="ignore"):
        dz = np.sqrt(np.maximum(canon[None, :] ** 2 - dx * dx - dy * dy, 0.0))
    return finalize_angles(dx, dy, dz)


def forward_kinematics(
    structure: BoneStructure,
    canon: np.ndarray,
    angles,
    roots,
    params: LiftParams,
    rng: np.random.Generator | None = None,
    clip_id: str = "",
) -> tuple[Pose3DClip, np.ndarray]:
    """Rebuild 3D joint positions from root trajectory, lengths and directions.

    Root z starts at 0; Gaussian noise of ``params.noise_sigma`` is added to
    all three root channels (none when sigma is 0). Children are placed after
    their parents at ``parent + L_canon * direction``. Returns the pose and
    the noised (T, 3) roots actually used.
    """
    ax, ay, az = angles
    rx, ry = np.asarray(roots[0], dtype=np.float64), np.asarray(roots[1], dtype=np.float64)
    T = rx.shape[0]
    rz = np.zeros(T)
    if params.noise_sigma > 0.0:
        if rng is None:
            rng = clip_rng(params.rng_seed, clip_id)
        rx = rx + rng.normal(0.0, params.noise_sigma, size=T)
        ry = ry + rng.normal(0.0, params.noise_sigma, size=T)
        rz = rz + rng.normal(0.0, params.noise_sigma, size=T)

    J = max(max(b.a, b.b) for b in structure.bones) + 1
    X = np.zeros((T, J))
    Y = np.zeros((T, J))
    Z = np.zeros((T, J))
    X[:, structure.root] = rx
    Y[:, structure.root] = ry
    Z[:, structure.root] = rz
    for bone in structure.bones:
        L = canon[bone.line]
        X[:, bone.b] = X[:, bone.a] + L * ax[:, bone.line]
        Y[:, bone.b] = Y[:, bone.a] + L * ay[:, bone.line]
        Z[:, bone.b] = Z[:, bone.a] + L * az[:, bone.line]
    return Pose3DClip(clip_id, X, Y, Z), np.stack([rx, ry, rz], axis=1)


def lift_clip(clip: Clip2D, structure: BoneStructure, params: LiftParams) -> LiftResult:
    """Full per-clip conversion; deterministic given the clip and params."""
    lengths = bone_lengths(clip, structure)
    canon, lines = canonical_lengths(lengths, params.percentile)
    ax, ay, az = joint_angles(clip, structure, canon)
    x, y, _ = clip.stacked()
    roots = (x[:, structure.root], y[:, structure.root])
    rng = clip_rng(params.rng_seed, clip.id)
    pose, used_roots = forward_kinematics(
        structure, canon, (ax, ay, az), roots, params, rng=rng, clip_id=clip.id
    )
    return LiftResult(
        clip_id=clip.id,
        lines=lines,
        roots_x=used_roots[:, 0],
        roots_y=used_roots[:, 1],
        roots_z=used_roots[:, 2],
        angles_x=ax,
        angles_y=ay,
        angles_z=az,
        lengths_2d=lengths,
        pose=pose,
    )
