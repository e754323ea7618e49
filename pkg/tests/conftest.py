"""Shared fixtures and generators for the test suite."""

import json

import numpy as np
import pytest

from signforge import skeleton


def random_frame(rng, width=1280, height=720, conf_lo=0.2):
    x = rng.uniform(0, width, skeleton.JOINT_COUNT)
    y = rng.uniform(0, height, skeleton.JOINT_COUNT)
    w = rng.uniform(conf_lo, 1.0, skeleton.JOINT_COUNT)
    return skeleton.Frame2D(x=x, y=y, w=w)


def random_clip(rng, frames=5, clip_id="clip", **kw):
    made = [random_frame(rng, **kw) for _ in range(frames)]
    return skeleton.Clip2D(id=clip_id, frames=made)


def smooth_clip(rng, frames=8, clip_id="clip"):
    """A clip whose joints drift smoothly, closer to real detector output."""
    base_x = rng.uniform(200, 1000, skeleton.JOINT_COUNT)
    base_y = rng.uniform(100, 600, skeleton.JOINT_COUNT)
    made = []
    for t in range(frames):
        dx = rng.normal(0, 2.0, skeleton.JOINT_COUNT) * t
        dy = rng.normal(0, 2.0, skeleton.JOINT_COUNT) * t
        w = rng.uniform(0.3, 1.0, skeleton.JOINT_COUNT)
        made.append(skeleton.Frame2D(x=base_x + dx, y=base_y + dy, w=w))
    return skeleton.Clip2D(id=clip_id, frames=made)


def openpose_document(frame, body_points=25, include_face=True, people=1, rng=None):
    """Serialize a Frame2D the way the upstream detector writes frames.

    The 50-joint subset is embedded at its canonical indices inside a full
    body-25 array; leg and face entries are filler the pipeline must ignore.
    Inverse of parse_frame on the embedded subset.
    """
    if people == 0:
        return json.dumps({"version": 1.3, "people": []})
    if rng is None:
        rng = np.random.default_rng(0)

    def triple(j):
        return [round(float(frame.x[j]), 3), round(float(frame.y[j]), 3), round(float(frame.w[j]), 6)]

    body = []
    for i in range(body_points):
        if i < 8:
            body.extend(triple(i))
        else:
            body.extend([round(float(rng.uniform(0, 1000)), 3), round(float(rng.uniform(0, 1000)), 3),
                         round(float(rng.uniform(0, 1)), 6)])
    right = []
    for i in range(21):
        right.extend(triple(8 + i))
    left = []
    for i in range(21):
        left.extend(triple(29 + i))
    person = {
        "person_id": [-1],
        "pose_keypoints_2d": body,
        "face_keypoints_2d": (
            [round(float(v), 3) for v in rng.uniform(0, 1000, 70 * 3)] if include_face else []
        ),
        "hand_left_keypoints_2d": left,
        "hand_right_keypoints_2d": right,
        "pose_keypoints_3d": [],
        "face_keypoints_3d": [],
        "hand_left_keypoints_3d": [],
        "hand_right_keypoints_3d": [],
    }
    return json.dumps({"version": 1.3, "people": [person] * people})


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def structure():
    return skeleton.standard_structure()
