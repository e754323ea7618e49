import numpy as np
import pytest

from signforge import skeleton

from conftest import random_clip


def test_standard_structure_counts(structure):
    assert structure.bone_count == 49
    assert structure.root == 1
    assert skeleton.JOINT_NAMES[structure.root] == "neck"


def test_every_joint_is_child_exactly_once(structure):
    children = [b.b for b in structure.bones]
    assert len(children) == len(set(children))
    assert set(children) == set(range(50)) - {structure.root}


def test_parents_precede_children(structure):
    reached = {structure.root}
    for bone in structure.bones:
        assert bone.a in reached
        reached.add(bone.b)
    assert reached == set(range(50))


def test_line_indices_are_dense(structure):
    assert [b.line for b in structure.bones] == list(range(49))


def test_structure_is_deterministic():
    a = skeleton.standard_structure()
    b = skeleton.standard_structure()
    assert a == b


def test_ranges_partition_joints():
    layout = skeleton.JointLayout()
    spans = [layout.body_range, layout.right_hand_range, layout.left_hand_range]
    covered = []
    for lo, hi in spans:
        covered.extend(range(lo, hi))
    assert covered == list(range(50))
    assert layout.joint_count == 50
    assert len(layout.names) == 50


def test_check_structure_rejects_cycles(structure):
    bones = list(structure.bones)
    bones[5] = skeleton.Bone(a=bones[5].b, b=bones[5].b, line=5)
    with pytest.raises(ValueError):
        skeleton.check_structure(skeleton.BoneStructure(bones=tuple(bones), root=1))


def test_validate_clip_clean(rng):
    clip = random_clip(rng, frames=3)
    assert skeleton.validate_clip(clip) == []


def test_validate_clip_flags_nan(rng):
    clip = random_clip(rng, frames=3)
    x = clip.frames[1].x.copy()
    x[7] = np.nan
    frames = list(clip.frames)
    frames[1] = skeleton.Frame2D(x=x, y=clip.frames[1].y, w=clip.frames[1].w)
    report = skeleton.validate_clip(skeleton.Clip2D(id="c", frames=frames))
    assert len(report) == 1
    assert report[0].kind == "non_finite"
    assert (report[0].frame, report[0].joint) == (1, 7)


def test_validate_clip_flags_short_arrays(rng):
    bad = skeleton.Frame2D(x=np.zeros(49), y=np.zeros(50), w=np.ones(50))
    report = skeleton.validate_clip(skeleton.Clip2D(id="c", frames=[bad]))
    assert any(v.kind == "length_mismatch" for v in report)


def test_validate_clip_flags_zero_confidence(rng):
    clip = random_clip(rng, frames=2)
    w = clip.frames[0].w.copy()
    w[3] = 0.0
    frames = [skeleton.Frame2D(x=clip.frames[0].x, y=clip.frames[0].y, w=w), clip.frames[1]]
    report = skeleton.validate_clip(skeleton.Clip2D(id="c", frames=frames))
    assert [(v.frame, v.joint) for v in report if v.kind == "zero_confidence"] == [(0, 3)]


def test_pose_flat_roundtrip(rng):
    frames = rng.standard_normal((4, 150))
    pose = skeleton.pose_from_flat("p", frames)
    assert np.allclose(pose.flat_frames(), frames)
    assert pose.frame_count == 4


def test_structure_table_mentions_all_joints():
    table = skeleton.structure_table()
    for name in skeleton.JOINT_NAMES:
        assert name in table
