import json

import numpy as np
import pytest

from signforge import ingest, skeleton

from conftest import openpose_document, random_clip, random_frame


def test_parse_frame_roundtrip(rng):
    frame = random_frame(rng)
    doc = openpose_document(frame)
    parsed = ingest.parse_frame(doc)
    assert np.allclose(parsed.x, np.round(frame.x, 3))
    assert np.allclose(parsed.y, np.round(frame.y, 3))
    assert np.allclose(parsed.w, np.round(frame.w, 6))


def test_parse_frame_selects_body_subset_by_index(rng):
    # Sentinel values at the leg indices must not leak into the 50-joint subset.
    frame = random_frame(rng)
    doc = json.loads(openpose_document(frame, body_points=25))
    body = doc["people"][0]["pose_keypoints_2d"]
    for i in range(8, 25):
        body[3 * i] = 77777.0
    parsed = ingest.parse_frame(json.dumps(doc))
    assert not np.any(parsed.x == 77777.0)
    assert parsed.x.shape == (50,)


def test_parse_frame_no_person():
    with pytest.raises(ingest.NoPerson):
        ingest.parse_frame(openpose_document(None, people=0))


def test_parse_frame_malformed():
    with pytest.raises(ingest.MalformedDocument):
        ingest.parse_frame(b"{not json")


def test_parse_frame_schema_mismatch(rng):
    doc = json.loads(openpose_document(random_frame(rng)))
    del doc["people"][0]["hand_left_keypoints_2d"]
    with pytest.raises(ingest.SchemaMismatch):
        ingest.parse_frame(json.dumps(doc))
    doc2 = json.loads(openpose_document(random_frame(rng)))
    doc2["people"][0]["hand_right_keypoints_2d"] = [1.0, 2.0, 0.5]
    with pytest.raises(ingest.SchemaMismatch):
        ingest.parse_frame(json.dumps(doc2))


def test_parse_frame_first_person_wins(rng):
    frame = random_frame(rng)
    doc = json.loads(openpose_document(frame, people=2))
    other = doc["people"][1]
    other["pose_keypoints_2d"] = [0.0] * len(other["pose_keypoints_2d"])
    parsed = ingest.parse_frame(json.dumps(doc))
    assert not np.allclose(parsed.x[:8], 0.0)


def test_assemble_clip_counts(rng):
    docs = [openpose_document(random_frame(rng)) for _ in range(3)]
    clip = ingest.assemble_clip(docs, "c0", transcript="hi", language="ASL")
    assert len(clip) == 3
    assert clip.transcript == "hi"


def test_assemble_clip_empty():
    with pytest.raises(ingest.EmptyClip):
        ingest.assemble_clip([], "c0")


def test_assemble_clip_names_bad_frame(rng):
    docs = [openpose_document(random_frame(rng)), openpose_document(random_frame(rng)), b"oops"]
    with pytest.raises(ingest.FrameParseError) as info:
        ingest.assemble_clip(docs, "c0")
    assert info.value.frame_index == 2
    assert "frame 2" in str(info.value)


def _with(clip, t, **channels):
    frames = list(clip.frames)
    frame = frames[t]
    values = {"x": frame.x.copy(), "y": frame.y.copy(), "w": frame.w.copy()}
    for name, (j, v) in channels.items():
        values[name][j] = v
    frames[t] = skeleton.Frame2D(**values)
    return skeleton.Clip2D(id=clip.id, frames=frames, transcript=clip.transcript, language=clip.language)


def test_clean_noop_on_valid(rng):
    clip = random_clip(rng, frames=4)
    cleaned, report = ingest.clean_clip(clip, ingest.CleanPolicy())
    assert report.values_replaced == 0
    assert report.frames_dropped == 0
    x0, y0, w0 = clip.stacked()
    x1, y1, w1 = cleaned.stacked()
    assert np.array_equal(x0, x1) and np.array_equal(y0, y1) and np.array_equal(w0, w1)


def test_clean_median_replacement(rng):
    clip = random_clip(rng, frames=3)
    j = 11
    clip = _with(clip, 0, x=(j, 1.0))
    clip = _with(clip, 1, x=(j, np.nan))
    clip = _with(clip, 2, x=(j, 3.0))
    cleaned, report = ingest.clean_clip(clip, ingest.CleanPolicy(mode="replace_median"))
    x, _, _ = cleaned.stacked()
    assert x[1, j] == 2.0  # median of {1, 3}
    assert report.values_replaced == 1


def test_clean_mean_replacement(rng):
    clip = random_clip(rng, frames=3)
    j = 4
    clip = _with(clip, 0, y=(j, 2.0))
    clip = _with(clip, 1, y=(j, np.inf))
    clip = _with(clip, 2, y=(j, 6.0))
    cleaned, _ = ingest.clean_clip(clip, ingest.CleanPolicy(mode="replace_mean"))
    _, y, _ = cleaned.stacked()
    assert y[1, j] == pytest.approx(4.0)


def test_clean_zero_confidence_invalidates_joint(rng):
    clip = random_clip(rng, frames=3)
    clip = _with(clip, 1, w=(9, 0.0))
    cleaned, report = ingest.clean_clip(clip, ingest.CleanPolicy())
    _, _, w = cleaned.stacked()
    assert w[1, 9] > 0.0
    assert report.values_replaced == 3  # x, y and confidence rewritten


def test_clean_keeps_zero_coordinates_with_positive_confidence(rng):
    clip = random_clip(rng, frames=2)
    clip = _with(clip, 0, x=(5, 0.0), y=(5, 0.0))
    cleaned, report = ingest.clean_clip(clip, ingest.CleanPolicy())
    x, y, _ = cleaned.stacked()
    assert x[0, 5] == 0.0 and y[0, 5] == 0.0
    assert report.values_replaced == 0


def test_clean_zero_coords_policy_flag(rng):
    clip = random_clip(rng, frames=3)
    clip = _with(clip, 0, x=(5, 0.0), y=(5, 0.0))
    policy = ingest.CleanPolicy(zero_coords_invalid=True)
    cleaned, report = ingest.clean_clip(clip, policy)
    x, _, _ = cleaned.stacked()
    assert x[0, 5] != 0.0
    assert report.values_replaced == 3


def test_drop_frame_mode(rng):
    clip = random_clip(rng, frames=4)
    for j in range(30):
        clip = _with(clip, 2, w=(j, 0.0))
    cleaned, report = ingest.clean_clip(
        clip, ingest.CleanPolicy(mode="drop_frame", invalid_frame_threshold=0.5)
    )
    # Brute-force: frame 2 has 30/50 invalid joints, above the 0.5 threshold.
    assert report.frames_dropped == 1
    assert len(cleaned) == 3


def test_drop_frame_all_invalid(rng):
    clip = random_clip(rng, frames=2)
    for t in range(2):
        for j in range(50):
            clip = _with(clip, t, w=(j, 0.0))
    with pytest.raises(ingest.AllFramesInvalid):
        ingest.clean_clip(clip, ingest.CleanPolicy(mode="drop_frame"))


def test_clean_is_idempotent(rng):
    clip = random_clip(rng, frames=5)
    clip = _with(clip, 0, x=(3, np.nan))
    clip = _with(clip, 2, w=(17, 0.0))
    once, first = ingest.clean_clip(clip, ingest.CleanPolicy())
    twice, second = ingest.clean_clip(once, ingest.CleanPolicy())
    assert second.values_replaced == 0
    assert second.frames_dropped == 0
    for a, b in zip(once.stacked(), twice.stacked()):
        assert np.array_equal(a, b)


def test_replacements_stay_in_observed_hull(rng):
    # median/mean of valid values never leaves their range
    for mode in ("replace_median", "replace_mean"):
        clip = random_clip(rng, frames=6)
        j = 21
        clip = _with(clip, 3, x=(j, np.nan))
        cleaned, _ = ingest.clean_clip(clip, ingest.CleanPolicy(mode=mode))
        x_orig, _, _ = clip.stacked()
        x_new, _, _ = cleaned.stacked()
        valid = np.delete(x_orig[:, j], 3)
        assert valid.min() <= x_new[3, j] <= valid.max()


def test_flat_roundtrip(rng):
    clip = random_clip(rng, frames=3)
    flat = ingest.clip_to_flat(clip)
    assert flat.shape == (3, 150)
    back = ingest.clip_from_flat(clip.id, flat)
    for a, b in zip(clip.stacked(), back.stacked()):
        assert np.array_equal(a, b)
