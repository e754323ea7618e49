import numpy as np
import pytest

from signforge import storage


def test_write_read_archive_roundtrip(rng):
    clips = [(f"clip-{i}", rng.standard_normal((3 + i, 150)).astype(np.float32)) for i in range(4)]
    data = storage.write_archive(clips)
    back = storage.read_archive(data)
    assert [k for k, _ in back] == [k for k, _ in clips]
    for (_, a), (_, b) in zip(clips, back):
        assert np.array_equal(a, b)


def test_archive_empty():
    data = storage.write_archive([])
    assert storage.read_archive(data) == []


def test_archive_mixed_widths(rng):
    clips = [("a", rng.standard_normal((3, 150))), ("b", rng.standard_normal((5, 7)))]
    back = storage.read_archive(storage.write_archive(clips))
    assert back[0][1].shape == (3, 150)
    assert back[1][1].shape == (5, 7)


def test_archive_duplicate_key(rng):
    clips = [("a", np.zeros((1, 2))), ("a", np.ones((1, 2)))]
    with pytest.raises(storage.DuplicateKey):
        storage.write_archive(clips)


def test_archive_bad_magic():
    with pytest.raises(storage.BadMagic):
        storage.read_archive(b"NOPE" + b"\x00" * 32)


def test_archive_truncated_names_key(rng):
    data = storage.write_archive([("victim", rng.standard_normal((4, 150)))])
    with pytest.raises(storage.TruncatedPayload) as info:
        storage.read_archive(data[:-10])
    assert "victim" in str(info.value)


def test_archive_roundtrip_random_bits(rng):
    # arbitrary float32 bit patterns survive one write/read cycle untouched
    bits = rng.integers(0, 2**32, size=(6, 150), dtype=np.uint32)
    values = bits.view(np.float32)
    values = np.where(np.isfinite(values), values, 0.0).astype(np.float32)
    back = storage.read_archive(storage.write_archive([("x", values)]))
    assert np.array_equal(back[0][1], values)


def test_pack_skels_counters(rng):
    frames = rng.standard_normal((4, 150)).astype(np.float32)
    text, ids = storage.pack_skels([("c", frames)])
    tokens = text.split()
    assert len(tokens) == 151 * 4
    counters = [float(tokens[151 * t + 150]) for t in range(4)]
    assert counters == [0.25, 0.5, 0.75, 1.0]
    assert ids == ["c"]


def test_pack_skels_token_count_two_frames(rng):
    text, _ = storage.pack_skels([("c", rng.standard_normal((2, 150)))])
    assert len(text.split()) == 302


def test_pack_skels_rejects_bad_width(rng):
    with pytest.raises(storage.WidthMismatch):
        storage.pack_skels([("c", rng.standard_normal((2, 149)))])


def test_pack_skels_rejects_non_finite(rng):
    frames = rng.standard_normal((2, 150))
    frames[1, 3] = np.nan
    with pytest.raises(storage.NonFiniteValue):
        storage.pack_skels([("c", frames)])


def test_unpack_single_frame_line():
    frames = np.arange(150, dtype=np.float32).reshape(1, 150)
    text, _ = storage.pack_skels([("one", frames)])
    clips = storage.unpack_skels(text)
    assert len(clips) == 1
    assert np.array_equal(clips[0], frames)


def test_unpack_bad_arity():
    with pytest.raises(storage.BadArity):
        storage.unpack_skels(" ".join(["0.0"] * 150))


def test_unpack_counter_mismatch(rng):
    frames = rng.standard_normal((2, 150)).astype(np.float32)
    text, _ = storage.pack_skels([("c", frames)])
    tokens = text.split()
    tokens[-1] = "0.9"
    with pytest.raises(storage.CounterMismatch):
        storage.unpack_skels(" ".join(tokens))


def test_unpack_unparsable_token(rng):
    frames = rng.standard_normal((1, 150)).astype(np.float32)
    text, _ = storage.pack_skels([("c", frames)])
    tokens = text.split()
    tokens[3] = "zz9"
    with pytest.raises(storage.UnparsableToken):
        storage.unpack_skels(" ".join(tokens))


def test_skels_roundtrip_property(rng):
    # shortest round-tripping decimals make the cycle bit-exact at 32-bit
    for trial in range(25):
        T = int(rng.integers(1, 9))
        n = int(rng.integers(1, 4))
        clips = []
        for i in range(n):
            scale = 10.0 ** rng.integers(-3, 4)
            clips.append((f"t{trial}-{i}", (rng.standard_normal((T, 150)) * scale).astype(np.float32)))
        text, ids = storage.pack_skels(clips)
        back = storage.unpack_skels(text)
        assert len(back) == n
        for (_, a), b in zip(clips, back):
            assert np.array_equal(a, b)


def test_skels_line_order_matches_sidecar(rng):
    clips = [(f"k{i}", rng.standard_normal((2, 150)).astype(np.float32)) for i in range(5)]
    text, ids = storage.pack_skels(clips)
    assert ids == [f"k{i}" for i in range(5)]
    back = storage.unpack_skels(text)
    for (_, a), b in zip(clips, back):
        assert np.array_equal(a, b)


def test_counters_strictly_increasing(rng):
    for T in (1, 2, 7, 300):
        ctr = storage.counters_for(T)
        assert ctr[-1] == 1.0
        assert np.all(np.diff(ctr.astype(np.float64)) > 0)


def test_size_report():
    rep = storage.size_report(100, 20)
    assert rep["reduction_fraction"] == pytest.approx(0.8)
    assert storage.size_report(50, 50)["reduction_fraction"] == 0.0
