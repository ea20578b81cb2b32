import json

import numpy as np
import pytest

from lfpseudo.codec import Bitstream, CodecConfig, DecodeError, StructureConfig, decode_sequence, encode_sequence
from lfpseudo.codec.plan import make_plan
from lfpseudo.scheduler import ConfigError
from lfpseudo.synth import constant_grid, noise_field, translating_texture, true_shift
from lfpseudo.view_grid import GridGeometry, corner_geometry, make_grid


def _assert_closed_loop(res):
    dec = decode_sequence(Bitstream.from_bytes(res.bitstream.to_bytes()))
    for p in res.recon.pocs():
        for a, b in zip(res.recon[p].planes, dec[p].planes):
            np.testing.assert_array_equal(a, b)
    return dec


@pytest.fixture(scope="module")
def texture5():
    return translating_texture(corner_geometry(5), size=(32, 32))


@pytest.mark.parametrize("kwargs", [
    dict(size=(32, 32), chroma_format="420"),
    dict(size=(40, 36), chroma_format="420"),  # not a block multiple
    dict(size=(24, 24), chroma_format="444"),
    dict(size=(32, 32), chroma_format="420", bit_depth=10),
])
def test_closed_loop_formats(kwargs):
    grid = translating_texture(corner_geometry(5), **kwargs)
    _assert_closed_loop(encode_sequence(grid, CodecConfig(qp=22)))


@pytest.mark.parametrize("structure", [
    StructureConfig("1d"),
    StructureConfig("1d", scan="raster", gop=4),
    StructureConfig("2d", list_mode="poc"),
    StructureConfig("2d", mv_scaling="poc"),
    StructureConfig("2d", partition_mode="row"),
])
def test_closed_loop_structures(texture5, structure):
    _assert_closed_loop(encode_sequence(texture5, CodecConfig(qp=27), structure))


def test_closed_loop_small_blocks(texture5):
    _assert_closed_loop(encode_sequence(texture5, CodecConfig(qp=18, block_size=8, search_range=3)))


def test_deterministic(texture5):
    a = encode_sequence(texture5, CodecConfig(qp=25)).bitstream.to_bytes()
    b = encode_sequence(texture5, CodecConfig(qp=25)).bitstream.to_bytes()
    assert a == b


def test_constant_grid_codes_nothing():
    grid = constant_grid(corner_geometry(5), size=(32, 32), value=90)
    res = encode_sequence(grid, CodecConfig(qp=25))
    for st in res.stats[1:]:
        assert all(m is not None for m in st.motion)
        assert all(e.mv == (0, 0) for m in st.motion for e in m)
        # 4 blocks: mode, mvd, coefficient count per plane; no residual levels
        assert st.bits <= 4 * 16 + 8
        assert st.sse == (0, 0, 0)


def test_ground_truth_motion():
    geom = corner_geometry(7)
    grid = translating_texture(geom, size=(64, 64))
    res = encode_sequence(grid, CodecConfig(qp=20))
    coords = res.plan.coords
    total = hits = 0
    for st in res.stats[1:]:
        for m in st.motion:
            total += 1
            if m and all(tuple(d // 4 for d in e.mv) == true_shift(coords[st.frame], coords[e.ref]) for e in m):
                hits += 1
    assert hits / total >= 0.95, f"{hits}/{total}"


def test_references_resolve_in_dpb(texture5):
    res = encode_sequence(texture5, CodecConfig(qp=25))
    rps = res.plan.schedule.rps
    for st in res.stats:
        for m in st.motion:
            for e in m or ():
                assert e.ref in rps[st.frame]


def test_bits_decrease_over_ladder(texture5):
    bits = [encode_sequence(texture5, CodecConfig(qp=q)).total_bits for q in (15, 20, 25, 30)]
    assert bits == sorted(bits, reverse=True)


def test_tampered_hash_rejected(texture5):
    bs = encode_sequence(texture5, CodecConfig(qp=30)).bitstream
    hdr = dict(bs.header, plan_hash="0" * 64)
    with pytest.raises(DecodeError, match="hash"):
        decode_sequence(Bitstream(hdr, bs.payloads))


def test_tampered_header_geometry_rejected(texture5):
    bs = encode_sequence(texture5, CodecConfig(qp=30)).bitstream
    hdr = json.loads(json.dumps(bs.header))
    hdr["structure"]["kind"] = "1d"
    with pytest.raises(DecodeError):
        decode_sequence(Bitstream(hdr, bs.payloads))


def test_corrupt_payload_is_decode_error(texture5):
    bs = encode_sequence(texture5, CodecConfig(qp=30)).bitstream
    payloads = list(bs.payloads)
    payloads[3] = payloads[3][: len(payloads[3]) // 3] + b"\x80"
    with pytest.raises(DecodeError):
        decode_sequence(Bitstream(bs.header, payloads))


def test_truncated_container(texture5):
    data = encode_sequence(texture5, CodecConfig(qp=30)).bitstream.to_bytes()
    for cut in (3, 20, len(data) - 1):
        with pytest.raises(DecodeError):
            Bitstream.from_bytes(data[:cut])


def test_single_view_stream():
    g = GridGeometry(1, 1)
    grid = make_grid(g, {0: tuple(np.full((16, 16), v) for v in (100, 128, 128))}, 8, "444")
    res = encode_sequence(grid)
    dec = _assert_closed_loop(res)
    assert dec.pocs() == [0] and len(res.bitstream.payloads) == 1


def test_plan_must_cover_grid(texture5):
    plan = make_plan(corner_geometry(7))
    with pytest.raises(ConfigError):
        encode_sequence(texture5, plan=plan)


def test_noise_closed_loop():
    grid = noise_field(corner_geometry(5), size=(32, 32))
    _assert_closed_loop(encode_sequence(grid, CodecConfig(qp=15)))
